"""Test statistics, null calibration and p-values.

Four single tests are provided: max-L-infinity tests on the spatial-median
CUSUM (SMAX, gamma 0 and 0.5) calibrated by Gumbel limits, max-L2 tests on
the spatial-sign CUSUM (SSUM, gamma 0 and 0.5) calibrated by the simulated
law of ``max V`` and by a doubled-exponent Gumbel law respectively, plus
their Fisher combinations (SCMS) and a mean-based baseline.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from . import cusum
from .data import DataMatrix, Method, ScanConfig, TestOutcome, validate_config
from .errors import CalibrationError, NuisanceError
from .fv import FVTable, cached_fv_table
from .robust import NuisanceEstimates, nuisance_estimates

P_FLOOR = 1e-300


def gumbel_cdf(x: float) -> float:
    return math.exp(-math.exp(-x))


def gumbel2_cdf(x: float) -> float:
    return math.exp(-2.0 * math.exp(-x))


def gumbel_sf(x: float) -> float:
    """``1 - gumbel_cdf(x)`` without cancellation in the upper tail."""
    return -math.expm1(-math.exp(-x))


def gumbel2_sf(x: float) -> float:
    return -math.expm1(-2.0 * math.exp(-x))


def chi2_4_cdf(x: float) -> float:
    if x <= 0.0:
        return 0.0
    return 1.0 - math.exp(-x / 2.0) * (1.0 + x / 2.0)


def chi2_4_sf(x: float) -> float:
    if x <= 0.0:
        return 1.0
    return math.exp(-x / 2.0) * (1.0 + x / 2.0)


def gumbel_A(x: float) -> float:
    return math.sqrt(2.0 * math.log(x))


def gumbel_D(x: float) -> float:
    lx = math.log(x)
    return 2.0 * lx + 0.5 * math.log(lx) - 0.5 * math.log(math.pi)


def _gumbel_argument(x: float, what: str) -> float:
    if not x > math.e:
        raise CalibrationError(f"{what} = {x:.6g} must exceed e for the Gumbel normalization")
    return x


def boundary_ratio(n: int, lam: int) -> float:
    """``h_n = (n / lambda_n - 1)**2``."""
    if not lam / n < 0.5:
        raise CalibrationError("boundary parameter must be below n/2")
    return (n / lam - 1.0) ** 2


def fisher_combine(p1: float, p2: float) -> float:
    """Fisher combination of two p-values against the chi-squared(4) law.

    ``x = -2 (log p1 + log p2)`` and the result is ``exp(-x/2) (1 + x/2)``.
    Inputs are clamped to ``[1e-300, 1]``.
    """
    p1 = min(max(float(p1), P_FLOOR), 1.0)
    p2 = min(max(float(p2), P_FLOOR), 1.0)
    return chi2_4_sf(-2.0 * (math.log(p1) + math.log(p2)))


def _clip01(p: float) -> float:
    return min(max(float(p), 0.0), 1.0)


def smax_pvalue(stat: float, gamma: float, n: int, p: int, lam: int, zeta1: float) -> tuple[float, float]:
    """``(standardized, p_value)`` of an adjusted max-L-infinity statistic."""
    if gamma == 0:
        std = 2.0 * p * zeta1**2 * stat**2 - math.log(2.0 * p)
        return std, _clip01(gumbel_sf(std))
    x = _gumbel_argument(p * math.log(boundary_ratio(n, lam)), "p * log(h_n)")
    std = math.sqrt(p) * zeta1 * gumbel_A(x) * stat - gumbel_D(x)
    return std, _clip01(gumbel_sf(std))


def ssum_pvalue(stat: float, gamma: float, n: int, lam: int, trR2: float,
                fv: FVTable | None = None) -> tuple[float, float]:
    """``(standardized, p_value)`` of an adjusted max-L2 statistic."""
    if not trR2 > 0:
        raise NuisanceError(f"trace estimate {trR2!r} is not positive")
    scale = math.sqrt(2.0 * trR2)
    if gamma == 0:
        if fv is None:
            raise ValueError("the gamma=0 max-L2 test needs an F_V table")
        std = stat / scale
        return std, _clip01(float(fv.sf(std)))
    y = _gumbel_argument(math.log(n**2 / lam**2), "log(n^2 / lambda_n^2)")
    std = gumbel_A(y) * abs(stat) / scale - gumbel_D(y)
    return std, _clip01(gumbel2_sf(std))


def mean_max_pvalue(stat: float, p: int) -> tuple[float, float]:
    std = 2.0 * stat**2 - math.log(2.0 * p)
    return std, _clip01(gumbel_sf(std))


_GAMMA = {
    Method.SMAX0: 0.0, Method.SSUM0: 0.0, Method.SCMS0: 0.0,
    Method.SMAX05: 0.5, Method.SSUM05: 0.5, Method.SCMS05: 0.5,
    Method.MEAN_BASELINE: 0.0,
}
_PAIRS = {
    Method.SCMS0: (Method.SMAX0, Method.SSUM0),
    Method.SCMS05: (Method.SMAX05, Method.SSUM05),
}


def _check_gamma(gamma: float) -> float:
    if gamma not in (0, 0.5):
        raise ValueError(f"gamma must be 0 or 0.5, got {gamma!r}")
    return float(gamma)


class ChangepointScan:
    """All curves and tests for one sample, each computed at most once.

    Nuisances, the median sweeps, the full-sample location and the sign
    partial sums are shared by every method that needs them.
    """

    def __init__(self, data: DataMatrix, cfg: ScanConfig | None = None, fv: FVTable | None = None,
                 nuis: NuisanceEstimates | None = None):
        self.data = data
        self.cfg = cfg or ScanConfig()
        self.window = validate_config(self.cfg, data.n, check_trim=nuis is None)
        self._fv = fv
        if nuis is not None:
            self.__dict__["nuis"] = nuis
        self._outcomes: dict[Method, TestOutcome] = {}

    @cached_property
    def nuis(self) -> NuisanceEstimates:
        return nuisance_estimates(self.data, self.cfg)

    @property
    def fv(self) -> FVTable:
        if self._fv is None:
            self._fv = cached_fv_table(self.cfg.mc_grid, self.cfg.mc_reps, self.cfg.seed)
        return self._fv

    @cached_property
    def median_raw(self):
        return cusum.median_scan(self.data, self.nuis, self.cfg)

    @cached_property
    def theta_full(self) -> tuple[np.ndarray, bool]:
        return cusum.full_sample_location(self.data, self.nuis, self.cfg)

    @cached_property
    def sign_raw(self):
        theta, ok = self.theta_full
        return cusum.sign_scan(self.data, self.nuis, theta, self.cfg, converged=ok)

    @cached_property
    def mean_raw(self):
        return cusum.mean_scan(self.data, self.cfg)

    def median_curve(self, gamma: float) -> cusum.CusumCurve:
        return self.median_raw.curve(_check_gamma(gamma))

    def sign_curve(self, gamma: float) -> cusum.CusumCurve:
        return self.sign_raw.curve(_check_gamma(gamma))

    def outcome(self, method: Method | str) -> TestOutcome:
        method = Method(method)
        if method not in self._outcomes:
            self._outcomes[method] = self._compute(method)
        return self._outcomes[method]

    def _compute(self, method: Method) -> TestOutcome:
        n, p, lam = self.data.n, self.data.p, self.window.lam
        adj = 1.0 - n**-0.5
        gamma = _GAMMA[method]
        if method in (Method.SMAX0, Method.SMAX05):
            curve = self.median_curve(gamma)
            stat = float(curve.linf.max()) * adj
            std, pv = smax_pvalue(stat, gamma, n, p, lam, self.nuis.zeta1_hat)
            return TestOutcome(method, stat, std, pv, curve.argmax_linf(), self.nuis,
                               self.nuis.converged and curve.converged)
        if method in (Method.SSUM0, Method.SSUM05):
            curve = self.sign_curve(gamma)
            if gamma == 0:
                ks = curve.ks
                centered = curve.sq_l2 - ks * (n - ks) * p / n**2
            else:
                centered = curve.sq_l2 - p
            stat = float(centered.max()) * adj
            std, pv = ssum_pvalue(stat, gamma, n, lam, self.nuis.trR2_hat,
                                  self.fv if gamma == 0 else None)
            return TestOutcome(method, stat, std, pv, curve.argmax_sq_l2(), self.nuis,
                               self.nuis.converged and curve.converged)
        if method in _PAIRS:
            m_out, s_out = (self.outcome(m) for m in _PAIRS[method])
            pv = fisher_combine(m_out.p_value, s_out.p_value)
            x = -2.0 * (math.log(max(m_out.p_value, P_FLOOR)) + math.log(max(s_out.p_value, P_FLOOR)))
            k = m_out.k_argmax if m_out.p_value < s_out.p_value else s_out.k_argmax
            return TestOutcome(method, x, x, pv, k, self.nuis, m_out.converged and s_out.converged,
                               (m_out, s_out))
        if method is Method.MEAN_BASELINE:
            curve = self.mean_raw.curve(0.0)
            stat = float(curve.linf.max())
            std, pv = mean_max_pvalue(stat, p)
            return TestOutcome(method, stat, std, pv, curve.argmax_linf(), None, True)
        raise ValueError(f"unknown method {method!r}")


def max_linf_test(data: DataMatrix, nuis: NuisanceEstimates | None, gamma: float,
                  cfg: ScanConfig | None = None) -> TestOutcome:
    """Spatial-median max-L-infinity test (SMAX) with Gumbel calibration."""
    method = Method.SMAX0 if _check_gamma(gamma) == 0 else Method.SMAX05
    return ChangepointScan(data, cfg, nuis=nuis).outcome(method)


def max_l2_test(data: DataMatrix, nuis: NuisanceEstimates | None, gamma: float,
                cfg: ScanConfig | None = None, fv: FVTable | None = None) -> TestOutcome:
    """Spatial-sign max-L2 test (SSUM)."""
    method = Method.SSUM0 if _check_gamma(gamma) == 0 else Method.SSUM05
    return ChangepointScan(data, cfg, fv=fv, nuis=nuis).outcome(method)


def mean_baseline_test(data: DataMatrix, cfg: ScanConfig | None = None) -> TestOutcome:
    """Mean-based max-L-infinity test with variance standardization and Gumbel calibration."""
    return ChangepointScan(data, cfg).outcome(Method.MEAN_BASELINE)


def adaptive_test(data: DataMatrix, cfg: ScanConfig | None = None, variant: Method | str = Method.SCMS0,
                  fv: FVTable | None = None) -> TestOutcome:
    """Fisher combination of the SMAX and SSUM tests sharing one set of nuisances.

    The returned outcome carries both component outcomes and the adaptive
    changepoint estimate in ``k_argmax``.
    """
    variant = Method(variant)
    if variant not in _PAIRS:
        raise ValueError("variant must be SCMS0 or SCMS05")
    return ChangepointScan(data, cfg, fv=fv).outcome(variant)
