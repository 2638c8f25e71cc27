"""CUSUM curves over the boundary-trimmed scan window.

Three families are supported:

* ``MEDIAN``: standardized differences of prefix and suffix spatial medians,
  weighted by ``{k/n (1 - k/n)}**(1 - gamma) * sqrt(n)``;
* ``SIGN``: centered partial sums of spatial signs taken about the full-sample
  median, weighted by ``{k/n (1 - k/n)}**(-gamma) * sqrt(p / n)``;
* ``MEAN``: the classical mean-based contrast standardized by per-coordinate
  sample variances.

Curves keep only the sup-norm and squared Euclidean norm per ``k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import DataMatrix, ScanConfig, validate_config
from .errors import DegenerateDataError
from .robust import NuisanceEstimates, spatial_median, spatial_sign


class Family(str, enum.Enum):
    MEDIAN = "MEDIAN"
    SIGN = "SIGN"
    MEAN = "MEAN"


@dataclass(frozen=True)
class CusumCurve:
    family: Family
    gamma: float
    n: int
    k_min: int
    k_max: int
    linf: np.ndarray
    sq_l2: np.ndarray
    converged: bool = True

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def argmax_linf(self) -> int:
        """Smallest ``k`` maximizing the sup-norm."""
        return int(self.k_min + np.argmax(self.linf))

    def argmax_sq_l2(self) -> int:
        """Smallest ``k`` maximizing the squared Euclidean norm."""
        return int(self.k_min + np.argmax(self.sq_l2))


def _frac(ks: np.ndarray, n: int) -> np.ndarray:
    t = ks / n
    return t * (1.0 - t)


@dataclass(frozen=True)
class _RawScan:
    """Unweighted per-k aggregates; weighting by gamma is a scalar per k."""

    family: Family
    n: int
    k_min: int
    k_max: int
    linf: np.ndarray
    sq_l2: np.ndarray
    base_exponent: float
    converged: bool = True

    def curve(self, gamma: float) -> CusumCurve:
        ks = np.arange(self.k_min, self.k_max + 1)
        w = _frac(ks, self.n) ** (self.base_exponent - gamma)
        return CusumCurve(self.family, float(gamma), self.n, self.k_min, self.k_max,
                          self.linf * w, self.sq_l2 * w * w, self.converged)


def median_scan(data: DataMatrix, nuis: NuisanceEstimates, cfg: ScanConfig | None = None) -> _RawScan:
    """Run the warm-started prefix and suffix median sweeps once.

    The diagonal scatter stays fixed at ``nuis.D_hat``; only locations are
    refit per segment. Cost is ``O(n * p * average iterations)``.
    """
    cfg = cfg or ScanConfig()
    win = validate_config(cfg, data.n, check_trim=False)
    z = np.ascontiguousarray(data.values / np.sqrt(nuis.D_hat))
    prefix, suffix, _, conv = _kernels.median_sweeps(z, win.k_min, win.k_max, cfg.hr_tolerance,
                                                     cfg.hr_max_iter)
    diff = np.sqrt(data.n) * (prefix - suffix)
    return _RawScan(Family.MEDIAN, data.n, win.k_min, win.k_max, np.max(np.abs(diff), axis=1),
                    np.sum(diff * diff, axis=1), 1.0, bool(conv.all()))


def median_cusum(data: DataMatrix, nuis: NuisanceEstimates, gamma: float,
                 cfg: ScanConfig | None = None) -> CusumCurve:
    return median_scan(data, nuis, cfg).curve(gamma)


def full_sample_location(data: DataMatrix, nuis: NuisanceEstimates,
                         cfg: ScanConfig | None = None) -> tuple[np.ndarray, bool]:
    """Spatial median of the whole sample under the combined scatter ``D_hat``."""
    theta, _, ok = spatial_median(data, nuis.D_hat, cfg)
    return theta, ok


def sign_partial_sums(data: DataMatrix, nuis: NuisanceEstimates, theta_full: np.ndarray) -> np.ndarray:
    """Partial sums ``S_k`` of standardized spatial signs, with ``S_0 = 0`` as row 0."""
    u = spatial_sign((data.values - theta_full) / np.sqrt(nuis.D_hat))
    sums = np.zeros((data.n + 1, data.p))
    np.cumsum(u, axis=0, out=sums[1:])
    return sums


def sign_scan(data: DataMatrix, nuis: NuisanceEstimates, theta_full: np.ndarray,
              cfg: ScanConfig | None = None, converged: bool = True) -> _RawScan:
    cfg = cfg or ScanConfig()
    win = validate_config(cfg, data.n, check_trim=False)
    n = data.n
    sums = sign_partial_sums(data, nuis, theta_full)
    ks = win.ks
    c = np.sqrt(data.p / n) * (sums[ks] - (ks / n)[:, None] * sums[n])
    return _RawScan(Family.SIGN, n, win.k_min, win.k_max, np.max(np.abs(c), axis=1),
                    np.sum(c * c, axis=1), 0.0, converged)


def sign_cusum(data: DataMatrix, nuis: NuisanceEstimates, theta_full: np.ndarray, gamma: float,
               cfg: ScanConfig | None = None) -> CusumCurve:
    return sign_scan(data, nuis, theta_full, cfg).curve(gamma)


def mean_scan(data: DataMatrix, cfg: ScanConfig | None = None) -> _RawScan:
    cfg = cfg or ScanConfig()
    win = validate_config(cfg, data.n, check_trim=False)
    x = data.values
    n = data.n
    var = x.var(axis=0, ddof=1)
    zero = np.flatnonzero(~(var > 0))
    if zero.size:
        j = int(zero[0])
        raise DegenerateDataError(f"coordinate {j + 1} has zero sample variance", coordinate=j)
    sums = np.zeros((n + 1, data.p))
    np.cumsum(x, axis=0, out=sums[1:])
    ks = win.ks
    head = sums[ks] / ks[:, None]
    tail = (sums[n] - sums[ks]) / (n - ks)[:, None]
    diff = np.sqrt(n) * (head - tail) / np.sqrt(var)
    return _RawScan(Family.MEAN, n, win.k_min, win.k_max, np.max(np.abs(diff), axis=1),
                    np.sum(diff * diff, axis=1), 1.0)


def mean_cusum(data: DataMatrix, gamma: float, cfg: ScanConfig | None = None) -> CusumCurve:
    return mean_scan(data, cfg).curve(gamma)
