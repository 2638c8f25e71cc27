"""Spatial signs, the joint spatial-median / diagonal-scatter estimator, and nuisance estimates.

The location/scatter pair ``(theta, d2)`` solves

    mean_i U(eps_i) = 0   and   p * mean_i U(eps_i)_j**2 = 1 for every j,

with ``eps_i = (x_i - theta) / sqrt(d2)`` and ``U(x) = x / |x|``. It is a
diagonal simplification of the Hettmansperger-Randles estimator and is
equivariant under coordinatewise rescaling and translation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import DataMatrix, ScanConfig, validate_config
from .errors import DegenerateDataError, InputError

logger = logging.getLogger(__name__)


def spatial_sign(x: np.ndarray) -> np.ndarray:
    """Unit direction of ``x``; the zero vector maps to itself.

    A 2-D input is treated row by row.
    """
    x = np.asarray(x, dtype=np.float64)
    # rescale by the largest entry first so tiny or huge rows neither underflow nor overflow
    big = np.max(np.abs(x), axis=-1, keepdims=True)
    y = np.zeros_like(x)
    np.divide(x, big, out=y, where=big > 0)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    out = np.zeros_like(x)
    np.divide(y, norm, out=out, where=norm > 0)
    return out


@dataclass(frozen=True)
class HRFit:
    """Fixed point of the location/scatter recursion on one segment.

    ``residual_sign`` is the sup-norm of the mean standardized spatial sign and
    ``residual_diag`` the sup-norm of ``p * mean(U_j**2) - 1``, both evaluated
    at the returned ``(theta, d2)``.
    """

    theta: np.ndarray
    d2: np.ndarray
    iterations: int
    residual_sign: float
    residual_diag: float
    converged: bool


def fixed_point_residuals(x: np.ndarray, theta: np.ndarray, d2: np.ndarray) -> tuple[float, float]:
    """Recompute both fixed-point residuals of ``(theta, d2)`` on ``x`` from scratch."""
    x = np.asarray(x, dtype=np.float64)
    u = spatial_sign((x - theta) / np.sqrt(d2))
    m, p = x.shape
    nz = max(int(np.count_nonzero(np.any(u != 0, axis=1))), 1)
    res_sign = float(np.max(np.abs(u.sum(axis=0) / m)))
    res_diag = float(np.max(np.abs(p * (u**2).sum(axis=0) / nz - 1.0)))
    return res_sign, res_diag


def _as_array(data: DataMatrix | np.ndarray) -> np.ndarray:
    if isinstance(data, DataMatrix):
        return data.values
    arr = np.asarray(data, dtype=np.float64)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def hr_estimate(
    data: DataMatrix | np.ndarray,
    cfg: ScanConfig | None = None,
    warm_start: tuple[np.ndarray, np.ndarray] | None = None,
) -> HRFit:
    """Solve the joint location/scatter equations by fixed-point iteration.

    Starts from the sample mean and per-coordinate sample variances unless
    ``warm_start = (theta, d2)`` is given. Each sweep standardizes, moves the
    location by a Weiszfeld step and rescales the diagonal; iteration stops
    once both residuals are at most ``cfg.hr_tolerance``. Running out of
    iterations is not an error: the last iterate comes back with
    ``converged=False``.
    """
    cfg = cfg or ScanConfig()
    x = np.ascontiguousarray(_as_array(data))
    if x.shape[0] < 2:
        raise InputError("the location/scatter fit needs at least two observations")
    if warm_start is None:
        theta0 = x.mean(axis=0)
        d20 = x.var(axis=0, ddof=1)
    else:
        theta0 = np.asarray(warm_start[0], dtype=np.float64).copy()
        d20 = np.asarray(warm_start[1], dtype=np.float64).copy()
    flat = np.flatnonzero(~(d20 > 0))
    if flat.size:
        j = int(flat[0])
        raise DegenerateDataError(f"coordinate {j + 1} has zero variance in the segment", coordinate=j)
    theta, d2, it, rs, rd, ok = _kernels.hr_joint(x, theta0, d20, cfg.hr_tolerance, cfg.hr_max_iter)
    if not ok:
        logger.debug("location/scatter fit stopped after %d iterations (residuals %.3g, %.3g)", it, rs, rd)
    return HRFit(theta=theta, d2=d2, iterations=int(it), residual_sign=float(rs),
                 residual_diag=float(rd), converged=bool(ok))


def spatial_median(
    data: DataMatrix | np.ndarray,
    d2: np.ndarray,
    cfg: ScanConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Location solving the sign equation with the diagonal scatter held at ``d2``.

    Returns ``(theta, iterations, converged)``.
    """
    cfg = cfg or ScanConfig()
    x = _as_array(data)
    scale = np.sqrt(np.asarray(d2, dtype=np.float64))
    z = np.ascontiguousarray(x / scale)
    start = z.mean(axis=0) if warm_start is None else np.asarray(warm_start, dtype=np.float64) / scale
    theta = np.array(start, dtype=np.float64)
    p = z.shape[1]
    it, ok, _ = _kernels.median_fit(z, 0, z.shape[0], theta, cfg.hr_tolerance, cfg.hr_max_iter,
                                    np.empty(p), np.empty(p))
    return theta * scale, int(it), bool(ok)


@dataclass(frozen=True)
class NuisanceEstimates:
    """Everything the test statistics are standardized by.

    ``D_hat`` estimates the diagonal scatter up to the scale of its first
    entry (so ``D_hat[0] == 1``), ``zeta1_hat`` the expected inverse radius on
    that scale, and ``trR2_hat`` the trace of the squared shape matrix.
    """

    D_hat: np.ndarray
    zeta1_hat: float
    trR2_hat: float
    fit_front: HRFit
    fit_back: HRFit
    zero_residuals: int = 0

    @property
    def converged(self) -> bool:
        return self.fit_front.converged and self.fit_back.converged


def _segment_terms(x: np.ndarray, theta: np.ndarray, scale: np.ndarray) -> tuple[float, float, int]:
    """Mean inverse radius and the tr(R^2) U-statistic for one trimmed segment."""
    eps = (x - theta) / scale
    r = np.linalg.norm(eps, axis=1)
    nz = r > 0
    zeros = int((~nz).sum())
    inv_r = float(np.mean(1.0 / r[nz])) if nz.any() else float("nan")
    u = spatial_sign(eps)
    m, p = x.shape
    gram = u @ u.T
    off = float(np.sum(gram**2) - np.sum(np.diag(gram) ** 2))
    tr = p * p * off / (m * (m - 1))
    return inv_r, tr, zeros


def nuisance_estimates(data: DataMatrix, cfg: ScanConfig | None = None) -> NuisanceEstimates:
    """Estimate ``D_hat``, ``zeta1_hat`` and ``trR2_hat`` from the two trimmed ends.

    Only the first and last ``floor(trim_fraction * n)`` rows are used, so a
    changepoint away from the ends does not contaminate the estimates. Both
    end fits are normalized by their own first diagonal entry and averaged.
    """
    cfg = cfg or ScanConfig()
    win = validate_config(cfg, data.n)
    m = win.trim
    x = data.values
    front, back = x[:m], x[data.n - m:]
    fit_front = hr_estimate(front, cfg)
    fit_back = hr_estimate(back, cfg)
    D_hat = 0.5 * (fit_front.d2 / fit_front.d2[0] + fit_back.d2 / fit_back.d2[0])
    scale = np.sqrt(D_hat)
    z1, t1, zeros1 = _segment_terms(front, fit_front.theta, scale)
    z2, t2, zeros2 = _segment_terms(back, fit_back.theta, scale)
    zeros = zeros1 + zeros2
    if zeros:
        logger.warning("%d observations coincide with their segment location; excluded from zeta1", zeros)
    zeta1 = 0.5 * (z1 + z2)
    trR2 = max(0.5 * (t1 + t2), 0.0)
    return NuisanceEstimates(D_hat=D_hat, zeta1_hat=zeta1, trR2_hat=trR2, fit_front=fit_front,
                             fit_back=fit_back, zero_residuals=zeros)
