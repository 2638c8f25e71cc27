"""Adaptive changepoint localization and binary segmentation."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .data import DataMatrix, Method, ScanConfig, TestOutcome
from .errors import SpatialCPError
from .fv import FVTable
from .inference import ChangepointScan
from .robust import NuisanceEstimates

DEFAULT_LAMBDA_ABS = 40
MIN_INTERVAL = 20
_VARIANTS = (Method.SCMS0, Method.SCMS05)


def _variant(variant: Method | str) -> Method:
    variant = Method(variant)
    if variant not in _VARIANTS:
        raise ValueError("variant must be SCMS0 or SCMS05")
    return variant


def adaptive_location(combined: TestOutcome) -> int:
    """Pick the split of whichever component test has the smaller p-value.

    The max-L-infinity location wins only on a strictly smaller p-value;
    otherwise the sign-CUSUM location is used.
    """
    m_out, s_out = combined.components
    return m_out.k_argmax if m_out.p_value < s_out.p_value else s_out.k_argmax


def locate_changepoint(data: DataMatrix, cfg: ScanConfig | None = None,
                       variant: Method | str = Method.SCMS0, fv: FVTable | None = None,
                       nuis: NuisanceEstimates | None = None) -> int:
    """Adaptive estimate of a single changepoint, as a count of leading rows."""
    scan = ChangepointScan(data, cfg, fv=fv, nuis=nuis)
    return adaptive_location(scan.outcome(_variant(variant)))


@dataclass(frozen=True)
class Detection:
    """One rejected interval ``[left, right]`` (1-based, inclusive) and its split.

    ``changepoint`` is the last index of the left piece; ``method`` names the
    component whose location was used.
    """

    left: int
    right: int
    changepoint: int
    lam: int
    method: Method
    p_max: float
    p_sum: float
    p_combined: float


@dataclass(frozen=True)
class SegmentationResult:
    changepoints: list[int]
    detections: list[Detection]


def is_testable(cfg: ScanConfig, length: int) -> bool:
    lam = cfg.boundary(length)
    return lam >= 1 and length >= max(2 * lam + 2, MIN_INTERVAL)


def binary_segment(data: DataMatrix, cfg: ScanConfig | None = None,
                   variant: Method | str = Method.SCMS05, alpha: float | None = None,
                   fv: FVTable | None = None,
                   lambda_abs: int | None = DEFAULT_LAMBDA_ABS) -> SegmentationResult:
    """Recursive test-then-split search for multiple changepoints.

    Each interval is tested on its own (nuisances re-estimated from its own
    trimmed ends) with boundary ``min(floor(boundary_fraction * len), lambda_abs)``.
    On rejection at level ``alpha`` the interval is cut at the adaptive
    location into ``[l, t]`` and ``[t + 1, r]``. Intervals shorter than
    ``max(2 * lambda + 2, 20)`` are not tested. No multiplicity correction
    is applied across levels.
    """
    cfg = cfg or ScanConfig()
    if lambda_abs is not None:
        cfg = replace(cfg, lambda_abs=lambda_abs)
    alpha = cfg.alpha if alpha is None else alpha
    variant = _variant(variant)
    if fv is None and variant is Method.SCMS0:
        fv = ChangepointScan(data, cfg).fv
    detections: list[Detection] = []
    stack = [(1, data.n)]
    while stack:
        left, right = stack.pop()
        length = right - left + 1
        if not is_testable(cfg, length):
            continue
        try:
            scan = ChangepointScan(data.rows(left - 1, right), cfg, fv=fv)
            combined = scan.outcome(variant)
        except SpatialCPError:
            continue
        if not combined.p_value < alpha:
            continue
        m_out, s_out = combined.components
        k = adaptive_location(combined)
        t = left - 1 + k
        detections.append(Detection(left, right, t, scan.window.lam,
                                    m_out.method if m_out.p_value < s_out.p_value else s_out.method,
                                    m_out.p_value, s_out.p_value, combined.p_value))
        stack.append((t + 1, right))
        stack.append((left, t))
    detections.sort(key=lambda d: d.changepoint)
    return SegmentationResult([d.changepoint for d in detections], detections)
