"""Robust changepoint tests for high-dimensional mean shifts.

Spatial-median and spatial-sign CUSUM scans with max-L-infinity and max-L2
aggregation, their Fisher combinations, binary segmentation, and a
simulation harness for size, power and localization studies.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("spatialcp")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .data import DataMatrix, Method, ScanConfig, TestOutcome, load_csv, validate_config, write_csv
from .errors import (
    CalibrationError,
    ConfigError,
    DegenerateDataError,
    InputError,
    NuisanceError,
    SpatialCPError,
)
from .fv import FVTable, cached_fv_table, simulate_fv
from .inference import (
    ChangepointScan,
    adaptive_test,
    fisher_combine,
    max_l2_test,
    max_linf_test,
    mean_baseline_test,
)
from .robust import HRFit, NuisanceEstimates, hr_estimate, nuisance_estimates, spatial_sign
from .segmentation import SegmentationResult, binary_segment, locate_changepoint
from .simulation import Scenario, ScenarioSpec, generate

__all__ = [
    "__version__",
    "CalibrationError", "ChangepointScan", "ConfigError", "DataMatrix", "DegenerateDataError", "FVTable",
    "HRFit", "InputError", "Method", "NuisanceError", "NuisanceEstimates", "ScanConfig", "Scenario",
    "ScenarioSpec", "SegmentationResult", "SpatialCPError", "TestOutcome",
    "adaptive_test", "binary_segment", "cached_fv_table", "fisher_combine", "generate", "hr_estimate",
    "load_csv", "locate_changepoint", "max_l2_test", "max_linf_test", "mean_baseline_test",
    "nuisance_estimates", "simulate_fv", "spatial_sign", "validate_config", "write_csv",
]
