"""Data containers, scan configuration and CSV ingestion."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError, InputError, InputTooSmallError, ParseError, TrimTooSmallError, WindowEmptyError

if TYPE_CHECKING:
    from .robust import NuisanceEstimates

MIN_OBSERVATIONS = 4


@dataclass(frozen=True)
class DataMatrix:
    """Time-ordered observations, one row per time point and one column per coordinate.

    The stored array is a private read-only float64 copy.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise InputError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise InputError("data must have at least one column")
        if arr.shape[0] < MIN_OBSERVATIONS:
            raise InputTooSmallError(
                f"need at least {MIN_OBSERVATIONS} observations, got {arr.shape[0]}"
            )
        bad = ~np.isfinite(arr)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise InputError(f"non-finite value at row {i + 1}, column {j + 1}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def rows(self, start: int, stop: int) -> DataMatrix:
        """Return rows ``start:stop`` (0-based, half-open) as a new matrix."""
        return DataMatrix(self.values[start:stop])

    def reversed(self) -> DataMatrix:
        return DataMatrix(self.values[::-1])


@dataclass(frozen=True)
class ScanConfig:
    """Tuning parameters shared by every test.

    Attributes
    ----------
    boundary_fraction : float
        Fraction of the sample excluded at each end of the scan,
        giving ``lambda_n = floor(boundary_fraction * n)``.
    trim_fraction : float
        Fraction of the sample at each end used for nuisance estimation.
    hr_tolerance, hr_max_iter :
        Stopping rule of the location/scatter fixed-point solver.
    alpha : float
        Nominal level used for reject/accept decisions.
    seed : int
        Seed of the Monte-Carlo table for the max-L2 null law.
    mc_grid, mc_reps :
        Grid size and replication count of that table.
    lambda_abs : int or None
        Optional absolute cap on the boundary parameter; when set,
        ``lambda_n = min(floor(boundary_fraction * n), lambda_abs)``.
    """

    boundary_fraction: float = 0.2
    trim_fraction: float = 0.2
    hr_tolerance: float = 1e-6
    hr_max_iter: int = 200
    alpha: float = 0.05
    seed: int = 20240101
    mc_grid: int = 1000
    mc_reps: int = 100_000
    lambda_abs: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.boundary_fraction < 0.5:
            raise ConfigError("boundary_fraction must lie in (0, 1/2)")
        if not 0.0 < self.trim_fraction < 0.5:
            raise ConfigError("trim_fraction must lie in (0, 1/2)")
        if not self.hr_tolerance > 0.0:
            raise ConfigError("hr_tolerance must be positive")
        if self.hr_max_iter < 1:
            raise ConfigError("hr_max_iter must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.mc_grid < 2 or self.mc_reps < 1:
            raise ConfigError("mc_grid must be >= 2 and mc_reps >= 1")
        if self.lambda_abs is not None and self.lambda_abs < 1:
            raise ConfigError("lambda_abs must be at least 1")

    def boundary(self, n: int) -> int:
        """Boundary removal parameter for a sample of size ``n``."""
        lam = math.floor(self.boundary_fraction * n)
        if self.lambda_abs is not None:
            lam = min(lam, self.lambda_abs)
        return lam

    def trim(self, n: int) -> int:
        """Length of each trimmed end segment."""
        return math.floor(self.trim_fraction * n)


@dataclass(frozen=True)
class ScanWindow:
    """Derived sizes for one sample: ``k`` ranges over ``lam .. n - lam`` inclusive."""

    n: int
    lam: int
    trim: int

    @property
    def k_min(self) -> int:
        return self.lam

    @property
    def k_max(self) -> int:
        return self.n - self.lam

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)


def validate_config(cfg: ScanConfig, n: int, check_trim: bool = True) -> ScanWindow:
    """Check that ``cfg`` yields a usable scan window and trim length for ``n``.

    Curves that never touch the trimmed segments pass ``check_trim=False``.
    """
    lam = cfg.boundary(n)
    if lam < 1 or n - 2 * lam < 1:
        raise WindowEmptyError(
            f"boundary parameter {lam} leaves no candidate split for n={n}"
        )
    m = cfg.trim(n)
    if check_trim and m < 2:
        raise TrimTooSmallError(f"trimmed segment length {m} < 2 for n={n}")
    return ScanWindow(n=n, lam=lam, trim=m)


class Method(str, enum.Enum):
    SMAX0 = "SMAX0"
    SMAX05 = "SMAX05"
    SSUM0 = "SSUM0"
    SSUM05 = "SSUM05"
    SCMS0 = "SCMS0"
    SCMS05 = "SCMS05"
    MEAN_BASELINE = "MEAN_BASELINE"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Method.SMAX0: "SMAX(0)",
    Method.SMAX05: "SMAX(0.5)",
    Method.SSUM0: "SSUM(0)",
    Method.SSUM05: "SSUM(0.5)",
    Method.SCMS0: "SCMS(0)",
    Method.SCMS05: "SCMS(0.5)",
    Method.MEAN_BASELINE: "MEAN",
}


@dataclass(frozen=True)
class TestOutcome:
    """Result of one test on one sample.

    ``standardized`` is the argument handed to the limiting CDF (for the
    combined tests, the Fisher statistic). ``components`` holds the two
    single tests behind a combined test and is empty otherwise.
    """

    __test__ = False  # keep pytest from collecting this class

    method: Method
    statistic: float
    standardized: float
    p_value: float
    k_argmax: int | None
    nuisances: NuisanceEstimates | None = None
    converged: bool = True
    components: tuple[TestOutcome, ...] = field(default=())

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha


def load_csv(path: str | Path, has_header: bool = False) -> DataMatrix:
    """Read a comma-separated numeric grid, one observation per line.

    Errors name the 1-based file line and column of the offending cell.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not record or all(not c.strip() for c in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ParseError(
                    f"ragged row at line {lineno}: {len(record)} cells, expected {width}",
                    row=lineno,
                )
            parsed = []
            for col, cell in enumerate(record, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"non-numeric cell {cell!r} at ({lineno},{col})", row=lineno, col=col
                    ) from None
            rows.append(parsed)
    if len(rows) < MIN_OBSERVATIONS:
        raise InputTooSmallError(
            f"need at least {MIN_OBSERVATIONS} observations, got {len(rows)}"
        )
    return DataMatrix(np.array(rows))


def write_csv(data: DataMatrix, path: str | Path, header: list[str] | None = None) -> None:
    """Write ``data`` so that :func:`load_csv` reproduces it bit for bit."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])
