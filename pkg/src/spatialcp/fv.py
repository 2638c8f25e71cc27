"""Monte-Carlo table for the law of ``max_{0<=t<=1} V(t)``.

``V`` is the centered Gaussian process with ``Cov(V(t), V(s)) = (1-t)**2 s**2``
for ``s <= t``. Writing ``V(t) = (1-t)**2 W((t/(1-t))**2)`` for a standard
Brownian motion ``W`` reproduces that covariance exactly, so each path on the
grid ``t_i = i/N_d`` costs ``O(N_d)``. ``V(1) = 0`` belongs to the grid, hence
every sampled maximum is nonnegative.

Cache file format (version 1), plain text::

    # spatialcp-fvtable v1 grid=<N_d> reps=<B> seed=<seed>
    <sorted sample 1>
    ...
    <sorted sample B>

one value per line, written with ``repr`` so reading back is exact.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_GRID = 1000
DEFAULT_REPS = 100_000
DEFAULT_SEED = 20240101
BLOCK = 1000

_HEADER = re.compile(r"^# spatialcp-fvtable v(\d+) grid=(\d+) reps=(\d+) seed=(\d+)\s*$")


@dataclass(frozen=True)
class FVTable:
    samples: np.ndarray
    grid: int
    reps: int
    seed: int

    def __post_init__(self) -> None:
        s = np.sort(np.asarray(self.samples, dtype=np.float64))
        if s.size != self.reps or not np.all(np.isfinite(s)):
            raise InputError("table samples must be finite and number exactly `reps`")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def cdf(self, x):
        """Empirical CDF, ``#{samples <= x} / B``."""
        return np.searchsorted(self.samples, x, side="right") / self.reps

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, q):
        return np.quantile(self.samples, q)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with tmp.open("w") as fh:
            fh.write(f"# spatialcp-fvtable v{FORMAT_VERSION} grid={self.grid} reps={self.reps} seed={self.seed}\n")
            fh.writelines(f"{v!r}\n" for v in self.samples.tolist())
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> FVTable:
        path = Path(path)
        with path.open() as fh:
            m = _HEADER.match(fh.readline())
            if m is None:
                raise InputError(f"{path} is not a spatialcp F_V table")
            version, grid, reps, seed = (int(g) for g in m.groups())
            if version != FORMAT_VERSION:
                raise InputError(f"unsupported F_V table version {version}")
            samples = np.array([float(line) for line in fh if line.strip()])
        return cls(samples=samples, grid=grid, reps=reps, seed=seed)


def grid_points(grid: int) -> np.ndarray:
    """Interior grid ``t_i = i / N_d`` for ``i < N_d``; ``t = 1`` carries ``V = 0``."""
    return np.arange(1, grid) / grid


def v_paths(z: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Map standard normals ``z`` (rows = paths) to values of ``V`` on ``t``."""
    s = (t / (1.0 - t)) ** 2
    ds = np.diff(s, prepend=0.0)
    w = np.cumsum(z * np.sqrt(ds), axis=-1)
    return (1.0 - t) ** 2 * w


def simulate_fv(grid: int = DEFAULT_GRID, reps: int = DEFAULT_REPS, seed: int = DEFAULT_SEED) -> FVTable:
    """Draw ``reps`` maxima of ``V`` over the uniform grid of size ``grid``.

    Draws are generated in fixed blocks, each with its own stream keyed by
    ``(seed, block index)``, so the table does not depend on how blocks are
    scheduled.
    """
    if grid < 2:
        raise InputError("grid must be at least 2")
    if reps < 1000:
        raise InputError("reps must be at least 1000")
    t = grid_points(grid)
    out = np.empty(reps)
    for b, start in enumerate(range(0, reps, BLOCK)):
        size = min(BLOCK, reps - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        v = v_paths(rng.standard_normal((size, t.size)), t)
        out[start:start + size] = np.maximum(v.max(axis=1), 0.0)
    return FVTable(samples=out, grid=grid, reps=reps, seed=seed)


def default_cache_dir() -> Path:
    root = os.environ.get("SPATIALCP_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME") or os.path.expanduser("~/.cache"), "spatialcp")
    return Path(root)


def cache_path(grid: int, reps: int, seed: int, cache_dir: str | Path | None = None) -> Path:
    d = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return d / f"fv_v{FORMAT_VERSION}_grid{grid}_reps{reps}_seed{seed}.csv"


_memo: dict[tuple[int, int, int, str], FVTable] = {}


def cached_fv_table(grid: int = DEFAULT_GRID, reps: int = DEFAULT_REPS, seed: int = DEFAULT_SEED,
                    cache_dir: str | Path | None = None) -> FVTable:
    """Load the table keyed by ``(grid, reps, seed)``, simulating and caching it if absent."""
    path = cache_path(grid, reps, seed, cache_dir)
    key = (grid, reps, seed, str(path))
    if key in _memo:
        return _memo[key]
    table = None
    if path.is_file():
        try:
            table = FVTable.load(path)
        except (InputError, ValueError):
            logger.warning("ignoring unreadable F_V cache %s", path)
    if table is None or (table.grid, table.reps, table.seed) != (grid, reps, seed):
        logger.info("simulating F_V table (grid=%d, reps=%d, seed=%d)", grid, reps, seed)
        table = simulate_fv(grid, reps, seed)
        try:
            table.save(path)
        except OSError:
            logger.warning("could not write F_V cache %s", path)
    _memo[key] = table
    return table
