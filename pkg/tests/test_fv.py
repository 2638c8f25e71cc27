from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from spatialcp.errors import InputError
from spatialcp.fv import FVTable, cache_path, cached_fv_table, grid_points, simulate_fv, v_paths


def _covariance(t: np.ndarray) -> np.ndarray:
    tj, tl = np.meshgrid(t, t, indexing="ij")
    lo, hi = np.minimum(tj, tl), np.maximum(tj, tl)
    return (1 - hi) ** 2 * lo**2


class TestPaths:
    def test_grid_excludes_endpoint(self) -> None:
        t = grid_points(1000)
        assert t.size == 999 and t[0] == 0.001 and t[-1] == 0.999
        assert t[499] == 0.5

    def test_linear_map_reproduces_covariance(self) -> None:
        t = grid_points(40)
        # rows of v_paths(I) are the columns of the factor L with V = L z
        L = v_paths(np.eye(t.size), t).T
        np.testing.assert_allclose(L @ L.T, _covariance(t), rtol=1e-12, atol=1e-15)

    def test_dense_cholesky_cross_check(self) -> None:
        t = grid_points(50)
        rng = np.random.default_rng(3)
        a = v_paths(rng.standard_normal((40_000, t.size)), t)
        chol = np.linalg.cholesky(_covariance(t) + 1e-14 * np.eye(t.size))
        b = rng.standard_normal((40_000, t.size)) @ chol.T
        qa = np.quantile(a.max(axis=1), [0.5, 0.9, 0.95])
        qb = np.quantile(b.max(axis=1), [0.5, 0.9, 0.95])
        np.testing.assert_allclose(qa, qb, atol=0.01)

    def test_midpoint_variance(self) -> None:
        t = grid_points(1000)
        rng = np.random.default_rng(4)
        v = np.concatenate([v_paths(rng.standard_normal((5000, t.size)), t)[:, 499] for _ in range(4)])
        se = 0.0625 * math.sqrt(2 / (v.size - 1))
        assert abs(v.var(ddof=1) - 0.0625) <= 3 * se


class TestTable:
    def test_cdf_is_valid(self) -> None:
        table = simulate_fv(100, 2000, 1)
        assert np.all(np.diff(table.samples) >= 0)
        assert table.cdf(np.inf) == 1.0 and table.cdf(-np.inf) == 0.0
        xs = np.linspace(-1, 2, 50)
        assert np.all(np.diff(table.cdf(xs)) >= 0)
        assert np.all(table.samples >= 0)

    def test_round_trip(self, tmp_path: Path) -> None:
        table = simulate_fv(100, 2000, 1)
        path = table.save(tmp_path / "t.csv")
        back = FVTable.load(path)
        assert back.samples.tobytes() == table.samples.tobytes()
        assert (back.grid, back.reps, back.seed) == (100, 2000, 1)

    def test_rejects_bad_file(self, tmp_path: Path) -> None:
        f = tmp_path / "t.csv"
        f.write_text("# something else\n1.0\n")
        with pytest.raises(InputError):
            FVTable.load(f)

    def test_block_streams_are_deterministic(self) -> None:
        a, b = simulate_fv(50, 3000, 9), simulate_fv(50, 3000, 9)
        assert a.samples.tobytes() == b.samples.tobytes()
        assert simulate_fv(50, 3000, 10).samples.tobytes() != a.samples.tobytes()

    def test_argument_checks(self) -> None:
        with pytest.raises(InputError):
            simulate_fv(1, 1000, 0)
        with pytest.raises(InputError):
            simulate_fv(10, 10, 0)

    def test_cache_builds_once(self, tmp_path: Path) -> None:
        a = cached_fv_table(20, 1000, 5, cache_dir=tmp_path)
        assert cache_path(20, 1000, 5, tmp_path).is_file()
        b = cached_fv_table(20, 1000, 5, cache_dir=tmp_path)
        assert a is b

    def test_default_quantiles(self, fv_table: FVTable) -> None:
        q90, q95, q99 = fv_table.quantile([0.90, 0.95, 0.99])
        assert q90 <= q95 <= q99
        # regression baseline of the default table
        assert q95 == pytest.approx(0.6288, abs=1e-3)

    @pytest.mark.slow
    def test_cross_seed_stability(self, fv_table: FVTable) -> None:
        other = simulate_fv(1000, 100_000, 7)
        assert abs(float(other.quantile(0.95)) - float(fv_table.quantile(0.95))) < 0.02
