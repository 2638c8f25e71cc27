from __future__ import annotations

import numpy as np
import pytest

from spatialcp.data import DataMatrix, Method, ScanConfig
from spatialcp.fv import FVTable
from spatialcp.inference import ChangepointScan
from spatialcp.segmentation import (
    MIN_INTERVAL,
    adaptive_location,
    binary_segment,
    is_testable,
    locate_changepoint,
)
from spatialcp.simulation import ScenarioSpec, generate, replicate_rng


def two_change_series(n: int, p: int, Delta: float, seed: int, rep: int) -> DataMatrix:
    """Dense shifts after rows ``n // 3`` and ``2n // 3``, each of squared size ``Delta``."""
    x = generate(ScenarioSpec(n=n, p=p, seed=seed), replicate_rng(seed, rep)).values.copy()
    step = np.sqrt(Delta / p)
    x[n // 3:] += step
    x[2 * n // 3:] += step
    return DataMatrix(x)


class TestLocation:
    def test_rule_follows_smaller_pvalue(self, fv_table: FVTable) -> None:
        dm = generate(ScenarioSpec(n=200, p=30, tau=120, Delta=3.0, seed=2))
        scan = ChangepointScan(dm, fv=fv_table)
        combined = scan.outcome(Method.SCMS0)
        m_out, s_out = combined.components
        expected = m_out.k_argmax if m_out.p_value < s_out.p_value else s_out.k_argmax
        assert adaptive_location(combined) == expected == combined.k_argmax
        assert locate_changepoint(dm, variant=Method.SCMS0, fv=fv_table) == expected

    def test_sum_location_is_uncentered_argmax(self, fv_table: FVTable) -> None:
        dm = generate(ScenarioSpec(n=200, p=30, tau=70, Delta=3.0, seed=3))
        scan = ChangepointScan(dm, fv=fv_table)
        assert scan.outcome(Method.SSUM0).k_argmax == scan.sign_curve(0.0).argmax_sq_l2()

    def test_dense_signal_accuracy(self, fv_table: FVTable) -> None:
        spec = ScenarioSpec(n=200, p=200, tau=100, Delta=2.0, seed=44)
        errs = [abs(locate_changepoint(generate(spec, replicate_rng(44, r)), variant=Method.SCMS0,
                                       fv=fv_table) - 100) / 200 for r in range(40)]
        assert np.mean(errs) < 0.07


class TestBinarySegmentation:
    def test_testable_lengths(self) -> None:
        cfg = ScanConfig(lambda_abs=40)
        assert not is_testable(cfg, MIN_INTERVAL - 1)
        assert is_testable(cfg, MIN_INTERVAL)
        assert is_testable(cfg, 82) and cfg.boundary(1000) == 40

    def test_single_change(self) -> None:
        hits = 0
        for rep in range(100):
            dm = generate(ScenarioSpec(n=200, p=50, tau=100, Delta=8.0, seed=500), replicate_rng(500, rep))
            cps = binary_segment(dm).changepoints
            hits += len(cps) == 1 and abs(cps[0] - 100) <= 10
        assert hits >= 90

    def test_output_invariants(self) -> None:
        for rep in range(10):
            res = binary_segment(two_change_series(600, 20, 4.0, 3, rep))
            assert res.changepoints == sorted(set(res.changepoints))
            for d in res.detections:
                assert d.left + d.lam <= d.changepoint <= d.right - d.lam
                assert d.p_combined <= 0.05
                assert d.method in (Method.SMAX05, Method.SSUM05)

    def test_deterministic(self) -> None:
        dm = two_change_series(600, 20, 4.0, 3, 0)
        assert binary_segment(dm) == binary_segment(dm)

    def test_pure_noise_short_series(self) -> None:
        res = binary_segment(generate(ScenarioSpec(n=19, p=3, seed=1)))
        assert res.changepoints == []

    def test_long_narrow_shape_completes(self) -> None:
        dm = generate(ScenarioSpec(n=2215, p=43, seed=12))
        res = binary_segment(dm, lambda_abs=40)
        assert all(1 <= t < 2215 for t in res.changepoints)

    @pytest.mark.parametrize("variant", [Method.SCMS0, Method.SCMS05])
    def test_two_changes(self, variant: Method, fv_table: FVTable) -> None:
        ok = 0
        for rep in range(20):
            cps = binary_segment(two_change_series(600, 40, 2.0, 21, rep), variant=variant,
                                 fv=fv_table).changepoints
            ok += any(abs(t - 200) <= 30 for t in cps) and any(abs(t - 400) <= 30 for t in cps)
        assert ok >= 16

    def test_rejects_non_combined_variant(self) -> None:
        with pytest.raises(ValueError):
            binary_segment(generate(ScenarioSpec(n=100, p=5)), variant="SMAX0")
