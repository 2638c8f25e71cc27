from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialcp.cusum import (
    Family,
    full_sample_location,
    mean_cusum,
    median_cusum,
    sign_cusum,
    sign_partial_sums,
)
from spatialcp.data import DataMatrix, ScanConfig
from spatialcp.errors import DegenerateDataError
from spatialcp.robust import NuisanceEstimates, nuisance_estimates, spatial_sign
from spatialcp.simulation import ScenarioSpec, generate

QUARTER = ScanConfig(boundary_fraction=0.25)


def _unit_nuisances(p: int) -> NuisanceEstimates:
    """Nuisances with identity scatter, for hand-checkable toys."""
    fit = nuisance_estimates(DataMatrix(np.random.default_rng(0).standard_normal((40, p)))).fit_front
    return NuisanceEstimates(np.ones(p), 1.0, float(p), fit, fit)


class TestMedianCusum:
    def test_constant_rows_give_zero_curve(self) -> None:
        x = np.tile([1.0, -2.0, 5.0], (30, 1))
        curve = median_cusum(DataMatrix(x), _unit_nuisances(3), 0.0)
        assert np.all(curve.linf == 0) and np.all(curve.sq_l2 == 0)

    def test_gamma_relation_at_half(self, rng: np.random.Generator) -> None:
        dm = DataMatrix(rng.standard_normal((100, 5)))
        nu = nuisance_estimates(dm)
        c0, c5 = median_cusum(dm, nu, 0.0), median_cusum(dm, nu, 0.5)
        i = 50 - c0.k_min
        assert c5.linf[i] == pytest.approx(2.0 * c0.linf[i], rel=1e-12)

    def test_weight_identity(self, rng: np.random.Generator) -> None:
        dm = DataMatrix(rng.standard_normal((80, 4)))
        nu = nuisance_estimates(dm)
        c0, c5 = median_cusum(dm, nu, 0.0), median_cusum(dm, nu, 0.5)
        t = c0.ks / dm.n
        np.testing.assert_allclose(c0.linf, np.sqrt(t * (1 - t)) * c5.linf, rtol=1e-12)
        assert c0.family is Family.MEDIAN

    def test_matches_direct_refits(self, rng: np.random.Generator) -> None:
        from spatialcp.robust import spatial_median

        cfg = ScanConfig(hr_tolerance=1e-10, hr_max_iter=5000)
        dm = DataMatrix(rng.standard_normal((30, 3)))
        nu = nuisance_estimates(dm, cfg)
        curve = median_cusum(dm, nu, 0.0, cfg)
        n = dm.n
        for k in (curve.k_min, 15, curve.k_max):
            a, _, _ = spatial_median(dm.values[:k], nu.D_hat, cfg)
            b, _, _ = spatial_median(dm.values[k:], nu.D_hat, cfg)
            c = (k / n * (1 - k / n)) * math.sqrt(n) * (a - b) / np.sqrt(nu.D_hat)
            assert curve.linf[k - curve.k_min] == pytest.approx(np.max(np.abs(c)), abs=1e-7)

    @pytest.mark.parametrize("seed", range(5))
    def test_locates_strong_change(self, seed: int) -> None:
        # shift of about 1.4 noise standard deviations in every coordinate
        dm = generate(ScenarioSpec(n=200, p=50, tau=100, Delta=100.0, seed=seed))
        curve = median_cusum(dm, nuisance_estimates(dm), 0.0)
        assert abs(curve.argmax_linf() - 100) <= 10


class TestSignCusum:
    def test_hand_toy(self) -> None:
        dm = DataMatrix(np.array([-2.0, -1.0, 1.0, 2.0]))
        nu = _unit_nuisances(1)
        theta = np.array([0.0])
        np.testing.assert_array_equal(sign_partial_sums(dm, nu, theta)[1:, 0], [-1, -2, -1, 0])
        curve = sign_cusum(dm, nu, theta, 0.0, QUARTER)
        np.testing.assert_allclose(curve.sq_l2, [0.25, 1.0, 0.25], rtol=0, atol=1e-15)
        assert curve.argmax_sq_l2() == 2

    def test_constant_rows(self) -> None:
        dm = DataMatrix(np.full((20, 2), 3.0))
        curve = sign_cusum(dm, _unit_nuisances(2), np.array([3.0, 3.0]), 0.5)
        assert np.all(curve.sq_l2 == 0)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(10, 60), p=st.integers(1, 8), seed=st.integers(0, 2**32 - 1),
           gamma=st.sampled_from([0.0, 0.5]))
    def test_prefix_sums_match_brute_force(self, n: int, p: int, seed: int, gamma: float) -> None:
        r = np.random.default_rng(seed)
        dm = DataMatrix(r.standard_t(3, (n, p)))
        nu = nuisance_estimates(dm)
        theta, _ = full_sample_location(dm, nu)
        curve = sign_cusum(dm, nu, theta, gamma)
        u = spatial_sign((dm.values - theta) / np.sqrt(nu.D_hat))
        total = u.sum(axis=0)
        for idx, k in enumerate(curve.ks):
            c = (k / n * (1 - k / n)) ** (-gamma) * math.sqrt(p / n) * (u[:k].sum(axis=0) - k / n * total)
            assert abs(curve.sq_l2[idx] - c @ c) <= 1e-12
            assert abs(curve.linf[idx] - np.max(np.abs(c))) <= 1e-12


class TestMeanCusum:
    def test_hand_toy(self) -> None:
        curve = mean_cusum(DataMatrix(np.array([0.0, 0.0, 2.0, 2.0])), 0.0, QUARTER)
        i = 2 - curve.k_min
        assert curve.linf[i] == pytest.approx(math.sqrt(3) / 2, rel=1e-14)
        assert curve.sq_l2[i] == pytest.approx(0.75, rel=1e-14)

    def test_zero_variance(self) -> None:
        with pytest.raises(DegenerateDataError):
            mean_cusum(DataMatrix(np.ones((10, 2))), 0.0)

    def test_scale_cancels(self, rng: np.random.Generator) -> None:
        x = rng.standard_normal((50, 3))
        a = mean_cusum(DataMatrix(x), 0.5)
        b = mean_cusum(DataMatrix(7.5 * x), 0.5)
        np.testing.assert_allclose(a.linf, b.linf, rtol=1e-12)


class TestCurveProperties:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), gamma=st.sampled_from([0.0, 0.5]))
    def test_time_reversal(self, seed: int, gamma: float) -> None:
        cfg = ScanConfig(hr_tolerance=1e-12, hr_max_iter=5000)
        dm = DataMatrix(np.random.default_rng(seed).standard_normal((40, 4)))
        rev = dm.reversed()
        nu, nu_r = nuisance_estimates(dm, cfg), nuisance_estimates(rev, cfg)
        m, m_r = median_cusum(dm, nu, gamma, cfg), median_cusum(rev, nu_r, gamma, cfg)
        np.testing.assert_allclose(m.linf, m_r.linf[::-1], atol=1e-9)
        th, _ = full_sample_location(dm, nu, cfg)
        th_r, _ = full_sample_location(rev, nu_r, cfg)
        s, s_r = sign_cusum(dm, nu, th, gamma, cfg), sign_cusum(rev, nu_r, th_r, gamma, cfg)
        np.testing.assert_allclose(s.sq_l2, s_r.sq_l2[::-1], atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_l2_dominates_linf(self, seed: int) -> None:
        dm = DataMatrix(np.random.default_rng(seed).standard_normal((30, 5)))
        nu = nuisance_estimates(dm)
        th, _ = full_sample_location(dm, nu)
        for curve in (median_cusum(dm, nu, 0.0), sign_cusum(dm, nu, th, 0.5), mean_cusum(dm, 0.0)):
            assert np.all(curve.linf >= 0)
            assert np.all(curve.sq_l2 >= curve.linf**2 * (1 - 1e-12))
            assert len(curve.linf) == curve.k_max - curve.k_min + 1
