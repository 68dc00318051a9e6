import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strip_radius.analytic import analytic_profile
from strip_radius.bounds import (
    NonConvergedProfileError,
    bounds_trace,
    c0_floor,
    estimate_A,
    gronwall_bound,
    phi_budget,
    radius_lower_bound,
    radius_lower_bound_remark,
)
from strip_radius.evolution import integral_from_path
from strip_radius.oracles import periodized_lorentzian
from strip_radius.spectral import PeriodicGrid, SpectralField, sobolev_norm

TWO_PI = 2 * math.pi


def single_mode():
    return SpectralField.from_function(PeriodicGrid(TWO_PI, 16), lambda x: np.exp(1j * x))


class TestEstimateA:
    def test_zero_datum_hits_floor(self):
        u0 = SpectralField(PeriodicGrid(TWO_PI, 16), np.zeros(16))
        assert estimate_A(u0, 0.5, p=2) == 1.0

    def test_linear_returns_constant(self):
        assert estimate_A(single_mode(), 0.5, p=1, linear_constant=7.25) == 7.25

    def test_single_mode_closed_form(self):
        f = single_mode()
        norm = sobolev_norm(f)
        # E_N = eps^(N-1)/N! * ||f||_s is largest at N = 1 for eps = 0.5
        expected = max(1.0, norm + norm)
        assert estimate_A(f, 0.5, p=2) == pytest.approx(expected, rel=1e-12)
        assert estimate_A(f, 0.5, p=3) == pytest.approx(expected ** 2, rel=1e-12)

    def test_kappa_scales(self):
        f = single_mode()
        assert estimate_A(f, 0.5, kappa=2.0) == pytest.approx(2 * estimate_A(f, 0.5), rel=1e-12)
        with pytest.raises(ValueError):
            estimate_A(f, 0.5, kappa=0.0)

    def test_non_converged_profile(self):
        g = PeriodicGrid(40 * math.pi, 4096)
        f = SpectralField(g, periodized_lorentzian(g.x, 1.0, g.L))
        with pytest.raises(NonConvergedProfileError, match="smaller eps0"):
            estimate_A(f, 2.0)


class TestRadiusBound:
    def test_zero_integral(self):
        np.testing.assert_array_equal(radius_lower_bound(np.zeros(5), 0.7, 3.0), np.full(5, 0.7))

    def test_example2_identity(self):
        t = np.linspace(0, 0.99, 10 ** 4)
        I = integral_from_path(t, 1 / (1 - t), 2, "example")
        eps = radius_lower_bound(I, 1.0, 0.5)
        assert np.abs(eps - np.sqrt(1 - t)).max() < 1e-6

    def test_zero_solution_conservative(self):
        t = np.linspace(0, 2, 41)
        I = integral_from_path(t, np.zeros_like(t), 2)
        np.testing.assert_allclose(radius_lower_bound(I, 0.8, 1.5), 0.8 * np.exp(-1.5 * t), rtol=1e-14)

    def test_remark_form(self):
        I = np.linspace(0, 3, 7)
        np.testing.assert_allclose(radius_lower_bound_remark(I, 1.0, 2.0), radius_lower_bound(I, 1.0, 2.0))
        np.testing.assert_array_equal(radius_lower_bound_remark(np.zeros(3), 2.0, 1.0), np.full(3, 0.5))
        with pytest.raises(ValueError):
            radius_lower_bound_remark(I, 0.0, 1.0)

    def test_remark_example2_proportional(self):
        t = np.linspace(0, 0.9, 2001)
        I = integral_from_path(t, 1 / (1 - t), 2, "example")
        B = estimate_A(single_mode(), 0.5)
        ratio = radius_lower_bound_remark(I, B, 0.5) / np.sqrt(1 - t)
        assert np.ptp(ratio) < 1e-6 * ratio[0]
        assert ratio[0] == pytest.approx(1 / B)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 5), min_size=2, max_size=30), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(1e-3, 2))
    def test_monotone_in_A_and_time(self, increments, A1, A2, eps0):
        I = np.concatenate([[0.0], np.cumsum(increments)])
        lo, hi = sorted([A1, A2])
        e_lo, e_hi = radius_lower_bound(I, eps0, lo), radius_lower_bound(I, eps0, hi)
        assert e_lo[0] == eps0
        assert np.all(np.diff(e_lo) <= 0)
        assert np.all(e_hi <= e_lo)
        # strict once A * I is resolvable next to 1 and before both underflow
        visible = (I > 1e-8) & (e_lo > 1e-300)
        if hi > lo * (1 + 1e-6):
            assert np.all(e_hi[visible] < e_lo[visible])

    def test_semigroup(self):
        t = np.linspace(0, 1, 2001)
        linf = 1 + np.sin(3 * t) ** 2
        I = integral_from_path(t, linf, 2)
        full = radius_lower_bound(I, 0.9, 1.3)
        k = 800
        restart = radius_lower_bound(I[k:] - I[k], full[k], 1.3)
        np.testing.assert_allclose(restart, full[k:], rtol=1e-13)


class TestBudgets:
    @pytest.mark.parametrize("sup, C, expected", [(1.0, 1.0, 4.0), (0.1, 1.0, 2.0), (1.0, 3.0, 12.0)])
    def test_c0_floor(self, sup, C, expected):
        c0 = c0_floor(sup, C)
        assert c0 > expected
        assert c0 == pytest.approx(expected, rel=2e-6)

    def test_c0_from_profile(self):
        f = single_mode()
        prof = analytic_profile(f, 0.5)
        assert c0_floor(prof, 1.0) == c0_floor(prof.sup_value, 1.0)
        with pytest.raises(ValueError):
            c0_floor(1.0, 0.0)

    def test_phi(self):
        np.testing.assert_array_equal(phi_budget(np.zeros(4), 2.5), np.full(4, 2.5))
        t = np.linspace(0, 1, 11)
        np.testing.assert_allclose(phi_budget(t, 2.0), 2 * np.exp(2 * t), rtol=1e-14)
        I = integral_from_path(t, np.ones_like(t), 2)
        np.testing.assert_allclose(phi_budget(I, 3.0), 3 * np.exp(6 * t), rtol=1e-13)

    def test_trace_invariants(self):
        t = np.linspace(0, 1, 101)
        I = integral_from_path(t, 1 + t, 2)
        tr = bounds_trace(t, I, 0.6, 1.2, 4.0)
        assert tr.epsilon_lower[0] == 0.6 and np.all(np.diff(tr.epsilon_lower) <= 0)
        assert tr.phi[0] == 4.0 and np.all(np.diff(tr.phi) >= 0)
        remark = bounds_trace(t, I, 0.6, 1.2, 4.0, B_const=2.0)
        assert remark.epsilon_lower[0] == 0.5
        bare = bounds_trace(t, I, 0.6, 1.2, 4.0, I_variant=I - t, variant="example")
        assert np.all(bare.epsilon_lower >= tr.epsilon_lower)
        np.testing.assert_array_equal(bare.phi, tr.phi)


class TestGronwall:
    def test_constant_case(self):
        t = np.linspace(0, 1, 10 ** 4)
        psi = gronwall_bound(t, 1.0, 2.0, 1.0)
        assert abs(psi[-1] - math.exp(2.0)) < 1e-8 * math.exp(2.0)

    def test_doubling_ratio(self):
        def err(n):
            t = np.linspace(0, 1, n + 1)
            return abs(gronwall_bound(t, 1.0, 2.0, 1.0)[-1] - math.exp(2.0))

        ratio = err(200) / err(400)
        assert 3.5 <= ratio <= 4.5

    def test_zero_h(self):
        t = np.linspace(0, 1, 50)
        g = 1 + t ** 2
        np.testing.assert_array_equal(gronwall_bound(t, g, 0.0, 1 + t), g)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_dominates_g(self, seed):
        rng = np.random.default_rng(seed)
        t = np.sort(np.concatenate([[0.0], rng.uniform(0, 2, 30)]))
        g, h, a = rng.uniform(0, 3, 31), rng.uniform(0, 3, 31), rng.uniform(0.1, 3, 31)
        assert np.all(gronwall_bound(t, g, h, a) >= g)

    def test_rejects_bad_inputs(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            gronwall_bound(t, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            gronwall_bound(t, -1.0, 1.0, 1.0)
