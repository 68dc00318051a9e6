import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strip_radius.analytic import (
    FitOptions,
    analytic_profile,
    energy_term,
    log_energy_term,
    pole_radius,
    radius_from_spectrum,
)
from strip_radius.oracles import periodized_lorentzian, sinx_datum
from strip_radius.spectral import PeriodicGrid, SpectralField, from_spectrum, sobolev_norm

TWO_PI = 2 * math.pi
WIDE = PeriodicGrid(40 * math.pi, 4096)


def lorentzian(r, grid=WIDE):
    """Periodized (1 + x^2 / r^2)^{-1}."""
    return SpectralField(grid, r * periodized_lorentzian(grid.x, r, grid.L))


def single_mode():
    g = PeriodicGrid(TWO_PI, 16)
    return SpectralField.from_function(g, lambda x: np.exp(1j * x))


class TestEnergyTerm:
    def test_zero_field(self):
        f = SpectralField(PeriodicGrid(TWO_PI, 16), np.zeros(16))
        assert energy_term(f, 0.7, 3) == 0.0
        assert log_energy_term(f, 0.7, 3) == -math.inf

    def test_first_term_ignores_epsilon(self):
        f = lorentzian(1.0, PeriodicGrid(40 * math.pi, 1024))
        assert energy_term(f, 0.1, 1) == energy_term(f, 5.0, 1)

    def test_single_mode_closed_form(self):
        f = single_mode()
        assert energy_term(f, 1.0, 3) == pytest.approx(sobolev_norm(f) / 6, rel=1e-13)

    @pytest.mark.parametrize("N", [1, 2, 5, 10])
    def test_single_mode_all_orders(self, N):
        eps = 0.5
        f = single_mode()
        expected = eps ** (N - 1) / math.factorial(N) * sobolev_norm(f)
        assert energy_term(f, eps, N) == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_arguments(self):
        f = single_mode()
        with pytest.raises(ValueError):
            energy_term(f, 1.0, 0)
        with pytest.raises(ValueError):
            energy_term(f, 0.0, 2)

    def test_no_overflow_at_high_order(self):
        f = lorentzian(0.3)
        assert math.isfinite(log_energy_term(f, 0.1, 200))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(1, 12))
    def test_homogeneous(self, re, im, N):
        c = complex(re, im)
        f = lorentzian(1.0, PeriodicGrid(40 * math.pi, 512))
        # scale the coefficients directly so FFT rounding cannot move bins across the noise floor
        cf = from_spectrum(f.grid, c * f.spectrum)
        assert energy_term(cf, 0.4, N) == pytest.approx(abs(c) * energy_term(f, 0.4, N), rel=1e-12, abs=1e-300)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 3), st.floats(0.01, 3), st.integers(2, 12))
    def test_monotone_in_epsilon(self, e1, e2, N):
        f = lorentzian(1.0, PeriodicGrid(40 * math.pi, 512))
        lo, hi = sorted([e1, e2])
        assert energy_term(f, lo, N) <= energy_term(f, hi, N) * (1 + 1e-12)


class TestProfile:
    def test_gaussian_converges(self):
        g = PeriodicGrid(20 * math.pi, 1024)
        f = SpectralField.from_function(g, lambda x: np.exp(-x ** 2))
        prof = analytic_profile(f, 1.0)
        assert prof.converged
        assert prof.argmax_N < prof.N_max - 5
        assert math.isfinite(prof.sup_value)

    def test_lorentzian_beyond_radius_diverges(self):
        prof = analytic_profile(lorentzian(1.0), 2.0)
        assert not prof.converged
        assert prof.argmax_N == prof.N_max

    def test_lorentzian_inside_radius_converges(self):
        assert analytic_profile(lorentzian(1.0), 0.5).converged

    def test_zero_field(self):
        prof = analytic_profile(SpectralField(PeriodicGrid(TWO_PI, 16), np.zeros(16)), 1.0)
        assert prof.sup_value == 0.0 and prof.converged

    def test_invariants(self):
        for eps in (0.2, 0.9, 1.0, 1.5):
            prof = analytic_profile(lorentzian(1.0), eps)
            assert np.all(prof.terms >= 0)
            assert prof.sup_value == pytest.approx(prof.terms.max(), rel=1e-15)
            if prof.argmax_N > prof.N_max - 5:
                assert not prof.converged

    def test_needs_enough_terms(self):
        with pytest.raises(ValueError):
            analytic_profile(single_mode(), 1.0, N_max=5)


class TestSpectrumFit:
    def test_exact_exponential(self):
        g = PeriodicGrid(TWO_PI, 256)
        c = np.exp(-0.3 * np.abs(g.k)).astype(complex)
        est = radius_from_spectrum(from_spectrum(g, c))
        assert est.value == pytest.approx(0.3, abs=1e-12)
        assert est.residual < 1e-12
        assert est.reliable and est.method == "spectrum_fit"

    def test_periodized_lorentzian(self):
        est = radius_from_spectrum(lorentzian(1.0))
        assert 0.95 <= est.value <= 1.05
        assert est.reliable

    @pytest.mark.parametrize("r", [0.3, 0.5, 1.0, 2.0])
    def test_calibration(self, r):
        est = radius_from_spectrum(lorentzian(r))
        assert est.value == pytest.approx(r, rel=0.05)
        assert est.reliable

    def test_white_noise_unreliable(self):
        rng = np.random.default_rng(0)
        f = SpectralField(PeriodicGrid(TWO_PI, 256), rng.standard_normal(256))
        assert not radius_from_spectrum(f).reliable

    def test_degenerate_band(self):
        f = SpectralField.from_function(PeriodicGrid(TWO_PI, 64), np.cos)
        est = radius_from_spectrum(f)
        assert est.value is None and not est.reliable

    def test_zero_field_rejected(self):
        with pytest.raises(ValueError):
            radius_from_spectrum(SpectralField(PeriodicGrid(TWO_PI, 16), np.zeros(16)))

    def test_options_validated(self):
        with pytest.raises(ValueError):
            FitOptions(low_k_fraction=1.5)
        with pytest.raises(ValueError):
            FitOptions(floor=0.0)

    def test_reliability_thresholds(self):
        est = radius_from_spectrum(lorentzian(1.0), FitOptions(min_decades=1e3))
        assert not est.reliable and est.value is not None

    @settings(max_examples=15, deadline=None)
    @given(st.floats(1.0, 3.0))
    def test_scaling(self, lam):
        # sech has poles at +-i pi/2 and decays exponentially, so the box sample is clean
        base = radius_from_spectrum(SpectralField(WIDE, 1 / np.cosh(WIDE.x))).value
        scaled = radius_from_spectrum(SpectralField(WIDE, 1 / np.cosh(lam * WIDE.x))).value
        assert base == pytest.approx(math.pi / 2, rel=0.02)
        assert scaled == pytest.approx(base / lam, rel=0.02)

    def test_sinx_datum_radius(self):
        g = PeriodicGrid(TWO_PI, 256)
        for r0 in (0.5, 1.0):
            assert radius_from_spectrum(SpectralField(g, sinx_datum(g.x, r0))).value == pytest.approx(r0, rel=1e-4)
        # at r0 = 2 the tail reaches the noise floor before the fit band starts
        assert radius_from_spectrum(SpectralField(g, sinx_datum(g.x, 2.0))).value is None


class TestPoleRadius:
    def test_example1(self):
        assert pole_radius("example1", t=0) == 1.0
        assert pole_radius("example1", t=1) == math.exp(-1)

    def test_example2(self):
        assert pole_radius("example2", {"p": 2}, 0.75) == 0.5
        assert pole_radius("example2", {"p": 3}, 0.25) == pytest.approx(math.sqrt(0.5))

    def test_lifespan(self):
        with pytest.raises(ValueError):
            pole_radius("example2", {"p": 2}, 1.0)
        with pytest.raises(ValueError):
            pole_radius("example1", t=-0.1)
        with pytest.raises(ValueError):
            pole_radius("nope")
