"""Kernel catalog: shapes, moments, transforms, series coefficients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from memlang import (CutoffKind, KernelSpec, cutoff_f, memory_kernel,
                     counterterm_shift, j_coeff, laplace_kernel, max_j_order,
                     r_taylor, r_series)
from memlang.errors import DomainError, UnsupportedOrderError

ALL_KINDS = list(CutoffKind)
SMOOTH_KINDS = [CutoffKind.GAUSSIAN, CutoffKind.LORENTZIAN]


def spec_for(kind, omega=2.0, eta=1.0):
    return KernelSpec(kind=kind, eta=eta, omega=omega)


# -- closed-form moment oracles, written out independently ------------------

def lorentzian_j(n, y):
    # ((-1)^n/n!) * int_0^y x^n e^{-x}/2 dx
    if n == 0:
        return 0.5 * (1.0 - math.exp(-y))
    if n == 1:
        return -0.5 * (1.0 - (1.0 + y) * math.exp(-y))
    if n == 2:
        return 0.5 * (1.0 - (1.0 + y + 0.5 * y * y) * math.exp(-y))
    raise AssertionError


class TestKernelSpec:
    def test_derived_parameters(self):
        spec = KernelSpec(kind="lorentzian", eta=2.0, omega=4.0, mass=0.5)
        assert spec.delta == pytest.approx(1.0)
        assert spec.alpha == pytest.approx(0.25)

    def test_string_kind_coerced(self):
        assert spec_for("gaussian").kind is CutoffKind.GAUSSIAN

    @pytest.mark.parametrize("bad", [
        dict(eta=0.0, omega=1.0), dict(eta=1.0, omega=-2.0),
        dict(eta=1.0, omega=1.0, mass=0.0),
        dict(eta=1.0, omega=1.0, temperature=-1.0),
    ])
    def test_parameter_validation(self, bad):
        with pytest.raises(DomainError):
            KernelSpec(kind=CutoffKind.LORENTZIAN, **bad)

    @given(st.floats(0.01, 100.0), st.floats(0.01, 100.0),
           st.floats(0.0, 50.0))
    def test_tau_roundtrip(self, eta, mass, t):
        spec = KernelSpec(kind=CutoffKind.LORENTZIAN, eta=eta, omega=1.0,
                          mass=mass)
        assert float(spec.t_of_tau(spec.tau_of_t(t))) == pytest.approx(t, abs=1e-9)

    def test_unknown_kind(self):
        with pytest.raises(DomainError, match="lorentzian"):
            CutoffKind.from_name("cauchy")


class TestCutoffF:
    def test_values_at_zero_and_tail(self):
        for kind in ALL_KINDS:
            assert cutoff_f(kind, 0.0) == pytest.approx(1.0)
        assert cutoff_f(CutoffKind.SHARP, 1.5) == 0.0
        # fat 1/x^2 tail singles out the lorentzian cut
        assert cutoff_f(CutoffKind.LORENTZIAN, 10.0) == pytest.approx(1 / 101)
        assert cutoff_f(CutoffKind.GAUSSIAN, 10.0) < 1e-40

    def test_negative_frequency_rejected(self):
        with pytest.raises(DomainError):
            cutoff_f(CutoffKind.GAUSSIAN, -0.5)


class TestMemoryKernel:
    @given(st.sampled_from(ALL_KINDS), st.floats(-100.0, 100.0))
    @settings(max_examples=200)
    def test_evenness(self, kind, u):
        spec = spec_for(kind, omega=1.0)
        a = memory_kernel(spec, u)
        b = memory_kernel(spec, -u)
        assert a == pytest.approx(b, rel=1e-14, abs=1e-300)

    @pytest.mark.parametrize("kind", SMOOTH_KINDS)
    def test_unit_normalization(self, kind):
        spec = spec_for(kind, omega=3.0)
        val, _ = integrate.quad(lambda t: memory_kernel(spec, t),
                                -50.0 / spec.omega, 50.0 / spec.omega, limit=400)
        assert val >= 1.0 - 1e-6
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_sharp_kernel_center_is_limit(self):
        spec = spec_for(CutoffKind.SHARP, omega=5.0)
        assert memory_kernel(spec, 0.0) == pytest.approx(5.0 / np.pi)

    def test_kernel_consistent_with_spectral_integral(self):
        # Delta_Omega(t) = (1/pi) int_0^inf f(w/Omega) cos(w t) dw
        spec = spec_for(CutoffKind.GAUSSIAN, omega=2.0)
        for t in (0.0, 0.3, 1.0):
            ref, _ = integrate.quad(
                lambda w: cutoff_f(spec.kind, w / spec.omega) * np.cos(w * t) / np.pi,
                0.0, 30.0 * spec.omega, limit=400)
            assert memory_kernel(spec, t) == pytest.approx(ref, abs=1e-8)

    def test_counterterm_shift(self):
        spec = spec_for(CutoffKind.LORENTZIAN, omega=4.0, eta=3.0)
        assert counterterm_shift(spec) == pytest.approx(2 * 3.0 * 4.0 * 0.5)


class TestJCoefficients:
    @pytest.mark.parametrize("n", [0, 1, 2])
    @pytest.mark.parametrize("y", [0.1, 1.0, 10.0])
    def test_lorentzian_quadrature_matches_closed_form(self, n, y):
        spec = spec_for(CutoffKind.LORENTZIAN)
        quad_val = j_coeff(spec, n, y, method="quadrature")
        assert abs(quad_val - lorentzian_j(n, y)) < 1e-10
        assert j_coeff(spec, n, y) == pytest.approx(lorentzian_j(n, y), abs=1e-12)

    def test_markovian_limit_of_j0(self):
        for kind in SMOOTH_KINDS:
            assert abs(j_coeff(spec_for(kind), 0, 50.0) - 0.5) < 1e-6

    def test_lorentzian_asymptotic_constants(self):
        spec = spec_for(CutoffKind.LORENTZIAN)
        assert j_coeff(spec, 0, 60.0) == pytest.approx(0.5, abs=1e-12)
        assert j_coeff(spec, 1, 60.0) == pytest.approx(-0.5, abs=1e-12)
        assert j_coeff(spec, 2, 60.0) == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_quadrature_matches_closed_form(self):
        spec = spec_for(CutoffKind.GAUSSIAN)
        for n in range(5):
            for y in (0.5, 2.0, 8.0):
                assert j_coeff(spec, n, y, method="quadrature") == pytest.approx(
                    j_coeff(spec, n, y), abs=1e-9)

    def test_sharp_oscillatory_quadrature(self):
        spec = spec_for(CutoffKind.SHARP)
        for n in (0, 1, 2):
            assert j_coeff(spec, n, 50.0, method="quadrature") == pytest.approx(
                j_coeff(spec, n, 50.0), abs=1e-7)

    def test_order_support_matrix(self):
        assert max_j_order(CutoffKind.GAUSSIAN) == 4
        assert max_j_order(CutoffKind.SHARP) == 2
        j_coeff(spec_for(CutoffKind.GAUSSIAN), 4, 1.0)
        with pytest.raises(UnsupportedOrderError):
            j_coeff(spec_for(CutoffKind.GAUSSIAN), 5, 1.0)
        with pytest.raises(UnsupportedOrderError):
            j_coeff(spec_for(CutoffKind.EXPONENTIAL), 3, 1.0)

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            j_coeff(spec_for(CutoffKind.LORENTZIAN), 0, -1.0)
        with pytest.raises(DomainError):
            j_coeff(spec_for(CutoffKind.LORENTZIAN), -1, 1.0)

    @given(st.sampled_from(SMOOTH_KINDS), st.integers(0, 4),
           st.floats(0.0, 40.0))
    @settings(max_examples=100)
    def test_j_zero_at_origin_and_sign_pattern(self, kind, n, y):
        # J_n(0) = 0 and sign of J_n(y) is (-1)^n (integrand is positive)
        spec = spec_for(kind)
        assert j_coeff(spec, n, 0.0) == 0.0
        if y > 0:
            assert (-1.0) ** n * j_coeff(spec, n, y) >= 0.0


class TestLaplaceKernel:
    def test_static_limit_is_half(self):
        for kind in ALL_KINDS:
            assert laplace_kernel(spec_for(kind), 0.0) == pytest.approx(0.5)

    def test_lorentzian_closed_form(self):
        spec = spec_for(CutoffKind.LORENTZIAN, omega=2.0)  # delta = 0.5
        s = np.array([0.0, 0.5, 2.0, 10.0])
        np.testing.assert_allclose(laplace_kernel(spec, s),
                                   1.0 / (2.0 * (1.0 + 0.5 * s)), rtol=1e-14)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_quadrature_matches_closed_form(self, kind):
        spec = spec_for(kind, omega=2.0)
        for s in (0.1, 1.0, 5.0):
            assert laplace_kernel(spec, s, method="quadrature") == pytest.approx(
                laplace_kernel(spec, s), abs=1e-7)


class TestRSeries:
    def test_lorentzian_taylor_alternates(self):
        np.testing.assert_allclose(r_taylor(CutoffKind.LORENTZIAN, 6),
                                   [(-1.0) ** j for j in range(1, 7)], rtol=1e-14)

    @pytest.mark.parametrize("kind", [CutoffKind.LORENTZIAN, CutoffKind.GAUSSIAN,
                                      CutoffKind.SHARP])
    def test_taylor_reproduces_r_at_small_x(self, kind):
        k_max = 5
        r = r_taylor(kind, k_max)
        x = 0.1
        approx = sum(r[j - 1] * x ** j for j in range(1, k_max + 1))
        spec = spec_for(kind, omega=1.0)  # delta = 1, so x = s directly
        exact = 2.0 * laplace_kernel(spec, x) - 1.0
        assert abs(approx - exact) < 5e-6  # remainder is O(x^{k_max+1})

    def test_exponential_cut_has_no_taylor_series(self):
        # its transform carries x*log(x) terms, so extraction must refuse
        from memlang.errors import NumericError
        with pytest.raises(NumericError, match="no analytic"):
            r_taylor(CutoffKind.EXPONENTIAL, 5)

    @given(st.integers(1, 5), st.integers(1, 5))
    @settings(max_examples=50)
    def test_low_order_entries_vanish(self, n, k):
        # R(0) = 0 forces [R(x)]^n = O(x^n), so derivatives below order n vanish
        table = r_series(CutoffKind.GAUSSIAN, 5, 5)
        if k < n:
            assert table.get(n, k) == 0.0
        assert np.isfinite(table.get(n, k))

    def test_lorentzian_power_coefficients(self):
        # R(x) = -x/(1+x): [x^k] R = (-1)^k, [x^k] R^2 = (k-1)(-1)^k
        table = r_series(CutoffKind.LORENTZIAN, 2, 4)
        for k in range(1, 5):
            assert table.get(1, k) == pytest.approx(
                math.factorial(k) * (-1.0) ** k, rel=1e-12)
        for k in range(2, 5):
            assert table.get(2, k) == pytest.approx(
                math.factorial(k) * (k - 1) * (-1.0) ** k, rel=1e-12)

    def test_index_bounds(self):
        table = r_series(CutoffKind.LORENTZIAN, 2, 3)
        with pytest.raises(DomainError):
            table.get(3, 1)
        with pytest.raises(DomainError):
            table.get(1, 4)
