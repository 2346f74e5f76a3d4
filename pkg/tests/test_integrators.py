"""Trajectory integrators against closed-form and cross-method oracles."""

import numpy as np
import pytest

from memlang import (CutoffKind, KernelSpec, Potential, run_paths,
                     counterterm_shift)
from memlang.analytic import (exact_response_lorentzian, markovian_response,
                              truncated_response)
from memlang.errors import (ConfigError, IllPosedTruncationError,
                            IntegrationDivergedError, UnsupportedKindError)


def spec_for(delta, kind=CutoffKind.LORENTZIAN, temperature=1.0):
    return KernelSpec(kind=kind, eta=1.0, omega=1.0 / delta,
                      temperature=temperature)


def batch_se(values):
    """Standard error of a cross-path mean from 20 index batches."""
    n = len(values)
    means = [values[b::20].mean() for b in range(20)]
    return np.std(means, ddof=1) / np.sqrt(20)


class TestPotential:
    def test_kinds_and_gradients(self):
        q = np.array([0.5, -1.0])
        assert np.all(Potential().bare_gradient(q, 2.0) == 0.0)
        np.testing.assert_allclose(
            Potential(kind="harmonic", omega0=3.0).bare_gradient(q, 2.0),
            2.0 * 9.0 * q)
        np.testing.assert_allclose(
            Potential(kind="quartic_double_well", a=1.0, b=2.0).bare_gradient(q, 1.0),
            -q + 2.0 * q ** 3)

    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            Potential(kind="cubic")
        with pytest.raises(ConfigError):
            Potential(counterterm="none")
        with pytest.raises(ConfigError):
            Potential(kind="harmonic", omega0=0.0)

    def test_bare_flag_shifts_curvature(self):
        spec = spec_for(0.5)
        pot = Potential(kind="harmonic", omega0=2.0, counterterm="bare")
        q = np.array([1.0])
        shift = counterterm_shift(spec)
        np.testing.assert_allclose(pot.force(q, spec), -(4.0 - shift) * q)
        np.testing.assert_allclose(
            Potential(kind="harmonic", omega0=2.0).force(q, spec), -4.0 * q)

    def test_bare_inverted_curvature_rejected(self):
        # 2*eta*K(0) = eta*Omega grows with Omega and can flip the sign
        spec = KernelSpec(kind=CutoffKind.LORENTZIAN, eta=1.0, omega=50.0)
        pot = Potential(kind="harmonic", omega0=1.0, counterterm="bare")
        with pytest.raises(ConfigError, match="curvature"):
            run_paths(spec, pot, "ou_embedding", 2, 0.001, 10, 0.0, 0.0, 0)


class TestContracts:
    def test_unknown_integrator(self):
        with pytest.raises(ConfigError):
            run_paths(spec_for(0.2), Potential(), "verlet", 2, 0.01, 10, 0, 0, 0)

    def test_ou_embedding_needs_exponential_kernel(self):
        spec = spec_for(0.2, kind=CutoffKind.GAUSSIAN)
        with pytest.raises(UnsupportedKindError):
            run_paths(spec, Potential(), "ou_embedding", 2, 0.01, 10, 0, 0, 0)

    def test_truncated_needs_finite_moments(self):
        spec = spec_for(0.2, kind=CutoffKind.SHARP)
        with pytest.raises(UnsupportedKindError):
            run_paths(spec, Potential(), "truncated", 2, 0.01, 10, 0, 0, 0)
        with pytest.raises(ConfigError):
            run_paths(spec_for(0.2), Potential(), "truncated", 2, 0.01, 10,
                      0, 0, 0, order=4)

    def test_full_memory_step_bound(self):
        with pytest.raises(ConfigError, match="full_memory"):
            run_paths(spec_for(0.2), Potential(), "full_memory", 2, 0.2, 10,
                      0, 0, 0)

    def test_truncated_stiffness_guard(self):
        with pytest.raises(ConfigError, match="stiff"):
            run_paths(spec_for(0.1), Potential(), "truncated", 2, 0.05, 10,
                      0, 0, 0, order=2)

    def test_ill_posed_effective_mass(self):
        # delta > 1 drives M + 2 eta J1(Omega t)/Omega through zero
        spec = KernelSpec(kind=CutoffKind.LORENTZIAN, eta=1.0, omega=0.5)
        with pytest.raises(IllPosedTruncationError):
            run_paths(spec, Potential(), "truncated", 2, 0.1, 100, 0, 0, 0,
                      order=1)

    def test_stride_must_divide(self):
        with pytest.raises(ConfigError):
            run_paths(spec_for(0.2), Potential(), "markovian", 2, 0.01, 10,
                      0, 0, 0, record_stride=3)

    def test_initial_conditions_recorded(self):
        tr = run_paths(spec_for(0.2), Potential(), "markovian", 3, 0.01, 10,
                       1.5, -0.5, 0)
        np.testing.assert_array_equal(tr.q[0], 1.5)
        np.testing.assert_array_equal(tr.v[0], -0.5)
        assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(0.1)

    def test_determinism(self):
        kw = dict(record_stride=5)
        a = run_paths(spec_for(0.3), Potential(), "ou_embedding", 4, 0.01, 100,
                      0.0, 1.0, 77, **kw)
        b = run_paths(spec_for(0.3), Potential(), "ou_embedding", 4, 0.01, 100,
                      0.0, 1.0, 77, **kw)
        np.testing.assert_array_equal(a.q, b.q)
        np.testing.assert_array_equal(a.v, b.v)

    def test_divergence_reported(self):
        # inverted quartic tail: the force +|b| q^3 blows up in finite time
        pot = Potential(kind="quartic_double_well", a=1.0, b=-1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(IntegrationDivergedError):
                run_paths(spec_for(0.2), pot, "markovian", 2, 0.01, 4000,
                          2.0, 0.0, 0)


class TestDeterministicLimits:
    """Temperature zero turns every run into an ODE solve with exact oracles."""

    def test_markovian_velocity_relaxation(self):
        spec = spec_for(0.2, temperature=0.0)
        tr = run_paths(spec, Potential(), "markovian", 1, 0.002, 1000, 0.0, 1.0, 0,
                       record_stride=100)
        ref = markovian_response()(tr.times / spec.alpha)
        assert np.max(np.abs(tr.q[:, 0] - ref)) < 1e-5

    @pytest.mark.parametrize("integrator", ["full_memory", "ou_embedding"])
    def test_exact_response_reproduced(self, integrator):
        # Q(tau) = v0 * g(tau), including the confluent delta = 1/4 case
        spec = spec_for(0.25, temperature=0.0)
        tr = run_paths(spec, Potential(), integrator, 1, 0.002, 1000, 0.0, 1.0, 0,
                       record_stride=100)
        ref = exact_response_lorentzian(0.25)(tr.times / spec.alpha)
        assert np.max(np.abs(tr.q[:, 0] - ref)) < 1e-5

    @pytest.mark.parametrize(("order", "delta"), [(1, 0.05), (2, 0.05), (2, 0.1)])
    def test_truncated_matches_response(self, order, delta):
        # constant-coefficient response differs from the time-dependent
        # integrator only through the O(delta^{order+1}) warmup window
        spec = spec_for(delta, temperature=0.0)
        tr = run_paths(spec, Potential(), "truncated", 1, 0.0005, 4000,
                       0.0, 1.0, 0, record_stride=400, order=order)
        ref = truncated_response(delta, order=order)(tr.times / spec.alpha)
        assert np.max(np.abs(tr.q[:, 0] - ref)) < 3.0 * delta ** (order + 1)

    def test_full_memory_history_window(self):
        # truncating history at 12/Omega changes nothing measurable
        spec = spec_for(0.25, temperature=0.0)
        full = run_paths(spec, Potential(), "full_memory", 1, 0.002, 1000,
                         0.0, 1.0, 0, record_stride=100)
        cut = run_paths(spec, Potential(), "full_memory", 1, 0.002, 1000,
                        0.0, 1.0, 0, record_stride=100, history_window=12.0)
        assert np.max(np.abs(full.q - cut.q)) < 1e-6


class TestStatisticalOracles:
    def test_cross_integrator_variance_agreement(self):
        # exact auxiliary-variable integrator vs direct memory integral
        spec = spec_for(0.3)
        n = 600
        a = run_paths(spec, Potential(), "ou_embedding", n, 0.01, 300,
                      0.0, 0.0, 5, record_stride=100)
        b = run_paths(spec, Potential(), "full_memory", n, 0.01, 300,
                      0.0, 0.0, 5, record_stride=100)
        for k in range(1, a.q.shape[0]):
            qa, qb = a.q[k] ** 2, b.q[k] ** 2
            se = np.hypot(batch_se(qa), batch_se(qb))
            assert abs(qa.mean() - qb.mean()) < 3.0 * se

    def test_dt_convergence(self):
        # halving dt moves the tau = 1 variance by less than one SE
        spec = spec_for(0.2)
        n = 1000
        coarse = run_paths(spec, Potential(), "ou_embedding", n, 0.02, 50,
                           0.0, 0.0, 6, record_stride=50)
        fine = run_paths(spec, Potential(), "ou_embedding", n, 0.01, 100,
                         0.0, 0.0, 6, record_stride=100)
        qc, qf = coarse.q[-1] ** 2, fine.q[-1] ** 2
        se = np.hypot(batch_se(qc), batch_se(qf))
        assert abs(qc.mean() - qf.mean()) < se

    def test_harmonic_equilibrium_variance(self):
        # equipartition with the renormalized counterterm: <Q^2> -> T/(M w0^2)
        spec = spec_for(0.2)
        pot = Potential(kind="harmonic", omega0=2.0)
        tr = run_paths(spec, pot, "ou_embedding", 1500, 0.01, 1500, 0.0, 0.0, 8,
                       record_stride=250)
        q2 = tr.q[-1] ** 2
        assert abs(q2.mean() - 0.25) < 3.0 * batch_se(q2)
