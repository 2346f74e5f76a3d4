"""Time-steppers for the non-Markovian Langevin dynamics.

Four modes over a common stochastic-Heun core, all vectorized over a
batch of independent trajectories:

* ``markovian``     -- local friction + white noise reference.
* ``ou_embedding``  -- exact auxiliary-variable rewriting of the
                       exponential-kernel dynamics (memory variable u and
                       an Ornstein-Uhlenbeck noise state).
* ``full_memory``   -- direct trapezoidal evaluation of the memory
                       integral over the whole velocity history
                       (O(N^2) per trajectory, documented).
* ``truncated``     -- derivative expansion to order n in {1, 2, 3} with
                       time-dependent coefficients from the kernel
                       moments J_n(Omega t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, IllPosedTruncationError,
                     IntegrationDivergedError, UnsupportedKindError)
from .kernels import CutoffKind, KernelSpec, counterterm_shift, j_coeff, memory_kernel
from .noise import NoiseGrid, sample_colored_block, stream

__all__ = ["Potential", "Trajectory", "run_paths", "INTEGRATORS"]

INTEGRATORS = ("markovian", "ou_embedding", "full_memory", "truncated")

_DIVERGENCE_LIMIT = 1e12


def _ic_array(value, n_paths):
    """Broadcast a scalar or per-path array initial condition."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n_paths, float(arr))
    if arr.shape != (n_paths,):
        raise ConfigError(f"initial-condition array has shape {arr.shape}, expected ({n_paths},)")
    return arr.copy()


@dataclass(frozen=True)
class Potential:
    """External potential with the bath-induced curvature handling.

    With counterterm='bare' the effective force is V'(Q) - 2 eta K(0) Q
    (the coupling shifts the curvature); with 'renormalized' a Lagrangian
    counterterm cancels the shift and the stated potential is what acts.
    """
    kind: str = "free"
    omega0: float = 1.0
    a: float = 1.0
    b: float = 1.0
    counterterm: str = "renormalized"

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "quartic_double_well"):
            raise ConfigError(
                f"unknown potential kind {self.kind!r}; "
                "valid: free, harmonic, quartic_double_well")
        if self.counterterm not in ("bare", "renormalized"):
            raise ConfigError("counterterm must be 'bare' or 'renormalized'")
        if self.kind == "harmonic" and self.omega0 <= 0:
            raise ConfigError("harmonic potential needs omega0 > 0")

    def bare_gradient(self, q, mass):
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "harmonic":
            return mass * self.omega0 ** 2 * q
        return -self.a * q + self.b * q ** 3

    def force(self, q, spec):
        """-(effective gradient); the RHS contribution of the potential."""
        grad = self.bare_gradient(q, spec.mass)
        if self.counterterm == "bare":
            grad = grad - counterterm_shift(spec) * q
        return -grad

    def validate(self, spec):
        if self.kind == "harmonic" and self.counterterm == "bare":
            curv = spec.mass * self.omega0 ** 2 - counterterm_shift(spec)
            if curv <= 0:
                raise ConfigError(
                    f"bare effective curvature M*omega0^2 - 2*eta*K(0) = "
                    f"{curv:.6g} <= 0 (Omega={spec.omega} too large); "
                    "use counterterm='renormalized' or lower Omega")


@dataclass(frozen=True)
class Trajectory:
    """Recorded batch trajectory on a uniform output grid."""
    times: np.ndarray
    q: np.ndarray  # (n_records, n_paths)
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            raise IntegrationDivergedError("trajectory contains non-finite entries")


def _check_finite(arrs, step):
    for a in arrs:
        if not np.all(np.abs(a) < _DIVERGENCE_LIMIT):
            raise IntegrationDivergedError(
                f"state left the finite range at step {step}", step=step)


def _noise_matrix(spec, grid, seed, indices, white):
    """(n_steps, n_paths) of held per-step noise values, one stream per path."""
    if white:
        sigma = np.sqrt(2.0 * spec.eta * spec.temperature / grid.dt)
        cols = [stream(seed, i).normal(0.0, sigma, grid.n_steps) for i in indices]
        return np.column_stack(cols)
    return sample_colored_block(spec, grid, seed, indices)


def run_paths(spec, potential, integrator, n_paths, dt, n_steps, q0, v0, seed,
              index0=0, record_stride=1, order=2, initial_slip=False,
              history_window=None):
    """Integrate ``n_paths`` independent trajectories and record every
    ``record_stride`` steps.  Per-path noise streams are keyed by
    (seed, index0 + path), so results do not depend on batching."""
    if integrator not in INTEGRATORS:
        raise ConfigError(f"unknown integrator {integrator!r}; valid: {INTEGRATORS}")
    if n_steps % record_stride != 0:
        raise ConfigError("record_stride must divide n_steps")
    potential.validate(spec)
    grid = NoiseGrid(dt=dt, n_steps=n_steps)
    indices = range(index0, index0 + n_paths)

    if integrator == "markovian":
        runner = _run_markovian
    elif integrator == "ou_embedding":
        if spec.kind is not CutoffKind.LORENTZIAN:
            raise UnsupportedKindError(
                "ou_embedding requires the exponential (lorentzian-cut) kernel")
        runner = _run_ou_embedding
    elif integrator == "full_memory":
        if dt > min(1.0 / (4.0 * spec.omega), spec.alpha / 100.0):
            raise ConfigError(
                f"full_memory needs dt <= min(1/(4 Omega), alpha/100) = "
                f"{min(1.0 / (4.0 * spec.omega), spec.alpha / 100.0):.6g}, got {dt}")
        runner = _run_full_memory
    else:
        if spec.kind not in (CutoffKind.GAUSSIAN, CutoffKind.LORENTZIAN):
            raise UnsupportedKindError(
                "truncated integrator needs finite kernel moments at every "
                "order: use the gaussian or lorentzian cutoff")
        if order not in (1, 2, 3):
            raise ConfigError("truncated order must be in {1, 2, 3}")
        runner = _run_truncated

    q, v, times = runner(spec, potential, grid, n_paths, q0, v0, seed, indices,
                         record_stride, order=order, initial_slip=initial_slip,
                         history_window=history_window)
    meta = {
        "integrator": integrator, "order": order if integrator == "truncated" else None,
        "dt": dt, "seed": seed, "index0": index0, "spec": spec,
        "potential": potential, "initial_slip": initial_slip,
    }
    return Trajectory(times=times, q=q, v=v, meta=meta)


def _recorder(grid, stride, n_paths):
    n_rec = grid.n_steps // stride + 1
    times = np.arange(n_rec) * (grid.dt * stride)
    return times, np.empty((n_rec, n_paths)), np.empty((n_rec, n_paths))


def _run_markovian(spec, potential, grid, n_paths, q0, v0, seed, indices,
                   stride, **_kw):
    dt, m, eta = grid.dt, spec.mass, spec.eta
    xi = _noise_matrix(spec, grid, seed, indices, white=True)
    q = _ic_array(q0, n_paths)
    v = _ic_array(v0, n_paths)
    times, rq, rv = _recorder(grid, stride, n_paths)
    rq[0], rv[0] = q, v
    for i in range(grid.n_steps):
        f = xi[i]
        acc = (f + potential.force(q, spec) - eta * v) / m
        qp = q + dt * v
        vp = v + dt * acc
        accp = (f + potential.force(qp, spec) - eta * vp) / m
        q = q + 0.5 * dt * (v + vp)
        v = v + 0.5 * dt * (acc + accp)
        if (i + 1) % stride == 0:
            k = (i + 1) // stride
            rq[k], rv[k] = q, v
        if i % 256 == 255:
            _check_finite((q, v), i)
    return rq, rv, times


def _run_ou_embedding(spec, potential, grid, n_paths, q0, v0, seed, indices,
                      stride, initial_slip=False, **_kw):
    dt, m, eta, om = grid.dt, spec.mass, spec.eta, spec.omega
    T = spec.temperature
    a = np.exp(-om * dt)
    s = np.sqrt(eta * T * om * (1.0 - a * a))
    q = _ic_array(q0, n_paths)
    v = _ic_array(v0, n_paths)
    u = np.zeros(n_paths)
    if initial_slip:
        # bath initially equilibrated around Q0 instead of 0
        u -= eta * om * float(q0)
    # stationary noise start plus per-step innovations, one stream per path
    z = np.column_stack([stream(seed, i).standard_normal(grid.n_steps + 1)
                         for i in indices])
    xi = np.sqrt(eta * T * om) * z[0]
    times, rq, rv = _recorder(grid, stride, n_paths)
    rq[0], rv[0] = q, v

    def rhs(qc, vc, uc, xic):
        dv = (xic - uc + potential.force(qc, spec)) / m
        du = -om * uc + eta * om * vc
        return vc, dv, du

    for i in range(grid.n_steps):
        dq1, dv1, du1 = rhs(q, v, u, xi)
        qp, vp, up = q + dt * dq1, v + dt * dv1, u + dt * du1
        dq2, dv2, du2 = rhs(qp, vp, up, xi)
        q = q + 0.5 * dt * (dq1 + dq2)
        v = v + 0.5 * dt * (dv1 + dv2)
        u = u + 0.5 * dt * (du1 + du2)
        xi = a * xi + s * z[i + 1]  # exact OU update between steps
        if (i + 1) % stride == 0:
            k = (i + 1) // stride
            rq[k], rv[k] = q, v
        if i % 256 == 255:
            _check_finite((q, v, u), i)
    return rq, rv, times


def _run_full_memory(spec, potential, grid, n_paths, q0, v0, seed, indices,
                     stride, initial_slip=False, history_window=None, **_kw):
    dt, m, eta = grid.dt, spec.mass, spec.eta
    n = grid.n_steps
    kern = memory_kernel(spec, np.arange(n + 1) * dt)
    # optional history truncation: lags beyond window/Omega are dropped
    # (error bound e^{-window} for the exponential kernel)
    max_lag = n
    if history_window is not None:
        max_lag = min(n, int(np.ceil(history_window / (spec.omega * dt))))
    xi = _noise_matrix(spec, grid, seed, indices, white=False)
    q = _ic_array(q0, n_paths)
    v = _ic_array(v0, n_paths)
    hist = np.empty((n + 1, n_paths))
    hist[0] = v
    times, rq, rv = _recorder(grid, stride, n_paths)
    rq[0], rv[0] = q, v

    def friction(k, v_k):
        """2 eta * trapezoid of K(t_k - t') v(t') over stored history."""
        lo = max(0, k - max_lag)
        if k == lo:
            return np.zeros(n_paths)
        w = kern[k - lo:0:-1]  # K at lags (k-lo)...1 pairing v at nodes lo..k-1
        acc = w @ hist[lo:k]
        acc -= 0.5 * kern[k - lo] * hist[lo]  # trapezoid half-weight ends
        acc += 0.5 * kern[0] * v_k
        return 2.0 * eta * dt * acc

    slip = 2.0 * eta * float(q0) if initial_slip else 0.0
    for i in range(n):
        f = xi[i] + slip * kern[i]
        acc = (f + potential.force(q, spec) - friction(i, v)) / m
        qp = q + dt * v
        vp = v + dt * acc
        hist[i + 1] = vp
        fp = xi[i] + slip * kern[i + 1]
        accp = (fp + potential.force(qp, spec) - friction(i + 1, vp)) / m
        q = q + 0.5 * dt * (v + vp)
        v = v + 0.5 * dt * (acc + accp)
        hist[i + 1] = v
        if (i + 1) % stride == 0:
            k = (i + 1) // stride
            rq[k], rv[k] = q, v
        if i % 256 == 255:
            _check_finite((q, v), i)
    return rq, rv, times


def _truncated_coefficients(spec, grid, order):
    """Time-dependent coefficients (mbar, eta1, eta3, eta4) on the grid nodes."""
    om, eta, m = spec.omega, spec.eta, spec.mass
    t_nodes = np.arange(grid.n_steps + 1) * grid.dt
    y = om * t_nodes
    j0 = np.array([j_coeff(spec, 0, yy) for yy in y])
    j1 = np.array([j_coeff(spec, 1, yy) for yy in y])
    mbar = m + 2.0 * eta * j1 / om
    eta1 = 2.0 * eta * j0
    eta3 = eta4 = None
    if order >= 2:
        j2 = np.array([j_coeff(spec, 2, yy) for yy in y])
        eta3 = 2.0 * eta * j2 / om ** 2
    if order >= 3:
        j3 = np.array([j_coeff(spec, 3, yy) for yy in y])
        eta4 = 2.0 * eta * j3 / om ** 3
    return mbar, eta1, eta3, eta4


def _run_truncated(spec, potential, grid, n_paths, q0, v0, seed, indices,
                   stride, order=2, **_kw):
    dt, m = grid.dt, spec.mass
    mbar, eta1, eta3, eta4 = _truncated_coefficients(spec, grid, order)
    if np.any(mbar <= 0):
        t_bad = np.argmax(mbar <= 0) * dt
        raise IllPosedTruncationError(
            f"effective mass M + 2 eta J1(Omega t)/Omega <= 0 at t={t_bad:.6g} "
            f"(delta={spec.delta:.4g}); the truncation is ill-posed here")
    if order >= 2:
        # explicit scheme stability for the fast mode ~ mbar/eta3
        eta3_inf = eta3[-1]
        if eta3_inf > 0 and dt > eta3_inf / mbar[-1]:
            raise ConfigError(
                f"dt={dt} too large for the order-{order} stiff mode: need "
                f"dt <= eta3/Mbar = {eta3_inf / mbar[-1]:.6g}")
    xi = _noise_matrix(spec, grid, seed, indices, white=False)
    q = _ic_array(q0, n_paths)
    v = _ic_array(v0, n_paths)
    w = np.zeros(n_paths)   # Q''(0) = 0
    x = np.zeros(n_paths)   # Q'''(0) = 0 (artifact choice for order 3)
    times, rq, rv = _recorder(grid, stride, n_paths)
    rq[0], rv[0] = q, v

    for i in range(grid.n_steps):
        f = xi[i]
        # effective order for this step: while a higher-derivative
        # coefficient is too small to step explicitly (early-time warmup,
        # J_n(Omega t) ~ t^{n+1}), the step uses the next-lower balance and
        # slaves the corresponding derivative to it afterwards
        eff = order
        if eff >= 3 and abs(eta4[i]) < eta3[i] * dt:
            eff = 2
        if eff >= 2 and eta3[i] < mbar[i] * dt:
            eff = 1

        if eff == 1:
            def rhs1(qc, vc, node):
                return vc, (f + potential.force(qc, spec) - eta1[node] * vc) / mbar[node]
            dq1, dv1 = rhs1(q, v, i)
            dq2, dv2 = rhs1(q + dt * dq1, v + dt * dv1, i + 1)
            q = q + 0.5 * dt * (dq1 + dq2)
            v = v + 0.5 * dt * (dv1 + dv2)
            if order >= 2:
                w = (f + potential.force(q, spec) - eta1[i + 1] * v) / mbar[i + 1]
        elif eff == 2:
            def rhs2(qc, vc, wc, node):
                dw = (f + potential.force(qc, spec) - eta1[node] * vc
                      - mbar[node] * wc) / eta3[node]
                return vc, wc, dw
            dq1, dv1, dw1 = rhs2(q, v, w, i)
            dq2, dv2, dw2 = rhs2(q + dt * dq1, v + dt * dv1, w + dt * dw1, i + 1)
            q = q + 0.5 * dt * (dq1 + dq2)
            v = v + 0.5 * dt * (dv1 + dv2)
            w = w + 0.5 * dt * (dw1 + dw2)
            if order >= 3:
                x = (f + potential.force(q, spec) - eta1[i + 1] * v
                     - mbar[i + 1] * w) / eta3[i + 1]
        else:
            def rhs3(qc, vc, wc, xc, node):
                dx = (f + potential.force(qc, spec) - eta1[node] * vc
                      - mbar[node] * wc - eta3[node] * xc) / eta4[node]
                return vc, wc, xc, dx
            dq1, dv1, dw1, dx1 = rhs3(q, v, w, x, i)
            dq2, dv2, dw2, dx2 = rhs3(q + dt * dq1, v + dt * dv1,
                                      w + dt * dw1, x + dt * dx1, i + 1)
            q = q + 0.5 * dt * (dq1 + dq2)
            v = v + 0.5 * dt * (dv1 + dv2)
            w = w + 0.5 * dt * (dw1 + dw2)
            x = x + 0.5 * dt * (dx1 + dx2)

        if (i + 1) % stride == 0:
            k = (i + 1) // stride
            rq[k], rv[k] = q, v
        if i % 64 == 63:
            _check_finite((q, v, w, x), i)
    return rq, rv, times
