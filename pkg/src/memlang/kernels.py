"""Memory-kernel catalog for the generalized Langevin equation.

Four frequency cutoffs (sharp, exponential, Gaussian, Lorentzian) define a
family of delta-like memory kernels of width 1/omega.  This module provides
the cutoff functions, the kernels themselves, the bath-induced curvature
shift, the moment coefficients J_n driving the derivative expansion, the
one-sided Laplace transform of the rescaled kernel and the Taylor data of
that transform (the R-series) used by the analytic solution.

All functions are pure and accept scalars or numpy arrays where a grid
argument makes sense.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import (
    DomainError,
    NumericError,
    UnsupportedOrderError,
)

__all__ = [
    "CutoffKind",
    "KernelSpec",
    "SeriesCoeffs",
    "cutoff_f",
    "memory_kernel",
    "counterterm_shift",
    "j_coeff",
    "j_coeff_closed",
    "laplace_kernel",
    "r_series",
    "r_taylor",
    "max_j_order",
]

# Adaptive-quadrature tolerances; part of the public contract.
QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-8

# Orders supported per kind: smooth cutoffs up to DEFAULT_MAX_ORDER, the
# sharp and exponential cuts only up to 2 (higher moments diverge at large y).
DEFAULT_MAX_ORDER = 4
_OSCILLATORY_MAX_ORDER = 2


class CutoffKind(enum.Enum):
    SHARP = "sharp"
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"

    @classmethod
    def from_name(cls, name: str) -> "CutoffKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise DomainError(
                f"unknown cutoff kind {name!r}; valid kinds: {valid}"
            ) from None


@dataclass(frozen=True)
class KernelSpec:
    """Cutoff kind plus the physical parameters of the bath coupling.

    Units (k_B = 1): eta mass/time, omega 1/time, mass mass, temperature
    energy.  The derived small parameter is delta = eta/(mass*omega) and the
    velocity-relaxation time is alpha = mass/eta; tau = t/alpha.
    """

    kind: CutoffKind
    eta: float
    omega: float
    mass: float = 1.0
    temperature: float = 1.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", CutoffKind.from_name(self.kind))
        if not self.eta > 0:
            raise DomainError(f"eta must be > 0, got {self.eta}")
        if not self.omega > 0:
            raise DomainError(f"omega must be > 0, got {self.omega}")
        if not self.mass > 0:
            raise DomainError(f"mass must be > 0, got {self.mass}")
        if self.temperature < 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def delta(self) -> float:
        return self.eta / (self.mass * self.omega)

    @property
    def alpha(self) -> float:
        return self.mass / self.eta

    def tau_of_t(self, t):
        return np.asarray(t) / self.alpha

    def t_of_tau(self, tau):
        return np.asarray(tau) * self.alpha


def cutoff_f(kind: CutoffKind, x):
    """Cutoff weight f(x) at dimensionless frequency x = omega/Omega."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("cutoff_f requires x >= 0")
    if kind == CutoffKind.SHARP:
        out = np.where(x <= 1.0, 1.0, 0.0)
    elif kind == CutoffKind.EXPONENTIAL:
        out = np.exp(-x)
    elif kind == CutoffKind.GAUSSIAN:
        out = np.exp(-(x**2))
    elif kind == CutoffKind.LORENTZIAN:
        out = 1.0 / (x**2 + 1.0)
    else:  # pragma: no cover
        raise DomainError(f"unknown kind {kind}")
    return out if out.ndim else float(out)


def _shape(kind: CutoffKind, u):
    """Dimensionless kernel shape D(u) = Delta_Omega(u/Omega)/Omega, even in u.

    Normalized so that the integral over the whole real line equals 1 (in the
    principal-value sense for the sharp cut).
    """
    u = np.abs(np.asarray(u, dtype=float))
    if kind == CutoffKind.SHARP:
        out = np.sinc(u / np.pi) / np.pi  # sin(u)/(pi u), value 1/pi at u=0
    elif kind == CutoffKind.EXPONENTIAL:
        out = 1.0 / (np.pi * (1.0 + u**2))
    elif kind == CutoffKind.GAUSSIAN:
        out = np.exp(-(u**2) / 4.0) / (2.0 * math.sqrt(math.pi))
    elif kind == CutoffKind.LORENTZIAN:
        out = 0.5 * np.exp(-u)
    else:  # pragma: no cover
        raise DomainError(f"unknown kind {kind}")
    return out if out.ndim else float(out)


def memory_kernel(spec: KernelSpec, dt):
    """Memory kernel Delta_Omega(dt), units 1/time; even in dt.

    The sharp-cut value at dt = 0 is the limit Omega/pi.
    """
    return spec.omega * _shape(spec.kind, spec.omega * np.asarray(dt, dtype=float))


def counterterm_shift(spec: KernelSpec) -> float:
    """Bath-induced curvature shift 2*eta*Delta_Omega(0), units mass/time^2."""
    return 2.0 * spec.eta * float(memory_kernel(spec, 0.0))


def max_j_order(kind: CutoffKind) -> int:
    """Largest supported n for j_coeff of this kind."""
    if kind in (CutoffKind.SHARP, CutoffKind.EXPONENTIAL):
        return _OSCILLATORY_MAX_ORDER
    return DEFAULT_MAX_ORDER


def _check_j_order(kind: CutoffKind, n: int):
    if n < 0:
        raise DomainError(f"j_coeff order must be >= 0, got {n}")
    if n > max_j_order(kind):
        raise UnsupportedOrderError(
            f"J_n with n={n} is not supported for kind {kind.value!r} "
            f"(max {max_j_order(kind)}); the defining integral diverges or "
            f"exceeds the configured order limit"
        )


def j_coeff_closed(kind: CutoffKind, n: int, y):
    """Closed-form J_n(y) where one exists; raises UnsupportedOrderError else.

    Lorentzian and Gaussian kinds have closed forms for every supported n
    (incomplete-gamma reductions); sharp and exponential cuts up to n = 2.
    """
    _check_j_order(kind, n)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("j_coeff requires y >= 0")
    sgn = (-1.0) ** n
    if kind == CutoffKind.LORENTZIAN:
        # (1/2) * integral of x^n e^{-x}/n!  =  P(n+1, y)/2
        out = sgn * 0.5 * special.gammainc(n + 1, y)
    elif kind == CutoffKind.GAUSSIAN:
        # integral of x^n e^{-x^2/4} = 2^n * lower_gamma((n+1)/2, y^2/4)
        a = (n + 1) / 2.0
        out = (
            sgn
            / math.factorial(n)
            * (2.0**n)
            / (2.0 * math.sqrt(math.pi))
            * special.gamma(a)
            * special.gammainc(a, y**2 / 4.0)
        )
    elif kind == CutoffKind.SHARP:
        si, ci = special.sici(y)
        if n == 0:
            out = si / np.pi
        elif n == 1:
            out = -(1.0 - np.cos(y)) / np.pi
        else:
            out = (np.sin(y) - y * np.cos(y)) / (2.0 * np.pi)
    elif kind == CutoffKind.EXPONENTIAL:
        if n == 0:
            out = np.arctan(y) / np.pi
        elif n == 1:
            out = -np.log1p(y**2) / (2.0 * np.pi)
        else:
            out = (y - np.arctan(y)) / (2.0 * np.pi)
    else:  # pragma: no cover
        raise DomainError(f"unknown kind {kind}")
    return out if np.ndim(out) else float(out)


def _j_coeff_quad(kind: CutoffKind, n: int, y: float) -> float:
    sgn = (-1.0) ** n
    if y == 0.0:
        return 0.0

    def integrand(x):
        return x**n * _shape(kind, x)

    pts = None
    limit = 200
    if kind == CutoffKind.SHARP and y > 2 * np.pi:
        # integrate between consecutive zeros of sin(x) to tame oscillation
        pts = np.arange(np.pi, y, np.pi)
        limit = max(limit, len(pts) + 50)
    val, err = integrate.quad(
        integrand,
        0.0,
        y,
        epsabs=QUAD_ABS_TOL,
        epsrel=QUAD_REL_TOL,
        limit=limit,
        points=pts,
    )
    if not np.isfinite(val) or err > max(QUAD_ABS_TOL * 100, abs(val) * QUAD_REL_TOL * 100):
        raise NumericError(
            f"quadrature for J_{n}({y}) of kind {kind.value!r} failed to "
            f"converge (estimate {val}, error {err})"
        )
    return sgn / math.factorial(n) * val


def j_coeff(spec_or_kind, n: int, y, method: str = "auto"):
    """Expansion coefficient J_n(y), dimensionless; y = Omega*t >= 0.

    method: 'auto' uses closed forms where available, 'quadrature' forces the
    adaptive-quadrature evaluation of the defining integral, 'closed' requires
    a closed form.
    """
    kind = spec_or_kind.kind if isinstance(spec_or_kind, KernelSpec) else spec_or_kind
    _check_j_order(kind, n)
    if method in ("auto", "closed"):
        return j_coeff_closed(kind, n, y)
    if method != "quadrature":
        raise DomainError(f"unknown j_coeff method {method!r}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0):
        raise DomainError("j_coeff requires y >= 0")
    out = np.array([_j_coeff_quad(kind, n, float(v)) for v in np.atleast_1d(y_arr)])
    return float(out[0]) if y_arr.ndim == 0 else out.reshape(y_arr.shape)


def _laplace_base(kind: CutoffKind, x):
    """One-sided Laplace transform of the shape D at dimensionless x = delta*s."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("laplace_kernel requires Re(s) >= 0")
    if kind == CutoffKind.LORENTZIAN:
        out = 1.0 / (2.0 * (1.0 + x))
    elif kind == CutoffKind.GAUSSIAN:
        out = 0.5 * special.erfcx(x)
    elif kind == CutoffKind.SHARP:
        with np.errstate(divide="ignore"):
            out = np.where(x > 0, np.arctan(1.0 / np.maximum(x, 1e-300)), np.pi / 2) / np.pi
    elif kind == CutoffKind.EXPONENTIAL:
        si, ci = special.sici(np.maximum(x, 1e-300))
        out = np.where(
            x > 0,
            (ci * np.sin(x) + (np.pi / 2 - si) * np.cos(x)) / np.pi,
            0.5,
        )
    else:  # pragma: no cover
        raise DomainError(f"unknown kind {kind}")
    return out if out.ndim else float(out)


def laplace_kernel(spec: KernelSpec, s, method: str = "auto"):
    """Laplace transform of the rescaled kernel, tilde(Delta)_delta(s).

    s is the dimensionless Laplace variable conjugate to tau = t*eta/mass.
    tilde(Delta)_delta(0) = 1/2 for every kind.
    """
    x = spec.delta * np.asarray(s, dtype=float)
    if method == "auto":
        return _laplace_base(spec.kind, x)
    if method != "quadrature":
        raise DomainError(f"unknown laplace_kernel method {method!r}")

    def one(xv):
        val, err = integrate.quad(
            lambda u: math.exp(-xv * u) * _shape(spec.kind, u),
            0.0,
            np.inf,
            epsabs=QUAD_ABS_TOL,
            epsrel=QUAD_REL_TOL,
            limit=400,
        )
        if not np.isfinite(val):
            raise NumericError(
                f"Laplace quadrature failed for kind {spec.kind.value!r} at x={xv}"
            )
        return val

    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([one(float(v)) for v in xa])
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def r_taylor(kind: CutoffKind, k_max: int) -> np.ndarray:
    """Taylor coefficients r_j = [x^j] R(x), j = 1..k_max, of R = 2*Ltilde - 1.

    Analytic for lorentzian, gaussian and sharp kinds; the exponential cut is
    non-analytic at x = 0 (its small-x expansion carries x*log x terms) and
    falls back to a finite-difference fit that is validated by step-halving.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    r = np.zeros(k_max)
    if kind == CutoffKind.LORENTZIAN:
        # R(x) = -x/(1+x)
        for j in range(1, k_max + 1):
            r[j - 1] = (-1.0) ** j
    elif kind == CutoffKind.GAUSSIAN:
        # f = e^{x^2} erfc(x): f' = 2x f - 2/sqrt(pi)
        a = np.zeros(k_max + 1)
        a[0] = 1.0
        if k_max >= 1:
            a[1] = -2.0 / math.sqrt(math.pi)
        for j in range(2, k_max + 1):
            a[j] = 2.0 * a[j - 2] / j
        r[:] = a[1:]
    elif kind == CutoffKind.SHARP:
        # R(x) = -(2/pi) arctan(x)
        for j in range(1, k_max + 1, 2):
            r[j - 1] = -(2.0 / np.pi) * (-1.0) ** ((j - 1) // 2) / j
    else:
        r = _r_taylor_fit(kind, k_max, h=1e-2)
        r_half = _r_taylor_fit(kind, k_max, h=5e-3)
        rel = np.max(np.abs(r - r_half) / np.maximum(np.abs(r), 1e-12))
        if rel > 1e-3:
            raise NumericError(
                f"finite-difference Taylor extraction for kind {kind.value!r} "
                f"did not converge (step-halving relative change {rel:.2e}); "
                f"this kind has no analytic small-s expansion"
            )
    return r


def _r_taylor_fit(kind: CutoffKind, k_max: int, h: float) -> np.ndarray:
    xs = h * np.arange(1, k_max + 2)
    vals = 2.0 * _laplace_base(kind, xs) - 1.0
    vand = np.vander(xs, k_max + 1, increasing=True)[:, 1:]
    coef, *_ = np.linalg.lstsq(vand, vals, rcond=None)
    return coef


@dataclass(frozen=True)
class SeriesCoeffs:
    """Table of R^{(n)}_{0,k} = k-th derivative of [R(x)]^n at x = 0.

    Stored as a dense (n_max, k_max) array; get(n, k) is 1-based in both
    indices.  Entries with k < n vanish identically since R(0) = 0.
    """

    kind: CutoffKind
    n_max: int
    k_max: int
    table: np.ndarray = field(repr=False)

    def get(self, n: int, k: int) -> float:
        if not (1 <= n <= self.n_max and 1 <= k <= self.k_max):
            raise DomainError(
                f"(n={n}, k={k}) outside stored range "
                f"(1..{self.n_max}, 1..{self.k_max})"
            )
        return float(self.table[n - 1, k - 1])


def r_series(spec_or_kind, n_max: int, k_max: int) -> SeriesCoeffs:
    """R-series coefficient table for 1 <= n <= n_max, 1 <= k <= k_max."""
    kind = spec_or_kind.kind if isinstance(spec_or_kind, KernelSpec) else spec_or_kind
    if n_max < 1 or k_max < 1:
        raise DomainError("n_max and k_max must be >= 1")
    r = r_taylor(kind, k_max)  # [x^1..x^k_max] of R
    # powers of R by truncated polynomial multiplication
    table = np.zeros((n_max, k_max))
    power = np.zeros(k_max + 1)  # coefficients of x^0..x^k_max, start with R^1
    power[1:] = r
    fact = np.array([math.factorial(k) for k in range(k_max + 1)])
    table[0] = power[1:] * fact[1:]
    cur = power
    base = np.concatenate(([0.0], r))
    for n in range(2, n_max + 1):
        cur = np.convolve(cur, base)[: k_max + 1]
        table[n - 1] = cur[1:] * fact[1:]
    return SeriesCoeffs(kind=kind, n_max=n_max, k_max=k_max, table=table)
