"""Discretized noise realizations with covariance 2*eta*T*K(t - t').

White noise for the Markovian limit, exact Ornstein-Uhlenbeck recursion
for the exponential kernel, and circulant embedding for the remaining
kernels; plus the empirical-covariance estimator used to validate the
fluctuation-dissipation relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import ConfigError, DomainError, NumericError
from .kernels import CutoffKind, KernelSpec, memory_kernel

__all__ = [
    "NoiseGrid",
    "NoisePath",
    "RNG_ALGORITHM",
    "stream",
    "sample_white",
    "sample_colored",
    "sample_colored_block",
    "empirical_covariance",
]

# Counter-based generator: streams are keyed by (seed, index) and are
# independent of scheduling order.  Recorded in every NoisePath so outputs
# are reproducible across platforms.
RNG_ALGORITHM = "philox4x64"

_COUNTER_STRIDE = 1 << 128  # streams live 2**128 counter steps apart


def stream(seed, index=0):
    """Independent Generator for trajectory/path ``index`` under ``seed``."""
    bitgen = np.random.Philox(key=int(seed) & (2 ** 64 - 1))
    bitgen.advance(int(index) * _COUNTER_STRIDE)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class NoiseGrid:
    """Uniform sampling grid; values live at step midpoints."""
    dt: float
    n_steps: int

    def __post_init__(self):
        if not (self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def t_end(self):
        return self.dt * self.n_steps

    def validate_colored(self, spec):
        if self.dt > 1.0 / (4.0 * spec.omega):
            raise ConfigError(
                f"dt={self.dt} does not resolve the kernel width: "
                f"need dt <= 1/(4*Omega) = {1.0 / (4.0 * spec.omega)}")


@dataclass(frozen=True)
class NoisePath:
    """One force realization on a grid, reproducible from its metadata."""
    values: np.ndarray = field(repr=False)
    seed: int
    spec: KernelSpec
    grid: NoiseGrid
    method: str
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if len(self.values) != self.grid.n_steps:
            raise ConfigError("path length does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("noise path contains non-finite values")


def sample_white(spec, grid, seed, index=0):
    """I.i.d. Gaussians with per-step variance 2*eta*T/dt."""
    rng = stream(seed, index)
    sigma = np.sqrt(2.0 * spec.eta * spec.temperature / grid.dt)
    values = rng.normal(0.0, sigma, grid.n_steps)
    return NoisePath(values=values, seed=seed, spec=spec, grid=grid, method="white")


def _ou_filter(spec, grid, z, x0):
    """Exact OU recursion x[i] = a x[i-1] + s z[i] run by lfilter."""
    a = np.exp(-spec.omega * grid.dt)
    s = np.sqrt(spec.eta * spec.temperature * spec.omega * (1.0 - a * a))
    drive = s * z
    drive[0] = x0
    return signal.lfilter([1.0], [1.0, -a], drive, axis=0)


def sample_colored(spec, grid, seed, index=0):
    """Stationary Gaussian path with covariance 2*eta*T*K(lag).

    The exponential kernel uses the exact OU recursion with a stationary
    start; other kernels use circulant embedding of the target covariance.
    """
    grid.validate_colored(spec)
    rng = stream(seed, index)
    if spec.kind is CutoffKind.LORENTZIAN:
        z = rng.standard_normal(grid.n_steps)
        x0 = np.sqrt(spec.eta * spec.temperature * spec.omega) * z[0]
        values = _ou_filter(spec, grid, z, x0)
        method = "ou_recursion"
    else:
        values = _circulant_sample(spec, grid, rng, n_paths=1)[:, 0]
        method = "circulant"
    return NoisePath(values=values, seed=seed, spec=spec, grid=grid, method=method)


def sample_colored_block(spec, grid, seed, indices):
    """Many colored paths as an (n_steps, n_paths) array.

    Column j is byte-identical to ``sample_colored(..., index=indices[j])``.
    """
    grid.validate_colored(spec)
    cols = []
    for idx in indices:
        cols.append(sample_colored(spec, grid, seed, idx).values)
    return np.column_stack(cols)


def _circulant_sample(spec, grid, rng, n_paths):
    """Sample via circulant embedding of the covariance Toeplitz matrix."""
    n = grid.n_steps
    lags = np.arange(n) * grid.dt
    cov = 2.0 * spec.eta * spec.temperature * memory_kernel(spec, lags)
    # symmetric embedding of length m >= 2(n-1)
    m = 1
    while m < max(2 * (n - 1), 2):
        m *= 2
    c = np.zeros(m)
    c[:n] = cov
    c[m - n + 1:] = cov[1:][::-1]
    lam = np.fft.rfft(c).real
    tol = 1e-8 * np.max(np.abs(lam))
    lam_min = lam.min()
    if lam_min < -tol:
        raise NumericError(
            f"circulant embedding is not positive semidefinite: smallest "
            f"eigenvalue {lam_min:.6g}; enlarge the embedding (more steps) or "
            f"clip explicitly")
    lam = np.clip(lam, 0.0, None)
    # standard real-output construction: two independent normal fields
    half = lam.shape[0]
    a = rng.standard_normal((half, n_paths))
    b = rng.standard_normal((half, n_paths))
    w = (a + 1j * b) * np.sqrt(lam / (2.0 * m))[:, None]
    w[0] = np.sqrt(lam[0] / m) * a[0]
    if m % 2 == 0:
        w[-1] = np.sqrt(lam[-1] / m) * a[-1]
    field_ = np.fft.irfft(w, n=m, axis=0) * m
    return field_[:n]


def empirical_covariance(paths, lag):
    """Cross-realization estimate of <xi(t) xi(t + lag*dt)> and its SE.

    The lagged product is averaged over time within each path; the
    standard error is the jackknife over paths.
    """
    paths = list(paths)
    if len(paths) < 2:
        raise ConfigError("empirical_covariance needs at least 2 paths")
    n_steps = paths[0].grid.n_steps
    if not (0 <= lag < n_steps):
        raise DomainError(f"lag must satisfy 0 <= lag < n_steps={n_steps}")
    stats = np.empty(len(paths))
    for i, p in enumerate(paths):
        v = p.values
        stats[i] = np.mean(v[: n_steps - lag] * v[lag:])
    est = stats.mean()
    n = len(stats)
    # jackknife: leave-one-out means
    loo = (stats.sum() - stats) / (n - 1)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return est, se
