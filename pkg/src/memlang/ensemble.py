"""Many-trajectory orchestration, streaming statistics, figure datasets.

Trajectories are integrated in chunks; each trajectory owns a counter-based
RNG stream keyed by its global index, so the statistics are identical for
any chunking or worker count.  Standard errors come from 20 batch means
(trajectory_index mod 20) to stay robust against residual correlation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IntegrationDivergedError
from .kernels import CutoffKind, KernelSpec
from .integrators import Potential, run_paths
from .noise import stream
from . import analytic

__all__ = ["EnsembleConfig", "EnsembleStats", "run_ensemble", "reproduce_figure"]

N_BATCHES = 20
_IC_KEY_SALT = 0x9E3779B97F4A7C15  # distinct stream family for initial draws
DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class EnsembleConfig:
    spec: KernelSpec
    potential: Potential
    integrator: str
    dt: float
    t_end: float
    n_traj: int
    seed: int
    order: int = 2
    record_stride: int = 100
    q0: float = 0.0
    v0: float = 0.0
    ic_policy: str = "fixed"      # fixed | gaussian_v0
    v0_sigma: float = 0.0
    initial_slip: bool = False

    def __post_init__(self):
        if self.n_traj < 2:
            raise ConfigError("n_traj must be >= 2")
        if self.ic_policy not in ("fixed", "gaussian_v0"):
            raise ConfigError("ic_policy must be 'fixed' or 'gaussian_v0'")
        if self.n_steps % self.record_stride != 0:
            raise ConfigError(
                f"record_stride={self.record_stride} must divide "
                f"n_steps={self.n_steps}")

    @property
    def n_steps(self):
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConfigError("t_end must be an integer number of steps")
        return n


@dataclass
class EnsembleStats:
    """Streaming per-output-time moments, partitioned into 20 index batches.

    Merging two instances gives exactly the stats of the concatenated
    trajectory sets (plain sums), so the reduction is associative.
    """
    times: np.ndarray
    counts: np.ndarray = None            # (N_BATCHES,)
    sum_q: np.ndarray = None             # (n_times, N_BATCHES)
    sum_q2: np.ndarray = None
    sum_v: np.ndarray = None
    sum_v2: np.ndarray = None
    divergent: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.times)
        if self.counts is None:
            self.counts = np.zeros(N_BATCHES, dtype=np.int64)
            self.sum_q = np.zeros((n, N_BATCHES))
            self.sum_q2 = np.zeros((n, N_BATCHES))
            self.sum_v = np.zeros((n, N_BATCHES))
            self.sum_v2 = np.zeros((n, N_BATCHES))

    def add_trajectories(self, traj, index0):
        """Accumulate a recorded batch whose global indices start at index0."""
        n_paths = traj.q.shape[1]
        # strictly per-trajectory, in index order: the accumulated sums are
        # then bit-identical for any chunking or worker count
        for j in range(n_paths):
            b = (index0 + j) % N_BATCHES
            self.counts[b] += 1
            self.sum_q[:, b] += traj.q[:, j]
            self.sum_q2[:, b] += traj.q[:, j] ** 2
            self.sum_v[:, b] += traj.v[:, j]
            self.sum_v2[:, b] += traj.v[:, j] ** 2

    def merge(self, other):
        if not np.array_equal(self.times, other.times):
            raise ConfigError("cannot merge stats on different output grids")
        out = EnsembleStats(times=self.times.copy())
        out.counts = self.counts + other.counts
        out.sum_q = self.sum_q + other.sum_q
        out.sum_q2 = self.sum_q2 + other.sum_q2
        out.sum_v = self.sum_v + other.sum_v
        out.sum_v2 = self.sum_v2 + other.sum_v2
        out.divergent = sorted(self.divergent + other.divergent)
        return out

    # ---- derived quantities -------------------------------------------
    @property
    def n_traj(self):
        return int(self.counts.sum())

    def _mean_and_se(self, sums):
        total = sums.sum(axis=1) / self.n_traj
        live = self.counts > 0
        if live.sum() < 2:
            return total, np.full_like(total, np.inf)
        bm = sums[:, live] / self.counts[live]
        nb = live.sum()
        se = bm.std(axis=1, ddof=1) / np.sqrt(nb)
        return total, se

    def mean_q(self):
        return self._mean_and_se(self.sum_q)

    def mean_q2(self):
        return self._mean_and_se(self.sum_q2)

    def mean_v(self):
        return self._mean_and_se(self.sum_v)

    def mean_v2(self):
        return self._mean_and_se(self.sum_v2)

    def var_q(self):
        mq = self.sum_q.sum(axis=1) / self.n_traj
        mq2, se = self.mean_q2()
        return mq2 - mq ** 2, se


def _initial_conditions(config, index0, n_paths):
    if config.ic_policy == "fixed":
        return config.q0, config.v0
    key = (config.seed + _IC_KEY_SALT) % (2 ** 64)
    v0 = np.array([stream(key, index0 + j).normal(config.v0, config.v0_sigma)
                   for j in range(n_paths)])
    return config.q0, v0


def _run_chunk(config, index0, n_paths):
    q0, v0 = _initial_conditions(config, index0, n_paths)
    try:
        traj = run_paths(
            config.spec, config.potential, config.integrator, n_paths,
            config.dt, config.n_steps, q0, v0, config.seed, index0=index0,
            record_stride=config.record_stride, order=config.order,
            initial_slip=config.initial_slip)
        return traj, []
    except IntegrationDivergedError:
        # isolate the divergent trajectories; keep the healthy remainder
        good, bad = [], []
        for j in range(n_paths):
            q0j = q0 if np.isscalar(q0) else q0[j]
            v0j = v0 if np.isscalar(v0) else v0[j]
            try:
                good.append((index0 + j, run_paths(
                    config.spec, config.potential, config.integrator, 1,
                    config.dt, config.n_steps, q0j, v0j, config.seed,
                    index0=index0 + j, record_stride=config.record_stride,
                    order=config.order, initial_slip=config.initial_slip)))
            except IntegrationDivergedError:
                bad.append(index0 + j)
        return good, bad


def run_ensemble(config, threads=1, chunk_size=DEFAULT_CHUNK):
    """Integrate config.n_traj trajectories and return EnsembleStats."""
    chunks = []
    start = 0
    while start < config.n_traj:
        n = min(chunk_size, config.n_traj - start)
        chunks.append((start, n))
        start += n

    def work(args):
        return _run_chunk(config, *args)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    n_rec = config.n_steps // config.record_stride + 1
    times = np.arange(n_rec) * (config.dt * config.record_stride)
    stats = EnsembleStats(times=times)
    for (index0, _n), res in zip(chunks, results):
        traj_or_list, bad = res
        if isinstance(traj_or_list, list):
            for idx, traj in traj_or_list:
                stats.add_trajectories(traj, idx)
        else:
            stats.add_trajectories(traj_or_list, index0)
        stats.divergent.extend(bad)
    if len(stats.divergent) > 0.01 * config.n_traj:
        raise IntegrationDivergedError(
            f"{len(stats.divergent)} of {config.n_traj} trajectories diverged "
            f"(> 1%); first failures at indices {stats.divergent[:5]}")
    return stats


# ---------------------------------------------------------------------------
# figure datasets

FIG1_DELTA = 0.5
FIG2_DELTAS = (0.0, 0.1, 0.3)


def _fig_rows_analytic_1(taus):
    rows = []
    for tau in taus:
        rows.append(("markov", 0.0, tau, float(analytic.q2_series(0.0, tau, 1)), 0.0))
    for order, cid in ((1, "trunc1"), (2, "trunc2"), (3, "trunc3")):
        for tau in taus:
            rows.append((cid, FIG1_DELTA, tau,
                         float(analytic.q2_series(FIG1_DELTA, tau, order)), 0.0))
    g = analytic.exact_response_lorentzian(FIG1_DELTA)
    vals = analytic.q2_numeric(FIG1_DELTA, g, taus)
    for tau, v in zip(taus, vals):
        rows.append(("exact", FIG1_DELTA, tau, float(v), 0.0))
    return rows


def reproduce_figure(which, n_traj=10_000, seed=2024, threads=1):
    """Datasets behind the two headline figures.

    Figure 1: delta = 0.5 position variance in units 2MT/eta^2 -- the
    Markovian curve, the order-1..3 expansion curves, the exact curve, and
    a simulated exact curve (auxiliary-variable integrator).
    Figure 2: late-time variance over the diffusive law 2Tt/eta for
    delta in {0, 0.1, 0.3}, exact and order-3 expansion curves.

    Returns (column_names, rows); rows are (curve_id, delta, tau, value,
    stderr) tuples, deterministic for a fixed seed.
    """
    columns = ("curve_id", "delta", "tau", "value", "stderr")
    if which == 1:
        taus = np.round(np.arange(0.0, 5.0 + 1e-9, 0.1), 10)
        rows = _fig_rows_analytic_1(taus)
        spec = KernelSpec(kind=CutoffKind.LORENTZIAN, eta=1.0,
                          omega=1.0 / FIG1_DELTA)
        config = EnsembleConfig(
            spec=spec, potential=Potential(), integrator="ou_embedding",
            dt=0.005, t_end=5.0, n_traj=n_traj, seed=seed, record_stride=20)
        stats = run_ensemble(config, threads=threads)
        norm = 2.0 * spec.mass * spec.temperature / spec.eta ** 2
        q2, se = stats.mean_q2()
        for tau, v, s in zip(stats.times, q2, se):
            rows.append(("simulated", FIG1_DELTA, float(tau),
                         float(v / norm), float(s / norm)))
        return columns, rows
    if which == 2:
        taus = np.round(np.arange(0.5, 30.0 + 1e-9, 0.5), 10)
        rows = []
        for tau in taus:
            rows.append(("markov", 0.0, float(tau),
                         float(analytic.q2_series(0.0, tau, 1) / tau), 0.0))
        for d in FIG2_DELTAS[1:]:
            for tau in taus:
                rows.append(("trunc3", d, float(tau),
                             float(analytic.q2_series(d, tau, 3) / tau), 0.0))
            g = analytic.exact_response_lorentzian(d)
            vals = analytic.q2_numeric(d, g, taus)
            for tau, v in zip(taus, vals):
                rows.append(("exact", d, float(tau), float(v / tau), 0.0))
        return columns, rows
    raise ConfigError(f"unknown figure {which!r}; valid: 1, 2")
