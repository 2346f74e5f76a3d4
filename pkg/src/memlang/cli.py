"""Command-line interface.

Subcommands: kernels, validate-fdt, simulate, oracle, analytic, figures.
A JSON configuration file may supply any flag value; explicit flags
override it, and the merged effective configuration is written (with its
hash) to a manifest next to every CSV so runs can be reproduced exactly.

Exit codes: 0 success, 1 configuration error, 2 numeric/integration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, MemlangError, NumericError
from .kernels import (CutoffKind, KernelSpec, j_coeff, laplace_kernel,
                      max_j_order, memory_kernel)
from .noise import NoiseGrid, empirical_covariance, sample_colored
from .integrators import Potential
from .ensemble import EnsembleConfig, run_ensemble, reproduce_figure
from .bath import run_oracle_ensemble
from . import analytic

_SIM_COLUMNS = ("t", "tau", "Q_mean", "Q_var", "Q_var_stderr", "v_mean", "v_var")


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, columns, rows, meta):
    """CSV with '#'-prefixed metadata, one header row, 17-digit floats."""
    lines = [f"# {k}={v}" for k, v in sorted(meta.items())]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path, subcommand, config, started, outputs):
    import scipy
    effective = {"subcommand": subcommand, **config}
    blob = json.dumps(effective, sort_keys=True).encode()
    manifest = {
        "config": effective,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": config.get("seed"),
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "memlang": __version__,
        },
        "wall_time_s": round(time.monotonic() - started, 3),
        "outputs": outputs,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; config errors are 1
        raise ConfigError(message)


def _spec_from(cfg):
    try:
        kind = CutoffKind.from_name(cfg["kernel"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return KernelSpec(kind=kind, eta=cfg["eta"], omega=cfg["omega"],
                      mass=cfg["mass"], temperature=cfg["temperature"])


def _potential_from(cfg):
    return Potential(kind=cfg["potential"], omega0=cfg["omega0"],
                     a=cfg["a"], b=cfg["b"], counterterm=cfg["counterterm"])


def _integrator_from(cfg):
    name = cfg["integrator"]
    mapping = {"full": "full_memory", "embed": "ou_embedding",
               "markov": "markovian"}
    if name in mapping:
        return mapping[name], cfg.get("order", 2)
    if name.startswith("truncated:"):
        try:
            order = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad truncation order in {name!r}") from exc
        return "truncated", order
    raise ConfigError(
        f"unknown integrator {name!r}; valid: full, embed, truncated:N, markov")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_kernels(cfg, started):
    spec = _spec_from(cfg)
    rows = []
    kind = spec.kind.value
    ts = np.linspace(0.0, 10.0 / spec.omega, 101)
    for t in ts:
        rows.append((kind, spec.omega, "kernel", float(t),
                     float(memory_kernel(spec, t))))
    for n in range(max_j_order(spec.kind) + 1):
        for y in np.linspace(0.0, 20.0, 41):
            rows.append((kind, spec.omega, f"j{n}", float(y),
                         float(j_coeff(spec, n, y))))
    for s in np.linspace(0.0, 10.0, 41):
        rows.append((kind, spec.omega, "laplace", float(s),
                     float(laplace_kernel(spec, s))))
    write_csv(cfg["out"], ("kind", "omega", "quantity", "arg", "value"), rows,
              {"delta": spec.delta, "eta": spec.eta})
    write_manifest(cfg["out"] + ".manifest.json", "kernels", cfg, started,
                   [cfg["out"]])
    return 0


def _cmd_validate_fdt(cfg, started):
    spec = _spec_from(cfg)
    grid = NoiseGrid(dt=cfg["dt"], n_steps=cfg["n_steps"])
    paths = [sample_colored(spec, grid, cfg["seed"], i)
             for i in range(cfg["n_paths"])]
    rows = []
    for lag_t in (0.0, 1.0 / spec.omega, 2.0 / spec.omega):
        lag = int(round(lag_t / grid.dt))
        est, se = empirical_covariance(paths, lag)
        target = 2.0 * spec.eta * spec.temperature * memory_kernel(
            spec, lag * grid.dt)
        z = (est - target) / se if se > 0 else float("inf")
        rows.append((spec.kind.value, lag * grid.dt, float(target),
                     float(est), float(se), float(z)))
    write_csv(cfg["out"], ("kind", "lag_time", "target", "estimate",
                           "stderr", "z_score"), rows,
              {"n_paths": cfg["n_paths"], "dt": grid.dt, "seed": cfg["seed"]})
    write_manifest(cfg["out"] + ".manifest.json", "validate-fdt", cfg, started,
                   [cfg["out"]])
    return 0


def _stats_rows(spec, times, stats):
    q2, q2_se = stats.mean_q2()
    qm, _ = stats.mean_q()
    vm, _ = stats.mean_v()
    v2, _ = stats.mean_v2()
    var_q = q2 - qm ** 2
    var_v = v2 - vm ** 2
    rows = []
    for i, t in enumerate(times):
        rows.append((float(t), float(t / spec.alpha), float(qm[i]),
                     float(var_q[i]), float(q2_se[i]), float(vm[i]),
                     float(var_v[i])))
    return rows


def _cmd_simulate(cfg, started, threads):
    spec = _spec_from(cfg)
    integrator, order = _integrator_from(cfg)
    config = EnsembleConfig(
        spec=spec, potential=_potential_from(cfg), integrator=integrator,
        dt=cfg["dt"], t_end=cfg["t_end"], n_traj=cfg["n_traj"],
        seed=cfg["seed"], order=order, record_stride=cfg["record_stride"],
        q0=cfg["q0"], v0=cfg["v0"])
    stats = run_ensemble(config, threads=threads)
    rows = _stats_rows(spec, stats.times, stats)
    write_csv(cfg["out"], _SIM_COLUMNS, rows,
              {"integrator": cfg["integrator"], "n_traj": cfg["n_traj"],
               "seed": cfg["seed"], "delta": spec.delta})
    write_manifest(cfg["out"] + ".manifest.json", "simulate", cfg, started,
                   [cfg["out"]])
    return 0


def _cmd_oracle(cfg, started):
    spec = _spec_from(cfg)
    times, rq, rv = run_oracle_ensemble(
        spec, _potential_from(cfg), cfg["n_traj"], cfg["n_modes"],
        cfg["dt"], cfg["t_end"], cfg["seed"], q0=cfg["q0"], v0=cfg["v0"],
        m=cfg["bath_mass"], omega_max=cfg["omega_max"],
        record_stride=cfg["record_stride"])
    n = rq.shape[1]
    rows = []
    for i, t in enumerate(times):
        q = rq[i]
        v = rv[i]
        rows.append((float(t), float(t / spec.alpha), float(q.mean()),
                     float(q.var()), float((q ** 2).std() / np.sqrt(n)),
                     float(v.mean()), float(v.var())))
    write_csv(cfg["out"], _SIM_COLUMNS, rows,
              {"n_modes": cfg["n_modes"], "n_traj": cfg["n_traj"],
               "seed": cfg["seed"], "delta": spec.delta})
    write_manifest(cfg["out"] + ".manifest.json", "oracle", cfg, started,
                   [cfg["out"]])
    return 0


def _cmd_analytic(cfg, started):
    d = cfg["delta"]
    taus = np.linspace(0.0, cfg["tau_max"], cfg["n_points"])
    rows = []
    for tau in taus:
        rows.append(("markov", 0.0, float(tau),
                     float(analytic.q2_series(0.0, tau, 1))))
    for order in (1, 2, 3):
        for tau in taus:
            rows.append((f"trunc{order}", d, float(tau),
                         float(analytic.q2_series(d, tau, order))))
    g = analytic.exact_response_lorentzian(d) if d > 0 else analytic.markovian_response()
    vals = analytic.q2_numeric(d, g, taus)
    for tau, v in zip(taus, np.atleast_1d(vals)):
        rows.append(("exact", d, float(tau), float(v)))
    write_csv(cfg["out"], ("curve_id", "delta", "tau", "q2_normalized"), rows,
              {"delta": d})
    write_manifest(cfg["out"] + ".manifest.json", "analytic", cfg, started,
                   [cfg["out"]])
    return 0


def _cmd_figures(cfg, started, threads):
    columns, rows = reproduce_figure(cfg["fig"], n_traj=cfg["n_traj"],
                                     seed=cfg["seed"], threads=threads)
    write_csv(cfg["out"], columns, rows,
              {"fig": cfg["fig"], "n_traj": cfg["n_traj"], "seed": cfg["seed"]})
    write_manifest(cfg["out"] + ".manifest.json", "figures", cfg, started,
                   [cfg["out"]])
    return 0


# ---------------------------------------------------------------------------
# argument plumbing

def _add_physics_flags(p):
    p.add_argument("--kernel", help="cutoff kind: sharp|exponential|gaussian|lorentzian")
    p.add_argument("--omega", type=float, help="kernel width Omega (1/time)")
    p.add_argument("--eta", type=float, help="friction coefficient (mass/time)")
    p.add_argument("--mass", type=float, help="particle mass M")
    p.add_argument("--temperature", type=float, help="bath temperature T (energy)")


def _add_sim_flags(p):
    _add_physics_flags(p)
    p.add_argument("--potential", help="free|harmonic|quartic_double_well")
    p.add_argument("--omega0", type=float, help="harmonic frequency (1/time)")
    p.add_argument("--a", type=float, help="double-well quadratic coefficient")
    p.add_argument("--b", type=float, help="double-well quartic coefficient")
    p.add_argument("--counterterm", help="bare|renormalized")
    p.add_argument("--dt", type=float, help="time step (time)")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time (time)")
    p.add_argument("--q0", type=float, help="initial position (length)")
    p.add_argument("--v0", type=float, help="initial velocity (length/time)")
    p.add_argument("--n-traj", dest="n_traj", type=int, help="trajectory count")
    p.add_argument("--seed", type=int, help="master RNG seed (64-bit)")
    p.add_argument("--record-stride", dest="record_stride", type=int,
                   help="output every N steps")
    p.add_argument("--out", help="output CSV path")


_DEFAULTS = {
    "kernel": "lorentzian", "omega": 2.0, "eta": 1.0, "mass": 1.0,
    "temperature": 1.0, "potential": "free", "omega0": 1.0, "a": 1.0,
    "b": 1.0, "counterterm": "renormalized", "dt": 0.01, "t_end": 5.0,
    "q0": 0.0, "v0": 0.0, "n_traj": 1000, "seed": 0, "record_stride": 100,
    "out": "out.csv", "integrator": "markov", "n_steps": 200, "n_paths": 1000,
    "n_modes": 4096, "omega_max": None, "bath_mass": None, "delta": 0.5,
    "tau_max": 5.0, "n_points": 51, "fig": 1,
}


def build_parser():
    parser = _Parser(prog="memlang",
                     description="non-Markovian Langevin dynamics toolkit")
    parser.add_argument("--config", help="JSON file supplying any flag value")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: MEMLANG_THREADS, "
                             "then logical cores)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("kernels", help="tabulate kernel, moments, transform")
    _add_physics_flags(p)
    p.add_argument("--out", help="output CSV path")

    p = sub.add_parser("validate-fdt", help="noise-covariance validation CSV")
    _add_physics_flags(p)
    p.add_argument("--dt", type=float, help="time step (time)")
    p.add_argument("--n-steps", dest="n_steps", type=int, help="steps per path")
    p.add_argument("--n-paths", dest="n_paths", type=int, help="path count")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--out", help="output CSV path")

    p = sub.add_parser("simulate", help="ensemble statistics CSV")
    _add_sim_flags(p)
    p.add_argument("--integrator",
                   help="full | embed | truncated:N | markov")

    p = sub.add_parser("oracle", help="system+bath first-principles ensemble")
    _add_sim_flags(p)
    p.add_argument("--n-modes", dest="n_modes", type=int, help="bath modes")
    p.add_argument("--omega-max", dest="omega_max", type=float,
                   help="bath frequency cutoff (1/time)")
    p.add_argument("--bath-mass", dest="bath_mass", type=float,
                   help="oscillator mass")

    p = sub.add_parser("analytic", help="closed-form variance curves CSV")
    p.add_argument("--delta", type=float, help="memory parameter eta/(M Omega)")
    p.add_argument("--tau-max", dest="tau_max", type=float,
                   help="last dimensionless time")
    p.add_argument("--n-points", dest="n_points", type=int, help="grid size")
    p.add_argument("--out", help="output CSV path")

    p = sub.add_parser("figures", help="figure-reproduction datasets")
    p.add_argument("--fig", type=int, help="1 or 2")
    p.add_argument("--n-traj", dest="n_traj", type=int, help="trajectory count")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--out", help="output CSV path")
    return parser


def _merge_config(args):
    merged = dict(_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        sub = doc.pop("subcommand", None)  # manifests embed it; must agree
        if sub is not None and sub != args.subcommand:
            raise ConfigError(
                f"config file is for subcommand {sub!r}, got {args.subcommand!r}")
        unknown = set(doc) - set(_DEFAULTS) - {"integrator"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(doc)
    for key, value in vars(args).items():
        if key in ("config", "threads", "subcommand"):
            continue
        if value is not None:
            merged[key] = value
    for key in ("omega", "eta", "mass", "temperature", "dt", "t_end"):
        if key in merged and merged[key] is not None and merged[key] <= 0:
            raise ConfigError(f"{key} must be positive, got {merged[key]}")
    return merged


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("MEMLANG_THREADS", os.cpu_count() or 1))
        cfg = _merge_config(args)
        started = time.monotonic()
        if args.subcommand == "kernels":
            return _cmd_kernels(cfg, started)
        if args.subcommand == "validate-fdt":
            return _cmd_validate_fdt(cfg, started)
        if args.subcommand == "simulate":
            return _cmd_simulate(cfg, started, threads)
        if args.subcommand == "oracle":
            return _cmd_oracle(cfg, started)
        if args.subcommand == "analytic":
            return _cmd_analytic(cfg, started)
        if args.subcommand == "figures":
            return _cmd_figures(cfg, started, threads)
        raise ConfigError(f"unknown subcommand {args.subcommand!r}")
    except (ConfigError, ValueError, OSError) as exc:
        # covers DomainError / UnsupportedKindError / UnsupportedOrderError
        # and json.JSONDecodeError, all configuration-level failures
        print(f"memlang: error: config: {exc}", file=sys.stderr)
        return 1
    except MemlangError as exc:
        print(f"memlang: error: numeric: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
