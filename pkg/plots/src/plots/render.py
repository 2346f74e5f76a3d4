"""Render figure-dataset CSVs into images, plus a JSON stats sidecar.

Strictly a consumer of the simulation CLI's ``figures`` output: no
quantity is recomputed here.  Renders are deterministic for a fixed
input (fixed style, no embedded timestamps), and every render writes
``<out>.json`` with per-curve (min, max, last) of the plotted values so
image-level assertions do not need pixel comparison.
"""

from __future__ import annotations

import argparse
import json
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "plots-render"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

EXPECTED_COLUMNS = ("curve_id", "delta", "tau", "value", "stderr")

FIG1_LABELS = {
    "markov": "Markovian",
    "trunc1": "O(δ)",
    "trunc2": "O(δ²)",
    "trunc3": "O(δ³)",
    "exact": "exact",
}
FIG2_NAMES = {"markov": "Markovian", "trunc3": "O(δ³)",
              "exact": "exact"}


class SchemaError(Exception):
    pass


def load_rows(path):
    """Parse a figures CSV: '#'-metadata lines, one header, float rows."""
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in lines if not ln.startswith("#")]
    if not lines:
        raise SchemaError(
            f"{path} is empty; expected header columns "
            f"{', '.join(EXPECTED_COLUMNS)}")
    header = lines[0].split(",")
    missing = [c for c in EXPECTED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(
            f"{path} is missing columns {', '.join(missing)}; expected "
            f"{', '.join(EXPECTED_COLUMNS)}")
    idx = [header.index(c) for c in EXPECTED_COLUMNS]
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise SchemaError(f"{path}: row has {len(cells)} cells, "
                              f"header has {len(header)}")
        cid = cells[idx[0]]
        try:
            nums = [float(cells[i]) for i in idx[1:]]
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric cell in row {ln!r}") from exc
        rows.append((cid, *nums))
    if not rows:
        raise SchemaError(f"{path} has a header but no data rows")
    return rows


def _group(rows, by_delta):
    """Ordered {key: (taus, values)} with keys stable in input order."""
    curves = {}
    for cid, delta, tau, value, _stderr in rows:
        key = f"{cid}@delta={delta:g}" if by_delta else cid
        curves.setdefault(key, (cid, delta, [], []))
        curves[key][2].append(tau)
        curves[key][3].append(value)
    return curves


def _sidecar(curves):
    return {key: {"min": min(vals), "max": max(vals), "last": vals[-1]}
            for key, (_cid, _d, _taus, vals) in curves.items()}


def render(csv_path, fig, out_path, image_format):
    """Render one figure; returns {'legend': [...], 'curves': sidecar}."""
    if fig not in (1, 2):
        raise SchemaError(f"unknown figure {fig}; valid: 1, 2")
    rows = load_rows(csv_path)
    curves = _group(rows, by_delta=(fig == 2))

    figure, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    if fig == 1:
        unknown = [k for k in curves
                   if k not in FIG1_LABELS and k != "simulated"]
        if unknown:
            raise SchemaError(
                f"unexpected curve_id values {unknown}; expected "
                f"{sorted(FIG1_LABELS)} (and optionally 'simulated')")
        for key, (cid, _d, taus, vals) in curves.items():
            if cid == "simulated":
                # measured points underneath the analytic curves, kept out
                # of the legend so the five named curves stay the contract
                ax.plot(taus, vals, ".", color="0.6", markersize=3,
                        zorder=1, label="_simulated")
            else:
                ax.plot(taus, vals, lw=1.4, label=FIG1_LABELS[cid], zorder=2)
        ax.set_ylabel("⟨Q²⟩ / (2MT/η²)")
    else:
        unknown = [k for k, (cid, _d, _t, _v) in curves.items()
                   if cid not in FIG2_NAMES]
        if unknown:
            raise SchemaError(
                f"unexpected curve_id values {unknown}; expected "
                f"{sorted(FIG2_NAMES)}")
        for key, (cid, delta, taus, vals) in curves.items():
            style = "--" if cid == "trunc3" else "-"
            ax.plot(taus, vals, style, lw=1.4,
                    label=f"{FIG2_NAMES[cid]}, δ={delta:g}")
        ax.axhline(1.0, color="0.75", lw=0.8, zorder=0)
        ax.set_ylabel("⟨Q²⟩ / (2Tt/η)")
    ax.set_xlabel("τ")
    legend = ax.legend(frameon=False, fontsize=9)
    labels = [t.get_text() for t in legend.get_texts()]
    figure.tight_layout()
    figure.savefig(out_path, format=image_format,
                   metadata={"Date": None} if image_format == "svg" else None)
    plt.close(figure)

    sidecar = _sidecar(curves)
    with open(f"{out_path}.json", "w") as fh:
        json.dump({"figure": fig, "curves": sidecar}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    return {"legend": labels, "curves": sidecar}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plots-render",
        description="render a figure-dataset CSV to an image")
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--fig", type=int, required=True, choices=(1, 2),
                        help="figure id")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--format", choices=("png", "svg"), default="png",
                        help="image format (default: png)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        render(args.csv, args.fig, args.out, args.format)
    except SchemaError as exc:
        print(f"plots-render: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
