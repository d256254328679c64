#!/usr/bin/env python3
"""Render sweep CSVs into power-versus-rate charts.

Standalone script layer: consumes only the CSV files emitted by the
simulator CLI (analytic sweeps plus their ``*_mc.csv`` companions), never
the simulator package itself. Analytic series are drawn as lines,
Monte-Carlo series as markers, and rate regions where every group is
infeasible are shaded.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class PlotInputError(RuntimeError):
    """Missing file, missing column, or empty input."""


@dataclass
class FigureSpec:
    inputs: list                     # analytic CSV paths (lines)
    y_columns: list                  # one line family per y column
    out_path: str
    mc_inputs: list = field(default_factory=list)   # marker CSV paths
    x_column: str = "rate_bps_hz"
    group_columns: list = field(default_factory=lambda: ["arch", "scheme", "tau_sq"])
    log_y: bool = True
    title: str = ""
    y_label: str = "transmit power [W]"
    x_label: str = "macro-user rate [bit/s/Hz]"


def read_rows(path: str, needed: list) -> list:
    p = Path(path)
    if not p.exists():
        raise PlotInputError(f"input file not found: {path}")
    with p.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in needed:
            if col not in header:
                raise PlotInputError(f"column {col!r} missing from {path}")
        rows = list(reader)
    if not rows:
        raise PlotInputError(f"no data rows in {path}")
    return rows


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def _group_key(row: dict, cols: list) -> tuple:
    return tuple(row[c] for c in cols)


def _series(rows: list, spec: FigureSpec, ycol: str):
    groups: dict = {}
    for row in rows:
        key = _group_key(row, spec.group_columns)
        x = _to_float(row[spec.x_column])
        y = _to_float(row[ycol])
        feasible = row.get("feasible", "true") == "true"
        groups.setdefault(key, []).append((x, y, feasible))
    for key in groups:
        groups[key].sort(key=lambda t: t[0])
    return groups


def _label(key: tuple, cols: list, ycol: str, n_ycols: int) -> str:
    parts = [f"{c}={v}" for c, v in zip(cols, key)]
    if n_ycols > 1:
        parts.append(ycol)
    return ", ".join(parts)


def render(spec: FigureSpec) -> str:
    """Draw the figure and return the written path."""
    needed = [spec.x_column, "feasible"] + list(spec.y_columns) \
        + list(spec.group_columns)
    rows = []
    for path in spec.inputs:
        rows.extend(read_rows(path, needed))
    mc_rows = []
    for path in spec.mc_inputs:
        mc_rows.extend(read_rows(path, needed))

    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    palette = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    color_of: dict = {}
    infeasible_x = []

    for ycol in spec.y_columns:
        for key, pts in _series(rows, spec, ycol).items():
            xs = [p[0] for p in pts if p[2] and not math.isnan(p[1])]
            ys = [p[1] for p in pts if p[2] and not math.isnan(p[1])]
            infeasible_x.extend(p[0] for p in pts if not p[2])
            label = _label(key, spec.group_columns, ycol, len(spec.y_columns))
            color = color_of.setdefault((ycol, key), palette[len(color_of) % len(palette)])
            if xs:
                ax.plot(xs, ys, "-", color=color, label=label)
        for key, pts in _series(mc_rows, spec, ycol).items():
            xs = [p[0] for p in pts if p[2] and not math.isnan(p[1])]
            ys = [p[1] for p in pts if p[2] and not math.isnan(p[1])]
            color = color_of.get((ycol, key))
            if xs:
                ax.plot(xs, ys, "o", mfc="none", color=color)

    if infeasible_x:
        lo = min(infeasible_x)
        hi = max(max(infeasible_x), ax.get_xlim()[1])
        ax.axvspan(lo, hi, color="0.85", zorder=0, label="infeasible")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return str(out)


# --------------------------------------------------------------------------
# canned figure recipes over the sweep CSV schema
# --------------------------------------------------------------------------

def spec_ul_power_by_arch(inputs, mc_inputs, out_path):
    """Uplink power of macro users and backhaul cells across architectures."""
    return FigureSpec(inputs=list(inputs), mc_inputs=list(mc_inputs),
                      y_columns=["p_mue_ul_w", "p_sca_ul_w"], out_path=out_path,
                      group_columns=["arch"], title="uplink power vs rate",
                      y_label="average UL transmit power [W]")


def spec_ul_power_by_csi(inputs, mc_inputs, out_path):
    """Uplink power for several CSI error levels on one architecture."""
    return FigureSpec(inputs=list(inputs), mc_inputs=list(mc_inputs),
                      y_columns=["p_mue_ul_w", "p_sca_ul_w"], out_path=out_path,
                      group_columns=["tau_sq"], title="uplink power vs CSI error",
                      y_label="average UL transmit power [W]")


def spec_dl_power_by_arch(inputs, mc_inputs, out_path):
    """Base-station downlink power across architectures (one scheme)."""
    return FigureSpec(inputs=list(inputs), mc_inputs=list(mc_inputs),
                      y_columns=["p_bs_dl_w"], out_path=out_path,
                      group_columns=["arch", "scheme"],
                      title="downlink power vs rate",
                      y_label="average BS DL transmit power [W]")


def spec_dl_power_by_scheme_and_csi(inputs, mc_inputs, out_path):
    """Both precoders across CSI error levels; divergence walls shaded."""
    return FigureSpec(inputs=list(inputs), mc_inputs=list(mc_inputs),
                      y_columns=["p_bs_dl_w"], out_path=out_path,
                      group_columns=["scheme", "tau_sq"],
                      title="downlink power: precoders vs CSI error",
                      y_label="average BS DL transmit power [W]")


PRESETS = {
    "ul-by-arch": spec_ul_power_by_arch,
    "ul-by-csi": spec_ul_power_by_csi,
    "dl-by-arch": spec_dl_power_by_arch,
    "dl-by-scheme-csi": spec_dl_power_by_scheme_and_csi,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", choices=sorted(PRESETS), default=None)
    ap.add_argument("--inputs", nargs="+", required=True, help="analytic sweep CSVs")
    ap.add_argument("--mc-inputs", nargs="*", default=[], help="marker CSVs")
    ap.add_argument("--out", required=True)
    ap.add_argument("--y", nargs="+", default=["p_bs_dl_w"], help="y columns (no preset)")
    ap.add_argument("--group-by", nargs="+", default=["arch", "scheme", "tau_sq"])
    ap.add_argument("--linear-y", action="store_true")
    args = ap.parse_args(argv)
    try:
        if args.preset:
            spec = PRESETS[args.preset](args.inputs, args.mc_inputs, args.out)
        else:
            spec = FigureSpec(inputs=args.inputs, mc_inputs=args.mc_inputs,
                              y_columns=args.y, out_path=args.out,
                              group_columns=args.group_by, log_y=not args.linear_y)
        path = render(spec)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
