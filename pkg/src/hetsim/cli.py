"""Command-line entry points.

Subcommands: solve-ul, solve-dl, montecarlo, sweep, tradeoff, geometry.
Every command writes CSV output plus a ``<out>.manifest`` sidecar recording
the config, command, seed, trial count, outputs, version and wall-clock.
CSV bytes are deterministic for identical (config, seed, trials) at any
worker count.

Exit codes: 0 success, 1 every requested point infeasible, 2 usage or
runtime error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .geometry import build_network
from .montecarlo import records_to_csv, run_dl_trials, run_ul_trials
from .scenarios import (ARCH_TAGS, build_architecture, class_power_means,
                        evaluate_point, expected_interference, power_accounting,
                        rate_sweep, solve_point)

_FMT = ".12g"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, _FMT)
    return str(x)


def _load_config(args) -> ScenarioConfig:
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        cfg = ScenarioConfig()
    if getattr(args, "tau_sq", None) is not None:
        cfg = cfg.with_overrides(tau_sq_override=args.tau_sq)
    return cfg


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(out: Path, args, cfg: ScenarioConfig, outputs: list, t0: float):
    lines = [f"command = {args.command}"]
    lines.append(f"config_path = {args.config or '<defaults>'}")
    for line in serialize_config(cfg).strip().splitlines():
        lines.append(f"config.{line}")
    lines.append(f"seed = {args.seed}")
    lines.append(f"trials = {getattr(args, 'trials', 0)}")
    for p in outputs:
        lines.append(f"output = {p}")
    lines.append(f"tool_version = {__version__}")
    lines.append(f"wall_clock_s = {time.monotonic() - t0:.3f}")
    _write(out.with_suffix(out.suffix + ".manifest"), "\n".join(lines) + "\n")


def _parse_rates(spec: str) -> list:
    """start:stop:step (inclusive stop, decimal-safe) or a comma list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"rate range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError("rate range needs step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        rates = [round(start + i * step, 10) for i in range(n + 1)]
        return [r for r in rates if r <= stop + 1e-12]
    return [float(p) for p in spec.split(",") if p.strip()]


def _classes_csv(means: dict, counts: dict, feasible: bool) -> str:
    lines = ["class,count,power_w,feasible"]
    label_count = {"mue_ul": counts.get("MUE", 0), "sca_ul": counts.get("SCA", 0),
                   "sue_ul": counts.get("SUE", 0) or counts.get("SUE_via_sca", 0),
                   "bs_dl": 1, "sca_dl": counts.get("SUE_via_sca", 0)}
    for key, val in means.items():
        lines.append(f"{key},{label_count.get(key, 0)},{_fmt(val)},{_fmt(feasible)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _cmd_geometry(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    geom = build_network(cfg, args.seed)
    out = Path(args.out)
    _write(out, geom.to_csv())
    _manifest(out, args, cfg, [str(out)], t0)
    return 0


def _cmd_solve_ul(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    geom = build_network(cfg, args.seed)
    arch = build_architecture(args.arch, cfg, geom)
    ul, dl = solve_point(arch, args.scheme)
    means = class_power_means(arch, ul, None)
    acct = power_accounting(arch, ul, dl, cfg) if (ul.feasible and dl.feasible) \
        else {"counts": {}}
    out = Path(args.out)
    _write(out, _classes_csv(means if ul.feasible else dict.fromkeys(means, float("inf")),
                             acct["counts"], ul.feasible))
    _manifest(out, args, cfg, [str(out)], t0)
    return 0 if ul.feasible else 1


def _cmd_solve_dl(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    geom = build_network(cfg, args.seed)
    arch = build_architecture(args.arch, cfg, geom)
    ul, dl = solve_point(arch, args.scheme)
    rows = ["scheme,rho,mu,total_power_w,tau_max,feasible"]
    rows.append(",".join([dl.scheme, _fmt(dl.rho), _fmt(dl.mu),
                          _fmt(dl.total_power_w), _fmt(dl.tau_max),
                          _fmt(dl.feasible)]))
    out = Path(args.out)
    _write(out, "\n".join(rows) + "\n")
    _manifest(out, args, cfg, [str(out)], t0)
    return 0 if dl.feasible else 1


def _cmd_montecarlo(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    geom = build_network(cfg, args.seed)
    arch = build_architecture(args.arch, cfg, geom)
    ul, dl = solve_point(arch, args.scheme)
    if not (ul.feasible and dl.feasible):
        print("operating point infeasible; no trials run", file=sys.stderr)
        return 1
    keep = bool(args.records)
    stats_ul = run_ul_trials(arch, ul, args.trials, args.seed, cfg.noise_w,
                             workers=args.workers, keep_records=keep)
    stats_dl = run_dl_trials(arch, dl, args.trials, args.seed, cfg.noise_w,
                             workers=args.workers, keep_records=keep)
    lines = ["metric,value"]
    lines.append(f"ul_sinr_relerr_mean,{_fmt(stats_ul.rel_err_mean)}")
    lines.append(f"dl_sinr_relerr_mean,{_fmt(stats_dl.rel_err_mean)}")
    lines.append(f"dl_realized_power_w,{_fmt(stats_dl.realized_total_power_mean)}")
    lines.append(f"dl_power_closed_form_w,{_fmt(dl.total_power_w)}")
    lines.append(f"nulling_residual_max,{_fmt(stats_dl.nulling_residual_max)}")
    if stats_ul.sue_rate_empirical is not None and len(stats_ul.sue_rate_empirical):
        lines.append(f"sue_rate_empirical_mean,{_fmt(float(stats_ul.sue_rate_empirical.mean()))}")
    out = Path(args.out)
    outputs = [str(out)]
    _write(out, "\n".join(lines) + "\n")
    if keep:
        rec_path = Path(args.records)
        _write(rec_path, records_to_csv(stats_ul.records + stats_dl.records))
        outputs.append(str(rec_path))
    _manifest(out, args, cfg, outputs, t0)
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    rates = _parse_rates(args.rates)
    report = rate_sweep(cfg, args.arch, args.scheme, rates, args.trials,
                        args.seed, redraw_every=args.redraw_every,
                        workers=args.workers)
    out = Path(args.out)
    _write(out, report.to_csv(mc=False))
    outputs = [str(out)]
    if args.trials > 0:
        mc_path = out.with_name(out.stem + "_mc" + out.suffix)
        _write(mc_path, report.to_csv(mc=True))
        outputs.append(str(mc_path))
    _manifest(out, args, cfg, outputs, t0)
    return 0 if any(p.feasible for p in report.points) else 1


def _cmd_tradeoff(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    model = cfg.pathloss
    ei = expected_interference(args.density, args.pbar, model, args.d)
    ratio = ei / cfg.noise_w
    print(f"expected interference = {ei:.6g} W  ({ratio:.6g} x noise)")
    out = Path(args.out)
    _write(out, "density_per_m2,pbar_w,d_m,expected_interference_w,interference_over_noise\n"
           f"{_fmt(args.density)},{_fmt(args.pbar)},{_fmt(args.d)},{_fmt(ei)},{_fmt(ratio)}\n")
    _manifest(out, args, cfg, [str(out)], t0)
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetsim", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, trials_default=0):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=trials_default)
        p.add_argument("--arch", choices=ARCH_TAGS, default="hetnet")
        p.add_argument("--scheme", choices=("rzf", "zf", "stc"), default="rzf")
        p.add_argument("--tau-sq", dest="tau_sq", type=float, default=None,
                       help="override the speed-derived CSI error power")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--redraw-every", dest="redraw_every", type=int, default=10,
                       help="fresh network drop every this many trials")
        p.add_argument("--out", required=True, help="output CSV path")

    common(sub.add_parser("solve-ul", help="asymptotic uplink powers"))
    common(sub.add_parser("solve-dl", help="asymptotic downlink design"))
    mc = sub.add_parser("montecarlo", help="validate one operating point")
    common(mc, trials_default=1000)
    mc.add_argument("--records", default=None, help="optional per-trial record CSV")
    sw = sub.add_parser("sweep", help="rate sweep with validation")
    common(sw, trials_default=0)
    sw.add_argument("--rates", required=True, help="start:stop:step or comma list")
    td = sub.add_parser("tradeoff", help="density/separation interference tradeoff")
    common(td)
    td.add_argument("--density", type=float, required=True, help="transmitters per m^2")
    td.add_argument("--d", type=float, required=True, help="exclusion radius, m")
    td.add_argument("--pbar", type=float, default=0.083, help="per-transmitter power, W")
    common(sub.add_parser("geometry", help="export one network drop as CSV"))
    return ap


_DISPATCH = {
    "geometry": _cmd_geometry,
    "solve-ul": _cmd_solve_ul,
    "solve-dl": _cmd_solve_dl,
    "montecarlo": _cmd_montecarlo,
    "sweep": _cmd_sweep,
    "tradeoff": _cmd_tradeoff,
}


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (ConfigError, OSError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
