"""Command-line entry point: ``wdmpairlab <subcommand> ...``.

Failures exit nonzero and print one JSON line ``{"error": ..., "message": ...}``
on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import delays, io
from .detection import SourceSpec, SplittingMode
from .merit import sweep_fom
from .montecarlo import COUNT_FIELDS, McConfig, compare_to_analytic, run_mc
from .spectral import (
    FlatTop,
    Gaussian,
    detuning_sweep,
    integral_i1,
    integral_i2,
    itu_center_frequency,
    overlap_ratio,
    rectangle,
)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _write_or_print(text: str, out) -> None:
    if out:
        io.atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


# -- subcommands ------------------------------------------------------------


def _channel_curve(ident: str, args, demux):
    if Path(ident).suffix.lower() == ".csv" or not ident.isdigit():
        return io.load_filter_csv(ident)
    n = int(ident)
    if demux is not None:
        return demux.channel(n).curve
    f0 = itu_center_frequency(n)
    if args.shape == "gaussian":
        return Gaussian(f0, args.fwhm, args.peak)
    if args.shape == "rectangle":
        return rectangle(f0, args.fwhm, args.peak)
    return FlatTop(f0, args.fwhm, args.peak, args.order)


def cmd_integrals(args) -> int:
    demux = io.load_config(args.config).demux if args.config else None
    ca = _channel_curve(args.channel_a, args, demux)
    cb = _channel_curve(args.channel_b, args, demux)
    pump = args.pump if args.pump is not None else ca.center_thz + cb.center_thz
    doc = {
        "pump_thz": pump,
        "i1_a_thz": integral_i1(ca),
        "i1_b_thz": integral_i1(cb),
        "i2_thz": integral_i2(ca, cb, pump),
        "i2_over_i1": overlap_ratio(ca, cb, pump),
    }
    print(json.dumps(doc))
    return 0


def cmd_sweep(args) -> int:
    cfg = io.load_config(args.config)
    sw = cfg.sweep
    modes = [SplittingMode(m) for m in sw.get("modes", ["deterministic", "statistical"])]
    points = []
    for mode in modes:
        target = cfg.pair if mode is SplittingMode.DETERMINISTIC else cfg.channel
        points += sweep_fom(
            cfg.demux,
            target,
            cfg.detectors,
            pump_thz=cfg.pump_thz,
            p_min=float(sw.get("p_min", 0.01)),
            p_max=float(sw.get("p_max", 0.18)),
            n=int(sw.get("n", 18)),
            spacing=sw.get("spacing", "linear"),
            coupling=float(sw.get("coupling", 1.0)),
        )
    io.sweep_table(points, io.provenance(cfg, "sweep")).write(args.out)
    return 0


def mc_config(cfg: io.ExperimentConfig) -> McConfig:
    mc = cfg.montecarlo
    mode = SplittingMode(mc.get("mode", "deterministic"))
    if mode is SplittingMode.DETERMINISTIC:
        a, b = io._parse_pair(mc.get("pair", cfg.pair))
        curves = dict(curve_s=cfg.demux.channel(a).curve, curve_i=cfg.demux.channel(b).curve)
    else:
        curves = dict(curve_s=cfg.demux.channel(int(mc.get("channel", cfg.channel))).curve)
    window = mc.get("window_thz")
    return McConfig(
        src=SourceSpec(cfg.pump_thz, float(mc.get("p_inband", cfg.p_inband))),
        mode=mode,
        det_s=cfg.detectors[0],
        det_i=cfg.detectors[1],
        n_gates=int(mc.get("n_gates", 1_000_000)),
        seed=int(mc.get("seed", 0)),
        coupling=float(mc.get("coupling", 1.0)),
        window=None if window is None else tuple(window),
        emission=mc.get("emission", "poisson"),
        batch_size=int(mc.get("batch_size", 100_000)),
        **curves,
    )


MC_COLUMNS = ("quantity", "count", "trials", "mc_rate", "mc_std_error", "analytic", "delta_sigma")


def cmd_montecarlo(args) -> int:
    cfg = io.load_config(args.config, seed_override=args.seed)
    mcfg = mc_config(cfg)
    stats = run_mc(mcfg, workers=args.workers)
    rows = [("gates_run", stats.gates_run, stats.gates_run, 1.0, 0.0, 1.0, 0.0)]
    rows.append(("live_gates", stats.live_gates, stats.gates_run, stats.live_gates / stats.gates_run, 0.0, "", ""))
    for dev in compare_to_analytic(stats, mcfg):
        rows.append(
            (dev.quantity, dev.count, dev.trials, dev.mc_rate, stats.std_error(dev.quantity), dev.analytic, dev.z)
        )
    head = io.provenance(cfg, "montecarlo", mcfg.seed)
    head["emission"] = mcfg.emission
    head["mode"] = mcfg.mode.value
    io.ResultTable(MC_COLUMNS, rows, head).write(args.out)
    return 0


def cmd_detuning(args) -> int:
    cfg = io.load_config(args.config)
    a, b = cfg.pair
    rows = detuning_sweep(cfg.demux.channel(a).curve, cfg.demux.channel(b).curve, cfg.pump_thz, args.range, args.points)
    head = io.provenance(cfg, "detuning")
    head["pair"] = io.pair_label((a, b))
    io.ResultTable(("detuning_ghz", "i2_thz"), rows, head).write(args.out)
    return 0


def _pairs_arg(text: str):
    return [io._parse_pair(p) for p in text.split(",") if p.strip()]


def cmd_delay_plan(args) -> int:
    table = delays.filter_table(delays.builtin_delay_table(), args.filter, args.shape)
    line = delays.DelayLine(max_ns=args.line_max, resolution_ns=args.resolution)
    plan = delays.retune_plan(_pairs_arg(args.pairs), table, line, args.gate_width)
    doc = {"filter": args.filter, "shape": args.shape, "steps": [s.to_json() for s in plan]}
    _write_or_print(io.dumps_json(doc), args.out)
    return 0


def cmd_allocate(args) -> int:
    lo, _, hi = args.channels.partition("-")
    numbers = range(int(lo), int(hi or lo) + 1)
    demux = io.DemuxSpec.synthetic(args.filter, numbers, delays=delays.delays_for(args.filter, args.shape))
    pump = None if args.pump == "auto" else float(args.pump)
    requests = [(f"user{k}a", f"user{k}b") for k in range(1, args.requests + 1)]
    plan = delays.allocate(requests, demux, pump)
    _write_or_print(io.dumps_json(plan.to_json()), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wdmpairlab", description="Photon-pair distribution through DWDM filters.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("integrals", help="overlap integrals of a channel pair")
    s.add_argument("--channel-a", required=True, help="ITU channel number or filter CSV")
    s.add_argument("--channel-b", required=True, help="ITU channel number or filter CSV")
    s.add_argument("--pump", type=float, help="pump frequency in THz (default: sum of centers)")
    s.add_argument("--config", help="take channel curves from this config's demux")
    s.add_argument("--shape", choices=("flattop", "gaussian", "rectangle"), default="flattop")
    s.add_argument("--fwhm", type=float, default=100.0, help="GHz")
    s.add_argument("--peak", type=float, default=1.0)
    s.add_argument("--order", type=int, default=4)
    s.set_defaults(func=cmd_integrals)

    s = sub.add_parser("sweep", help="visibility and brightness versus pair probability")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("montecarlo", help="event-level simulation against the analytic model")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, help="overrides $WDMPAIRLAB_SEED and the config")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("detuning", help="I2 versus pump detuning")
    s.add_argument("--config", required=True)
    s.add_argument("--range", type=float, required=True, help="half range in GHz")
    s.add_argument("--points", type=int, default=41)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_detuning)

    s = sub.add_parser("delay-plan", help="retuning plan with delay compensation (JSON)")
    s.add_argument("--filter", required=True, choices=("DTF", "AWG", "DG"))
    s.add_argument("--shape", choices=(delays.FLAT_TOP, delays.GAUSSIAN), default=delays.FLAT_TOP)
    s.add_argument("--pairs", required=True, help="e.g. 23-25,22-26")
    s.add_argument("--gate-width", type=float, default=20.0, help="ns")
    s.add_argument("--line-max", type=float, default=25.0, help="ns")
    s.add_argument("--resolution", type=float, default=0.5, help="ns")
    s.add_argument("--out")
    s.set_defaults(func=cmd_delay_plan)

    s = sub.add_parser("allocate", help="assign channel pairs to user pairs (JSON)")
    s.add_argument("--requests", type=int, required=True)
    s.add_argument("--pump", required=True, help="THz, or 'auto' for a per-pair tunable pump")
    s.add_argument("--channels", default="21-27", help="ITU channel range of the demux")
    s.add_argument("--filter", choices=("DTF", "AWG", "DG"), default="DG")
    s.add_argument("--shape", choices=(delays.FLAT_TOP, delays.GAUSSIAN), default=delays.FLAT_TOP)
    s.add_argument("--out")
    s.set_defaults(func=cmd_allocate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise CliError("missing subcommand")
        return args.func(args)
    except CliError as exc:
        _emit_error("UsageError", str(exc))
        return 2
    except (OSError, ValueError, KeyError) as exc:
        _emit_error(type(exc).__name__, str(exc).strip("'\""))
        return 1


run_command = main


if __name__ == "__main__":
    sys.exit(main())
