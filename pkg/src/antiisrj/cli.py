"""Command-line interface.

Subcommands: simulate, tfr, detect, suppress, sweep, report. Exit codes:
0 success, 2 configuration error, 3 detection failure (single runs), 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

from . import harness, linedet, siggen, tfr
from .scenario import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DETECTION = 3
EXIT_IO = 4


class DetectionFailure(RuntimeError):
    pass


def _cfg(args):
    cfg = harness.resolve_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> list:
    cfg = _cfg(args)
    sig = siggen.simulate(cfg)
    out = _out(args)
    parts = {"received": sig.received, "echo": sig.echo, "noise": sig.noise}
    for i, j in enumerate(sig.jamming, start=1):
        parts[f"jamming{i}"] = j
    written = []
    for name, s in parts.items():
        if args.format == "csv":
            p = out / f"{name}.csv"
            siggen.write_signal_csv(p, s)
        else:
            p = out / f"{name}.bin"
            siggen.write_signal_bin(p, s)
        written.append(p)
    return written


def cmd_tfr(args) -> list:
    cfg = _cfg(args)
    sig = siggen.simulate(cfg)
    out = _out(args)
    method = args.method or "glwd"
    if method == "stft":
        img = tfr.rasterize(tfr.stft(sig.received))
    elif method == "wd":
        p = tfr.GlwdParams.wd_reduction(cfg.waveform.n_quadratic)
        img = tfr.rasterize(tfr.wd(sig.received, col_step=2, n_freq=512, time_unit_s=p.time_unit_s))
    elif method == "glwd":
        params = harness.glwd_params(cfg)
        img = tfr.rasterize(harness.detection_image(sig.received, cfg, params), scale="linear", part="real")
    else:
        raise ConfigError("method", f"unknown transform {method!r}; use stft, wd or glwd")
    if args.format == "csv":
        p = out / f"{method}.csv"
        tfr.write_image_csv(p, img)
        return [p]
    p = out / f"{method}.pgm"
    side = tfr.write_pgm(p, img)
    return [p, side]


def cmd_detect(args) -> list:
    cfg = _cfg(args)
    sig = siggen.simulate(cfg)
    out = _out(args)
    params = harness.glwd_params(cfg)
    mode = args.method or "pulse"
    if mode not in harness.RIDGE_MODES:
        raise ConfigError("method", f"unknown detector {mode!r}; use pulse or continuity")
    image, dc = harness.ridge_image(sig.received, cfg, params, mode)
    p = out / "candidates.csv"
    linedet.write_segments_csv(p, linedet.score_candidates(image, dc))
    written = [p]
    try:
        seg = linedet.detect_target_ridge(image, dc)
    except linedet.NoTargetRidge as exc:
        raise DetectionFailure(str(exc)) from exc
    p = out / "segments.csv"
    linedet.write_segments_csv(p, [harness.ridge_to_physical(params, seg)])
    written.append(p)
    return written


def cmd_suppress(args) -> list:
    cfg = _cfg(args)
    method = args.method or "proposed"
    if method not in harness.METHODS:
        raise ConfigError("method", f"unknown method {method!r}")
    res = harness.run_scenario(cfg, method, keep=True)
    written = harness.write_run_artifacts(res, _out(args))
    if method == "proposed" and not res.ridge_found:
        raise DetectionFailure("no target ridge")
    return written


def cmd_sweep(args) -> list:
    methods = tuple((args.method or "proposed").split(","))
    try:
        spec = harness.SweepSpec(args.variable, args.start, args.stop, args.step, args.trials,
                                 args.config, methods, args.seed if args.seed is not None else 1)
    except ValueError as exc:
        raise ConfigError("sweep", str(exc)) from exc
    harness.resolve_config(args.config)  # fail early on a bad config
    out = _out(args)
    p = out / f"sweep_{args.variable}.csv"
    harness.run_sweep(spec, csv_path=p, workers=args.workers)
    return [p]


def cmd_report(args) -> list:
    out = Path(args.out_dir)
    sweeps = sorted(out.glob("sweep_*.csv"))
    runs = sorted(out.glob("**/report.txt"))
    if not sweeps and not runs:
        raise FileNotFoundError(f"no sweep CSV or report.txt under {out}")
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [f"# generated {stamp}\n"]
    for s in sweeps:
        lines.append(f"sweep: {s.name}\n")
        lines.append(harness.summarize_curves(harness.read_sweep_csv(s)))
    for r in runs:
        lines.append(f"run: {r.relative_to(out)}\n")
        lines += [f"  {line}\n" for line in r.read_text().splitlines()]
    p = out / "summary.txt"
    p.write_text("".join(lines))
    return [p]


COMMANDS = {
    "simulate": cmd_simulate,
    "tfr": cmd_tfr,
    "detect": cmd_detect,
    "suppress": cmd_suppress,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="antiisrj", description="GLWD-based ISRJ suppression toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices=None, method_help=None):
        p.add_argument("--config", default="table1",
                       help="scenario file or bundled name (table1, table2); default table1")
        p.add_argument("--seed", type=int, default=None, help="noise seed (overrides the config)")
        p.add_argument("--out-dir", default="out", help="directory for written files")
        if fmt_choices:
            p.add_argument("--format", choices=fmt_choices, default=fmt_choices[0])
        if method_help:
            p.add_argument("--method", default=None, help=method_help)

    common(sub.add_parser("simulate", help="write echo, jamming, noise and received signals"),
           ["bin", "csv"])
    common(sub.add_parser("tfr", help="write a time-frequency image"), ["pgm", "csv"],
           "stft, wd or glwd (default glwd)")
    common(sub.add_parser("detect", help="detect the target ridge and write segments"), None,
           "pulse (lag window matched to the pulse, default) or continuity (short lag window)")
    common(sub.add_parser("suppress", help="end-to-end single run"), None,
           "proposed, energy_baseline or none (default proposed)")
    sw = sub.add_parser("sweep", help="Monte Carlo performance curves")
    common(sw, None, "comma-separated methods (default proposed)")
    sw.add_argument("--variable", choices=["sjr_db", "snr_db"], default="sjr_db")
    sw.add_argument("--start", type=float, default=-10.0)
    sw.add_argument("--stop", type=float, default=10.0)
    sw.add_argument("--step", type=float, default=2.0)
    sw.add_argument("--trials", type=int, default=200)
    sw.add_argument("--workers", type=int, default=1)
    rp = sub.add_parser("report", help="aggregate sweep CSVs and run reports in --out-dir")
    rp.add_argument("--out-dir", default="out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DetectionFailure as exc:
        print(f"detection failure: {exc}", file=sys.stderr)
        return EXIT_DETECTION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
