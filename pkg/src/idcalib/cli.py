"""Command-line entry point: ``idcalib {run,sweep,ablate,trace}``.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from . import experiments as ex
from .calibrate import Strategy
from .core import ValidationError
from .metrics import METRIC_FIELDS, to_csv
from .simbench import stream_lines

log = logging.getLogger("idcalib")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment file (default: bundled canonical scenario)")
    p.add_argument("--seed", type=int, help="run this single seed instead of the configured list")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--calibration", choices=[s.value for s in Strategy])
    p.add_argument("--k-c", dest="k_c", type=int)
    p.add_argument("--k-u", dest="k_u", type=int)
    p.add_argument("--m-c", dest="m_c", type=int)
    p.add_argument("--m-u", dest="m_u", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--e-u", dest="e_u", type=float)
    p.add_argument("--ema-momentum", dest="ema_momentum", type=float)
    p.add_argument("--drift-rate", dest="drift_rate", type=float)
    p.add_argument(
        "--disable", action="append", choices=["intuitive", "experiential", "confident", "uncertain"],
        help="switch off a system or a cache role (repeatable)",
    )
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idcalib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("run", "one scenario, one strategy: summary.json + frames.csv"),
        ("sweep", "grid over k_c/k_u/tau/e_u from [sweep]: sweep.csv"),
        ("ablate", "system, object-role and strategy ablation tables"),
        ("trace", "per-object debug dump as newline-delimited JSON"),
    ]:
        p = sub.add_parser(name, help=help_)
        _shared(p)
        if name == "trace":
            p.add_argument("--max-frames", type=int, help="only trace the first N frames of each video")
            p.add_argument("--stream", action="store_true", help="also dump the generated stream to stream.jsonl")
    return parser


def _experiment(args) -> cfgmod.Experiment:
    exp = cfgmod.load(args.config)
    flags = {k: getattr(args, k) for k in ("seed", "calibration", "k_c", "k_u", "m_c", "m_u", "tau", "e_u",
                                           "ema_momentum", "drift_rate", "disable")}
    return cfgmod.apply_overrides(exp, **flags)


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_run(exp, args, out: Path) -> None:
    summaries, mean, frames = ex.run_seeds(exp, keep_frames=True)
    _write(out, "summary.json", _dump_json(ex.run_payload(exp, summaries, mean)))
    _write(out, "frames.csv", to_csv(frames, ex.FRAME_COLUMNS))
    print(" ".join(f"{k}={mean[k]:.6f}" for k in METRIC_FIELDS))


def cmd_sweep(exp, args, out: Path) -> None:
    if not exp.sweep:
        raise ValidationError("the config has no [sweep] table")
    rows = ex.sweep(exp)
    columns = cfgmod.SWEEPABLE + METRIC_FIELDS
    _write(out, "sweep.csv", to_csv(rows, columns))
    _write(out, "sweep.txt", ex.aligned_text(rows, columns))
    sys.stdout.write(ex.aligned_text(rows, columns))


def cmd_ablate(exp, args, out: Path) -> None:
    rows = ex.ablate(exp)
    _write(out, "ablation.csv", to_csv(rows, ex.ABLATION_COLUMNS))
    text = ex.aligned_text(rows, ex.ABLATION_COLUMNS)
    _write(out, "ablation.txt", text)
    _write(out, "ablation.json", _dump_json({"schema_version": 1, "seeds": list(exp.seeds), "rows": rows}))
    sys.stdout.write(text)


def cmd_trace(exp, args, out: Path) -> None:
    lines = ex.trace_lines(exp, args.max_frames)
    _write(out, "trace.jsonl", "".join(ex.dumps_line(rec) + "\n" for rec in lines))
    if args.stream:
        sc = exp.scenario_for(exp.seeds[0])
        _write(out, "stream.jsonl", "".join(line + "\n" for line in stream_lines(sc)))
    print(f"traced {len(lines)} object-frames")


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "ablate": cmd_ablate, "trace": cmd_trace}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        exp = _experiment(args)
    except ValidationError as exc:
        print(f"idcalib: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](exp, args, out)
    except ValidationError as exc:
        print(f"idcalib: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"idcalib: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
