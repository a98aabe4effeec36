"""Command-line entry point.

Subcommands: run, batch, accept, plotdata, validate.  Exit status mapping:
0 for any completed mission (success, abort, or miss), 2 for an energy
failure, 1 for configuration or solver errors.  Errors print one
machine-parsable line to stderr: ``error: <stage>: <detail>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from pathlib import Path

from .config import BUILTIN_SCENARIOS, load_scenario
from .errors import RdvsimError
from .mission import Phase
from .runner import run_batch, run_scenario
from .trace import read_rows, write_csv, write_jsonl, write_summary

_DEFAULT_OUT_ENV = "RDVSIM_OUT"


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(_DEFAULT_OUT_ENV, "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _exit_code_for(phase: str) -> int:
    return 2 if phase == Phase.FAILED_ENERGY.value else 0


def _write_trace(trace, out: Path, stem: str, log_format: str) -> Path:
    if log_format == "jsonl":
        target = out / f"{stem}.jsonl"
        write_jsonl(trace, target)
    else:
        target = out / f"{stem}.csv"
        write_csv(trace, target)
    write_summary(trace, out / f"{stem}.summary.json")
    with (out / f"{stem}.timings.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "solve_seconds"])
        for i, s in enumerate(trace.timings.get("solve_seconds", [])):
            writer.writerow([i, f"{s:.6f}"])
    return target


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else config.run.seed
    trace = run_scenario(config, seed=seed)
    out = _out_dir(args)
    target = _write_trace(trace, out, f"trace_seed{seed}", args.log_format)
    if args.verbose:
        print(json.dumps(trace.summary, indent=2, sort_keys=True))
        print(f"median solve: {trace.timings.get('median_solve_ms')} ms")
    print(
        f"{trace.summary['phase']} decision_t={trace.summary['decision_time']} "
        f"final_E={trace.summary['final_energy']} trace={target}"
    )
    return _exit_code_for(trace.summary["phase"])


def _parse_seed_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def _cmd_batch(args) -> int:
    config = load_scenario(args.scenario)
    seeds = _parse_seed_range(args.seeds)
    out = _out_dir(args)
    results = run_batch(config, seeds)
    rows = []
    for seed, trace in results.items():
        _write_trace(trace, out, f"trace_seed{seed}", args.log_format)
        rows.append(
            {
                "seed": seed,
                "phase": trace.summary["phase"],
                "decision_time": trace.summary["decision_time"],
                "final_energy": trace.summary["final_energy"],
                "capture_error": trace.summary["capture_error"],
                "persistently_safe": trace.summary["persistently_safe"],
            }
        )
    agg_path = out / "batch_summary.csv"
    with agg_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    counts: dict[str, int] = {}
    for row in rows:
        counts[row["phase"]] = counts.get(row["phase"], 0) + 1
    print(f"{len(rows)} runs: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    print(f"summary table: {agg_path}")
    worst = max((_exit_code_for(r["phase"]) for r in rows), default=0)
    return worst


def _cmd_accept(args) -> int:
    from .acceptance import run_all

    results = run_all(verbose=args.verbose)
    failed = [r for r in results if not r.passed]
    return 0 if not failed else 1


def _cmd_plotdata(args) -> int:
    rows = read_rows(Path(args.trace))
    if not rows:
        raise RdvsimError(f"trace {args.trace} contains no rows")
    out = _out_dir(args)
    panels = {
        "energy_segments.csv": ["t", "e1", "e2", "e3", "e4"],
        "energy_reserve.csv": ["t", "e_r"],
        "risk.csv": ["t", "rho", "rho_r"],
        "distance.csv": ["t", "dist_uas_driver"],
    }
    for fname, cols in panels.items():
        with (out / fname).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in rows:
                writer.writerow([row[c] for c in cols])
    print(f"wrote {', '.join(panels)} to {out}")
    return 0


def _cmd_validate(args) -> int:
    load_scenario(args.scenario)  # raises with field-path diagnostics
    print(f"{args.scenario}: valid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdvsim",
        description="Risk-aware air-ground rendezvous simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scen_help = f"bundled name ({', '.join(BUILTIN_SCENARIOS)}) or YAML path"

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True, help=scen_help)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help=f"output dir (or ${_DEFAULT_OUT_ENV})")
    p_run.add_argument("--log-format", choices=("csv", "jsonl"), default="csv")
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_batch = sub.add_parser("batch", help="run one scenario over a seed range")
    p_batch.add_argument("--scenario", required=True, help=scen_help)
    p_batch.add_argument("--seeds", required=True, help="a..b or comma list")
    p_batch.add_argument("--out", default=None)
    p_batch.add_argument("--log-format", choices=("csv", "jsonl"), default="csv")
    p_batch.set_defaults(func=_cmd_batch)

    p_acc = sub.add_parser("accept", help="run the acceptance matrix")
    p_acc.add_argument("--verbose", action="store_true")
    p_acc.set_defaults(func=_cmd_accept)

    p_plot = sub.add_parser("plotdata", help="emit tidy plot panels from a trace")
    p_plot.add_argument("--trace", required=True)
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=_cmd_plotdata)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", required=True, help=scen_help)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RdvsimError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
