"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or I/O
error. ``GRIDSCHED_LOG`` (error, info or debug; default info) sets the
verbosity of diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .exact import InstanceTooLarge
from .grid import ShapeId, census, default_shapes
from .harness import SOLVERS, make_instance, run_scenario, run_solver, summarize_rows, summary_csv, \
    trial_rows, trials_csv

log = logging.getLogger("gridsched")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file (defaults when omitted)")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--seed", type=int, help="base seed, overriding the config")
    solving.add_argument("--time-limit-ms", type=float, help="branch-and-bound time limit")
    solving.add_argument("--gap-tol", type=float, help="branch-and-bound relative gap tolerance")

    parser = _Parser(prog="gridsched", description="URLLC/eMBB grid scheduling experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("enumerate", parents=[common], help="print the block census of the configured grid")

    p = sub.add_parser("solve", parents=[common, solving], help="solve one instance")
    p.add_argument("--solver", required=True, choices=SOLVERS)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p = sub.add_parser("montecarlo", parents=[common, solving], help="run every configured scenario")
    p.add_argument("--out", required=True, metavar="DIR", help="directory for trials.csv and summary.csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    return parser


def _scenarios(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["base_seed"] = args.seed
    solver = {}
    if getattr(args, "time_limit_ms", None) is not None:
        solver["time_limit_ms"] = args.time_limit_ms
    if getattr(args, "gap_tol", None) is not None:
        solver["gap_tol"] = args.gap_tol
    try:
        scns = tuple(replace(s, params=replace(s.params, **solver), **changes) for s in cfg.scenarios)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, scns


def cmd_enumerate(args, out) -> int:
    cfg, _ = _scenarios(args)
    spec = cfg.base.grid
    counts = [census(spec, shape) for shape in default_shapes()]
    fields = [f"shape{int(s)}={n}" for s, n in zip(ShapeId, counts)]
    print(" ".join(fields + [f"total={sum(counts)}"]), file=out)
    return EXIT_OK


def cmd_solve(args, out) -> int:
    _, scns = _scenarios(args)
    scn = scns[0]
    inst = make_instance(scn, 0)
    sched = run_solver(inst, args.solver, scn.params)
    head = {"solver": args.solver, "seed": scn.seed(0), "status": sched.status.value,
            "objective_kbps": sched.objective_kbps, "bound_kbps": sched.bound}
    if args.format == "json":
        doc = dict(head, assignments=[{"block_id": b, "service_id": k, "fraction": x}
                                      for b, k, x in sched.assignments])
        json.dump(doc, out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        out.write("# " + " ".join(f"{k}={'' if v is None else v!r}" for k, v in head.items()) + "\n")
        out.write("block_id,service_id,fraction\n")
        for b, k, x in sched.assignments:
            out.write(f"{b},{k},{x!r}\n")
    else:
        for key, val in head.items():
            print(f"{key}: {'-' if val is None else val}", file=out)
        for b, k, x in sched.assignments:
            print(f"  block {b} -> service {k} ({x:g})", file=out)
    return EXIT_OK


def cmd_montecarlo(args, out) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cfg, scns = _scenarios(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    def progress(scn, rep):
        log.info("%s trial %d/%d done", scn.scenario_id, rep.trial + 1, scn.n_trials)

    reports = []
    for scn in scns:
        reports.extend(run_scenario(scn, jobs=args.jobs, progress=progress))
    (outdir / "trials.csv").write_text(trials_csv(reports, cfg.record_timing), encoding="utf-8", newline="")
    summary = summarize_rows(trial_rows(reports, cfg.record_timing))
    (outdir / "summary.csv").write_text(summary_csv(summary), encoding="utf-8", newline="")
    log.info("wrote %s and %s", outdir / "trials.csv", outdir / "summary.csv")
    return EXIT_OK


COMMANDS = {"enumerate": cmd_enumerate, "solve": cmd_solve, "montecarlo": cmd_montecarlo}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    level = os.environ.get("GRIDSCHED_LOG", "info").lower()
    if level not in LOG_LEVELS:
        print(f"gridsched: error: GRIDSCHED_LOG must be one of {', '.join(LOG_LEVELS)}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=LOG_LEVELS[level], format="gridsched: %(message)s", stream=sys.stderr)

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except (ConfigError, UsageError) as exc:
        print(f"gridsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceTooLarge as exc:
        print(f"gridsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        if args.config and exc.filename == args.config:
            print(f"gridsched: error: config file not found: {args.config}", file=sys.stderr)
            return EXIT_USAGE
        print(f"gridsched: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError) as exc:
        print(f"gridsched: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
