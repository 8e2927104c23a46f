"""Command-line entry point: ``digieco run | verify | print-config``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__, kernels, verify
from .config import ConfigError, ScenarioConfig, format_config, parse_config
from .harness import aggregate, detect_crossover, run_replications

STEP_HEADER = "request_index,services_available,match_pct_eco,match_pct_soa,evaluations_used,seed"
AGGREGATE_HEADER = "window_start,window_end,n,eco_mean,eco_sd,soa_mean,soa_sd"


class InvariantError(RuntimeError):
    pass


def _f(x: float) -> str:
    return f"{x:.6f}"


def format_steps(records) -> str:
    lines = [STEP_HEADER]
    for r in records:
        lines.append(f"{r.request_index},{r.services_available},{_f(r.match_pct_eco)},"
                     f"{_f(r.match_pct_soa)},{r.evaluations_used},{r.seed}")
    return "\n".join(lines) + "\n"


def format_aggregate(windows) -> str:
    lines = [AGGREGATE_HEADER]
    for w in windows:
        lines.append(f"{w.start},{w.end},{w.n},{_f(w.eco_mean)},{_f(w.eco_sd)},"
                     f"{_f(w.soa_mean)},{_f(w.soa_sd)}")
    return "\n".join(lines) + "\n"


def check_invariants(run) -> None:
    for r in run.records:
        if r.comparisons_used > r.evaluations_used:
            raise InvariantError(f"seed {run.seed} request {r.request_index}: budget parity broken "
                                 f"({r.comparisons_used} > {r.evaluations_used})")
        if not (0.0 <= r.match_pct_eco <= 100.0 and 0.0 <= r.match_pct_soa <= 100.0):
            raise InvariantError(f"seed {run.seed} request {r.request_index}: match outside [0, 100]")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def build_summary(cfg: ScenarioConfig, runs, windows) -> dict:
    per_seed = []
    for run in runs:
        w = aggregate(run.records, cfg.window)
        per_seed.append({
            "seed": run.seed,
            "crossover_start": detect_crossover(w),
            "first_window_eco": w[0].eco_mean,
            "first_window_soa": w[0].soa_mean,
            "churn_events": run.churn_events,
            "clustering_coefficient": run.clustering_coefficient,
            "mean_edge_probability": run.mean_edge_probability,
            "hebbian_successes": run.hebbian_successes,
            "hebbian_failures": run.hebbian_failures,
            "budget_parity_violations": sum(r.comparisons_used > r.evaluations_used
                                            for r in run.records),
        })
    return {
        "code_version": __version__,
        "kernel_backend": kernels.backend(),
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in dataclasses.asdict(cfg).items()},
        "aggregate_crossover_start": detect_crossover(windows),
        "seeds_with_crossover": sum(s["crossover_start"] is not None for s in per_seed),
        "per_seed": per_seed,
    }


def cmd_run(cfg: ScenarioConfig, out: Path, workers: int) -> int:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 2
    runs = run_replications(cfg, workers=workers)
    try:
        for run in runs:
            check_invariants(run)
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _write(out / "config.resolved.txt", format_config(cfg))
    for run in runs:
        _write(out / f"steps_{run.seed}.csv", format_steps(run.records))
    windows = aggregate([r for run in runs for r in run.records], cfg.window)
    _write(out / "aggregate.csv", format_aggregate(windows))
    summary = build_summary(cfg, runs, windows)
    _write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(runs)} replication(s) to {out}; "
          f"crossover in {summary['seeds_with_crossover']}/{len(runs)} seeds")
    return 0


def cmd_verify() -> int:
    failed = verify.run_all()
    if failed:
        print("failing suites: " + ", ".join(failed))
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--seed", dest="seeds", action="append", type=int, default=[],
                        metavar="N", help="replication seed (repeatable; replaces config seeds)")

    parser = argparse.ArgumentParser(prog="digieco", description=__doc__)
    parser.add_argument("--version", action="version", version=f"digieco {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run the comparison scenario")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                     help="replications run in parallel (default: CPU count)")
    sub.add_parser("verify", parents=[common], help="run the built-in oracle suites")
    sub.add_parser("print-config", parents=[common], help="print the resolved configuration")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
        if args.seeds:
            cfg = cfg.replace(seeds=tuple(args.seeds))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "print-config":
        sys.stdout.write(format_config(cfg))
        return 0
    if args.command == "verify":
        return cmd_verify()
    return cmd_run(cfg, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
