"""Command line front end.

Subcommands:
  run           seeded Monte Carlo sweep over SINR targets and methods
  summarize     aggregate a results directory into a table
  oracle-check  compare heuristics against the exhaustive oracle

Exit codes: 0 success, 1 if the only failures were infeasible instances,
2 on internal failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .harness import ConfigError, DEFAULT_CONFIG_TEXT
from .netmodel import generate_channels, generate_topology
from .oracle import oracle_min_power
from .pipeline import InstanceInfeasible, run_cb, run_mixed_l12, run_three_stage


def _load(path) -> harness.ExperimentConfig:
    if path is None:
        return harness.parse_config(DEFAULT_CONFIG_TEXT, source="<defaults>")
    return harness.load_config(path)


def _cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.methods is not None:
        cfg = replace(cfg, methods=tuple(s.strip() for s in args.methods.split(",")))
    out = args.out if args.out is not None else cfg.output_dir
    records, traces = harness.run_trials(cfg, output_dir=out)
    harness.export(records, traces, out)
    print(harness.format_summary(harness.summarize(records)))
    print(f"\n{len(records)} records written to {out}/records.csv")
    statuses = {r.status for r in records}
    if "failed" in statuses:
        return 2
    if "infeasible" in statuses:
        return 1
    return 0


def _cmd_summarize(args) -> int:
    records = harness.load_records(f"{args.in_dir}/records.csv")
    print(harness.format_summary(harness.summarize(records)))
    return 0


def _cmd_oracle_check(args) -> int:
    cfg = _load(args.config)
    nk = cfg.network.num_bs * cfg.network.num_users
    if nk > 12:
        print(f"oracle-check needs num_bs*num_users <= 12, got {nk}",
              file=sys.stderr)
        return 2
    tol = 1e-5
    worst_gap = 0.0
    any_infeasible = False
    runners = {"logsum": run_three_stage, "mixed_l12": run_mixed_l12,
               "cb": run_cb}
    for j in range(cfg.trials):
        seed = cfg.base_seed + j
        topo = generate_topology(seed, cfg.network)
        ch = generate_channels(seed, topo, cfg.network)
        for db in cfg.sinr_sweep_db:
            net = cfg.network.with_gamma_db(db)
            try:
                best = oracle_min_power(ch, net, cfg.algorithm.solver_tol)
            except InstanceInfeasible:
                any_infeasible = True
                print(f"seed {seed} sinr {db:g} dB: infeasible")
                continue
            line = [f"seed {seed} sinr {db:g} dB: oracle {best.best_total_w:.4f} W"]
            for name, runner in runners.items():
                run = runner(ch, net, cfg.algorithm)
                gap = best.best_total_w - run.power.total_w
                worst_gap = max(worst_gap, gap)
                line.append(f"{name} {run.power.total_w:.4f} W")
            print("  ".join(line))
    if worst_gap > tol:
        print(f"ORACLE VIOLATION: oracle exceeds a heuristic by {worst_gap:.2e} W",
              file=sys.stderr)
        return 2
    print(f"oracle lower-bounds every heuristic (worst slack {worst_gap:.2e} W)")
    return 1 if any_infeasible else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsbf",
        description="Network power minimization via joint task selection "
                    "and group sparse beamforming.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run seeded Monte Carlo trials")
    p_run.add_argument("--config", help="INI config file (defaults used if omitted)")
    p_run.add_argument("--trials", type=int, help="override trial count")
    p_run.add_argument("--seed", type=int, help="override base seed")
    p_run.add_argument("--out", help="override output directory")
    p_run.add_argument("--methods", help="comma-separated method subset")
    p_run.set_defaults(func=_cmd_run)

    p_sum = sub.add_parser("summarize", help="summarize a results directory")
    p_sum.add_argument("--in", dest="in_dir", required=True,
                       help="directory containing records.csv")
    p_sum.set_defaults(func=_cmd_summarize)

    p_orc = sub.add_parser("oracle-check",
                           help="compare heuristics to the exhaustive oracle")
    p_orc.add_argument("--config", help="INI config file (small instance)")
    p_orc.set_defaults(func=_cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
