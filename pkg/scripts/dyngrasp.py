"""Command-line entry point for single runs and conveyor speed sweeps.

Usage:
    python scripts/dyngrasp.py run --config config/scenarios/conveyor.yaml --lockstep
    python scripts/dyngrasp.py sweep --config config/scenarios/conveyor.yaml \
        --speeds 0,0.02,0.04 --reps 10 --out runs/sweep

Exit codes: 0 when orchestration completes (whatever the grasp outcomes),
2 on configuration errors, 1 on I/O errors.
"""

import argparse
import os
import sys
from dataclasses import replace
from typing import List, Optional

# Add project root to Python path for absolute imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from src.config.logging_config import get_logger, set_verbose
from src.config.scenario_config import ConfigError, parse_config
from src.controllers.simulation_controller import run_scenario
from src.controllers.sweep import SweepSpec, run_sweep

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2


def parse_speeds(text: str) -> List[float]:
    if not text.strip():
        return []
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"speeds must be a comma-separated list of numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyngrasp", description="Dynamic grasping simulator")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, help="scenario YAML file")
    run.add_argument("--lockstep", action="store_true", help="deterministic perception/control interleaving")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--dump-clouds", action="store_true", help="write per-tick model clouds")
    run.add_argument("--out", default=None, help="output directory (default runs/<scenario name>)")

    sweep = sub.add_parser("sweep", help="run a conveyor speed sweep")
    sweep.add_argument("--config", required=True, help="base scenario YAML file")
    sweep.add_argument("--speeds", type=parse_speeds, required=True, help="comma-separated speeds [m/s]")
    sweep.add_argument("--reps", type=int, required=True, help="repetitions per speed")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--objects", default="", help="comma-separated object presets")
    sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sweep.add_argument("--lockstep", action="store_true", help="lockstep mode for every run")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_verbose(args.verbose)

    try:
        cfg = parse_config(args.config)
        if args.command == "run":
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            if args.lockstep:
                cfg = replace(cfg, scenario=replace(cfg.scenario, lockstep=True))
            out = args.out or os.path.join("runs", cfg.scenario.name)
            summary, telemetry = run_scenario(cfg, out, dump_clouds=args.dump_clouds)
            logger.info(f"Outcome: {summary.outcome.value}; telemetry written to {telemetry}")
        else:
            if args.lockstep:
                cfg = replace(cfg, scenario=replace(cfg.scenario, lockstep=True))
            objects = tuple(o.strip() for o in args.objects.split(",") if o.strip())
            spec = SweepSpec(tuple(args.speeds), args.reps, cfg, objects)
            run_sweep(spec, args.out, workers=args.workers)
            with open(os.path.join(args.out, "rate_table.txt"), "r", encoding="utf-8") as f:
                print(f.read())
    except ConfigError as exc:
        logger.error(str(exc))
        return EXIT_CONFIG
    except ValueError as exc:
        logger.error(f"Invalid arguments: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        logger.error(f"I/O error: {exc}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
