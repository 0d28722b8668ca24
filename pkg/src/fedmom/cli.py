"""
Command-line interface for the federated momentum simulator.
Main entry point for running sweeps and inspecting their results.
"""

import argparse
import sys
import traceback
from pathlib import Path
from typing import List, Optional

from .config import ExperimentConfig, LoggingConfig, configure_logging, load_config
from .errors import FedMomError
from .experiments.diagnostics import run_diagnostics
from .experiments.runner import partition_stats, run_experiment, summarize_run_dir


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        help="Run a single seed instead of the configured seed list",
    )
    parser.add_argument(
        "--threads",
        type=int,
        help="Clients trained in parallel within a round",
    )
    parser.add_argument(
        "--output",
        type=str,
        help="Output directory or file (overrides output_dir)",
    )


def setup_parser() -> argparse.ArgumentParser:
    """Set up command-line argument parser."""
    parser = argparse.ArgumentParser(
        prog="fedmom",
        description="Federated learning with server-aggregated momentum (FedAvg, MFL, RMFL)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run experiment.config.yaml
  %(prog)s run configs/synthetic.yaml --seed 0 --threads 4
  %(prog)s summarize runs/experiment
  %(prog)s partition-stats experiment.config.yaml --output partition.csv
  %(prog)s diagnose configs/diagnose.yaml
        """,
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Enable debug logging and print tracebacks on errors",
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="Run or resume an experiment sweep")
    run.add_argument("config", help="Path to the experiment YAML file")
    _add_overrides(run)

    summarize = sub.add_parser("summarize", help="Summarize a finished run directory")
    summarize.add_argument("run_dir", help="Directory written by 'run'")
    summarize.add_argument(
        "--window",
        type=int,
        help="Evaluation points averaged per run (default: final_window from the manifest)",
    )

    stats = sub.add_parser("partition-stats", help="Write per-client class counts as CSV")
    stats.add_argument("config", help="Path to the experiment YAML file")
    _add_overrides(stats)

    diagnose = sub.add_parser("diagnose", help="Run the gradient-divergence diagnostics")
    diagnose.add_argument("config", help="Path to the experiment YAML file")
    _add_overrides(diagnose)

    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    output = args.output if args.command != "partition-stats" else None
    cfg = cfg.with_overrides(seed=args.seed, threads=args.threads, output=output)
    logging_cfg = cfg.logging
    if args.verbose:
        logging_cfg = LoggingConfig(level="DEBUG", file=logging_cfg.file, console=logging_cfg.console)
    configure_logging(logging_cfg)
    return cfg


def cmd_run(args: argparse.Namespace) -> None:
    """Run every missing (algorithm, lr, seed) cell."""
    cfg = _load(args)
    print(f"\nRunning experiment: {cfg.name}")
    print("-" * 50)
    run_dir = run_experiment(cfg)
    print(f"\n✓ Results in {run_dir}")
    print(f"Run: fedmom summarize {run_dir}")


def cmd_summarize(args: argparse.Namespace) -> None:
    """Print the seed-averaged table of a run directory."""
    configure_logging(LoggingConfig(level="DEBUG" if args.verbose else "WARNING"))
    _, table = summarize_run_dir(args.run_dir, window=args.window)
    print(table)
    print(f"\nWritten: {Path(args.run_dir) / 'summary.csv'}, {Path(args.run_dir) / 'curves.csv'}")


def cmd_partition_stats(args: argparse.Namespace) -> None:
    """Partition the training set and write client class counts."""
    cfg = _load(args)
    output = args.output or str(Path(cfg.output_dir) / "partition.csv")
    entropy = partition_stats(cfg, output, seed=args.seed)
    print(f"Clients: {cfg.partition.num_clients}  alpha: {cfg.partition.alpha:g}")
    print(f"Mean class entropy: {entropy:.4f} nats")
    print(f"Written: {output}")


def cmd_diagnose(args: argparse.Namespace) -> None:
    """Gradient-divergence case study."""
    cfg = _load(args)
    result = run_diagnostics(cfg, seed=args.seed)
    print("\nGradient divergence")
    print("-" * 50)
    print(f"Records: {len(result.records)}")
    print(f"Spearman(step, mean cosine):     {result.cosine_trend:+.3f}")
    print(f"Spearman(step, mean projection): {result.projection_trend:+.3f}")
    print(f"Written: {result.divergence_csv}, {result.summary_csv}")


COMMANDS = {
    "run": cmd_run,
    "summarize": cmd_summarize,
    "partition-stats": cmd_partition_stats,
    "diagnose": cmd_diagnose,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Args:
        argv: Command-line arguments (default: sys.argv[1:])

    Returns:
        Exit code: 0 on success, 1 on a reported error, 130 on Ctrl-C
    """
    parser = setup_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    try:
        COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("\n\nInterrupted by user")
        return 130
    except FedMomError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
