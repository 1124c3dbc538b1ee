#!/usr/bin/env python
"""
Wheeled Biped Head Stabilizer - Run Script

Usage:
    python main.py run --scenario exp1 [--config cfg.yaml] [--set plant.dt=0.0005]
    python main.py report --input data/runs/exp1
    python main.py sweep --param admittance.K --values 1000 2000 4000 --jobs 4
"""

import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

import src.config as config
from src.config import MODES, SCENARIO_TERRAIN, ConfigError, load_config
from src.head_stabilizer import MetricsReport, logger, run_experiment, run_sweep
from src.utils.reporting import format_report_table, load_report
from src.utils.plant_sim import SimulationFault


def setup_logging(log_dir: Path = config.LOG_DIR, verbose: bool = False) -> None:
    """Rich console logging plus a dated log file."""
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            RichHandler(rich_tracebacks=True),
            logging.FileHandler(log_dir / f"head_stabilizer_{datetime.now():%Y%m%d}.log"),
        ],
        force=True,
    )


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Wheeled Biped Head Stabilizer")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument(
        "--log-dir",
        type=str,
        default=str(config.LOG_DIR),
        help="Directory for log files",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_config_options(sub):
        sub.add_argument("--config", type=str, help="YAML configuration file")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="Override a configuration value (can be used multiple times)",
        )
        sub.add_argument("--seed", type=int, help="Seed for terrain and sensor noise")

    run_parser = subparsers.add_parser("run", help="Run baseline and proposed on one scenario")
    add_config_options(run_parser)
    run_parser.add_argument(
        "--scenario",
        choices=sorted(SCENARIO_TERRAIN),
        default="exp1",
        help="Terrain scenario",
    )
    run_parser.add_argument(
        "--mode",
        choices=list(MODES) + ["both"],
        default="both",
        help="Controller mode(s) to run",
    )
    run_parser.add_argument(
        "--output-dir",
        type=str,
        help="Output directory for results (default: <output root>/<scenario>)",
    )

    report_parser = subparsers.add_parser("report", help="Print a saved report")
    report_parser.add_argument("--input", type=str, required=True, help="Run directory or report.json")

    sweep_parser = subparsers.add_parser("sweep", help="Compare modes across values of one parameter")
    add_config_options(sweep_parser)
    sweep_parser.add_argument("--param", type=str, required=True, help="Dotted parameter, e.g. admittance.K")
    sweep_parser.add_argument("--values", nargs="+", required=True, help="Values to try")
    sweep_parser.add_argument("--scenario", choices=sorted(SCENARIO_TERRAIN), default="exp1")
    sweep_parser.add_argument("--jobs", type=int, default=1, help="Parallel worker processes")
    sweep_parser.add_argument("--output-dir", type=str, default=str(config.OUTPUT_DIR))

    return parser.parse_args(argv)


def command_run(args: argparse.Namespace, console: Console) -> int:
    cfg = load_config(args.config, args.overrides, args.seed)
    modes = MODES if args.mode == "both" else (args.mode,)
    output_dir = Path(args.output_dir) if args.output_dir else config.OUTPUT_DIR / args.scenario

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        TimeElapsedColumn(),
        console=console,
    ) as progress:
        task = progress.add_task(f"Simulating {args.scenario} ({', '.join(modes)})...", total=None)
        result = run_experiment(cfg, args.scenario, modes, output_dir)
        progress.update(task, completed=True)

    console.print(format_report_table(result.report))
    console.print(f"Results saved to: {output_dir}")
    return 0


def command_report(args: argparse.Namespace, console: Console) -> int:
    report = MetricsReport.model_validate(load_report(Path(args.input)))
    console.print(format_report_table(report))
    return 0


def command_sweep(args: argparse.Namespace, console: Console) -> int:
    # validate the base configuration once before fanning out
    load_config(args.config, args.overrides, args.seed)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        TimeElapsedColumn(),
        console=console,
    ) as progress:
        task = progress.add_task(f"Sweeping {args.param} over {len(args.values)} values...", total=None)
        frame = run_sweep(
            args.param,
            args.values,
            args.scenario,
            args.config,
            args.jobs,
            overrides=args.overrides,
            seed=args.seed,
        )
        progress.update(task, completed=True)

    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = output_dir / "sweep.csv"
    frame.to_csv(sweep_path, index=False, float_format="%.9g")
    console.print(f"Sweep results saved to: {sweep_path}")
    return 0


COMMANDS = {
    "run": command_run,
    "report": command_report,
    "sweep": command_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = parse_arguments(argv)
    setup_logging(Path(args.log_dir), args.verbose)

    console = Console()
    console.print("[bold blue]Wheeled Biped Head Stabilizer[/bold blue]")
    console.print(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    return COMMANDS[args.command](args, console)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Simulation interrupted by user")
        print("\nSimulation interrupted by user")
        sys.exit(130)
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        print(f"\nConfiguration error: {str(e)}")
        sys.exit(2)
    except SimulationFault as e:
        logger.error(f"Simulation fault at tick {e.tick}: {e.reason}")
        print(f"\nSimulation fault at tick {e.tick}: {e.reason}")
        sys.exit(1)
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        print(f"\nError: {str(e)}")
        sys.exit(1)
