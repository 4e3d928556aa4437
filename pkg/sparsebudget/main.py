"""
Command-line entry point: run, plot and validate experiments
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from sparsebudget.core.config import settings
from sparsebudget.core.errors import SparseBudgetError
from sparsebudget.services.experiment_service import experiment_service
from sparsebudget.services.plot_service import emit_plot
from sparsebudget.utils.config_io import load_experiment_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsebudget",
        description="Sparse linear regression with a per-example attribute budget",
    )
    parser.add_argument("--version", action="version", version=settings.VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run the seeded trials of a config")
    run.add_argument("config", help="INI experiment file")
    run.add_argument("--output", help="output directory (default OUTPUT_ROOT/<config hash>)")

    plot = commands.add_parser("plot", help="draw aggregate CSVs as one SVG chart")
    plot.add_argument("out", help="SVG file to write")
    plot.add_argument("aggregates", nargs="*", help="aggregate.csv files, one series each")
    plot.add_argument("--linear-y", action="store_true", help="linear instead of log y axis")

    validate = commands.add_parser("validate", help="check the parameter-choice constraints")
    validate.add_argument("config", help="INI experiment file")
    return parser


def _run(args) -> int:
    config = load_experiment_config(args.config)
    summary = experiment_service.run_experiment(config, output_dir=args.output)
    print(f"config {summary.config_hash}: {len(summary.trials)} trials -> {summary.aggregate_file}")
    return 0


def _plot(args) -> int:
    emit_plot(args.aggregates, args.out, log_y=not args.linear_y)
    return 0


def _validate(args) -> int:
    config = load_experiment_config(args.config)
    outcome = experiment_service.validate(config)
    print(f"eta = {outcome.eta:.6g}, B_1 = {outcome.batch_size}, delta_t = {outcome.delta_t:.6g}")
    for check in outcome.report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.description}")
        print(f"       value = {check.value:.6g}, bound = {check.bound:.6g}, slack = {check.slack:.6g}")
    contraction = outcome.contraction
    print(f"contraction alpha = {contraction.alpha:.6g}, c_t = {contraction.c_t:.6g}")
    if contraction.per_step_noise is not None:
        print(f"per-step noise c_t R^2 / B_1 = {contraction.per_step_noise:.6g}")
    if outcome.proof_batch_size is not None:
        print(f"proof batch size = {outcome.proof_batch_size}")
    return 0 if outcome.report.passed else 1


COMMANDS = {"run": _run, "plot": _plot, "validate": _validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.LOG_LEVEL)
    try:
        return COMMANDS[args.command](args)
    except SparseBudgetError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
