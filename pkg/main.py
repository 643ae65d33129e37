"""
Command-line entry point: ingest, partition, train, ablate and report.

    python main.py report --config experiment.json --output-dir results
"""

import argparse
import json
import sys
from typing import List, Optional

from config import apply_overrides, get_settings, load_experiment_config
from data_ingest import clean_records, dataset_profile, load_cleveland
from errors import SimulatorError
from experiment import prepare_clients, run_ablation, run_experiment
from heterogeneity import heterogeneity_report
from logging_config import get_logger, init_loggers
from models import ErrorResponse, Regime
from partitioner import summarize_clients
from report import emit_partition, emit_report
from utils import utc_timestamp

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsim",
        description="Deterministic FedAvg/FedProx simulator on the Cleveland heart-disease data.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ingest", "load and clean the raw file, print the dataset profile"),
        ("partition", "build the age-windowed clients and their heterogeneity report"),
        ("train", "run the requested regimes over the seed sweep"),
        ("ablate", "run the FedProx mu ablation"),
        ("report", "run everything and write the full result set"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="experiment config JSON (defaults when omitted)")
        sub.add_argument("--data-path", help="raw Cleveland CSV, overrides the config")
        sub.add_argument("--output-dir", help="directory for result files")
        sub.add_argument("--seed", type=int, help="run a single seed")
        sub.add_argument("--mu", type=float, help="single mu for the grid and the fedprox regime")
        sub.add_argument(
            "--regime",
            choices=[r.value for r in Regime],
            help="run a single regime",
        )
    return parser


def _print_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def cmd_ingest(cfg) -> None:
    raw = load_cleveland(cfg.data_path)
    cleaned = clean_records(raw)
    profile = dataset_profile(cleaned)
    _print_json({
        "raw_count": cleaned.raw_count,
        "retained_count": len(cleaned),
        "dropped_count": cleaned.dropped_count,
        "profile": profile.model_dump(mode="json"),
    })


def cmd_partition(cfg) -> None:
    _, clients = prepare_clients(cfg)
    summary = summarize_clients(clients)
    hetero = heterogeneity_report(clients)
    emit_partition(clients, hetero, summary, cfg.output_dir)
    _print_json({
        "clients": [row.model_dump(mode="json") for row in summary.rows],
        "gini": hetero.gini,
        "avg_jsd": hetero.avg_jsd,
        "avg_mmd": hetero.avg_mmd,
        "heterogeneity": hetero.model_dump(mode="json"),
    })


def cmd_train(cfg) -> None:
    result = run_experiment(cfg, include_ablation=False)
    emit_report(result.report, cfg.output_dir, result.runs)


def cmd_ablate(cfg) -> None:
    result = run_ablation(cfg)
    emit_report(result.report, cfg.output_dir, result.runs)


def cmd_report(cfg) -> None:
    result = run_experiment(cfg, include_ablation=True)
    emit_report(result.report, cfg.output_dir, result.runs)


HANDLERS = {
    "ingest": cmd_ingest,
    "partition": cmd_partition,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def _report_error(error: dict) -> None:
    response = ErrorResponse(**error, timestamp=utc_timestamp())
    sys.stderr.write(response.model_dump_json() + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except SimulatorError as e:
        init_loggers()
        _report_error(e.to_dict())
        return e.exit_code
    init_loggers(settings)
    logger.debug(f"Settings: {settings.get_summary()}")

    try:
        cfg = load_experiment_config(args.config)
        cfg = apply_overrides(
            cfg,
            seed=args.seed,
            mu=args.mu,
            regime=args.regime,
            output_dir=args.output_dir,
            data_path=args.data_path,
        )
        logger.info(f"Running {args.command}", extra={"path": cfg.data_path})
        HANDLERS[args.command](cfg)
        return 0
    except SimulatorError as e:
        logger.error(f"{args.command} failed: {e.message}")
        _report_error(e.to_dict())
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        _report_error({"error_type": type(e).__name__, "message": str(e), "details": {}})
        return 1


if __name__ == "__main__":
    sys.exit(main())
