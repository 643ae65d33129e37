"""
Result emission. Every file is written atomically; floats carry six
significant digits and report.json keeps the schema's field order.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from logging_config import get_logger
from models import ExperimentReport, HeterogeneityReport, RoundTelemetry
from utils import write_csv, write_json

logger = get_logger(__name__)

SUMMARY_HEADER = ["method", "accuracy_mean", "accuracy_std", "auc_mean", "f1_mean", "comm_mb"]
ABLATION_HEADER = [
    "mu", "runs", "accuracy_mean", "accuracy_std",
    "convergence_rounds_mean", "convergence_rounds_std",
    "avg_weight_delta_mean", "avg_weight_delta_std",
]
FAIRNESS_HEADER = ["client_id", "name", "local_accuracy", "federated_accuracy", "improvement_pp"]
TIMINGS_HEADER = ["regime", "mu", "seed", "duration_s"]
CLIENTS_HEADER = ["client_id", "name", "n", "age_mean", "age_std", "disease_rate"]


def telemetry_filename(regime: str, mu: float, seed: int) -> str:
    return f"telemetry_{regime}_{mu:g}_{seed}.csv"


def write_telemetry(filepath: Path, telemetry: Sequence[RoundTelemetry]) -> Path:
    k = len(telemetry[0].per_client_accuracy) if telemetry else 0
    header = ["round", "global_acc", *[f"client{i}_acc" for i in range(1, k + 1)],
              "weight_delta_l2", "lr", "bytes_up", "bytes_down"]
    rows = (
        [row.round, row.global_accuracy, *row.per_client_accuracy,
         row.weight_delta_l2, row.lr, row.bytes_up, row.bytes_down]
        for row in telemetry
    )
    return write_csv(filepath, header, rows)


def _regime_value(run) -> str:
    return getattr(run.regime, "value", str(run.regime))


def emit_report(report: ExperimentReport, output_dir, runs: Iterable = ()) -> List[Path]:
    """
    Write report.json and the CSV views of each populated section.

    ``runs`` are RunRecord-like objects; federated runs contribute one
    telemetry file each and every run contributes a timings row. Runs shared
    between sections are written once.

    Raises:
        ReportWriteError: the directory or a file cannot be written
    """
    out = Path(output_dir)
    written = [write_json(out / "report.json", report.model_dump(mode="json", exclude_none=True))]

    if report.regimes:
        written.append(write_csv(out / "summary.csv", SUMMARY_HEADER, (
            [s.method, s.accuracy_mean, s.accuracy_std, s.auc_mean, s.f1_mean, s.comm_mb]
            for s in report.regimes
        )))
    if report.ablation:
        written.append(write_csv(out / "ablation.csv", ABLATION_HEADER, (
            [
                r.mu, r.runs, r.accuracy_mean, r.accuracy_std,
                r.convergence_rounds_mean, r.convergence_rounds_std,
                r.avg_weight_delta_mean, r.avg_weight_delta_std,
            ]
            for r in report.ablation
        )))
    if report.fairness:
        written.append(write_csv(out / "fairness.csv", FAIRNESS_HEADER, (
            [r.client_id, r.name, r.local_accuracy, r.federated_accuracy, r.improvement_pp]
            for r in report.fairness.rows
        )))

    telemetry: Dict[str, Sequence[RoundTelemetry]] = {}
    timings: Dict[tuple, list] = {}
    for run in runs:
        regime = _regime_value(run)
        if run.telemetry:
            telemetry.setdefault(telemetry_filename(regime, run.mu, run.seed), run.telemetry)
        mu = "" if run.mu is None else run.mu
        timings.setdefault((regime, str(mu), run.seed), [regime, mu, run.seed, float(run.duration_s)])

    for name in sorted(telemetry):
        written.append(write_telemetry(out / name, telemetry[name]))
    if timings:
        written.append(write_csv(out / "timings.csv", TIMINGS_HEADER, [timings[k] for k in sorted(timings)]))

    logger.info(f"Wrote {len(written)} result file(s)", extra={"path": str(out)})
    return written


def emit_partition(clients: Sequence, heterogeneity: HeterogeneityReport, summary, output_dir) -> List[Path]:
    """clients.json (membership), clients.csv (summary table) and heterogeneity.json."""
    out = Path(output_dir)
    membership = {
        "clients": [
            {
                "client_id": c.client_id,
                "name": c.name,
                "member_indices": [int(i) for i in c.partition.member_indices],
                "train_idx": [int(i) for i in c.split.train_idx],
                "test_idx": [int(i) for i in c.split.test_idx],
            }
            for c in sorted(clients, key=lambda c: c.client_id)
        ],
    }
    written = [
        write_json(out / "clients.json", membership),
        write_csv(out / "clients.csv", CLIENTS_HEADER, (
            [r.client_id, r.name, r.n, r.age_mean, r.age_std, r.disease_rate]
            for r in summary.rows
        )),
        write_json(out / "heterogeneity.json", heterogeneity.model_dump(mode="json")),
    ]
    logger.info(f"Wrote partition files for {len(clients)} clients", extra={"path": str(out)})
    return written
