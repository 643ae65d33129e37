from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PatientRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    age: float
    sex: float = Field(..., ge=0.0, le=1.0)
    cp: float = Field(..., ge=1.0, le=4.0)
    trestbps: float
    chol: float
    fbs: float = Field(..., ge=0.0, le=1.0)
    restecg: float = Field(..., ge=0.0, le=2.0)
    thalach: float
    exang: float = Field(..., ge=0.0, le=1.0)
    oldpeak: float
    slope: float = Field(..., ge=1.0, le=3.0)
    ca: float = Field(..., ge=0.0, le=3.0)
    thal: float
    label: int = Field(..., ge=0, le=1)


class Regime(str, Enum):
    CENTRALIZED = "centralized"
    LOCAL = "local"
    FEDAVG = "fedavg"
    FEDPROX = "fedprox"


class Tail(str, Enum):
    ONE_SIDED = "one_sided"
    TWO_SIDED = "two_sided"


class WindowSpec(BaseModel):
    """Age-percentile window that one simulated hospital draws from."""

    client_name: str = Field(..., min_length=1)
    lo_percentile: float = Field(..., ge=0.0, le=1.0)
    hi_percentile: float = Field(..., ge=0.0, le=1.0)
    target_count: int = Field(..., gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "WindowSpec":
        if self.lo_percentile >= self.hi_percentile:
            raise ValueError(
                f"window {self.client_name!r}: lo_percentile must be below hi_percentile"
            )
        return self


def default_window_specs() -> List[WindowSpec]:
    return [
        WindowSpec(client_name="older", lo_percentile=0.4, hi_percentile=1.0, target_count=95),
        WindowSpec(client_name="middle", lo_percentile=0.3, hi_percentile=0.7, target_count=83),
        WindowSpec(client_name="small", lo_percentile=0.2, hi_percentile=0.5, target_count=44),
        WindowSpec(client_name="younger", lo_percentile=0.0, hi_percentile=0.4, target_count=71),
    ]


class FedConfig(BaseModel):
    """Round schedule and optimizer settings shared by every training regime."""

    rounds: int = Field(30, gt=0)
    local_epochs: int = Field(5, gt=0)
    batch_size: int = Field(32, gt=0)
    mu: float = Field(0.0, ge=0.0)
    lr0: float = Field(0.1, gt=0.0)
    lr_decay: float = Field(0.95, gt=0.0, le=1.0)
    lr_decay_every: int = Field(10, gt=0)
    lr_min: float = Field(0.001, gt=0.0)
    seed: int = Field(42, ge=0)

    @model_validator(mode="after")
    def _check_lr_floor(self) -> "FedConfig":
        if self.lr_min > self.lr0:
            raise ValueError("lr_min must not exceed lr0")
        return self


class ExperimentConfig(BaseModel):
    data_path: str = ""
    window_specs: List[WindowSpec] = Field(default_factory=default_window_specs)
    fed: FedConfig = Field(default_factory=FedConfig)
    mu_grid: List[float] = Field(default_factory=lambda: [0.0, 0.01, 0.05, 0.1, 0.5])
    seeds: List[int] = Field(default_factory=lambda: list(range(42, 92)))
    regimes: List[Regime] = Field(default_factory=lambda: list(Regime))
    overhead_factor: float = Field(0.0, ge=0.0)
    output_dir: str = "results"
    partition_seed: int = Field(42, ge=0)
    test_fraction: float = Field(0.20, gt=0.0, lt=1.0)
    fedprox_mu: Optional[float] = Field(None, ge=0.0)
    holdout_client_id: Optional[int] = None
    l2_lambda: float = Field(0.01, ge=0.0)
    centralized_restandardize: bool = False
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    tail: Tail = Tail.ONE_SIDED

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, seeds: List[int]) -> List[int]:
        if not seeds:
            raise ValueError("seeds must be non-empty")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        if any(seed < 0 for seed in seeds):
            raise ValueError("seeds must be non-negative")
        return seeds

    @field_validator("mu_grid")
    @classmethod
    def _check_mu_grid(cls, grid: List[float]) -> List[float]:
        if any(mu < 0 for mu in grid):
            raise ValueError("mu_grid values must be >= 0")
        return grid

    @field_validator("window_specs")
    @classmethod
    def _check_windows(cls, specs: List[WindowSpec]) -> List[WindowSpec]:
        if not specs:
            raise ValueError("window_specs must be non-empty")
        return specs


class ValidationProtocol(BaseModel):
    holdout_client_id: int
    train_client_ids: List[int]

    @model_validator(mode="after")
    def _check_disjoint(self) -> "ValidationProtocol":
        if self.holdout_client_id in self.train_client_ids:
            raise ValueError("holdout client must not be among the training clients")
        if not self.train_client_ids:
            raise ValueError("validation protocol needs at least one training client")
        return self


class RoundTelemetry(BaseModel):
    round: int = Field(..., ge=1)
    global_accuracy: float = Field(..., ge=0.0, le=1.0)
    per_client_accuracy: List[float]
    weight_delta_l2: float = Field(..., ge=0.0)
    lr: float = Field(..., gt=0.0)
    bytes_up: int = Field(..., ge=0)
    bytes_down: int = Field(..., ge=0)


class MetricSummary(BaseModel):
    accuracy: float = Field(..., ge=0.0, le=1.0)
    auc_roc: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    per_client_accuracy: List[float]
    fairness_std: float = Field(..., ge=0.0)


class ConvergenceDiag(BaseModel):
    rounds_to_95pct: int = Field(..., ge=1)
    final_accuracy: float
    avg_weight_delta: float = Field(..., ge=0.0)


class ClientSummaryRow(BaseModel):
    client_id: int
    name: str
    n: int
    age_mean: float
    age_std: float
    disease_rate: float


class ClientSummaryTable(BaseModel):
    rows: List[ClientSummaryRow]
    size_ratio: float
    age_span: float
    prevalence_span_pp: float


class HeterogeneityReport(BaseModel):
    client_ids: List[int]
    jsd_matrix: List[List[float]]
    mmd_matrix: List[List[float]]
    gini: float = Field(..., ge=0.0, lt=1.0)
    avg_jsd: float
    avg_mmd: float
    max_mmd: float
    bandwidth_rule: str = "median"


class FairnessRow(BaseModel):
    client_id: int
    name: str
    local_accuracy: float
    federated_accuracy: float
    improvement_pp: float


class FairnessTable(BaseModel):
    rows: List[FairnessRow]
    local_std: float
    federated_std: float
    std_reduction: float


class TestResult(BaseModel):
    __test__ = False  # not a pytest class

    t_stat: float
    df: float
    p_value: float = Field(..., ge=0.0, le=1.0)
    ci95_low: float
    ci95_high: float
    mean_difference: float
    cohens_d: Optional[float] = None
    corrected_alpha: float = Field(..., gt=0.0, le=1.0)
    tail: Tail
    significant: bool


class Comparison(BaseModel):
    label: str
    method_a: str
    method_b: str
    runs: int
    one_sided: TestResult
    two_sided: TestResult


class RegimeSummary(BaseModel):
    method: str
    regime: Regime
    mu: Optional[float] = None
    runs: int
    accuracy_mean: float
    accuracy_std: float
    auc_mean: float
    auc_std: float
    f1_mean: float
    f1_std: float
    fairness_std_mean: float
    fairness_std_std: float
    per_client_accuracy_mean: List[float]
    per_client_accuracy_std: List[float]
    convergence_rounds_mean: Optional[float] = None
    convergence_rounds_std: Optional[float] = None
    avg_weight_delta_mean: Optional[float] = None
    avg_weight_delta_std: Optional[float] = None
    comm_bytes_raw: int = 0
    comm_mb: float = 0.0


class AblationRow(BaseModel):
    mu: float
    runs: int
    accuracy_mean: float
    accuracy_std: float
    convergence_rounds_mean: float
    convergence_rounds_std: float
    avg_weight_delta_mean: float
    avg_weight_delta_std: float


class ValidationOutcome(BaseModel):
    holdout_client_id: int
    train_client_ids: List[int]
    holdout_accuracy: Dict[str, float]
    selected_mu: float


class CommunicationReport(BaseModel):
    payload_bytes: int
    bytes_raw: int
    bytes_round_trip: int
    bytes_reported: int
    overhead_factor: float


class StabilityReport(BaseModel):
    fedavg_avg_weight_delta: float
    fedprox_avg_weight_delta: float
    weight_delta_reduction: float
    fedavg_convergence_rounds: float
    fedprox_convergence_rounds: float
    convergence_speedup: float


class DatasetProfile(BaseModel):
    source_path: str
    raw_count: int
    retained_count: int
    dropped_count: int
    retention_ratio: float
    prevalence: float
    male_fraction: float
    mean_age: float
    mean_cholesterol: float
    chest_pain_distribution: Dict[str, float]


class EnvironmentStamp(BaseModel):
    python_version: str
    numpy_version: str
    scipy_version: str
    pydantic_version: str
    platform: str
    machine: str
    logical_cores: int
    physical_cores: Optional[int] = None
    total_ram_gb: float
    workers: int


class ExperimentReport(BaseModel):
    """Nested result document; sections left as None are omitted on emission."""

    dataset: Optional[DatasetProfile] = None
    clients: Optional[ClientSummaryTable] = None
    heterogeneity: Optional[HeterogeneityReport] = None
    validation: Optional[ValidationOutcome] = None
    regimes: Optional[List[RegimeSummary]] = None
    ablation: Optional[List[AblationRow]] = None
    fairness: Optional[FairnessTable] = None
    statistics: Optional[List[Comparison]] = None
    communication: Optional[CommunicationReport] = None
    stability: Optional[StabilityReport] = None
    environment: Optional[EnvironmentStamp] = None


class ErrorResponse(BaseModel):
    success: bool = False
    error_type: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)
    timestamp: datetime
