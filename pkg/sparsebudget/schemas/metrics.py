"""
Metric snapshots, trace rows and diagnostic reports
"""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Stage(str, Enum):
    EXPLORE = "explore"
    EXPLOIT = "exploit"
    NONE = "n/a"


class MetricSnapshot(BaseModel):
    """Error and recovery metrics of one iterate"""

    model_config = ConfigDict(frozen=True)

    test_mse: float = Field(ge=0)
    excess_risk: Optional[float] = None  # only when the covariance is known
    # support scores need theta*, so they are absent on real data
    support_precision: Optional[float] = Field(default=None, ge=0, le=1)
    support_recall: Optional[float] = Field(default=None, ge=0, le=1)
    support_f1: Optional[float] = Field(default=None, ge=0, le=1)
    l2_sq_error: Optional[float] = None


# Fixed column order of the per-trial trace CSV
TRACE_COLUMNS = [
    "trial",
    "update_index",
    "stage",
    "cum_examples",
    "cum_attribute_reads",
    "nnz_theta",
    "test_mse",
    "excess_risk",
    "support_f1",
    "elapsed_ms",
]


class TraceRecord(BaseModel):
    """One row of a run trace"""

    model_config = ConfigDict(frozen=True)

    trial: int = 0
    update_index: int
    stage: Stage = Stage.NONE
    cum_examples: int
    cum_attribute_reads: int
    nnz_theta: int
    metrics: MetricSnapshot
    elapsed_ms: float = 0.0

    def csv_row(self) -> List[str]:
        excess = self.metrics.excess_risk
        return [
            str(self.trial),
            str(self.update_index),
            self.stage.value,
            str(self.cum_examples),
            str(self.cum_attribute_reads),
            str(self.nnz_theta),
            repr(float(self.metrics.test_mse)),
            "" if excess is None else repr(float(excess)),
            "" if self.metrics.support_f1 is None else repr(float(self.metrics.support_f1)),
            f"{self.elapsed_ms:.3f}",
        ]


class ConstraintCheck(BaseModel):
    """One inequality of the parameter-choice block"""

    name: str
    description: str
    value: float
    bound: float
    passed: bool
    slack: float  # positive when satisfied


class ConstraintReport(BaseModel):
    checks: List[ConstraintCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> ConstraintCheck:
        return next(check for check in self.checks if check.name == name)


class ContractionDiagnostics(BaseModel):
    """Predicted per-step contraction alpha and additive noise term c_t"""

    alpha: float
    c_t: float
    per_step_noise: Optional[float] = None


class TrialSummary(BaseModel):
    trial: int
    seed: int
    final_metrics: MetricSnapshot
    total_examples: int
    total_attribute_reads: int
    n_updates: int
    trace_file: str


class ExperimentSummary(BaseModel):
    config_hash: str
    algorithm: str
    trials: List[TrialSummary]
    aggregate_file: str
    metadata: Dict[str, Any] = {}


# Fixed column order of the aggregate CSV
AGGREGATE_COLUMNS = [
    "cum_examples",
    "n_trials",
    "mean_test_mse",
    "two_std_test_mse",
    "mean_excess_risk",
    "two_std_excess_risk",
]


class ValidationSummary(BaseModel):
    """What `validate` prints for one config"""

    eta: float
    batch_size: int  # B_1 of the configured schedule
    delta_t: float
    report: ConstraintReport
    contraction: ContractionDiagnostics
    proof_batch_size: Optional[int] = None  # None when R_inf is infinite
