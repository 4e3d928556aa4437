"""
Experiment configuration, one nested model per INI section
"""
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sparsebudget.schemas.schedules import BatchSchedule


class Algorithm(str, Enum):
    EXPLORATION = "exploration"
    EXPLOITATION = "exploitation"
    HYBRID = "hybrid"
    NAIVE = "naive"
    FULL_INFO = "full-info"


class DataSource(str, Enum):
    SYNTHETIC = "synthetic"
    DESK = "desk"
    SECTION6 = "section6"
    CSV = "csv"


class FeatureLawName(str, Enum):
    NORMAL = "iid-standard-normal"
    UNIFORM = "iid-uniform"


class ExperimentSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    algorithm: Algorithm = Algorithm.EXPLORATION
    trials: int = Field(default=5, ge=1)
    base_seed: int = Field(default=0, ge=0)
    cadence: int = Field(default=1, ge=1)  # evaluate every m updates
    workers: Optional[int] = Field(default=None, ge=0)


class DataSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    source: DataSource = DataSource.DESK
    # synthetic generator
    d: Optional[int] = Field(default=None, ge=1)
    s_star: Optional[int] = Field(default=None, ge=1)
    sigma: float = Field(default=1.0, ge=0)
    law: FeatureLawName = FeatureLawName.NORMAL
    r_inf: Optional[float] = Field(default=None, gt=0)
    amplitude: float = Field(default=1.0, gt=0)
    n_rows: Optional[int] = Field(default=None, ge=2)  # None streams from the law
    test_size: int = Field(default=10_000, ge=1)
    data_seed: int = Field(default=20_240_101, ge=0)
    # csv ingestion
    csv_path: Optional[Path] = None
    target: Optional[str] = None  # column name or 1-based index
    split_ratio: float = Field(default=0.9, gt=0, lt=1)
    split_seed: int = Field(default=0, ge=0)
    standardize: bool = False

    @model_validator(mode="after")
    def _check_source(self) -> "DataSection":
        if self.source is DataSource.CSV:
            if self.csv_path is None or self.target is None:
                raise ValueError("csv source needs csv_path and target")
        if self.source is DataSource.SYNTHETIC:
            if self.d is None or self.s_star is None:
                raise ValueError("synthetic source needs d and s_star")
        return self


class BudgetSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    s: int = Field(ge=1)
    s_prime: int = Field(ge=1)
    s_star: Optional[int] = Field(default=None, ge=1)  # required for csv data


class OptimizerSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    T: int = Field(default=50, ge=1)
    eta: Optional[float] = Field(default=None, gt=0)  # None -> 1 / (4 L_s)
    L_s: Optional[float] = Field(default=None, gt=0)
    mu_s: Optional[float] = Field(default=None, gt=0)
    alpha_check: Optional[float] = Field(default=None, gt=0, lt=1)
    r_effective: Optional[float] = Field(default=None, gt=0)
    profile_supports: int = Field(default=50, ge=1)
    init_support: List[int] = []  # 1-based; Exploitation's S_0 when running alone

    @field_validator("init_support", mode="before")
    @classmethod
    def _split_indices(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.replace(",", " ").split()]
        return value


class HybridSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    K: int = Field(default=10, ge=1)
    T_minus: int = Field(default=3, ge=1)
    T_k: Optional[int] = Field(default=None, ge=1)
    c_T: float = Field(default=1.0, gt=0)


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[Path] = None  # None -> OUTPUT_ROOT/<config hash>
    log_y: bool = True


class ExperimentConfig(BaseModel):
    """Fully-resolved experiment description"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentSection = ExperimentSection()
    data: DataSection = DataSection()
    budget: BudgetSection
    optimizer: OptimizerSection = OptimizerSection()
    schedule: BatchSchedule = BatchSchedule()
    exploit_schedule: BatchSchedule = BatchSchedule()
    hybrid: HybridSection = HybridSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _check_budget_source(self) -> "ExperimentConfig":
        if self.data.source is DataSource.CSV and self.budget.s_star is None:
            raise ValueError("csv experiments must set budget.s_star")
        if (
            self.experiment.algorithm is Algorithm.EXPLOITATION
            and not self.optimizer.init_support
        ):
            raise ValueError("exploitation runs need optimizer.init_support")
        return self
