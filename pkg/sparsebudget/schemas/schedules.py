"""
Batch schedules and Hybrid configuration
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from sparsebudget.schemas.budget import Budget, SmoothnessProfile


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    GEOMETRIC = "geometric"
    THEORY_EXPLORATION = "theory-exploration"
    THEORY_EXPLOITATION = "theory-exploitation"


class BatchSchedule(BaseModel):
    """Mini-batch sizes B_t, either practical or derived from the convergence bounds"""

    model_config = ConfigDict(frozen=True)

    kind: ScheduleKind = ScheduleKind.CONSTANT
    base: int = Field(default=100, ge=1)  # B_0 for constant/geometric
    ratio: float = Field(default=1.1, ge=1.0)  # geometric growth
    c_B: float = Field(default=1.0, gt=0)  # hidden constant of the theory sizes
    horizon: Optional[int] = Field(default=None, ge=1)  # T used inside the formulas
    stage: int = Field(default=1, ge=1)  # Hybrid round k
    target: Optional[float] = Field(default=None, gt=0)  # Delta
    confidence: float = Field(default=0.1, gt=0, lt=1)  # delta

    @property
    def is_theory(self) -> bool:
        return self.kind in (
            ScheduleKind.THEORY_EXPLORATION,
            ScheduleKind.THEORY_EXPLOITATION,
        )


class HybridConfig(BaseModel):
    """Arguments of the Exploration/Exploitation alternation"""

    model_config = ConfigDict(frozen=True)

    K: int = Field(ge=1)
    T_minus: int = Field(default=3, ge=1)
    T_k: Optional[int] = Field(default=None, ge=1)  # None -> hybrid_inner_length
    explore_schedule: BatchSchedule = BatchSchedule()
    exploit_schedule: BatchSchedule = BatchSchedule()
    eta: float = Field(gt=0)
    budget: Budget
    profile: SmoothnessProfile
    c_T: float = Field(default=1.0, gt=0)
