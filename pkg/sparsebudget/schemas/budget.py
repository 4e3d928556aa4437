"""
Sparsity/observation budget and smoothness constants
"""
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Budget(BaseModel):
    """Sparsity levels and the per-example attribute budget"""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)  # ambient dimension
    s_star: int = Field(ge=1)  # true sparsity s*
    s: int = Field(ge=1)  # algorithm sparsity level
    s_prime: int = Field(ge=1)  # attributes observable per example s'

    @model_validator(mode="after")
    def _check_ordering(self) -> "Budget":
        if not (self.s_star <= self.s < self.s_prime <= self.d):
            raise ValueError(
                f"need 1 <= s*={self.s_star} <= s={self.s} < s'={self.s_prime} <= d={self.d}"
            )
        return self

    @property
    def width(self) -> int:
        """Exploration block width s' - s"""
        return self.s_prime - self.s

    @property
    def n_blocks(self) -> int:
        return math.ceil(self.d / self.width)


class SmoothnessProfile(BaseModel):
    """Restricted smoothness / strong convexity constants of the objective"""

    model_config = ConfigDict(frozen=True)

    L_s: float = Field(gt=0)
    mu_s: float = Field(gt=0)
    r_inf: float = Field(gt=0)  # may be math.inf for Gaussian features
    alpha_check: Optional[float] = None  # defaults to 1 / (32 kappa_s)
    r_effective: Optional[float] = Field(default=None, gt=0)
    estimated: bool = False  # True when L_s / mu_s came from Gram samples

    @model_validator(mode="after")
    def _check_constants(self) -> "SmoothnessProfile":
        if self.mu_s > self.L_s:
            raise ValueError(f"mu_s={self.mu_s} exceeds L_s={self.L_s}")
        if self.alpha_check is not None and not 0 < self.alpha_check < 1:
            raise ValueError(f"alpha_check={self.alpha_check} outside (0, 1)")
        return self

    @property
    def kappa_s(self) -> float:
        return self.L_s / self.mu_s

    @property
    def alpha(self) -> float:
        """Contraction rate alpha-check"""
        if self.alpha_check is not None:
            return self.alpha_check
        return 1.0 / (32.0 * self.kappa_s)

    @property
    def r_bound(self) -> float:
        """R used by the batch-size formulas: the override if given, else R_inf"""
        return self.r_effective if self.r_effective is not None else self.r_inf
