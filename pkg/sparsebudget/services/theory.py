"""
Closed-form schedules and diagnostics from the convergence analysis.

Hidden O/Theta constants are exposed as c_B (batch sizes) and c_T (inner
loop length). Logs are natural logs.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from sparsebudget.core.errors import ConfigurationError, DataError, InvalidArgument
from sparsebudget.schemas.budget import Budget, SmoothnessProfile
from sparsebudget.schemas.metrics import (
    ConstraintCheck,
    ConstraintReport,
    ContractionDiagnostics,
)
from sparsebudget.schemas.schedules import BatchSchedule, ScheduleKind
from sparsebudget.services.data_env import ProblemInstance

logger = logging.getLogger(__name__)


def _finite_r(profile: SmoothnessProfile) -> float:
    r = profile.r_bound
    if not math.isfinite(r):
        raise ConfigurationError(
            "R_inf is infinite (Gaussian features): set r_effective to an effective bound"
        )
    return r


def hybrid_stage_targets(
    k: int, Delta0: float, alpha_check: float, delta: float
) -> Tuple[float, float, float]:
    """(Delta_k^-, Delta_k, delta_k) for Hybrid round k"""
    if k < 1:
        raise InvalidArgument(f"Hybrid round k={k} must be >= 1")
    delta_minus = 0.5 * alpha_check * (1 - alpha_check) ** (k - 2) * Delta0
    delta_k = 0.5 * alpha_check * (1 - alpha_check) ** k * Delta0
    confidence = 3.0 * delta / (math.pi**2 * k**2)
    return delta_minus, delta_k, confidence


def theory_batch_size(
    profile: SmoothnessProfile,
    budget: Budget,
    kind: ScheduleKind,
    T: int,
    k: Optional[int] = None,
    Delta: Optional[float] = None,
    delta: float = 0.1,
    c_B: float = 1.0,
    sigma: float = 1.0,
) -> int:
    """Batch size of the Exploration or Exploitation convergence bound.

    With k given, Delta is read as the initial gap of a Hybrid run and replaced
    by the round-k target of the matching stage; delta becomes the round's share
    3 delta / (pi^2 k^2).
    """
    kind = ScheduleKind(kind)
    if kind not in (ScheduleKind.THEORY_EXPLORATION, ScheduleKind.THEORY_EXPLOITATION):
        raise InvalidArgument(f"{kind.value} is not a theory schedule")
    if T < 1 or not 0 < delta < 1 or c_B <= 0:
        raise InvalidArgument("need T >= 1, 0 < delta < 1 and c_B > 0")

    r = _finite_r(profile)
    kappa, alpha = profile.kappa_s, profile.alpha
    L, mu, s = profile.L_s, profile.mu_s, budget.s

    if k is not None:
        delta_minus, delta_k, delta = hybrid_stage_targets(k, Delta or 0.0, alpha, delta)
        if Delta is not None:
            Delta = delta_minus if kind is ScheduleKind.THEORY_EXPLORATION else delta_k

    if kind is ScheduleKind.THEORY_EXPLORATION:
        first = kappa**2 * r**4 / L**2 * s**2
    else:
        first = r**4 / mu**2 * T * s**2

    if sigma == 0:
        second = 0.0
    else:
        if Delta is None or Delta <= 0:
            raise ConfigurationError("noisy theory schedules need a positive target Delta")
        second = sigma**2 / Delta * r**2 / L * T * s / (1 - alpha) ** T

    log_factor = math.log(kappa * budget.d * T / delta)
    return max(1, math.ceil(c_B * log_factor * max(first, second)))


def hybrid_inner_length(profile: SmoothnessProfile, budget: Budget, c_T: float = 1.0) -> int:
    """Exploitation length T_k with Theta(kappa^2) instantiated as c_T * kappa^2"""
    ratio = budget.d / (c_T * profile.kappa_s**2 * budget.width)
    steps = math.log(max(ratio, 1.0)) / math.log(1.0 / (1.0 - profile.alpha))
    return max(1, math.ceil(steps))


def schedule_sizes(
    schedule: BatchSchedule,
    T: int,
    profile: Optional[SmoothnessProfile] = None,
    budget: Optional[Budget] = None,
    sigma: float = 1.0,
    Delta: Optional[float] = None,
    k: Optional[int] = None,
) -> List[int]:
    """Batch sizes B_1..B_T of a schedule"""
    if schedule.kind is ScheduleKind.CONSTANT:
        return [schedule.base] * T
    if schedule.kind is ScheduleKind.GEOMETRIC:
        return [math.ceil(schedule.base * schedule.ratio ** (t - 1)) for t in range(1, T + 1)]
    if profile is None or budget is None:
        raise ConfigurationError("theory schedules need a smoothness profile and a budget")
    size = theory_batch_size(
        profile,
        budget,
        schedule.kind,
        schedule.horizon or T,
        k=k,
        Delta=schedule.target if schedule.target is not None else Delta,
        delta=schedule.confidence,
        c_B=schedule.c_B,
        sigma=sigma,
    )
    return [size] * T


def _eta_bound(profile: SmoothnessProfile) -> float:
    return 1.0 / (2.0 * profile.L_s)


def sparsity_lower_bound(eta: float, budget: Budget, profile: SmoothnessProfile) -> float:
    """max{2(1/4 + eta L/2)/(1/4 - eta L/2) - 1, 64/(eta mu)^2 + 1} * s*"""
    half_step = eta * profile.L_s / 2.0
    if 0.25 - half_step <= 0:
        return math.inf
    first = 2.0 * (0.25 + half_step) / (0.25 - half_step) - 1.0
    second = 64.0 / (eta**2 * profile.mu_s**2) + 1.0
    return max(first, second) * budget.s_star


def batch_lower_bound(
    eta: float, s: int, budget: Budget, profile: SmoothnessProfile, delta_t: float
) -> float:
    """(4s/s*)(s+s*)^2 (5/2 + eta L) R^4 eta log(2d/delta_t) / (1/(4 eta) + L/2)"""
    r = profile.r_bound
    if not math.isfinite(r):
        return math.inf
    L, s_star = profile.L_s, budget.s_star
    return (
        4.0 * s / s_star * (s + s_star) ** 2
        * (2.5 + eta * L) * r**4 * eta * math.log(2.0 * budget.d / delta_t)
        / (1.0 / (4.0 * eta) + L / 2.0)
    )


def validate_parameters(
    eta: float,
    s: int,
    budget: Budget,
    profile: SmoothnessProfile,
    B_t: int,
    delta_t: float,
) -> ConstraintReport:
    """Check the three parameter-choice inequalities literally"""
    eta_bound = _eta_bound(profile)
    s_bound = sparsity_lower_bound(eta, budget, profile)
    b_bound = batch_lower_bound(eta, s, budget, profile, delta_t)
    checks = [
        ConstraintCheck(
            name="step_size",
            description="eta < 1/(2 L_s)",
            value=eta,
            bound=eta_bound,
            passed=eta < eta_bound,
            slack=eta_bound - eta,
        ),
        ConstraintCheck(
            name="sparsity",
            description="s >= max{2(1/4+eta L/2)/(1/4-eta L/2) - 1, 64/(eta mu)^2 + 1} s*",
            value=float(s),
            bound=s_bound,
            passed=s >= s_bound,
            slack=s - s_bound,
        ),
        ConstraintCheck(
            name="batch_size",
            description="B_t >= (4s/s*)(s+s*)^2 (5/2+eta L) R^4 eta log(2d/delta_t) / (1/(4eta)+L/2)",
            value=float(B_t),
            bound=b_bound,
            passed=B_t >= b_bound,
            slack=B_t - b_bound,
        ),
    ]
    report = ConstraintReport(checks=checks)
    for check in checks:
        status = "✅" if check.passed else "❌"
        logger.debug(f"{status} {check.name}: value={check.value:.6g} bound={check.bound:.6g}")
    return report


def contraction_diagnostics(
    eta: float,
    s: int,
    budget: Budget,
    profile: SmoothnessProfile,
    B_t: int,
    sigma: float,
    delta_t: float,
) -> ContractionDiagnostics:
    """Per-step contraction alpha and additive term c_t of one Exploration update.

    per_step_noise is the c_t * R_inf^2 / B_t term the expected gap actually
    grows by; it is None when R_inf is unbounded.
    """
    L, mu, s_star = profile.L_s, profile.mu_s, budget.s_star
    alpha = 0.5 * (1.0 - 2.0 * s_star / (s + s_star)) * mu * (0.25 + eta * L / 2.0) * eta
    c_t = 4.0 * sigma**2 * s * (2.5 + eta * L) * eta * math.log(budget.d / delta_t)
    r = profile.r_bound
    per_step_noise = c_t * r**2 / B_t if math.isfinite(r) else None
    if sigma == 0:
        per_step_noise = 0.0
    return ContractionDiagnostics(alpha=alpha, c_t=c_t, per_step_noise=per_step_noise)


def proof_batch_size(
    eta: float,
    s: int,
    budget: Budget,
    profile: SmoothnessProfile,
    sigma: float,
    Delta: float,
    T: int,
    delta_t: float,
) -> int:
    """Constant-free batch size used in the Exploration proof"""
    first = batch_lower_bound(eta, s, budget, profile, delta_t)
    if sigma == 0:
        second = 0.0
    else:
        r = _finite_r(profile)
        second = (
            4.0 * sigma**2 * s * (2.5 + eta * profile.L_s) * r**2 * eta
            * math.log(budget.d / delta_t) / Delta * T / (1.0 - profile.alpha) ** T
        )
    bound = max(first, second)
    if not math.isfinite(bound):
        raise ConfigurationError("proof batch size is unbounded for infinite R_inf")
    return max(1, math.ceil(bound))


def support_identification_round(
    profile: SmoothnessProfile, Delta0: float, r_min: float
) -> int:
    """Round after which Hybrid's support contains supp(theta*) w.h.p."""
    ratio = 4.0 * Delta0 / (r_min**2 * profile.mu_s)
    if ratio <= 1.0:
        return 0
    return math.ceil(math.log(ratio) / math.log(1.0 / (1.0 - profile.alpha)))


def hybrid_outer_rounds(
    profile: SmoothnessProfile,
    budget: Budget,
    Delta0: float,
    epsilon: float,
    r_min: float,
) -> int:
    """Number of Hybrid rounds K sufficient for excess risk epsilon"""
    alpha, mu = profile.alpha, profile.mu_s
    boosted = math.log(Delta0 * budget.width / (r_min**2 * mu * alpha**2 * budget.d * epsilon))
    plain = math.log(Delta0 / epsilon)
    rounds = math.ceil(min(boosted, plain) / math.log(1.0 / (1.0 - alpha)))
    return max(1, rounds)


def sample_complexity(
    profile: SmoothnessProfile,
    budget: Budget,
    sigma: float,
    epsilon: float,
    algorithm: str = "exploration",
    r_min: Optional[float] = None,
) -> float:
    """Observed-sample complexity of Exploration or Hybrid, without log factors"""
    r = _finite_r(profile)
    kappa, mu = profile.kappa_s, profile.mu_s
    d, s, width = budget.d, budget.s, budget.width
    explore_bias = kappa * r**4 / mu**2 * d * s**2 / width
    if algorithm == "exploration":
        return explore_bias + kappa * r**2 / mu * d * s / width * sigma**2 / epsilon
    if algorithm == "hybrid":
        if r_min is None:
            raise InvalidArgument("hybrid sample complexity needs r_min")
        support_term = min(kappa**2 * s / (mu * r_min**2), d * s / width)
        return (
            kappa**3 * r**4 / mu**2 * s**2
            + explore_bias
            + kappa * r**2 / mu * support_term * sigma**2 / epsilon
        )
    raise InvalidArgument(f"no sample complexity for algorithm {algorithm!r}")


def population_loss(theta: np.ndarray, inst: ProblemInstance) -> float:
    """L(theta) = c ||theta - theta*||^2 + sigma^2 for Sigma = c I"""
    if not inst.has_known_covariance:
        raise DataError("population loss needs a known covariance and theta*")
    diff = np.asarray(theta) - inst.theta_star
    return float(inst.covariance_scale * (diff @ diff) + (inst.sigma or 0.0) ** 2)


def population_gradient(theta: np.ndarray, inst: ProblemInstance) -> np.ndarray:
    """2 Sigma (theta - theta*)"""
    if not inst.has_known_covariance:
        raise DataError("population gradient needs a known covariance and theta*")
    return 2.0 * inst.covariance_scale * (np.asarray(theta) - inst.theta_star)


def synthetic_profile(
    inst: ProblemInstance,
    alpha_check: Optional[float] = None,
    r_effective: Optional[float] = None,
) -> SmoothnessProfile:
    """Sigma = c I gives L_s = mu_s = c exactly"""
    if inst.covariance_scale is None:
        raise DataError("instance covariance is unknown; estimate the profile instead")
    c = inst.covariance_scale
    return SmoothnessProfile(
        L_s=c, mu_s=c, r_inf=inst.r_inf, alpha_check=alpha_check, r_effective=r_effective
    )


def estimate_smoothness_profile(
    X: np.ndarray,
    s: int,
    rng: np.random.Generator,
    n_supports: int = 50,
    r_inf: Optional[float] = None,
    alpha_check: Optional[float] = None,
    r_effective: Optional[float] = None,
) -> SmoothnessProfile:
    """Extreme eigenvalues of the Gram matrix over random size-2s supports.

    These are estimates, not guarantees: the true constants range over all supports.
    """
    n, d = X.shape
    gram = X.T @ X / n
    size = min(2 * s, d)
    top, bottom = 0.0, math.inf
    for _ in range(n_supports):
        chosen = np.sort(rng.choice(d, size=size, replace=False))
        eigenvalues = np.linalg.eigvalsh(gram[np.ix_(chosen, chosen)])
        top = max(top, float(eigenvalues[-1]))
        bottom = min(bottom, float(eigenvalues[0]))
    bottom = max(bottom, 1e-12)
    top = max(top, bottom)
    if r_inf is None:
        r_inf = float(np.max(np.abs(X))) if X.size else math.inf
    logger.info(f"📊 Estimated L_s={top:.4g}, mu_s={bottom:.4g} over {n_supports} supports")
    return SmoothnessProfile(
        L_s=top, mu_s=bottom, r_inf=r_inf, alpha_check=alpha_check,
        r_effective=r_effective, estimated=True,
    )
