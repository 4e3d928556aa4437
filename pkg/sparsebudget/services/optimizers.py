"""
Training loops: Exploration (block-estimated IHT), Exploitation (support-fixed
SGD), Hybrid (their alternation) and the naive single-sample baseline.

Every loop draws through the trial's SamplingEnvironment and reports to a
TraceRecorder, which reads the cumulative counters straight off the ledger.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from sparsebudget.core.config import settings
from sparsebudget.core.errors import ConfigurationError, InvalidArgument, InvariantViolation
from sparsebudget.schemas.budget import Budget, SmoothnessProfile
from sparsebudget.schemas.metrics import MetricSnapshot, Stage, TraceRecord
from sparsebudget.schemas.schedules import BatchSchedule, HybridConfig
from sparsebudget.services.data_env import SamplingEnvironment, make_block_partition
from sparsebudget.services.estimators import (
    exploitation_gradient,
    exploration_gradient,
    naive_gradient,
)
from sparsebudget.services.metrics import exact_excess_risk, snapshot, test_mse
from sparsebudget.services.sparse_core import (
    DenseVector,
    as_dense_vector,
    as_support,
    hard_threshold,
    support,
)
from sparsebudget.services.theory import (
    contraction_diagnostics,
    hybrid_inner_length,
    schedule_sizes,
)

logger = logging.getLogger(__name__)

Evaluator = Callable[[DenseVector], MetricSnapshot]


@dataclass
class RunTrace:
    records: List[TraceRecord]
    theta_final: DenseVector
    metadata: Dict[str, Any] = field(default_factory=dict)


class TraceRecorder:
    """Writes a TraceRecord at update 0, every `cadence` updates and at each stage end"""

    def __init__(
        self,
        evaluator: Optional[Evaluator] = None,
        cadence: int = 1,
        trial: int = 0,
        record_wall_clock: Optional[bool] = None,
    ):
        if cadence < 1:
            raise InvalidArgument(f"metric cadence {cadence} must be at least 1")
        self.evaluator = evaluator
        self.cadence = cadence
        self.trial = trial
        self.record_wall_clock = (
            settings.RECORD_WALL_CLOCK if record_wall_clock is None else record_wall_clock
        )
        self.records: List[TraceRecord] = []
        self.update_index = 0
        self._last_recorded = -1
        self._started = time.perf_counter()

    def _snapshot(self, theta: DenseVector, env: SamplingEnvironment, stage: Stage) -> None:
        evaluator = self.evaluator or (
            lambda value: snapshot(value, env.instance, env.ledger.s_prime)
        )
        examples, reads = env.ledger.totals()
        elapsed = (time.perf_counter() - self._started) * 1000 if self.record_wall_clock else 0.0
        self.records.append(
            TraceRecord(
                trial=self.trial,
                update_index=self.update_index,
                stage=stage,
                cum_examples=examples,
                cum_attribute_reads=reads,
                nnz_theta=int(np.count_nonzero(theta)),
                metrics=evaluator(theta),
                elapsed_ms=elapsed,
            )
        )
        self._last_recorded = self.update_index

    def begin(self, theta: DenseVector, env: SamplingEnvironment, stage: Stage) -> None:
        if not self.records:
            self._snapshot(theta, env, stage)

    def step(self, theta: DenseVector, env: SamplingEnvironment, stage: Stage) -> None:
        self.update_index += 1
        if self.update_index % self.cadence == 0:
            self._snapshot(theta, env, stage)

    def close(self, theta: DenseVector, env: SamplingEnvironment, stage: Stage) -> None:
        if self._last_recorded != self.update_index:
            self._snapshot(theta, env, stage)


def initial_gap(theta: DenseVector, env: SamplingEnvironment) -> float:
    """Excess risk at theta when the covariance is known, else its test MSE"""
    gap = exact_excess_risk(theta, env.instance)
    if gap is None:
        if not env.instance.has_test_set:
            raise ConfigurationError("no target Delta: set schedule.target explicitly")
        gap = test_mse(theta, env.instance.test_X, env.instance.test_y, env.ledger.s_prime)
    if gap <= 0:
        raise ConfigurationError("initial gap is zero: set schedule.target explicitly")
    return gap


def _noise_scale(env: SamplingEnvironment, sigma: Optional[float]) -> float:
    if sigma is not None:
        return sigma
    return env.instance.sigma if env.instance.sigma is not None else 1.0


def _batch_sizes(
    schedule: BatchSchedule,
    T: int,
    env: SamplingEnvironment,
    theta: DenseVector,
    profile: Optional[SmoothnessProfile],
    budget: Optional[Budget],
    sigma: float,
    Delta: Optional[float],
    k: Optional[int],
) -> List[int]:
    if schedule.is_theory and sigma > 0 and Delta is None and schedule.target is None:
        Delta = initial_gap(theta, env)
    sizes = schedule_sizes(schedule, T, profile, budget, sigma=sigma, Delta=Delta, k=k)
    if min(sizes) < 1:
        raise ConfigurationError(f"schedule {schedule.kind.value} emitted a batch size below 1")
    return sizes


def _check_env(budget: Budget, env: SamplingEnvironment) -> None:
    if env.d != budget.d or env.ledger.s_prime != budget.s_prime:
        raise ConfigurationError(
            f"environment (d={env.d}, s'={env.ledger.s_prime}) does not match "
            f"budget (d={budget.d}, s'={budget.s_prime})"
        )


def run_exploration(
    theta0,
    eta: float,
    budget: Budget,
    schedule: BatchSchedule,
    T: int,
    env: SamplingEnvironment,
    recorder: Optional[TraceRecorder] = None,
    profile: Optional[SmoothnessProfile] = None,
    sigma: Optional[float] = None,
    Delta: Optional[float] = None,
    k: Optional[int] = None,
    stage: Stage = Stage.NONE,
) -> Tuple[DenseVector, RunTrace]:
    """T thresholded steps theta_t = H_s(theta_{t-1} - eta g_t) from H_s(theta0)"""
    if eta <= 0 or T < 1:
        raise InvalidArgument(f"need eta > 0 and T >= 1, got eta={eta}, T={T}")
    _check_env(budget, env)
    recorder = recorder or TraceRecorder()
    sigma = _noise_scale(env, sigma)

    theta = hard_threshold(as_dense_vector(theta0, budget.d), budget.s)
    partition = make_block_partition(budget.d, budget.width)
    sizes = _batch_sizes(schedule, T, env, theta, profile, budget, sigma, Delta, k)
    recorder.begin(theta, env, stage)

    for B in sizes:
        estimate = exploration_gradient(theta, partition, B, env)
        theta = hard_threshold(theta - eta * estimate.g, budget.s)
        if np.count_nonzero(theta) > budget.s:
            raise InvariantViolation(f"iterate has {np.count_nonzero(theta)} nonzeros, s={budget.s}")
        recorder.step(theta, env, stage)
    recorder.close(theta, env, stage)

    metadata: Dict[str, Any] = {"algorithm": "exploration", "eta": eta, "batch_sizes": sizes}
    if profile is not None:
        diagnostics = contraction_diagnostics(
            eta, budget.s, budget, profile, sizes[0], sigma, schedule.confidence / (2 * T)
        )
        metadata["contraction"] = diagnostics.model_dump()
    return theta, RunTrace(records=recorder.records, theta_final=theta, metadata=metadata)


def run_exploitation(
    theta0,
    eta: float,
    schedule: BatchSchedule,
    T: int,
    env: SamplingEnvironment,
    support0=None,
    recorder: Optional[TraceRecorder] = None,
    profile: Optional[SmoothnessProfile] = None,
    budget: Optional[Budget] = None,
    sigma: Optional[float] = None,
    Delta: Optional[float] = None,
    k: Optional[int] = None,
    stage: Stage = Stage.NONE,
) -> Tuple[DenseVector, RunTrace]:
    """T plain steps confined to S0 = supp(theta0), or to support0 when given"""
    if eta <= 0 or T < 1:
        raise InvalidArgument(f"need eta > 0 and T >= 1, got eta={eta}, T={T}")
    recorder = recorder or TraceRecorder()
    sigma = _noise_scale(env, sigma)

    theta = as_dense_vector(theta0, env.d)
    S0 = support(theta) if support0 is None else as_support(support0, env.d)
    if S0.size > env.ledger.s_prime:
        raise ConfigurationError(
            f"|S0|={S0.size} exceeds the attribute budget s'={env.ledger.s_prime}"
        )
    if np.setdiff1d(support(theta), S0).size:
        raise InvalidArgument("supp(theta0) is not contained in the given support")
    sizes = _batch_sizes(schedule, T, env, theta, profile, budget, sigma, Delta, k)
    recorder.begin(theta, env, stage)

    for B in sizes:
        estimate = exploitation_gradient(theta, S0, B, env)
        theta = theta - eta * estimate.g
        theta.flags.writeable = False
        if np.setdiff1d(support(theta), S0).size:
            raise InvariantViolation("iterate left the Exploitation support S0")
        recorder.step(theta, env, stage)
    recorder.close(theta, env, stage)

    metadata = {"algorithm": "exploitation", "eta": eta, "batch_sizes": sizes,
                "support0": [int(j) + 1 for j in S0]}
    return theta, RunTrace(records=recorder.records, theta_final=theta, metadata=metadata)


def run_hybrid(
    theta0,
    config: HybridConfig,
    env: SamplingEnvironment,
    recorder: Optional[TraceRecorder] = None,
    sigma: Optional[float] = None,
    Delta0: Optional[float] = None,
) -> Tuple[DenseVector, RunTrace]:
    """K rounds of T_minus Exploration updates followed by T_k Exploitation updates"""
    budget, profile = config.budget, config.profile
    _check_env(budget, env)
    recorder = recorder or TraceRecorder()
    sigma = _noise_scale(env, sigma)
    T_k = config.T_k or hybrid_inner_length(profile, budget, config.c_T)

    theta = hard_threshold(as_dense_vector(theta0, budget.d), budget.s)
    needs_gap = config.explore_schedule.is_theory or config.exploit_schedule.is_theory
    if needs_gap and sigma > 0 and Delta0 is None:
        Delta0 = initial_gap(theta, env)
    logger.debug(f"🔍 Hybrid: K={config.K}, T_minus={config.T_minus}, T_k={T_k}")

    rounds = []
    explore_sizes, exploit_sizes = [], []
    for k in range(1, config.K + 1):
        theta, explored = run_exploration(
            theta, config.eta, budget, config.explore_schedule, config.T_minus, env,
            recorder=recorder, profile=profile, sigma=sigma, Delta=Delta0, k=k,
            stage=Stage.EXPLORE,
        )
        theta, exploited = run_exploitation(
            theta, config.eta, config.exploit_schedule, T_k, env,
            recorder=recorder, profile=profile, budget=budget, sigma=sigma, Delta=Delta0,
            k=k, stage=Stage.EXPLOIT,
        )
        explore_sizes.append(explored.metadata["batch_sizes"])
        exploit_sizes.append(exploited.metadata["batch_sizes"])
        rounds.append({
            "k": k,
            "update_index": recorder.update_index,
            "cum_examples": env.ledger.examples_drawn,
            "support": [int(j) + 1 for j in support(theta)],
        })

    metadata = {
        "algorithm": "hybrid",
        "eta": config.eta,
        "K": config.K,
        "T_minus": config.T_minus,
        "T_k": T_k,
        "explore_batch_sizes": explore_sizes,
        "exploit_batch_sizes": exploit_sizes,
        "rounds": rounds,
    }
    return theta, RunTrace(records=recorder.records, theta_final=theta, metadata=metadata)


def run_naive_exploration(
    theta0,
    eta: Union[float, Callable[[int], float]],
    budget: Budget,
    T: int,
    env: SamplingEnvironment,
    recorder: Optional[TraceRecorder] = None,
) -> Tuple[DenseVector, RunTrace]:
    """Single-sample IHT on random attribute subsets; a float eta decays as eta / sqrt(t)"""
    if T < 1:
        raise InvalidArgument(f"T={T} must be at least 1")
    if callable(eta):
        step_size = eta
    elif eta > 0:
        step_size = lambda t: eta / math.sqrt(t)  # noqa: E731
    else:
        raise InvalidArgument(f"step size eta={eta} must be positive")
    _check_env(budget, env)
    recorder = recorder or TraceRecorder()

    theta = hard_threshold(as_dense_vector(theta0, budget.d), budget.s)
    recorder.begin(theta, env, Stage.NONE)
    for t in range(1, T + 1):
        estimate = naive_gradient(theta, budget.width, env)
        theta = hard_threshold(theta - step_size(t) * estimate.g, budget.s)
        if np.count_nonzero(theta) > budget.s:
            raise InvariantViolation(f"iterate has {np.count_nonzero(theta)} nonzeros, s={budget.s}")
        recorder.step(theta, env, Stage.NONE)
    recorder.close(theta, env, Stage.NONE)

    metadata = {"algorithm": "naive", "eta": eta if not callable(eta) else "callable"}
    return theta, RunTrace(records=recorder.records, theta_final=theta, metadata=metadata)
