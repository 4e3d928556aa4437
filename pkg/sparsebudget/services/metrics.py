"""
Error and recovery metrics.

Test-set evaluation observes only supp(theta) of each test row through its own
ledger, so prediction honours the attribute budget too.
"""
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from sparsebudget.core.errors import InvalidArgument
from sparsebudget.schemas.metrics import MetricSnapshot, TraceRecord
from sparsebudget.services.data_env import (
    ExampleBatch,
    ObservationLedger,
    ProblemInstance,
    observe_batch,
)
from sparsebudget.services.sparse_core import sq_distance, support


def test_mse(
    theta: np.ndarray,
    test_X: np.ndarray,
    test_y: np.ndarray,
    s_prime: int,
    ledger: Optional[ObservationLedger] = None,
) -> float:
    """(1/m) sum (theta^T x - y)^2, reading only supp(theta) of each row"""
    if test_y is None or len(test_y) == 0:
        raise InvalidArgument("test set is empty")
    ledger = ledger if ledger is not None else ObservationLedger(s_prime)
    current = support(theta)
    rows = ExampleBatch(y=np.asarray(test_y), features=np.asarray(test_X))
    observed = observe_batch(rows, current, ledger)
    residual = observed @ np.asarray(theta)[current] - rows.y
    return float(residual @ residual / len(residual))


def exact_excess_risk(theta: np.ndarray, inst: ProblemInstance) -> Optional[float]:
    """(theta - theta*)^T Sigma (theta - theta*); None when Sigma is unknown"""
    if not inst.has_known_covariance:
        return None
    return float(inst.covariance_scale * sq_distance(theta, inst.theta_star))


def support_scores(theta: np.ndarray, theta_star: np.ndarray) -> Tuple[float, float, float]:
    """Precision, recall and F1 of supp(theta) against supp(theta*)"""
    predicted = set(support(theta).tolist())
    actual = set(support(theta_star).tolist())
    hits = len(predicted & actual)
    if predicted:
        precision = hits / len(predicted)
    else:
        precision = 1.0 if not actual else 0.0
    if actual:
        recall = hits / len(actual)
    else:
        recall = 1.0 if not predicted else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def r_min(theta_star: np.ndarray) -> float:
    """Smallest nonzero magnitude of theta*"""
    magnitudes = np.abs(np.asarray(theta_star))
    nonzero = magnitudes[magnitudes > 0]
    if nonzero.size == 0:
        raise InvalidArgument("r_min of the zero vector is undefined")
    return float(nonzero.min())


def snapshot(theta: np.ndarray, inst: ProblemInstance, s_prime: int) -> MetricSnapshot:
    """All metrics available for this instance"""
    mse = test_mse(theta, inst.test_X, inst.test_y, s_prime) if inst.has_test_set else 0.0
    if inst.theta_star is None:
        return MetricSnapshot(test_mse=mse)
    precision, recall, f1 = support_scores(theta, inst.theta_star)
    return MetricSnapshot(
        test_mse=mse,
        excess_risk=exact_excess_risk(theta, inst),
        support_precision=precision,
        support_recall=recall,
        support_f1=f1,
        l2_sq_error=sq_distance(theta, inst.theta_star),
    )


def _field(record: TraceRecord, field: str) -> Optional[float]:
    return getattr(record.metrics, field)


def value_at_examples(
    records: Sequence[TraceRecord], n_examples: int, field: str = "excess_risk"
) -> Optional[float]:
    """Last observation at or before n_examples cumulative examples"""
    value = None
    for record in records:
        if record.cum_examples > n_examples:
            break
        value = _field(record, field)
    return value


def samples_to_reach(
    records: Sequence[TraceRecord], epsilon: float, field: str = "excess_risk"
) -> Optional[int]:
    """Cumulative examples at the first snapshot with field <= epsilon"""
    for record in records:
        value = _field(record, field)
        if value is not None and value <= epsilon:
            return record.cum_examples
    return None


def log_linear_fit(
    records: Sequence[TraceRecord], field: str = "l2_sq_error"
) -> Tuple[float, float]:
    """Slope and R^2 of log(field) against update index"""
    points = [
        (record.update_index, math.log(value))
        for record in records
        if (value := _field(record, field)) is not None and value > 0
    ]
    if len(points) < 3:
        raise InvalidArgument("need at least three positive points to fit")
    t, log_value = np.asarray(points).T
    slope, intercept = np.polyfit(t, log_value, 1)
    fitted = slope * t + intercept
    total = np.sum((log_value - log_value.mean()) ** 2)
    r_squared = 1.0 - np.sum((log_value - fitted) ** 2) / total if total > 0 else 1.0
    return float(slope), float(r_squared)
