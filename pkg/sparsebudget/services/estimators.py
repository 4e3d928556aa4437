"""
Gradient estimators under partial observation.

Both estimators draw fresh examples from the trial environment, observe only
what the budget allows and return the batch-averaged squared-loss gradient.
Draw order is block-major then batch, so a seed replays bit-for-bit.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from sparsebudget.core.errors import ConfigurationError, InvalidArgument
from sparsebudget.services.data_env import BlockPartition, SamplingEnvironment
from sparsebudget.services.sparse_core import DenseVector, SupportSet, support


@dataclass(frozen=True)
class GradientEstimate:
    g: DenseVector
    valid_support: SupportSet
    samples_used: int
    attribute_reads: int
    example_ids: Tuple[np.ndarray, ...] = ()  # one id array per block / batch


def loss_derivative(a, y):
    """d/da (a - y)^2"""
    return 2.0 * (a - y)


def _check_batch(B: int) -> None:
    if B < 1:
        raise InvalidArgument(f"batch size B={B} must be at least 1")


def exploration_gradient(
    theta: DenseVector,
    part: BlockPartition,
    B: int,
    env: SamplingEnvironment,
) -> GradientEstimate:
    """Block-concatenated estimator: block J_i is averaged over its own B examples.

    The sparsity level is implied by the partition: s = s' - width.
    """
    _check_batch(B)
    s = env.ledger.s_prime - part.width
    if part.d != env.d or s < 1:
        raise ConfigurationError(
            f"partition (d={part.d}, width={part.width}) does not fit "
            f"d={env.d}, s'={env.ledger.s_prime}"
        )
    current = support(theta)
    if current.size > s:
        raise InvalidArgument(f"theta has {current.size} nonzeros, more than s={s}")

    examples_before, reads_before = env.ledger.totals()
    theta_s = np.asarray(theta)[current]
    g = np.zeros(part.d)
    used_ids = []
    for block in part.blocks:
        batch = env.draw(B)
        attrs = np.union1d(block, current)
        observed = env.observe(batch, attrs)
        on_support = np.searchsorted(attrs, current)
        on_block = np.searchsorted(attrs, block)
        residual = loss_derivative(observed[:, on_support] @ theta_s, batch.y)
        g[block] = residual @ observed[:, on_block] / B
        used_ids.append(batch.example_ids)

    examples_after, reads_after = env.ledger.totals()
    g.flags.writeable = False
    return GradientEstimate(
        g=g,
        valid_support=np.arange(part.d),
        samples_used=examples_after - examples_before,
        attribute_reads=reads_after - reads_before,
        example_ids=tuple(used_ids),
    )


def exploitation_gradient(
    theta: DenseVector,
    S0: SupportSet,
    B: int,
    env: SamplingEnvironment,
) -> GradientEstimate:
    """Support-restricted estimator: observes only S0, zero outside it"""
    _check_batch(B)
    S0 = np.asarray(S0, dtype=np.intp)
    if S0.size > env.ledger.s_prime:
        raise ConfigurationError(
            f"|S0|={S0.size} cannot be observed within s'={env.ledger.s_prime}"
        )
    if np.setdiff1d(support(theta), S0).size:
        raise InvalidArgument("supp(theta) is not contained in S0")

    examples_before, reads_before = env.ledger.totals()
    batch = env.draw(B)
    observed = env.observe(batch, S0)
    residual = loss_derivative(observed @ np.asarray(theta)[S0], batch.y)
    g = np.zeros(env.d)
    g[S0] = residual @ observed / B

    examples_after, reads_after = env.ledger.totals()
    g.flags.writeable = False
    return GradientEstimate(
        g=g,
        valid_support=S0,
        samples_used=examples_after - examples_before,
        attribute_reads=reads_after - reads_before,
        example_ids=(batch.example_ids,),
    )


def naive_gradient(
    theta: DenseVector,
    width: int,
    env: SamplingEnvironment,
) -> GradientEstimate:
    """Single-sample estimator on a random attribute subset, scaled by d / (s' - s)"""
    d = env.d
    current = support(theta)
    examples_before, reads_before = env.ledger.totals()
    batch = env.draw(1)
    sampled = np.sort(env.rng.choice(d, size=width, replace=False))
    attrs = np.union1d(sampled, current)
    observed = env.observe(batch, attrs)
    prediction = observed[0, np.searchsorted(attrs, current)] @ np.asarray(theta)[current]
    g = np.zeros(d)
    g[sampled] = loss_derivative(prediction, batch.y[0]) * (d / width) * observed[
        0, np.searchsorted(attrs, sampled)
    ]

    examples_after, reads_after = env.ledger.totals()
    g.flags.writeable = False
    return GradientEstimate(
        g=g,
        valid_support=sampled,
        samples_used=examples_after - examples_before,
        attribute_reads=reads_after - reads_before,
        example_ids=(batch.example_ids,),
    )
