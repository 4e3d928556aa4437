"""
Dense parameter vectors, support sets and the hard-thresholding projection.

Vectors are float64 numpy arrays, supports are ascending 0-based index arrays.
Callers crossing an external boundary convert with `one_based`.
"""
from typing import Mapping

import numpy as np

from sparsebudget.core.errors import DimensionMismatch, InvalidArgument

DenseVector = np.ndarray
SupportSet = np.ndarray


def as_dense_vector(values, d: int | None = None) -> DenseVector:
    """Validated read-only float64 copy of `values`"""
    vector = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if d is not None and vector.shape[0] != d:
        raise DimensionMismatch(f"expected length {d}, got {vector.shape[0]}")
    if not np.all(np.isfinite(vector)):
        raise InvalidArgument("vector contains NaN or Inf entries")
    vector.flags.writeable = False
    return vector


def as_support(indices, d: int) -> SupportSet:
    """Validated ascending support from any iterable of 0-based indices"""
    support_set = np.unique(np.asarray(list(indices), dtype=np.intp))
    if support_set.size and (support_set[0] < 0 or support_set[-1] >= d):
        raise InvalidArgument(f"support index out of range [0, {d})")
    support_set.flags.writeable = False
    return support_set


def one_based(support_set: SupportSet) -> list[int]:
    return [int(j) + 1 for j in support_set]


def hard_threshold(v: DenseVector, s: int) -> DenseVector:
    """Keep the s largest-magnitude entries of v and zero the rest.

    Equal magnitudes are resolved towards the smaller index. Selection goes
    through np.partition, so only the s-th order statistic is located.
    """
    v = np.asarray(v, dtype=np.float64)
    d = v.shape[0]
    if not 1 <= s <= d:
        raise InvalidArgument(f"sparsity level s={s} outside [1, {d}]")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("cannot threshold a vector with NaN or Inf entries")

    magnitudes = np.abs(v)
    if s == d:
        return as_dense_vector(v)
    cutoff = np.partition(magnitudes, d - s)[d - s]

    keep = magnitudes > cutoff
    room = s - int(np.count_nonzero(keep))
    if room > 0:
        tied = np.flatnonzero(magnitudes == cutoff)[:room]
        keep[tied] = True

    result = np.where(keep, v, 0.0)
    result.flags.writeable = False
    return result


def support(v: DenseVector) -> SupportSet:
    """Indices of the nonzero entries, ascending"""
    support_set = np.flatnonzero(np.asarray(v))
    support_set.flags.writeable = False
    return support_set


def restrict(v: DenseVector, support_set: SupportSet) -> DenseVector:
    """v on support_set, zero elsewhere"""
    v = np.asarray(v, dtype=np.float64)
    result = np.zeros_like(v)
    result[support_set] = v[support_set]
    return result


def restricted_dot(
    v: DenseVector, x_partial: Mapping[int, float], support_set: SupportSet
) -> float:
    """Sum over j in S of v[j] * x[j], reading x only through the partial map"""
    total = 0.0
    for j in support_set:
        j = int(j)
        if j not in x_partial:
            raise InvalidArgument(f"coordinate {j + 1} was not observed")
        total += float(v[j]) * float(x_partial[j])
    return total


def sq_distance(a: DenseVector, b: DenseVector) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"lengths {a.shape[0]} and {b.shape[0]} differ")
    diff = a - b
    return float(diff @ diff)
