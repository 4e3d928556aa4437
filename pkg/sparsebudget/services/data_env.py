"""
The data world: generative model, finite datasets, block partitions and the
ledger-enforced observation API.

Labels are always visible. Features are only reachable through `observe` /
`observe_batch`, which charge the ObservationLedger and refuse to reveal more
than s' distinct attributes of any example.
"""
import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from sparsebudget.core.errors import BudgetExceeded, DataError, InvalidArgument
from sparsebudget.services.sparse_core import as_dense_vector

logger = logging.getLogger(__name__)


class FeatureLaw(str, Enum):
    STANDARD_NORMAL = "iid-standard-normal"
    UNIFORM = "iid-uniform"
    FINITE = "finite-dataset"


class UnboundedFeaturesWarning(UserWarning):
    """Gaussian features have no almost-sure bound R_inf"""


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; seeds base_seed + k give independent streams"""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class ProblemInstance:
    """Generative model y = theta*^T x + xi and/or a finite dataset"""

    d: int
    feature_law: FeatureLaw
    theta_star: Optional[np.ndarray] = None
    sigma: Optional[float] = None
    r_inf: float = math.inf
    covariance_scale: Optional[float] = None  # Sigma = c * I when known
    train_X: Optional[np.ndarray] = field(default=None, repr=False)
    train_y: Optional[np.ndarray] = field(default=None, repr=False)
    test_X: Optional[np.ndarray] = field(default=None, repr=False)
    test_y: Optional[np.ndarray] = field(default=None, repr=False)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.theta_star is not None:
            object.__setattr__(self, "theta_star", as_dense_vector(self.theta_star, self.d))
        if self.sigma is not None and self.sigma < 0:
            raise InvalidArgument(f"noise scale sigma={self.sigma} is negative")
        if self.feature_law is FeatureLaw.FINITE:
            if self.train_X is None or self.train_y is None:
                raise DataError("finite-dataset instance without training rows")
            if self.train_X.shape != (self.train_y.shape[0], self.d):
                raise DataError("training matrix does not match d / number of labels")
        if self.feature_law is FeatureLaw.UNIFORM and not math.isfinite(self.r_inf):
            raise InvalidArgument("uniform features need a finite R_inf")
        if self.feature_law is FeatureLaw.STANDARD_NORMAL:
            message = "Gaussian features violate the bounded-data assumption (R_inf = inf)"
            logger.warning(f"⚠️ {message}")
            warnings.warn(message, UnboundedFeaturesWarning, stacklevel=3)

    @property
    def s_star(self) -> Optional[int]:
        if self.theta_star is None:
            return None
        return int(np.count_nonzero(self.theta_star))

    @property
    def has_known_covariance(self) -> bool:
        return self.covariance_scale is not None and self.theta_star is not None

    @property
    def has_test_set(self) -> bool:
        return self.test_X is not None and self.test_y is not None and len(self.test_y) > 0


@dataclass(eq=False)
class ExampleBatch:
    """Drawn examples. `y` is public; `features` must only be read via observe."""

    y: np.ndarray
    features: np.ndarray = field(repr=False)
    first_id: Optional[int] = None
    owner: Optional["ObservationLedger"] = field(default=None, repr=False)
    revealed: np.ndarray = field(init=False, repr=False)
    read_counts: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.revealed = np.zeros(self.features.shape, dtype=bool)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def example_ids(self) -> np.ndarray:
        if self.first_id is None:
            raise InvalidArgument("batch has not been admitted to a ledger")
        return np.arange(self.first_id, self.first_id + len(self))


# A single drawn example is a batch of one
Example = ExampleBatch


class ObservationLedger:
    """Counts drawn examples and distinct attribute reads per example"""

    def __init__(self, s_prime: int):
        self.s_prime = s_prime
        self.examples_drawn = 0
        self.attribute_reads = 0
        # one int32 per drawn example, shared with the batch that owns the rows
        self._counts: list[np.ndarray] = []

    def admit(self, batch: ExampleBatch) -> None:
        if batch.owner is not None:
            raise InvalidArgument("batch already belongs to a ledger")
        batch.first_id = self.examples_drawn
        batch.owner = self
        batch.read_counts = np.zeros(len(batch), dtype=np.int32)
        self._counts.append(batch.read_counts)
        self.examples_drawn += len(batch)

    def charge(self, batch: ExampleBatch, new_counts: np.ndarray) -> None:
        """Record the distinct-attribute totals of each row; refuses anything over s'"""
        if batch.owner is not self:
            raise InvalidArgument("batch was drawn under a different ledger")
        current = batch.read_counts
        over = np.flatnonzero(new_counts > self.s_prime)
        if over.size:
            row = int(over[0])
            raise BudgetExceeded(batch.first_id + row, int(new_counts[row]), self.s_prime)
        self.attribute_reads += int(np.sum(new_counts - current))
        current[:] = new_counts

    def per_example_counts(self) -> np.ndarray:
        if not self._counts:
            return np.zeros(0, dtype=np.int32)
        return np.concatenate(self._counts)

    def totals(self) -> Tuple[int, int]:
        return self.examples_drawn, self.attribute_reads


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive coordinate blocks J_i of width s' - s covering [1, d]"""

    d: int
    width: int
    blocks: Tuple[np.ndarray, ...] = field(repr=False)

    @property
    def d_prime(self) -> int:
        return len(self.blocks)

    def bounds(self, i: int) -> Tuple[int, int]:
        """1-based inclusive bounds of block J_i (i is 1-based)"""
        block = self.blocks[i - 1]
        return int(block[0]) + 1, int(block[-1]) + 1


def make_block_partition(d: int, width: int) -> BlockPartition:
    if not 1 <= width <= d:
        raise InvalidArgument(f"block width {width} outside [1, {d}]")
    blocks = []
    for start in range(0, d, width):
        block = np.arange(start, min(start + width, d))
        block.flags.writeable = False
        blocks.append(block)
    return BlockPartition(d=d, width=width, blocks=tuple(blocks))


def draw_examples(inst: ProblemInstance, rng: np.random.Generator, n: int) -> ExampleBatch:
    """Draw n examples; the generator is consumed features first, then noise"""
    if inst.feature_law is FeatureLaw.FINITE:
        rows = rng.integers(0, inst.train_y.shape[0], size=n)
        return ExampleBatch(y=inst.train_y[rows].copy(), features=inst.train_X[rows])

    if inst.feature_law is FeatureLaw.STANDARD_NORMAL:
        features = rng.standard_normal((n, inst.d))
    else:
        features = rng.uniform(-inst.r_inf, inst.r_inf, size=(n, inst.d))
    noise = rng.standard_normal(n) * (inst.sigma or 0.0)
    y = features @ inst.theta_star + noise
    return ExampleBatch(y=y, features=features)


def draw_example(inst: ProblemInstance, rng: np.random.Generator) -> Example:
    return draw_examples(inst, rng, 1)


def observe_batch(batch: ExampleBatch, attrs, ledger: ObservationLedger) -> np.ndarray:
    """Reveal the requested columns of every row; returns an (n, |attrs|) matrix.

    Re-reading an already revealed attribute is free.
    """
    attrs = np.unique(np.asarray(attrs, dtype=np.intp))
    if batch.owner is None:
        ledger.admit(batch)
    if attrs.size == 0:
        return np.zeros((len(batch), 0))
    if attrs[0] < 0 or attrs[-1] >= batch.features.shape[1]:
        raise InvalidArgument("requested attribute outside [1, d]")

    fresh = ~batch.revealed[:, attrs]
    new_counts = np.count_nonzero(batch.revealed, axis=1) + np.count_nonzero(fresh, axis=1)
    ledger.charge(batch, new_counts)
    batch.revealed[:, attrs] = True
    return batch.features[:, attrs].copy()


def observe(ex: Example, attrs, ledger: ObservationLedger) -> Dict[int, float]:
    """Reveal attributes of a single example as an index -> value map"""
    if len(ex) != 1:
        raise InvalidArgument("observe expects a single example; use observe_batch")
    attrs = np.unique(np.asarray(list(attrs), dtype=np.intp))
    values = observe_batch(ex, attrs, ledger)
    return {int(j): float(values[0, k]) for k, j in enumerate(attrs)}


class SamplingEnvironment:
    """One trial's private instance view: generator plus observation ledger"""

    def __init__(
        self,
        instance: ProblemInstance,
        s_prime: int,
        seed: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        if rng is None and seed is None:
            raise InvalidArgument("SamplingEnvironment needs a seed or a generator")
        self.instance = instance
        self.rng = rng if rng is not None else make_rng(seed)
        self.ledger = ObservationLedger(s_prime)

    @property
    def d(self) -> int:
        return self.instance.d

    def draw(self, n: int) -> ExampleBatch:
        batch = draw_examples(self.instance, self.rng, n)
        self.ledger.admit(batch)
        return batch

    def observe(self, batch: ExampleBatch, attrs) -> np.ndarray:
        return observe_batch(batch, attrs, self.ledger)


def split_train_test(n: int, ratio: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded disjoint split of range(n) with round(ratio * n) training rows"""
    if n < 2:
        raise InvalidArgument(f"cannot split {n} rows")
    if not 0 < ratio < 1:
        raise InvalidArgument(f"split ratio {ratio} outside (0, 1)")
    n_train = min(max(int(math.floor(ratio * n + 0.5)), 1), n - 1)
    order = make_rng(seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def load_csv_dataset(
    path,
    target_column,
    standardize: bool = False,
    split_ratio: float = 0.9,
    split_seed: int = 0,
) -> ProblemInstance:
    """Read a numeric CSV with a header row into a finite-dataset instance"""
    path = Path(path)
    logger.info(f"📂 Loading dataset {path}")
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header:
                raise DataError(f"{path}: empty file or missing header row")
            rows = []
            for line_number, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: row {line_number} has {len(row)} cells, header has {len(header)}"
                    )
                parsed = []
                for column, cell in enumerate(row, start=1):
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: non-numeric cell {cell!r} at row {line_number}, column {column}"
                        ) from None
                rows.append(parsed)
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise DataError(f"{path}: {e}") from e

    target_index = _resolve_target(header, target_column)
    table = np.asarray(rows, dtype=np.float64)
    if table.shape[0] < 2:
        raise DataError(f"{path}: need at least two data rows")
    if not np.all(np.isfinite(table)):
        raise DataError(f"{path}: non-finite values in data")

    y = table[:, target_index]
    X = np.delete(table, target_index, axis=1)
    train, test = split_train_test(table.shape[0], split_ratio, split_seed)

    train_X, test_X = X[train], X[test]
    if standardize:
        mean = train_X.mean(axis=0)
        scale = train_X.std(axis=0)
        scale[scale == 0] = 1.0
        train_X = (train_X - mean) / scale
        test_X = (test_X - mean) / scale

    r_inf = float(np.max(np.abs(train_X))) if train_X.size else math.inf
    logger.info(f"✅ Loaded {len(train)} training / {len(test)} test rows, d={X.shape[1]}")
    return ProblemInstance(
        d=X.shape[1],
        feature_law=FeatureLaw.FINITE,
        r_inf=r_inf,
        train_X=train_X,
        train_y=y[train],
        test_X=test_X,
        test_y=y[test],
        metadata={
            "source": str(path),
            "target": header[target_index],
            "split_ratio": split_ratio,
            "split_seed": split_seed,
            "standardize": standardize,
            "feature_names": [name for k, name in enumerate(header) if k != target_index],
        },
    )


def _resolve_target(header: list, target_column) -> int:
    if str(target_column) in header:
        return header.index(str(target_column))
    if isinstance(target_column, int) or str(target_column).isdigit():
        index = int(target_column) - 1
        if not 0 <= index < len(header):
            raise DataError(f"target column index {target_column} outside 1..{len(header)}")
        return index
    raise DataError(f"target column {target_column!r} not in header")


def sparse_theta(d: int, s_star: int, amplitude: float = 1.0) -> np.ndarray:
    """First ceil(s*/2) coordinates +amplitude, the rest of the first s* -amplitude"""
    if not 1 <= s_star <= d:
        raise InvalidArgument(f"s*={s_star} outside [1, {d}]")
    theta = np.zeros(d)
    positive = math.ceil(s_star / 2)
    theta[:positive] = amplitude
    theta[positive:s_star] = -amplitude
    return theta


def make_synthetic_instance(
    d: int,
    s_star: int,
    sigma: float = 1.0,
    law: FeatureLaw = FeatureLaw.STANDARD_NORMAL,
    r_inf: Optional[float] = None,
    amplitude: float = 1.0,
    n_rows: Optional[int] = None,
    test_size: int = 10_000,
    seed: int = 20_240_101,
    theta_star: Optional[np.ndarray] = None,
) -> ProblemInstance:
    """Sparse synthetic model, streaming or materialised as n_rows split 90/10"""
    law = FeatureLaw(law)
    if law is FeatureLaw.FINITE:
        raise InvalidArgument("synthetic instances draw from a feature law")
    if law is FeatureLaw.UNIFORM:
        r_inf = math.sqrt(3.0) if r_inf is None else r_inf
        scale = r_inf**2 / 3.0
    else:
        r_inf = math.inf
        scale = 1.0
    theta = sparse_theta(d, s_star, amplitude) if theta_star is None else theta_star

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnboundedFeaturesWarning)
        generator = ProblemInstance(
            d=d, feature_law=law, theta_star=theta, sigma=sigma, r_inf=r_inf,
            covariance_scale=scale,
        )
    rng = make_rng(seed)
    metadata = {"law": law.value, "seed": seed, "amplitude": amplitude}

    if n_rows is None:
        test = draw_examples(generator, rng, test_size)
        return ProblemInstance(
            d=d, feature_law=law, theta_star=theta, sigma=sigma, r_inf=r_inf,
            covariance_scale=scale, test_X=test.features, test_y=test.y,
            metadata=metadata,
        )

    rows = draw_examples(generator, rng, n_rows)
    train, test = split_train_test(n_rows, 0.9, seed)
    if law is FeatureLaw.STANDARD_NORMAL:
        logger.warning("⚠️ materialised Gaussian rows are unbounded; R_inf recorded as inf")
    return ProblemInstance(
        d=d, feature_law=FeatureLaw.FINITE, theta_star=theta, sigma=sigma, r_inf=r_inf,
        covariance_scale=scale,
        train_X=rows.features[train], train_y=rows.y[train],
        test_X=rows.features[test], test_y=rows.y[test],
        metadata={**metadata, "n_rows": n_rows, "split_ratio": 0.9, "split_seed": seed},
    )


def make_synthetic_section6(n: Optional[int] = None, seed: int = 20_240_101) -> ProblemInstance:
    """d=500, s*=25 (+1 on 1..13, -1 on 14..25), standard normal features, sigma=1"""
    return make_synthetic_instance(d=500, s_star=25, sigma=1.0, n_rows=n, seed=seed)


def make_desk_instance(
    sigma: float = 1.0, n_rows: Optional[int] = None, seed: int = 20_240_101, test_size: int = 10_000
) -> ProblemInstance:
    """Desk-scale variant: d=100, s*=10, r_min=1"""
    return make_synthetic_instance(
        d=100, s_star=10, sigma=sigma, n_rows=n_rows, seed=seed, test_size=test_size
    )
