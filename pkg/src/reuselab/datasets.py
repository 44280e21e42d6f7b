"""Synthetic generators, CSV ingestion, and train/test splitting.

All generators draw from ``numpy.random.default_rng(seed)`` and derive the
label purely from the drawn position, so labels can always be re-derived
from features. Loaded CSV datasets one-hot encode categorical columns and
map the raw label onto {-1, +1}.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DataFormatError,
    InvalidArgumentError,
    SingleClassDataError,
    UnknownCategoryError,
)

NUMERIC = "numeric"
ONE_HOT = "one-hot-block"


class Instance(NamedTuple):
    """One example: a dense feature vector and a label in {-1, +1}."""

    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """An ordered pool of labelled instances with homogeneous dimension.

    ``feature_kinds`` tags each column as numeric or part of a one-hot
    block; ``feature_names`` keeps the origin of encoded columns (one-hot
    columns are named ``source=level``).
    """

    x: np.ndarray
    y: np.ndarray
    name: str = ""
    feature_kinds: tuple[str, ...] = ()
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] == 0:
            raise InvalidArgumentError("dataset needs a non-empty (n, dim) feature matrix")
        if y.shape != (x.shape[0],):
            raise InvalidArgumentError("labels must align with instances")
        if not np.all(np.isin(y, (-1, 1))):
            raise InvalidArgumentError("labels must be -1 or +1")
        kinds = self.feature_kinds or (NUMERIC,) * x.shape[1]
        names = self.feature_names or tuple(f"f{i}" for i in range(x.shape[1]))
        if len(kinds) != x.shape[1] or len(names) != x.shape[1]:
            raise InvalidArgumentError("per-column metadata must match dim")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_kinds", tuple(kinds))
        object.__setattr__(self, "feature_names", tuple(names))

    def __len__(self):
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def instance(self, i: int) -> Instance:
        return Instance(self.x[i], int(self.y[i]))

    def instances(self) -> Iterable[Instance]:
        for i in range(len(self)):
            yield self.instance(i)

    def positive_fraction(self) -> float:
        return float(np.mean(self.y == 1))

    def take(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(
            self.x[indices],
            self.y[indices],
            name=self.name if name is None else name,
            feature_kinds=self.feature_kinds,
            feature_names=self.feature_names,
        )


@dataclass(frozen=True)
class SplitPair:
    """A disjoint train/test partition; the train side is already shuffled."""

    train: Dataset
    test: Dataset
    seed: int
    test_prop: float


def one_hot_blocks(dataset: Dataset) -> list[tuple[int, int]]:
    """Column ranges [start, stop) of the one-hot blocks, by source column."""
    blocks = []
    start = None
    source = None
    for j, kind in enumerate(dataset.feature_kinds + (NUMERIC,)):
        col_source = dataset.feature_names[j].split("=")[0] if j < dataset.dim else None
        if kind == ONE_HOT and source == col_source:
            continue
        if start is not None:
            blocks.append((start, j))
            start = None
            source = None
        if kind == ONE_HOT:
            start = j
            source = col_source
    return blocks


# ---------------------------------------------------------------------------
# Synthetic generators


def gen_uniform_line(n: int, seed: int) -> Dataset:
    """Two uniform 1-D classes: label -1 on [-1, 0), +1 on [0, 1]."""
    if n < 2:
        raise InvalidArgumentError("n must be at least 2")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, 1))
    y = np.where(x[:, 0] < 0.0, -1, 1)
    return Dataset(x, y, name="uniform-line")


FOUR_CLUSTER_EDGES = (-7.5, -7.0, 0.0, 7.0, 7.5)
FOUR_CLUSTER_PROBS = (0.01, 0.49, 0.49, 0.01)
FOUR_CLUSTER_LABELS = (1, -1, 1, -1)


def four_cluster_label(x: float) -> int:
    """Label of a 1-D position under the +,-,+,- four-cluster layout."""
    if x < -7.0:
        return 1
    if x < 0.0:
        return -1
    if x < 7.0:
        return 1
    return -1


def gen_four_cluster_line(n: int, seed: int) -> Dataset:
    """1-D four-cluster problem: two tiny edge clusters at 1% mass each.

    Supports [-7.5,-7), [-7,0), [0,7), [7,7.5] with probabilities
    0.01/0.49/0.49/0.01 and labels +1/-1/+1/-1.
    """
    if n < 4:
        raise InvalidArgumentError("n must be at least 4")
    rng = np.random.default_rng(seed)
    which = rng.choice(4, size=n, p=FOUR_CLUSTER_PROBS)
    lo = np.asarray(FOUR_CLUSTER_EDGES[:-1])[which]
    hi = np.asarray(FOUR_CLUSTER_EDGES[1:])[which]
    x = rng.uniform(lo, hi).reshape(n, 1)
    y = np.asarray(FOUR_CLUSTER_LABELS, dtype=np.int64)[which]
    return Dataset(x, y, name="four-cluster-line")


CIRCLE_R_INNER = 9.9
CIRCLE_R_OUTER = 10.2


def circle_label(point: Sequence[float]) -> int:
    """Label of a 2-D position in the two-clusters-plus-ring layout.

    Inside the central square the halves split at x=0 (-1 left, +1 right);
    ring points carry the label opposite to the nearest half.
    """
    x = float(point[0])
    on_ring = math.hypot(float(point[0]), float(point[1])) >= CIRCLE_R_INNER
    cluster = -1 if x < 0.0 else 1
    return -cluster if on_ring else cluster


def gen_circle(n: int, circle_prob: float, seed: int) -> Dataset:
    """Two dense unit-square clusters orbited by a sparse ring of flipped labels.

    ``circle_prob`` is the per-side ring probability, so a fraction
    ``2 * circle_prob`` of all samples lands on the ring (radii
    [9.9, 10.2], area-uniform).
    """
    if n < 2:
        raise InvalidArgumentError("n must be at least 2")
    if not (0.0 < circle_prob < 0.5):
        raise InvalidArgumentError("circle_prob must lie in (0, 0.5)")
    rng = np.random.default_rng(seed)
    on_ring = rng.random(n) < 2.0 * circle_prob
    x = rng.uniform(-1.0, 1.0, size=(n, 2))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    radius = np.sqrt(rng.uniform(CIRCLE_R_INNER**2, CIRCLE_R_OUTER**2, size=n))
    ring = np.column_stack((radius * np.cos(theta), radius * np.sin(theta)))
    x = np.where(on_ring[:, None], ring, x)
    cluster_side = np.where(x[:, 0] < 0.0, -1, 1)
    y = np.where(on_ring, -cluster_side, cluster_side)
    return Dataset(x, y, name="circle")


# ---------------------------------------------------------------------------
# CSV ingestion

CATEGORICAL = "categorical"


def load_csv(
    path: str | os.PathLike,
    label_column: str | int,
    positive_values: Sequence[str] | str,
    schema: Mapping[str, object],
    header: bool = True,
    name: str | None = None,
) -> Dataset:
    """Load a delimited text file into a Dataset.

    ``schema`` maps a column name (or stringified index when the file has no
    header) to ``"numeric"``, ``"categorical"``, or
    ``{"kind": "categorical", "levels": [...]}``; declaring levels makes any
    other value an error. Categorical columns are expanded into one-hot
    blocks with levels in sorted order; raw labels equal to one of
    ``positive_values`` map to +1, everything else to -1. Row order is
    preserved.
    """
    if isinstance(positive_values, str):
        positive_values = (positive_values,)
    positive = set(positive_values)
    rows = _read_rows(path)
    if header:
        columns = rows[0]
        rows = rows[1:]
    else:
        columns = [str(i) for i in range(len(rows[0]))]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    width = len(columns)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {i} has {len(row)} fields, expected {width}")

    label_name = columns[label_column] if isinstance(label_column, int) else str(label_column)
    if label_name not in columns:
        raise DataFormatError(f"{path}: no label column {label_name!r}")
    label_idx = columns.index(label_name)

    feature_cols = [c for c in columns if c != label_name]
    for col in feature_cols:
        if col not in schema:
            raise DataFormatError(f"{path}: column {col!r} missing from schema")
    for col in schema:
        if col not in feature_cols:
            raise DataFormatError(f"schema mentions unknown column {col!r}")

    raw_labels = [row[label_idx] for row in rows]
    y = np.asarray([1 if v in positive else -1 for v in raw_labels], dtype=np.int64)
    if len(set(y.tolist())) < 2:
        raise SingleClassDataError(f"{path}: all rows map to a single class")

    pieces: list[np.ndarray] = []
    kinds: list[str] = []
    names: list[str] = []
    for col in feature_cols:
        idx = columns.index(col)
        values = [row[idx] for row in rows]
        kind, levels = _schema_entry(schema[col], col)
        if kind == NUMERIC:
            pieces.append(_numeric_column(values, col, path))
            kinds.append(NUMERIC)
            names.append(col)
        else:
            block, block_levels = _one_hot_column(values, col, levels)
            pieces.append(block)
            kinds.extend([ONE_HOT] * len(block_levels))
            names.extend(f"{col}={lev}" for lev in block_levels)
    x = np.column_stack(pieces)
    return Dataset(
        x,
        y,
        name=name if name is not None else os.path.splitext(os.path.basename(str(path)))[0],
        feature_kinds=tuple(kinds),
        feature_names=tuple(names),
    )


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [row for row in csv.reader(fh) if row]
    except OSError:
        raise
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def _schema_entry(entry, col):
    if entry == NUMERIC:
        return NUMERIC, None
    if entry == CATEGORICAL:
        return CATEGORICAL, None
    if isinstance(entry, Mapping) and entry.get("kind") == CATEGORICAL:
        return CATEGORICAL, list(entry.get("levels", [])) or None
    raise DataFormatError(f"column {col!r}: schema entry must be numeric or categorical")


def _numeric_column(values, col, path):
    out = np.empty(len(values))
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i}, column {col!r}: not numeric: {v!r}") from exc
    return out[:, None]


def _one_hot_column(values, col, declared_levels):
    if declared_levels is None:
        levels = sorted(set(values))
    else:
        levels = list(declared_levels)
        extra = set(values) - set(levels)
        if extra:
            raise UnknownCategoryError(f"column {col!r}: undeclared categories {sorted(extra)}")
    index = {lev: j for j, lev in enumerate(levels)}
    block = np.zeros((len(values), len(levels)))
    for i, v in enumerate(values):
        block[i, index[v]] = 1.0
    return block, levels


# ---------------------------------------------------------------------------
# Splitting


def split(
    dataset: Dataset,
    test_prop: float,
    seed: int,
    scale_numeric: bool = False,
) -> SplitPair:
    """Random disjoint train/test partition; train order is shuffled.

    With ``scale_numeric`` the numeric columns of both sides are min-max
    scaled to [0, 1] using statistics of the train side only (one-hot
    blocks pass through untouched).
    """
    n = len(dataset)
    if not (0.0 < test_prop < 1.0):
        raise InvalidArgumentError("test_prop must lie in (0, 1)")
    n_test = int(round(n * test_prop))
    if n_test == 0 or n_test == n:
        raise InvalidArgumentError("test_prop leaves train or test empty")
    perm = np.random.default_rng(seed).permutation(n)
    test = dataset.take(perm[:n_test])
    train = dataset.take(perm[n_test:])
    if scale_numeric:
        train, test = _scale_pair(train, test)
    return SplitPair(train=train, test=test, seed=int(seed), test_prop=float(test_prop))


def _scale_pair(train: Dataset, test: Dataset):
    numeric = np.asarray([k == NUMERIC for k in train.feature_kinds])
    if not numeric.any():
        return train, test
    lo = train.x[:, numeric].min(axis=0)
    hi = train.x[:, numeric].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)

    def apply(ds):
        x = np.array(ds.x)
        x[:, numeric] = (x[:, numeric] - lo) / span
        return replace(ds, x=x)

    return apply(train), apply(test)


# ---------------------------------------------------------------------------
# Dataset CSV export and declarative specs


def export_csv(dataset: Dataset, path: str | os.PathLike) -> None:
    """Write a dataset as f0..f{d-1},label rows with a header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(dataset.dim)] + ["label"])
        for i in range(len(dataset)):
            writer.writerow([repr(float(v)) for v in dataset.x[i]] + [int(dataset.y[i])])


GENERATOR_KINDS = ("uniform-line", "four-cluster-line", "circle")


@dataclass(frozen=True)
class DatasetSpec:
    """Declarative recipe for a dataset, JSON-friendly for configs and traces.

    ``seed=None`` on a generated kind means the caller supplies the seed at
    build time (the experiment harness uses this for fresh pools per
    repetition).
    """

    kind: str
    n: int = 0
    circle_prob: float = 0.001
    seed: int | None = None
    path: str | None = None
    label_column: str | int = "label"
    positive_values: tuple[str, ...] = ()
    header: bool = True
    schema: Mapping[str, object] | None = None
    scale_numeric: bool = True

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS + ("csv",):
            raise InvalidArgumentError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise InvalidArgumentError("csv dataset spec needs a path")
        if self.kind != "csv" and self.n <= 0:
            raise InvalidArgumentError("generated dataset spec needs n > 0")

    def to_dict(self) -> dict:
        if self.kind == "csv":
            return {
                "kind": self.kind,
                "path": self.path,
                "label_column": self.label_column,
                "positive_values": list(self.positive_values),
                "header": self.header,
                "schema": dict(self.schema or {}),
                "scale_numeric": self.scale_numeric,
            }
        out = {"kind": self.kind, "n": self.n, "seed": self.seed}
        if self.kind == "circle":
            out["circle_prob"] = self.circle_prob
        return out

    @staticmethod
    def from_dict(d: Mapping[str, object]) -> "DatasetSpec":
        allowed = {
            "kind", "n", "circle_prob", "seed", "path", "label_column",
            "positive_values", "header", "schema", "scale_numeric",
        }
        unknown = set(d) - allowed
        if unknown:
            raise InvalidArgumentError(f"unknown dataset spec keys {sorted(unknown)}")
        kwargs = dict(d)
        if "positive_values" in kwargs:
            kwargs["positive_values"] = tuple(kwargs["positive_values"])
        return DatasetSpec(**kwargs)


def make_dataset(spec: DatasetSpec, seed: int | None = None) -> Dataset:
    """Materialize a spec; ``seed`` fills in a generated spec's null seed."""
    if spec.kind == "csv":
        return load_csv(
            spec.path,
            spec.label_column,
            spec.positive_values,
            spec.schema or {},
            header=spec.header,
        )
    use_seed = spec.seed if spec.seed is not None else seed
    if use_seed is None:
        raise InvalidArgumentError("generated dataset spec needs a seed")
    if spec.kind == "uniform-line":
        return gen_uniform_line(spec.n, use_seed)
    if spec.kind == "four-cluster-line":
        return gen_four_cluster_line(spec.n, use_seed)
    return gen_circle(spec.n, spec.circle_prob, use_seed)


def resolve_spec(spec: DatasetSpec, seed: int | None) -> DatasetSpec:
    """Bake the effective seed into a spec (for replayable trace headers)."""
    if spec.kind == "csv" or spec.seed is not None:
        return spec
    return replace(spec, seed=seed)
