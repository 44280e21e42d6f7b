"""Sample-selection strategies: random, uncertainty, and biased-coin IWAL.

The IWAL pass streams over the training order once. For the k-th example
it computes an error difference ``g`` (exact grid ERM or a margin
surrogate), converts it into a selection probability, flips a biased coin,
and on success stores the example with importance weight ``1/p`` and
updates the online selector with that importance. Coins come from a
counter-based generator keyed by ``(seed, stream index)``, so a trace can
be replayed bit-exactly from its header.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .datasets import Dataset, Instance
from .errors import DegenerateGridError, InvalidArgumentError, TraceFormatError
from .learners import (
    WeightedInstance,
    inv_sqrt_schedule,
    make_online_model,
    online_linear_update,
)
from .seeding import pass_uniforms

RANDOM = "random"
UNCERTAINTY = "uncertainty"
IWAL = "iwal"
IWAL_NO_WEIGHTS = "iwal-no-weights"
STRATEGIES = (RANDOM, UNCERTAINTY, IWAL, IWAL_NO_WEIGHTS)

SURROGATE = "surrogate"
EXACT_ERM = "exact-erm"


class TraceRow(NamedTuple):
    index: int
    g: float
    probability: float
    coin: int
    selected: int
    weight: float


@dataclass(frozen=True)
class IwalConfig:
    """Knobs of one IWAL pass.

    ``log_base=None`` means the natural logarithm in the probability rule.
    """

    c0: float
    gk_mode: str = SURROGATE
    erm_grid_resolution: int = 64
    seed: int = 0
    log_base: float | None = None
    selector_eta0: float = 0.3

    def __post_init__(self):
        if self.c0 <= 0:
            raise InvalidArgumentError("c0 must be positive")
        if self.gk_mode not in (SURROGATE, EXACT_ERM):
            raise InvalidArgumentError(f"unknown gk_mode {self.gk_mode!r}")
        if self.erm_grid_resolution < 2:
            raise InvalidArgumentError("erm_grid_resolution must be at least 2")


@dataclass(frozen=True)
class SelectionResult:
    """An ordered weighted selection plus the per-stream-example trace."""

    strategy: str
    selected: tuple[WeightedInstance, ...]
    trace: tuple[TraceRow, ...]
    seed: int
    c0: float | None = None
    use_weights: bool = True
    n_requested: int | None = None
    config: IwalConfig | None = None

    @property
    def selected_count(self) -> int:
        return len(self.selected)


# ---------------------------------------------------------------------------
# The probability rule and its two error-difference sources


def selection_probability(g: float, k: int, c0: float, log_base: float | None = None) -> float:
    """Labeling probability of the k-th streamed example.

    Returns ``min(1, (1/g^2 + 1/g) * c0 * log(k) / (k - 1))``; the g -> 0
    limit saturates the clamp, so g = 0 maps to 1.
    """
    if c0 <= 0:
        raise InvalidArgumentError("c0 must be positive")
    if k < 2:
        raise InvalidArgumentError("k must be at least 2")
    if g < 0:
        raise InvalidArgumentError("g must be non-negative")
    if g == 0.0:
        return 1.0
    log_k = math.log(k) if log_base is None else math.log(k, log_base)
    return min(1.0, (1.0 / (g * g) + 1.0 / g) * c0 * log_k / (k - 1))


def surrogate_error_difference(score: float, mean_abs_score: float) -> float:
    """Scale-free margin proxy for the ERM error difference.

    The candidate's |score| is rescaled by the running mean |score| of the
    stream so far; a zero history (or zero score) maps to 0, which in turn
    forces the labeling probability to 1.
    """
    if mean_abs_score <= 0.0:
        return 0.0
    return abs(score) / mean_abs_score


class LinearHypothesisGrid:
    """A finite set of linear hypotheses sign(w.x - b) for exact-mode ERM.

    Supports 1-D and 2-D data: directions come from angles on the full
    circle (both orientations of every boundary), offsets from an even
    grid over the data's projection range.
    """

    def __init__(self, w: np.ndarray, b: np.ndarray):
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise InvalidArgumentError("need (m, d) directions and (m,) offsets")
        self.w = w
        self.b = b

    def __len__(self):
        return self.w.shape[0]

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predictions (+-1) of every hypothesis for one example."""
        return np.where(self.w @ features - self.b >= 0.0, 1, -1)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        """(m, n) predictions of every hypothesis for every row of x."""
        return np.where(self.w @ x.T - self.b[:, None] >= 0.0, 1, -1)


def build_linear_grid(lo, hi, resolution: int) -> LinearHypothesisGrid:
    """Grid over (direction, offset) covering the box [lo, hi].

    1-D: both directions times ``resolution`` thresholds. 2-D:
    ``resolution`` angles over the full circle times ``resolution``
    offsets spanning the box's projections.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    d = lo.shape[0]
    if resolution < 2:
        raise InvalidArgumentError("resolution must be at least 2")
    if d == 1:
        thresholds = np.linspace(lo[0], hi[0], resolution)
        w = np.concatenate([np.ones(resolution), -np.ones(resolution)])[:, None]
        b = np.concatenate([thresholds, -thresholds])
        return LinearHypothesisGrid(w, b)
    if d == 2:
        angles = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
        proj = dirs @ corners.T
        w = np.repeat(dirs, resolution, axis=0)
        b = np.concatenate([
            np.linspace(proj[i].min(), proj[i].max(), resolution) for i in range(len(dirs))
        ])
        return LinearHypothesisGrid(w, b)
    raise InvalidArgumentError("exact-mode grids support only 1-D or 2-D data")


def grid_for_dataset(dataset: Dataset, resolution: int) -> LinearHypothesisGrid:
    return build_linear_grid(dataset.x.min(axis=0), dataset.x.max(axis=0), resolution)


class _GridErrors:
    """Cumulative weighted error of every grid hypothesis on the labeled set."""

    def __init__(self, grid: LinearHypothesisGrid):
        self.grid = grid
        self.err = np.zeros(len(grid))
        self.total_weight = 0.0

    def add(self, features, label, weight):
        wrong = self.grid.predict(features) != label
        self.err += weight * wrong
        self.total_weight += weight

    def difference_at(self, features) -> float:
        if self.total_weight == 0.0:
            return 0.0
        best = int(np.argmin(self.err))
        preds = self.grid.predict(features)
        disagree = preds != preds[best]
        if not disagree.any():
            raise DegenerateGridError("no grid hypothesis disagrees on the candidate")
        return float((self.err[disagree].min() - self.err[best]) / self.total_weight)


def exact_error_difference(
    labeled: Sequence[WeightedInstance],
    candidate: Instance,
    grid: LinearHypothesisGrid,
) -> float:
    """ERM error gap between the best hypothesis and the best one forced
    to predict the opposite label for the candidate; 0 on an empty set."""
    state = _GridErrors(grid)
    for wi in labeled:
        state.add(np.asarray(wi.instance.features, dtype=np.float64), wi.instance.label, wi.weight)
    return state.difference_at(np.asarray(candidate.features, dtype=np.float64))


# ---------------------------------------------------------------------------
# Strategies


def select_random(train: Dataset, n: int) -> SelectionResult:
    """First n examples of the (already shuffled) training order, weight 1."""
    if n < 0 or n > len(train):
        raise InvalidArgumentError(f"cannot select {n} of {len(train)} examples")
    selected = tuple(WeightedInstance(train.instance(i), 1.0) for i in range(n))
    trace = tuple(
        TraceRow(i, 0.0, 1.0, int(i < n), int(i < n), 1.0 if i < n else 0.0)
        for i in range(len(train))
    )
    return SelectionResult(RANDOM, selected, trace, seed=0, n_requested=n)


def select_uncertainty(train: Dataset, n: int, ranking_model) -> SelectionResult:
    """The n pool examples closest to the ranking model's boundary.

    Examples are ordered by ascending |score| with ties broken by the
    original index; the pool is ranked once, not re-ranked per pick.
    """
    if n < 0 or n > len(train):
        raise InvalidArgumentError(f"cannot select {n} of {len(train)} examples")
    margins = np.abs(np.asarray(ranking_model.score(train.x), dtype=np.float64))
    order = np.lexsort((np.arange(len(train)), margins))
    chosen = order[:n]
    selected = tuple(WeightedInstance(train.instance(int(i)), 1.0) for i in chosen)
    picked = np.zeros(len(train), dtype=bool)
    picked[chosen] = True
    trace = tuple(
        TraceRow(i, float(margins[i]), 1.0, int(picked[i]), int(picked[i]),
                 1.0 if picked[i] else 0.0)
        for i in range(len(train))
    )
    return SelectionResult(UNCERTAINTY, selected, trace, seed=0, n_requested=n)


def select_iwal(
    train: Dataset,
    config: IwalConfig,
    use_weights: bool = True,
    grid: LinearHypothesisGrid | None = None,
) -> SelectionResult:
    """One sequential biased-coin pass over the training order.

    Every selected example is stored with weight 1/p (or 1 when
    ``use_weights`` is off; the trace keeps p either way) and the online
    selector is updated with importance 1/p. The first streamed example is
    always labeled. The selected-set size is a random variable.
    """
    n = len(train)
    if n == 0:
        raise InvalidArgumentError("training pool is empty")
    uniforms = pass_uniforms(config.seed, n)
    schedule = inv_sqrt_schedule(config.selector_eta0)
    model = make_online_model(train.dim)
    grid_errors = None
    if config.gk_mode == EXACT_ERM:
        grid_errors = _GridErrors(grid or grid_for_dataset(train, config.erm_grid_resolution))

    x = train.x
    y = train.y
    abs_score_sum = 0.0
    selected: list[WeightedInstance] = []
    trace: list[TraceRow] = []
    for idx in range(n):
        score = float(x[idx] @ model.theta) + model.bias
        if grid_errors is not None:
            g = grid_errors.difference_at(x[idx])
        else:
            g = surrogate_error_difference(score, abs_score_sum / idx if idx else 0.0)
        k = idx + 1
        p = 1.0 if k == 1 else selection_probability(g, k, config.c0, config.log_base)
        coin = 1 if uniforms[idx] < p else 0
        weight = 0.0
        if coin:
            importance = 1.0 / p
            weight = importance if use_weights else 1.0
            inst = Instance(x[idx], int(y[idx]))
            selected.append(WeightedInstance(inst, weight))
            model = online_linear_update(model, inst, importance, schedule)
            if grid_errors is not None:
                grid_errors.add(x[idx], int(y[idx]), importance)
        trace.append(TraceRow(idx, g, p, coin, coin, weight))
        abs_score_sum += abs(score)
    return SelectionResult(
        IWAL if use_weights else IWAL_NO_WEIGHTS,
        tuple(selected),
        tuple(trace),
        seed=config.seed,
        c0=config.c0,
        use_weights=use_weights,
        config=config,
    )


def without_weights(result: SelectionResult) -> SelectionResult:
    """The same selection with every stored weight forced to 1."""
    if result.strategy not in (IWAL, IWAL_NO_WEIGHTS):
        raise InvalidArgumentError("weights can only be stripped from an IWAL result")
    selected = tuple(WeightedInstance(wi.instance, 1.0) for wi in result.selected)
    trace = tuple(
        row._replace(weight=1.0 if row.selected else 0.0) for row in result.trace
    )
    return replace(result, strategy=IWAL_NO_WEIGHTS, selected=selected, trace=trace,
                   use_weights=False)


# ---------------------------------------------------------------------------
# Trace persistence

_TRACE_TAG = "# reuselab-trace v1 "
_TRACE_COLUMNS = "index,g,probability,coin,selected,weight"


def trace_header(
    result: SelectionResult,
    dataset_dict: dict,
    split_dict: dict | None,
    extra: dict | None = None,
) -> dict:
    """Everything needed to re-run a selection pass bit-exactly."""
    header = {
        "strategy": result.strategy,
        "seed": result.seed,
        "use_weights": result.use_weights,
        "dataset": dataset_dict,
        "split": split_dict,
    }
    if result.n_requested is not None:
        header["n"] = result.n_requested
    if result.config is not None:
        header.update(
            c0=result.config.c0,
            gk_mode=result.config.gk_mode,
            erm_grid_resolution=result.config.erm_grid_resolution,
            log_base=result.config.log_base,
            selector_eta0=result.config.selector_eta0,
        )
    if extra:
        header.update(extra)
    return header


def trace_to_text(
    result: SelectionResult,
    dataset_dict: dict,
    split_dict: dict | None = None,
    extra: dict | None = None,
) -> str:
    header = trace_header(result, dataset_dict, split_dict, extra)
    lines = [_TRACE_TAG + json.dumps(header, sort_keys=True), _TRACE_COLUMNS]
    for row in result.trace:
        lines.append(
            f"{row.index},{row.g!r},{row.probability!r},{row.coin},{row.selected},{row.weight!r}"
        )
    return "\n".join(lines) + "\n"


def save_trace(path, result: SelectionResult, dataset_dict: dict, split_dict: dict | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trace_to_text(result, dataset_dict, split_dict))


def load_trace(path) -> tuple[dict, list[TraceRow]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or not lines[0].startswith(_TRACE_TAG):
        raise TraceFormatError(f"{path}: missing trace header")
    try:
        header = json.loads(lines[0][len(_TRACE_TAG):])
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{path}: corrupt header: {exc}") from exc
    if len(lines) < 2 or lines[1] != _TRACE_COLUMNS:
        raise TraceFormatError(f"{path}: missing column row")
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise TraceFormatError(f"{path}: line {lineno}: expected 6 fields")
        try:
            rows.append(TraceRow(int(parts[0]), float(parts[1]), float(parts[2]),
                                 int(parts[3]), int(parts[4]), float(parts[5])))
        except ValueError as exc:
            raise TraceFormatError(f"{path}: line {lineno}: {exc}") from exc
    return header, rows
