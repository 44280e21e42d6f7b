"""Repetition engine and statistics for learning-curve experiments.

A run repeats the same protocol ``repetitions`` times with seeds derived
from ``base_seed + r``: draw (or load) the pool, split it, run every
selection strategy over the shared training order, train every consumer on
each selection, and score it on the test side. Cells are aggregated into
curve points (mean error, std of the mean, median selected count) and into
a reusability report that compares each active-learning cell against the
random cell of the nearest size.

Repetitions are independent jobs; with ``jobs > 1`` they execute in a
process pool, and aggregation reduces them in repetition order so outputs
are byte-identical regardless of parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .datasets import DatasetSpec, make_dataset, resolve_spec, split
from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    MissingClassError,
    SingularDataError,
)
from .learners import (
    WeightedInstance,
    dataset_as_weighted,
    fit_lda,
    fit_least_squares,
    fit_online_linear,
    fit_qda,
    fit_svm,
    linear_kernel,
    poly3_kernel,
    rbf_kernel,
    zero_one_error,
)
from .seeding import ROLE_POOL, ROLE_RANKER, ROLE_SELECTION, ROLE_SPLIT, derive_seed
from .selection import (
    IWAL,
    IWAL_NO_WEIGHTS,
    RANDOM,
    STRATEGIES,
    SURROGATE,
    UNCERTAINTY,
    IwalConfig,
    SelectionResult,
    load_trace,
    select_iwal,
    select_random,
    select_uncertainty,
    trace_to_text,
    without_weights,
)

CONSUMER_KINDS = (
    "online-linear", "least-squares", "lda", "qda",
    "svm-linear", "svm-poly3", "svm-rbf",
)

# Report rule: |welch t| at or above this separates the means.
T_THRESHOLD = 2.0
# IWAL cells with fewer surviving repetitions than this are inconclusive.
MIN_REPS_FOR_VERDICT = 20

REUSABLE = "reusable"
NOT_REUSABLE = "not-reusable"
INCONCLUSIVE = "inconclusive"
EMPTY_CELL = "empty-cell"


@dataclass(frozen=True)
class ConsumerSpec:
    """A consumer classifier and its hyperparameters."""

    kind: str
    ridge: float = 1e-6
    cost: float = 1.0
    gamma: float | None = None
    eta0: float = 0.3
    passes: int = 1
    name: str = ""

    def __post_init__(self):
        if self.kind not in CONSUMER_KINDS:
            raise InvalidArgumentError(f"unknown consumer kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def fit(self, samples: Sequence[WeightedInstance]):
        if self.kind == "online-linear":
            return fit_online_linear(samples, eta0=self.eta0, passes=self.passes)
        if self.kind == "least-squares":
            return fit_least_squares(samples, ridge=self.ridge)
        if self.kind == "lda":
            return fit_lda(samples)
        if self.kind == "qda":
            return fit_qda(samples)
        if self.kind == "svm-linear":
            return fit_svm(samples, linear_kernel, cost=self.cost)
        if self.kind == "svm-poly3":
            return fit_svm(samples, poly3_kernel, cost=self.cost)
        return fit_svm(samples, rbf_kernel(self.gamma), cost=self.cost)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    test_prop: float
    repetitions: int = 100
    strategies: tuple[str, ...] = (RANDOM, IWAL)
    consumers: tuple[ConsumerSpec, ...] = (ConsumerSpec("least-squares"),)
    n_grid: tuple[int, ...] = ()
    c0_grid: tuple[float, ...] = ()
    base_seed: int = 0
    gk_mode: str = SURROGATE
    erm_grid_resolution: int = 64
    log_base: float | None = None
    selector_eta0: float = 0.3
    save_traces: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidArgumentError("repetitions must be at least 1")
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise InvalidArgumentError(f"unknown strategies {sorted(unknown)}")
        if not self.strategies:
            raise InvalidArgumentError("need at least one strategy")
        if not self.consumers:
            raise InvalidArgumentError("need at least one consumer")
        names = [c.name for c in self.consumers]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("consumer names must be unique")
        needs_n = {RANDOM, UNCERTAINTY} & set(self.strategies)
        needs_c0 = {IWAL, IWAL_NO_WEIGHTS} & set(self.strategies)
        if needs_c0 and not self.c0_grid:
            raise InvalidArgumentError("IWAL strategies need a non-empty c0_grid")
        if any(n < 1 for n in self.n_grid):
            raise InvalidArgumentError("n_grid entries must be positive")
        if any(c <= 0 for c in self.c0_grid):
            raise InvalidArgumentError("c0_grid entries must be positive")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict(),
            "test_prop": self.test_prop,
            "repetitions": self.repetitions,
            "strategies": list(self.strategies),
            "consumers": [
                {
                    "kind": c.kind, "name": c.name, "ridge": c.ridge, "cost": c.cost,
                    "gamma": c.gamma, "eta0": c.eta0, "passes": c.passes,
                }
                for c in self.consumers
            ],
            "n_grid": list(self.n_grid),
            "c0_grid": list(self.c0_grid),
            "base_seed": self.base_seed,
            "iwal": {
                "gk_mode": self.gk_mode,
                "erm_grid_resolution": self.erm_grid_resolution,
                "log_base": self.log_base,
            },
            "selector": {"eta0": self.selector_eta0},
            "save_traces": self.save_traces,
        }


@dataclass(frozen=True)
class CurvePoint:
    strategy: str
    consumer: str
    cell: str            # "n=50" or "c0=0.5"
    x_position: float    # median selected count across repetitions
    mean_err: float
    std_of_mean: float
    reps_used: int
    reps_dropped: int


@dataclass(frozen=True)
class ReusabilityCell:
    strategy: str
    consumer: str
    cell: str
    x_position: float
    matched_n: int
    mean_err_al: float
    mean_err_rd: float
    delta: float
    welch_t: float
    verdict: str


@dataclass(frozen=True)
class ReusabilityReport:
    rows: tuple[ReusabilityCell, ...]
    threshold: float = T_THRESHOLD

    def cell(self, strategy: str, consumer: str, cell: str) -> ReusabilityCell:
        for row in self.rows:
            if (row.strategy, row.consumer, row.cell) == (strategy, consumer, cell):
                return row
        raise KeyError((strategy, consumer, cell))


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    curve: tuple[CurvePoint, ...]
    report: ReusabilityReport
    n_train: int
    traces: tuple[tuple[str, str], ...] = ()  # (relative filename, text)


def welch_t(mean_a: float, sem_a: float, n_a: int, mean_b: float, sem_b: float, n_b: int) -> float:
    """Welch statistic from summary stats (normal approximation; the
    repetition counts are accepted for the record but no dof correction
    is applied)."""
    if sem_a <= 0 or sem_b <= 0:
        raise InvalidArgumentError("standard errors must be positive")
    return (mean_a - mean_b) / math.hypot(sem_a, sem_b)


# ---------------------------------------------------------------------------
# One repetition

_DROP_ERRORS = (MissingClassError, SingularDataError, ConvergenceError)


def _cell_label(kind: str, value) -> str:
    return f"n={value}" if kind == "n" else f"c0={value!r}"


@dataclass
class _RepOutcome:
    rep: int
    counts: dict        # (strategy, cell) -> selected count
    errors: dict        # (strategy, cell, consumer) -> float or None
    traces: list        # (filename, text)


def _rep_seeds(config: ExperimentConfig, r: int):
    return (
        derive_seed(config.base_seed, r, ROLE_POOL),
        derive_seed(config.base_seed, r, ROLE_SPLIT),
    )


def _run_repetition(config: ExperimentConfig, r: int) -> _RepOutcome:
    pool_seed, split_seed = _rep_seeds(config, r)
    dataset = make_dataset(config.dataset, seed=pool_seed)
    scale = config.dataset.kind == "csv" and config.dataset.scale_numeric
    pair = split(dataset, config.test_prop, split_seed, scale_numeric=scale)
    train, test = pair.train, pair.test

    dataset_dict = resolve_spec(config.dataset, pool_seed).to_dict()
    split_dict = {"test_prop": config.test_prop, "seed": split_seed, "scale_numeric": scale}

    selections: list[tuple[str, SelectionResult]] = []
    if RANDOM in config.strategies:
        for n in config.n_grid:
            selections.append((_cell_label("n", n), select_random(train, n)))
    if UNCERTAINTY in config.strategies:
        ranker = fit_online_linear(
            dataset_as_weighted(train), eta0=config.selector_eta0, passes=1
        )
        for n in config.n_grid:
            selections.append((_cell_label("n", n), select_uncertainty(train, n, ranker)))
    if IWAL in config.strategies or IWAL_NO_WEIGHTS in config.strategies:
        for ci, c0 in enumerate(config.c0_grid):
            iwal_config = IwalConfig(
                c0=c0,
                gk_mode=config.gk_mode,
                erm_grid_resolution=config.erm_grid_resolution,
                seed=derive_seed(config.base_seed, r, ROLE_SELECTION, ci),
                log_base=config.log_base,
                selector_eta0=config.selector_eta0,
            )
            weighted = select_iwal(train, iwal_config)
            label = _cell_label("c0", c0)
            if IWAL in config.strategies:
                selections.append((label, weighted))
            if IWAL_NO_WEIGHTS in config.strategies:
                selections.append((label, without_weights(weighted)))

    counts, errors, traces = {}, {}, []
    for label, sel in selections:
        counts[(sel.strategy, label)] = sel.selected_count
        if config.save_traces:
            fname = f"trace_{sel.strategy}_{label.replace('=', '_')}_r{r:04d}.csv"
            extra = None
            if sel.strategy == UNCERTAINTY:
                extra = {"selector_eta0": config.selector_eta0}
            traces.append((fname, trace_to_text(sel, dataset_dict, split_dict, extra)))
        for consumer in config.consumers:
            key = (sel.strategy, label, consumer.name)
            if sel.selected_count == 0:
                errors[key] = None
                continue
            try:
                model = consumer.fit(list(sel.selected))
                errors[key] = zero_one_error(model, test)
            except _DROP_ERRORS:
                errors[key] = None
    return _RepOutcome(rep=r, counts=counts, errors=errors, traces=traces)


def _worker(args):
    return _run_repetition(*args)


# ---------------------------------------------------------------------------
# The full experiment


def default_n_grid(n_train: int, points: int = 10) -> tuple[int, ...]:
    """Roughly log-spaced selection sizes from 10 up to the full pool."""
    lo = min(10, n_train)
    grid = np.unique(np.rint(np.geomspace(lo, n_train, points)).astype(int))
    return tuple(int(v) for v in grid)


def _normalize(config: ExperimentConfig) -> tuple[ExperimentConfig, int]:
    probe_seed = derive_seed(config.base_seed, 0, ROLE_POOL)
    probe = make_dataset(config.dataset, seed=probe_seed)
    n_total = len(probe)
    n_test = int(round(n_total * config.test_prop))
    n_train = n_total - n_test
    needs_n = {RANDOM, UNCERTAINTY} & set(config.strategies)
    if needs_n and not config.n_grid:
        config = replace(config, n_grid=default_n_grid(n_train))
    if any(n > n_train for n in config.n_grid):
        raise InvalidArgumentError(f"n_grid exceeds the training pool ({n_train})")
    return config, n_train


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> ExperimentResult:
    """Run every repetition, aggregate curve points, and judge reusability."""
    config, n_train = _normalize(config)
    reps = range(config.repetitions)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = []
            for out in pool.map(_worker, [(config, r) for r in reps]):
                outcomes.append(out)
                if progress:
                    progress(len(outcomes), config.repetitions)
    else:
        outcomes = []
        for r in reps:
            outcomes.append(_run_repetition(config, r))
            if progress:
                progress(len(outcomes), config.repetitions)
    return aggregate(config, outcomes, n_train)


def aggregate(
    config: ExperimentConfig,
    outcomes: Sequence[_RepOutcome],
    n_train: int,
) -> ExperimentResult:
    """Reduce per-repetition outcomes; invariant to their input order."""
    outcomes = sorted(outcomes, key=lambda o: o.rep)
    cells: list[tuple[str, str]] = []
    for out in outcomes:
        for key in out.counts:
            if key not in cells:
                cells.append(key)
    cells.sort(key=lambda sc: (STRATEGIES.index(sc[0]), _cell_sort_key(sc[1])))

    points = []
    for strategy, cell in cells:
        counts = [o.counts[(strategy, cell)] for o in outcomes if (strategy, cell) in o.counts]
        x_median = float(np.median(counts)) if counts else float("nan")
        for consumer in config.consumers:
            errs = [
                o.errors.get((strategy, cell, consumer.name))
                for o in outcomes
                if (strategy, cell, consumer.name) in o.errors
            ]
            used = [e for e in errs if e is not None]
            mean = float(np.mean(used)) if used else float("nan")
            sem = (
                float(np.std(used, ddof=1) / math.sqrt(len(used)))
                if len(used) >= 2
                else 0.0
            )
            points.append(
                CurvePoint(
                    strategy=strategy,
                    consumer=consumer.name,
                    cell=cell,
                    x_position=x_median,
                    mean_err=mean,
                    std_of_mean=sem,
                    reps_used=len(used),
                    reps_dropped=len(errs) - len(used),
                )
            )

    report = build_report(points)
    traces = []
    for out in outcomes:
        traces.extend(out.traces)
    traces.sort(key=lambda ft: ft[0])
    return ExperimentResult(
        config=config,
        curve=tuple(points),
        report=report,
        n_train=n_train,
        traces=tuple(traces),
    )


def _cell_sort_key(cell: str):
    kind, _, value = cell.partition("=")
    return (kind, float(value))


def build_report(points: Sequence[CurvePoint]) -> ReusabilityReport:
    """Compare each active-learning cell with the nearest-size random cell."""
    randoms = [p for p in points if p.strategy == RANDOM]
    rows = []
    for p in points:
        if p.strategy == RANDOM:
            continue
        baselines = [q for q in randoms if q.consumer == p.consumer and q.reps_used > 0]
        if not baselines or p.reps_used == 0:
            rows.append(
                ReusabilityCell(p.strategy, p.consumer, p.cell, p.x_position, -1,
                                p.mean_err, float("nan"), float("nan"), float("nan"),
                                EMPTY_CELL)
            )
            continue
        match = min(baselines, key=lambda q: (abs(q.x_position - p.x_position), q.x_position))
        delta = p.mean_err - match.mean_err
        combined = math.hypot(p.std_of_mean, match.std_of_mean)
        if combined == 0.0:
            t = 0.0 if delta == 0.0 else math.copysign(math.inf, delta)
        else:
            t = delta / combined
        if p.reps_used < MIN_REPS_FOR_VERDICT or abs(t) < T_THRESHOLD:
            verdict = INCONCLUSIVE
        elif delta < 0:
            verdict = REUSABLE
        else:
            verdict = NOT_REUSABLE
        rows.append(
            ReusabilityCell(p.strategy, p.consumer, p.cell, p.x_position,
                            int(round(match.x_position)), p.mean_err, match.mean_err,
                            delta, t, verdict)
        )
    return ReusabilityReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Density histogram (1-D selections, averaged over many passes)


@dataclass(frozen=True)
class DensityRow:
    c0: float
    bin: int
    lo: float
    hi: float
    unweighted_mass: float
    weighted_mass: float


_SUPPORT = {"uniform-line": (-1.0, 1.0), "four-cluster-line": (-7.5, 7.5)}


def density_histogram(
    dataset_spec: DatasetSpec,
    c0_list: Sequence[float],
    runs: int,
    bins: int,
    base_seed: int = 0,
    gk_mode: str = SURROGATE,
    erm_grid_resolution: int = 64,
    selector_eta0: float = 0.3,
) -> list[DensityRow]:
    """Average selected mass per bin, raw and importance-weighted.

    Each run draws a fresh pool and runs one IWAL pass per c0; masses are
    averaged over runs and normalized to sum to 1 per c0.
    """
    if dataset_spec.kind == "csv":
        raise InvalidArgumentError("density histograms need a generated 1-D dataset")
    probe = make_dataset(dataset_spec, seed=derive_seed(base_seed, 0, ROLE_POOL))
    if probe.dim != 1:
        raise InvalidArgumentError("density histograms need a 1-D dataset")
    if runs < 1 or bins < 1 or not c0_list:
        raise InvalidArgumentError("need runs >= 1, bins >= 1 and a non-empty c0 list")
    lo, hi = _SUPPORT.get(dataset_spec.kind, (float(probe.x.min()), float(probe.x.max())))
    edges = np.linspace(lo, hi, bins + 1)

    raw = np.zeros((len(c0_list), bins))
    weighted_mass = np.zeros((len(c0_list), bins))
    for r in range(runs):
        pool = make_dataset(dataset_spec, seed=derive_seed(base_seed, r, ROLE_POOL))
        for ci, c0 in enumerate(c0_list):
            cfg = IwalConfig(
                c0=c0,
                gk_mode=gk_mode,
                erm_grid_resolution=erm_grid_resolution,
                seed=derive_seed(base_seed, r, ROLE_SELECTION, ci),
                selector_eta0=selector_eta0,
            )
            sel = select_iwal(pool, cfg)
            xs = np.asarray([wi.instance.features[0] for wi in sel.selected])
            ws = np.asarray([wi.weight for wi in sel.selected])
            raw[ci] += np.histogram(xs, bins=edges)[0]
            weighted_mass[ci] += np.histogram(xs, bins=edges, weights=ws)[0]

    rows = []
    for ci, c0 in enumerate(c0_list):
        raw_total = raw[ci].sum()
        w_total = weighted_mass[ci].sum()
        for b in range(bins):
            rows.append(
                DensityRow(
                    c0=float(c0),
                    bin=b,
                    lo=float(edges[b]),
                    hi=float(edges[b + 1]),
                    unweighted_mass=float(raw[ci, b] / raw_total) if raw_total else 0.0,
                    weighted_mass=float(weighted_mass[ci, b] / w_total) if w_total else 0.0,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Trace replay


@dataclass(frozen=True)
class ReplayOutcome:
    ok: bool
    row: int | None = None
    column: str | None = None
    expected: object = None
    actual: object = None

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return (
            f"divergence at row {self.row}, column {self.column}: "
            f"trace has {self.expected!r}, recomputed {self.actual!r}"
        )


def rerun_from_header(header: Mapping) -> SelectionResult:
    """Re-execute the selection pass a trace header describes."""
    spec = DatasetSpec.from_dict(header["dataset"])
    dataset = make_dataset(spec)
    split_info = header.get("split")
    if split_info:
        pair = split(
            dataset,
            split_info["test_prop"],
            split_info["seed"],
            scale_numeric=split_info.get("scale_numeric", False),
        )
        train = pair.train
    else:
        train = dataset
    strategy = header["strategy"]
    if strategy == RANDOM:
        return select_random(train, header["n"])
    if strategy == UNCERTAINTY:
        ranker = fit_online_linear(
            dataset_as_weighted(train),
            eta0=header.get("selector_eta0", 0.3),
            passes=1,
        )
        return select_uncertainty(train, header["n"], ranker)
    if strategy in (IWAL, IWAL_NO_WEIGHTS):
        cfg = IwalConfig(
            c0=header["c0"],
            gk_mode=header.get("gk_mode", SURROGATE),
            erm_grid_resolution=header.get("erm_grid_resolution", 64),
            seed=header["seed"],
            log_base=header.get("log_base"),
            selector_eta0=header.get("selector_eta0", 0.3),
        )
        return select_iwal(train, cfg, use_weights=header.get("use_weights", True))
    raise InvalidArgumentError(f"unknown strategy {strategy!r} in trace header")


def replay_trace(path) -> ReplayOutcome:
    """Re-run a trace's pass and compare row by row."""
    header, rows = load_trace(path)
    result = rerun_from_header(header)
    fields = TraceFieldsComparer(rows, result.trace)
    return fields.compare()


class TraceFieldsComparer:
    def __init__(self, recorded, recomputed):
        self.recorded = recorded
        self.recomputed = recomputed

    def compare(self) -> ReplayOutcome:
        n = max(len(self.recorded), len(self.recomputed))
        for i in range(n):
            if i >= len(self.recorded):
                return ReplayOutcome(False, i, "index", None, self.recomputed[i].index)
            if i >= len(self.recomputed):
                return ReplayOutcome(False, i, "index", self.recorded[i].index, None)
            a, b = self.recorded[i], self.recomputed[i]
            for column in a._fields:
                va, vb = getattr(a, column), getattr(b, column)
                if va != vb:
                    return ReplayOutcome(False, i, column, va, vb)
        return ReplayOutcome(True)
