"""Importance-weighted trainable models and error measures.

The online linear model is the selector used during active selection; the
batch learners (weighted least squares, LDA, QDA, kernel SVM) are the
consumers trained on a finished selection. Every batch learner satisfies
two identities that the tests rely on: training on ``(x, y, w=k)`` with
integer ``k`` equals training on ``k`` unit-weight copies, and scaling all
weights by a positive constant leaves predictions unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .datasets import Dataset, Instance
from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    MissingClassError,
    SingularDataError,
)

# Condition-number ceiling beyond which a normal/covariance matrix is
# treated as singular (exact one-hot collinearity lands far above this).
_COND_LIMIT = 1e12


class WeightedInstance(NamedTuple):
    """An instance with its importance weight (1/selection-probability)."""

    instance: Instance
    weight: float


def weighted(features, label, weight=1.0) -> WeightedInstance:
    return WeightedInstance(Instance(np.asarray(features, dtype=np.float64), int(label)), float(weight))


def dataset_as_weighted(dataset: Dataset, weight: float = 1.0) -> list[WeightedInstance]:
    return [WeightedInstance(dataset.instance(i), weight) for i in range(len(dataset))]


def as_arrays(samples: Sequence[WeightedInstance]):
    """Stack weighted instances into (X, y, w) arrays."""
    if len(samples) == 0:
        raise InvalidArgumentError("need at least one sample")
    x = np.stack([np.asarray(s.instance.features, dtype=np.float64) for s in samples])
    y = np.asarray([s.instance.label for s in samples], dtype=np.float64)
    w = np.asarray([s.weight for s in samples], dtype=np.float64)
    if np.any(w <= 0):
        raise InvalidArgumentError("weights must be positive")
    return x, y, w


def _require_both_classes(y):
    if not (np.any(y > 0) and np.any(y < 0)):
        raise MissingClassError("training set contains a single class")


def _scores(model, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    s = model.score_matrix(np.atleast_2d(x))
    return s[0] if single else s


class _ModelBase:
    """Shared prediction plumbing; subclasses provide ``score_matrix``."""

    def score(self, features):
        return _scores(self, features)

    def predict(self, features):
        s = self.score(features)
        return np.where(np.asarray(s) >= 0.0, 1, -1) if np.ndim(s) else (1 if s >= 0.0 else -1)


# ---------------------------------------------------------------------------
# Online linear selector (importance-aware squared-hinge updates)


def inv_sqrt_schedule(eta0: float = 0.3) -> Callable[[int], float]:
    """Step sizes eta0/sqrt(t) for t = 1, 2, ...; eta0 must stay below 0.5."""
    if not (0.0 < eta0 < 0.5):
        raise InvalidArgumentError("eta0 must lie in (0, 0.5) for a stable update")
    return lambda t: eta0 / math.sqrt(t)


def constant_schedule(eta: float) -> Callable[[int], float]:
    if not (0.0 < eta < 0.5):
        raise InvalidArgumentError("eta must lie in (0, 0.5) for a stable update")
    return lambda t: eta


@dataclass(frozen=True)
class OnlineLinearModel(_ModelBase):
    kind = "online-linear"

    theta: np.ndarray
    bias: float
    updates: int = 0

    def score_matrix(self, x):
        return x @ self.theta + self.bias


def make_online_model(dim: int) -> OnlineLinearModel:
    if dim <= 0:
        raise InvalidArgumentError("dim must be positive")
    return OnlineLinearModel(theta=np.zeros(dim), bias=0.0, updates=0)


def online_linear_update(
    model: OnlineLinearModel,
    instance: Instance,
    importance: float,
    schedule: Callable[[int], float] | None = None,
) -> OnlineLinearModel:
    """One importance-weighted squared-hinge gradient step.

    The step is scaled so that an importance of ``k`` reproduces exactly
    ``k`` consecutive unit-importance updates on the same example under a
    frozen step size: the margin gap decays geometrically per unit update,
    so the combined step has the closed form ``(1 - (1-q)^k) / q`` with
    ``q = 2 * eta``. The raw step is normalized by the squared example
    norm, which keeps ``q`` below 1 for any feature scale.
    """
    if importance < 0:
        raise InvalidArgumentError("importance must be non-negative")
    x = np.asarray(instance.features, dtype=np.float64)
    if x.shape != model.theta.shape:
        raise InvalidArgumentError(
            f"dimension mismatch: model has {model.theta.shape[0]}, example has {x.shape[0]}"
        )
    margin = instance.label * (float(x @ model.theta) + model.bias)
    if importance == 0.0 or margin >= 1.0:
        return model
    schedule = schedule or inv_sqrt_schedule()
    t = model.updates + 1
    eta = schedule(t)
    norm2 = float(x @ x) + 1.0  # bias acts as an always-on feature
    q = 2.0 * eta
    if not (0.0 < q < 1.0):
        raise InvalidArgumentError("schedule step must lie in (0, 0.5)")
    combined = (1.0 - (1.0 - q) ** importance) / q
    coef = 2.0 * (eta / norm2) * (1.0 - margin) * instance.label * combined
    return OnlineLinearModel(
        theta=model.theta + coef * x,
        bias=model.bias + coef,
        updates=t,
    )


def fit_online_linear(
    samples: Sequence[WeightedInstance],
    eta0: float = 0.3,
    passes: int = 1,
) -> OnlineLinearModel:
    """Train the online linear model by streaming over the samples."""
    x, y, w = as_arrays(samples)
    schedule = inv_sqrt_schedule(eta0)
    model = make_online_model(x.shape[1])
    for _ in range(passes):
        for i in range(len(samples)):
            model = online_linear_update(model, Instance(x[i], int(y[i])), w[i], schedule)
    return model


# ---------------------------------------------------------------------------
# Weighted least squares


@dataclass(frozen=True)
class LeastSquaresModel(_ModelBase):
    kind = "least-squares"

    theta: np.ndarray
    bias: float
    ridge: float = 0.0

    def score_matrix(self, x):
        return x @ self.theta + self.bias


def fit_least_squares(samples: Sequence[WeightedInstance], ridge: float = 0.0) -> LeastSquaresModel:
    """Minimize sum_i w_i (theta.x_i + b - y_i)^2 + ridge * |theta|^2.

    Weights are normalized to sum to one internally, so duplicating a
    sample is identical to doubling its weight and a global weight rescale
    never changes the solution, with or without the ridge term.
    """
    if ridge < 0:
        raise InvalidArgumentError("ridge must be non-negative")
    x, y, w = as_arrays(samples)
    wn = w / w.sum()
    xa = np.column_stack((x, np.ones(len(x))))
    a = (xa * wn[:, None]).T @ xa
    a[np.diag_indices(x.shape[1])] += ridge
    rhs = xa.T @ (wn * y)
    if ridge == 0.0 and _cond_exceeds(a):
        raise SingularDataError("normal equations are singular; use ridge > 0")
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularDataError("normal equations are singular; use ridge > 0") from exc
    return LeastSquaresModel(theta=sol[:-1], bias=float(sol[-1]), ridge=float(ridge))


def _cond_exceeds(a, limit=_COND_LIMIT):
    sv = np.linalg.svd(a, compute_uv=False)
    return sv[-1] <= 0 or sv[0] / sv[-1] > limit


# ---------------------------------------------------------------------------
# Gaussian discriminants (LDA / QDA)


@dataclass(frozen=True)
class GaussianModel(_ModelBase):
    """Two-class Gaussian discriminant; ``kind`` is "lda" or "qda"."""

    kind: str
    means: np.ndarray       # (2, d), row 0 = class -1, row 1 = class +1
    covariances: np.ndarray  # (2, d, d); identical rows for LDA
    log_priors: np.ndarray   # (2,)

    def score_matrix(self, x):
        out = np.zeros(x.shape[0])
        for c, sign in ((1, +1.0), (0, -1.0)):
            diff = x - self.means[c]
            inv = _inverse(self.covariances[c])
            quad = np.einsum("ij,jk,ik->i", diff, inv, diff)
            _, logdet = np.linalg.slogdet(self.covariances[c])
            out += sign * (-0.5 * quad - 0.5 * logdet + self.log_priors[c])
        return out


def _inverse(cov):
    try:
        return np.linalg.inv(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularDataError("covariance is singular") from exc


def _weighted_moments(x, y, w):
    """Per-class weighted priors, means and scatter matrices."""
    total = w.sum()
    stats = []
    for cls in (-1.0, 1.0):
        mask = y == cls
        wc = w[mask]
        xc = x[mask]
        weight = wc.sum()
        mean = (wc[:, None] * xc).sum(axis=0) / weight
        centered = xc - mean
        scatter = (centered * wc[:, None]).T @ centered
        stats.append((weight / total, mean, scatter, weight))
    return stats


def _check_covariance(cov):
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet) or _cond_exceeds(cov):
        raise SingularDataError("covariance is singular")


def fit_lda(samples: Sequence[WeightedInstance]) -> GaussianModel:
    """Weighted linear discriminant: shared pooled covariance."""
    x, y, w = as_arrays(samples)
    _require_both_classes(y)
    stats = _weighted_moments(x, y, w)
    pooled = (stats[0][2] + stats[1][2]) / w.sum()
    _check_covariance(pooled)
    return GaussianModel(
        kind="lda",
        means=np.stack([stats[0][1], stats[1][1]]),
        covariances=np.stack([pooled, pooled]),
        log_priors=np.log(np.asarray([stats[0][0], stats[1][0]])),
    )


def fit_qda(samples: Sequence[WeightedInstance]) -> GaussianModel:
    """Weighted quadratic discriminant: one covariance per class."""
    x, y, w = as_arrays(samples)
    _require_both_classes(y)
    stats = _weighted_moments(x, y, w)
    covs = []
    for prior, mean, scatter, weight in stats:
        cov = scatter / weight
        _check_covariance(cov)
        covs.append(cov)
    return GaussianModel(
        kind="qda",
        means=np.stack([stats[0][1], stats[1][1]]),
        covariances=np.stack(covs),
        log_priors=np.log(np.asarray([stats[0][0], stats[1][0]])),
    )


# ---------------------------------------------------------------------------
# Kernel SVM (pairwise SMO on the soft-margin dual)


@dataclass(frozen=True)
class Kernel:
    """Kernel spec: linear, poly3 (degree 3, coef0 1), or rbf."""

    kind: str
    gamma: float | None = None  # rbf only; None means 1/dim

    def __post_init__(self):
        if self.kind not in ("linear", "poly3", "rbf"):
            raise InvalidArgumentError(f"unknown kernel {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidArgumentError("gamma must be positive")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return a @ b.T
        if self.kind == "poly3":
            return (a @ b.T + 1.0) ** 3
        gamma = self.gamma if self.gamma is not None else 1.0 / a.shape[1]
        sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))


linear_kernel = Kernel("linear")
poly3_kernel = Kernel("poly3")


def rbf_kernel(gamma: float | None = None) -> Kernel:
    return Kernel("rbf", gamma=gamma)


@dataclass(frozen=True)
class SvmModel(_ModelBase):
    kind: str                 # svm-linear | svm-poly3 | svm-rbf
    kernel: Kernel
    support_x: np.ndarray     # (m, d) support vectors
    dual_coef: np.ndarray     # (m,) alpha_i * y_i
    bias: float
    dual_objective: float
    iterations: int

    def score_matrix(self, x):
        return self.kernel.matrix(x, self.support_x) @ self.dual_coef + self.bias


_SVM_KIND = {"linear": "svm-linear", "poly3": "svm-poly3", "rbf": "svm-rbf"}


def fit_svm(
    samples: Sequence[WeightedInstance],
    kernel: Kernel = linear_kernel,
    cost: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 10_000,
) -> SvmModel:
    """Soft-margin kernel SVM with per-sample box 0 <= alpha_i <= cost * w_i.

    Solved by maximal-violating-pair SMO on the dual with a cached kernel
    matrix; a "pass" is n pairwise updates. Raises ConvergenceError (with
    the remaining duality gap) when the cap is hit before the KKT
    violation drops below ``tol``.
    """
    if cost <= 0:
        raise InvalidArgumentError("cost must be positive")
    x, y, w = as_arrays(samples)
    _require_both_classes(y)
    if kernel.kind == "rbf" and kernel.gamma is None:
        kernel = Kernel("rbf", gamma=1.0 / x.shape[1])
    n = len(y)
    box = cost * w
    k = kernel.matrix(x, x)
    q = k * np.outer(y, y)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - sum(a)
    max_iter = max_passes * n
    iterations = 0
    while True:
        neg_yg = -y * grad
        up = np.where(y > 0, alpha < box - 1e-12, alpha > 1e-12)
        low = np.where(y > 0, alpha > 1e-12, alpha < box - 1e-12)
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, neg_yg, -np.inf)))
        j = int(np.argmin(np.where(low, neg_yg, np.inf)))
        violation = neg_yg[i] - neg_yg[j]
        if violation <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"SMO did not reach tol={tol} within {max_passes} passes",
                duality_gap=_duality_gap(alpha, grad, y, box),
            )
        # curvature along the feasible pair direction: |phi(x_i) - phi(x_j)|^2
        curvature = k[i, i] + k[j, j] - 2.0 * k[i, j]
        step = violation / curvature if curvature > 1e-15 else np.inf
        room_i = (box[i] - alpha[i]) if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else (box[j] - alpha[j])
        step = min(step, room_i, room_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += step * (y[i] * q[:, i] - y[j] * q[:, j])
        iterations += 1

    neg_yg = -y * grad
    up = np.where(y > 0, alpha < box - 1e-12, alpha > 1e-12)
    low = np.where(y > 0, alpha > 1e-12, alpha < box - 1e-12)
    hi = np.max(np.where(up, neg_yg, -np.inf)) if up.any() else 0.0
    lo = np.min(np.where(low, neg_yg, np.inf)) if low.any() else 0.0
    bias = float((hi + lo) / 2.0)
    objective = float(alpha.sum() - 0.5 * alpha @ (q @ alpha))

    support = alpha > 1e-12
    return SvmModel(
        kind=_SVM_KIND[kernel.kind],
        kernel=kernel,
        support_x=x[support],
        dual_coef=alpha[support] * y[support],
        bias=bias,
        dual_objective=objective,
        iterations=iterations,
    )


def _duality_gap(alpha, grad, y, box):
    # primal(f) - dual(alpha) with the decision function implied by alpha;
    # (Q alpha)_i = grad_i + 1 equals y_i * f(x_i) before the bias term
    dual = alpha.sum() - 0.5 * alpha @ (grad + 1.0)
    hinge = np.maximum(0.0, 1.0 - (grad + 1.0))
    primal = 0.5 * alpha @ (grad + 1.0) + box @ hinge
    return float(primal - dual)


# ---------------------------------------------------------------------------
# Error measures


def zero_one_error(model, dataset: Dataset) -> float:
    """Fraction of dataset instances the model misclassifies."""
    if len(dataset) == 0:
        raise InvalidArgumentError("dataset is empty")
    return float(np.mean(model.predict(dataset.x) != dataset.y))


def weighted_error(model, samples: Sequence[WeightedInstance]) -> float:
    """Normalized weight of the misclassified samples."""
    x, y, w = as_arrays(samples)
    wrong = model.predict(x) != y
    return float(w[wrong].sum() / w.sum())


# ---------------------------------------------------------------------------
# Serialization (versioned text format)

_FORMAT_TAG = "reuselab-model v1"


def model_to_text(model) -> str:
    """Serialize a fitted model; floats round-trip exactly via repr."""
    if isinstance(model, OnlineLinearModel):
        payload = {"theta": model.theta.tolist(), "bias": model.bias, "updates": model.updates}
    elif isinstance(model, LeastSquaresModel):
        payload = {"theta": model.theta.tolist(), "bias": model.bias, "ridge": model.ridge}
    elif isinstance(model, GaussianModel):
        payload = {
            "means": model.means.tolist(),
            "covariances": model.covariances.tolist(),
            "log_priors": model.log_priors.tolist(),
        }
    elif isinstance(model, SvmModel):
        payload = {
            "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
            "support_x": model.support_x.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "dual_objective": model.dual_objective,
            "iterations": model.iterations,
        }
    else:
        raise InvalidArgumentError(f"cannot serialize {type(model).__name__}")
    return _FORMAT_TAG + "\n" + json.dumps({"kind": model.kind, **payload})


def model_from_text(text: str):
    lines = text.strip().split("\n", 1)
    if len(lines) != 2 or lines[0].strip() != _FORMAT_TAG:
        raise InvalidArgumentError(f"expected a {_FORMAT_TAG!r} document")
    d = json.loads(lines[1])
    kind = d["kind"]
    if kind == "online-linear":
        return OnlineLinearModel(np.asarray(d["theta"]), d["bias"], d["updates"])
    if kind == "least-squares":
        return LeastSquaresModel(np.asarray(d["theta"]), d["bias"], d["ridge"])
    if kind in ("lda", "qda"):
        return GaussianModel(
            kind,
            np.asarray(d["means"]),
            np.asarray(d["covariances"]),
            np.asarray(d["log_priors"]),
        )
    if kind in _SVM_KIND.values():
        return SvmModel(
            kind,
            Kernel(d["kernel"]["kind"], d["kernel"]["gamma"]),
            np.asarray(d["support_x"]),
            np.asarray(d["dual_coef"]),
            d["bias"],
            d["dual_objective"],
            d["iterations"],
        )
    raise InvalidArgumentError(f"unknown model kind {kind!r}")
