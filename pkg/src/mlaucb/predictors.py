"""Reward predictors used to turn features into surrogate rewards.

All models map a 2-feature vector to a scalar and share ``fit`` /
``predict``. ``predict`` accepts a single (2,) vector or an (m, 2) batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .stats_core import RandomStream

KINDS = ("linear", "tree", "mlp")


@dataclass(frozen=True)
class TrainingSet:
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.targets, dtype=float).ravel()
        if x.ndim != 2 or x.shape[1] != 2:
            raise ConfigurationError("features must have shape (m, 2)")
        if x.shape[0] != y.size or y.size < 2:
            raise ConfigurationError("features and targets need equal length >= 2")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "targets", y)


def _as_batch(x):
    arr = np.asarray(x, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr, arr.ndim == 1


class _Predictor:
    kind = ""

    def predict_batch(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x):
        batch, single = _as_batch(x)
        out = self.predict_batch(batch)
        return float(out[0]) if single else out


@dataclass
class LinearPredictor(_Predictor):
    coef: np.ndarray  # intercept, w1, w2
    kind = "linear"

    def predict_batch(self, x):
        return self.coef[0] + x @ self.coef[1:]


@dataclass
class TreePredictor(_Predictor):
    """Binary regression tree stored as flat node arrays.

    Leaves have ``feature == -1``; internal nodes send ``x[feature] <= threshold``
    to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    kind = "tree"

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict_batch(self, x):
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = x[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass
class MLPPredictor(_Predictor):
    """One hidden tanh layer, linear output."""

    w1: np.ndarray  # (2, width)
    b1: np.ndarray  # (width,)
    w2: np.ndarray  # (width,)
    b2: float
    losses: list = field(default_factory=list, repr=False)
    kind = "mlp"

    def predict_batch(self, x):
        return np.tanh(x @ self.w1 + self.b1) @ self.w2 + self.b2


def fit_linear(train: TrainingSet) -> LinearPredictor:
    design = np.column_stack([np.ones(len(train.targets)), train.features])
    coef, *_ = np.linalg.lstsq(design, train.targets, rcond=None)
    return LinearPredictor(coef)


def _best_split(x, y, min_leaf):
    """Best variance-reduction split of (x, y) over both features, or None."""
    m = y.size
    total = y.sum()
    base = total * total / m
    best = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        csum = np.cumsum(ys)[:-1]
        left_n = np.arange(1, m)
        right_n = m - left_n
        # reduction in SSE = sum_l^2/n_l + sum_r^2/n_r - total^2/m
        gain = csum ** 2 / left_n + (total - csum) ** 2 / right_n - base
        valid = (left_n >= min_leaf) & (right_n >= min_leaf) & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            best = (gain[i], j, 0.5 * (xs[i] + xs[i + 1]))
    if best is None or not best[0] > 1e-12 * max(abs(base), 1.0):
        return None
    return best[1], best[2]


def fit_tree(train: TrainingSet, max_depth: int = 6, min_leaf: int = 10) -> TreePredictor:
    if max_depth < 0 or min_leaf < 1:
        raise ConfigurationError("tree needs max_depth >= 0 and min_leaf >= 1")
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(train.targets[idx].mean()))
        if depth >= max_depth or idx.size < 2 * min_leaf:
            return node
        split = _best_split(train.features[idx], train.targets[idx], min_leaf)
        if split is None:
            return node
        j, thr = split
        mask = train.features[idx, j] <= thr
        feature[node], threshold[node] = j, thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(train.targets)), 0)
    return TreePredictor(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )


def mlp_loss_and_grad(params, x, y):
    """Half mean squared error of an MLP and its gradient.

    ``params`` is the tuple ``(w1, b1, w2, b2)``; the gradient has the same
    layout.
    """
    w1, b1, w2, b2 = params
    hidden = np.tanh(x @ w1 + b1)
    err = hidden @ w2 + b2 - y
    m = y.size
    loss = 0.5 * float(err @ err) / m
    g_out = err / m
    g_w2 = hidden.T @ g_out
    g_b2 = float(g_out.sum())
    g_hidden = np.outer(g_out, w2) * (1.0 - hidden ** 2)
    g_w1 = x.T @ g_hidden
    g_b1 = g_hidden.sum(axis=0)
    return loss, (g_w1, g_b1, g_w2, g_b2)


def fit_mlp(train: TrainingSet, stream: RandomStream, width: int = 32,
            steps: int = 2000, step_size: float = 0.01) -> MLPPredictor:
    if width < 1 or steps < 0 or not step_size > 0:
        raise ConfigurationError("mlp needs width >= 1, steps >= 0, step_size > 0")
    w1 = stream.normal((2, width)) / math.sqrt(2.0)
    b1 = np.zeros(width)
    w2 = stream.normal(width) / math.sqrt(width)
    b2 = float(train.targets.mean())
    params = [w1, b1, w2, b2]
    losses = []
    for _ in range(steps):
        loss, grads = mlp_loss_and_grad(params, train.features, train.targets)
        losses.append(loss)
        for i, g in enumerate(grads):
            params[i] = params[i] - step_size * g
    return MLPPredictor(*params, losses=losses)


def fit(kind: str, train: TrainingSet, stream: RandomStream | None = None, **hyper):
    """Fit a predictor of ``kind`` in {linear, tree, mlp}.

    Hyperparameters are passed through by keyword (``max_depth``,
    ``min_leaf`` for trees; ``width``, ``steps``, ``step_size`` for the MLP).
    """
    if kind == "linear":
        return fit_linear(train)
    if kind == "tree":
        return fit_tree(train, **hyper)
    if kind == "mlp":
        if stream is None:
            raise ConfigurationError("the mlp predictor needs a random stream for its initialization")
        return fit_mlp(train, stream, **hyper)
    raise ConfigurationError(f"unknown predictor kind {kind!r}; expected one of {KINDS}", "predictor")


def predict(model, x):
    return model.predict(x)


def empirical_rho2(preds, rewards) -> float:
    """Squared Pearson correlation; 0 when either input is constant."""
    p = np.asarray(preds, dtype=float).ravel()
    r = np.asarray(rewards, dtype=float).ravel()
    if p.size != r.size or p.size < 2:
        raise ValueError("empirical_rho2 needs two sequences of equal length >= 2")
    if np.ptp(p) == 0.0 or np.ptp(r) == 0.0:
        return 0.0
    dp = p - p.mean()
    dr = r - r.mean()
    spp = float(dp @ dp)
    srr = float(dr @ dr)
    spr = float(dp @ dr)
    return min(spr * spr / (spp * srr), 1.0)
