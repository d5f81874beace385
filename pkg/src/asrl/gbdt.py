"""Second-order gradient-boosted regression trees with pluggable losses.

Trees are grown depth-first with an exact greedy split search. Each node
keeps, per feature, its row indices sorted by that feature's value, so
children inherit sorted order through a stable filter instead of re-sorting.
Split scoring is vectorized across all features of a node at once.

Routing rule: a row goes left when ``x[feature] < threshold``. Thresholds are
the smallest feature value of the right child, so the partition seen at
training time is reproduced exactly at prediction time.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from asrl.errors import DomainError, InvariantError
from asrl.losses import DEFAULT_H_FLOOR, LossFunction, loss_from_descriptor

__all__ = [
    "Dataset",
    "TrainConfig",
    "RegressionTree",
    "GBDTModel",
    "RoundInfo",
    "build_tree",
    "newton_inputs",
    "train",
    "predict",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1

CURVATURES = ("irls", "hessian")
HESSIAN_SCALES = ("median", "none")

# relative slack below which a split's gain counts as rounding noise
_GAIN_RTOL = 1e-10


class Dataset:
    """Immutable feature matrix, target vector and column labels."""

    __slots__ = ("_X", "_y", "_names")

    def __init__(self, features, target, feature_names: Sequence[str] | None = None):
        X = np.array(features, dtype=float)
        y = np.array(target, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DomainError(f"features must be an n x d matrix with n, d >= 1, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise DomainError(f"target length {y.shape[0]} != feature rows {X.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("dataset contains non-finite values")
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(X.shape[1])]
        feature_names = tuple(str(n) for n in feature_names)
        if len(feature_names) != X.shape[1]:
            raise DomainError(f"{len(feature_names)} feature names for {X.shape[1]} columns")
        X.flags.writeable = False
        y.flags.writeable = False
        self._X, self._y, self._names = X, y, feature_names

    @property
    def features(self) -> np.ndarray:
        return self._X

    @property
    def target(self) -> np.ndarray:
        return self._y

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def n_rows(self) -> int:
        return self._X.shape[0]

    @property
    def n_features(self) -> int:
        return self._X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self._X[rows], self._y[rows], self._names)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._names == other._names
            and np.array_equal(self._X, other._X)
            and np.array_equal(self._y, other._y)
        )

    def __repr__(self):
        return f"Dataset(n={self.n_rows}, d={self.n_features})"


@dataclass(frozen=True)
class TrainConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    h_floor: float = DEFAULT_H_FLOOR
    seed: int = 0
    curvature: str = "irls"
    hessian_scale: str = "median"

    def __post_init__(self):
        if not (isinstance(self.n_rounds, (int, np.integer)) and self.n_rounds >= 0):
            raise DomainError(f"n_rounds must be a nonnegative integer, got {self.n_rounds!r}")
        if not (0.0 < self.learning_rate <= 1.0):
            raise DomainError(f"learning_rate must lie in (0, 1], got {self.learning_rate!r}")
        if not (isinstance(self.max_depth, (int, np.integer)) and self.max_depth >= 0):
            raise DomainError(f"max_depth must be a nonnegative integer, got {self.max_depth!r}")
        if not self.min_child_weight >= 0:
            raise DomainError(f"min_child_weight must be >= 0, got {self.min_child_weight!r}")
        if not self.reg_lambda >= 0:
            raise DomainError(f"reg_lambda must be >= 0, got {self.reg_lambda!r}")
        if not self.h_floor > 0:
            raise DomainError(f"h_floor must be > 0, got {self.h_floor!r}")
        if self.curvature not in CURVATURES:
            raise DomainError(f"curvature must be one of {CURVATURES}, got {self.curvature!r}")
        if self.hessian_scale not in HESSIAN_SCALES:
            raise DomainError(f"hessian_scale must be one of {HESSIAN_SCALES}, got {self.hessian_scale!r}")


@dataclass
class RegressionTree:
    """Flat array tree. ``feature[i] == -1`` marks node ``i`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def depth(self) -> int:
        def _d(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(_d(self.left[i]), _d(self.right[i]))

        return _d(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            feat = self.feature[cur]
            go_left = X[active, feat] < self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.intp),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.intp),
            right=np.asarray(d["right"], dtype=np.intp),
            value=np.asarray(d["value"], dtype=float),
        )


class _TreeBuilder:
    def __init__(self, g, h, X, config: TrainConfig, presorted=None):
        self.g = g
        self.h = h
        self.XT = np.ascontiguousarray(X.T)
        self.cfg = config
        self.lam = config.reg_lambda
        if presorted is None:
            presorted = np.argsort(self.XT, axis=1, kind="stable")
        self.root_order = presorted
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _best_split(self, order):
        """Best (gain, feature, position) for a node, or None."""
        d, m = order.shape
        if m < 2:
            return None
        gs = self.g[order]
        hs = self.h[order]
        xs = np.take_along_axis(self.XT, order, axis=1)
        GL = np.cumsum(gs, axis=1)[:, :-1]
        HL = np.cumsum(hs, axis=1)[:, :-1]
        G = gs[0].sum()
        H = hs[0].sum()
        GR = G - GL
        HR = H - HL
        lam = self.lam
        mcw = self.cfg.min_child_weight
        valid = (xs[:, :-1] < xs[:, 1:]) & (HL >= mcw) & (HR >= mcw)
        if not valid.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            parent = G * G / (H + lam)
            gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
        gain = np.where(valid & np.isfinite(gain), gain, -np.inf)
        # first maximum in row-major order: lowest feature, then lowest threshold
        flat = int(np.argmax(gain))
        best = gain.flat[flat]
        if not best > _GAIN_RTOL * abs(0.5 * parent):
            return None
        f, pos = divmod(flat, m - 1)
        return best, f, pos, float(xs[f, pos + 1])

    def _leaf_weight(self, rows):
        G = self.g[rows].sum()
        H = self.h[rows].sum()
        denom = H + self.lam
        return float(-G / denom) if denom > 0 else 0.0

    def grow(self, order, depth):
        node = self._new_node()
        rows = order[0]
        self.value[node] = self._leaf_weight(rows)
        if depth >= self.cfg.max_depth:
            return node
        split = self._best_split(order)
        if split is None:
            return node
        _, f, pos, thr = split
        go_left = np.zeros(self.g.shape[0], dtype=bool)
        go_left[order[f, : pos + 1]] = True
        n_left = pos + 1
        d = order.shape[0]
        sel = go_left[order]
        left_order = order[sel].reshape(d, n_left)
        right_order = order[~sel].reshape(d, -1)
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.grow(left_order, depth + 1)
        self.right[node] = self.grow(right_order, depth + 1)
        return node

    def build(self) -> RegressionTree:
        self.grow(self.root_order, 0)
        return RegressionTree(
            feature=np.asarray(self.feature, dtype=np.intp),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.intp),
            right=np.asarray(self.right, dtype=np.intp),
            value=np.asarray(self.value, dtype=float),
        )


def build_tree(gradients, hessians, data: Dataset, config: TrainConfig, presorted=None) -> RegressionTree:
    """Fit one regression tree to per-row gradients and hessians.

    Gain of a split is ``0.5 * [GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)]``;
    a node splits only on positive gain with both children meeting
    ``min_child_weight``. Leaf weight is ``-G / (H + lam)``.
    """
    g = np.asarray(gradients, dtype=float)
    h = np.asarray(hessians, dtype=float)
    n = data.n_rows
    if g.shape != (n,) or h.shape != (n,):
        raise DomainError(f"gradients/hessians must have length {n}")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise DomainError("gradients and hessians must be finite")
    return _TreeBuilder(g, h, data.features, config, presorted).build()


@dataclass
class GBDTModel:
    base_score: float
    learning_rate: float
    trees: list[RegressionTree]
    loss_descriptor: dict
    n_features: int
    config: TrainConfig = field(default_factory=TrainConfig)

    def predict(self, features) -> np.ndarray:
        return predict(self, features)

    def to_json(self) -> str:
        doc = {
            "format": "asrl-gbdt",
            "format_version": MODEL_FORMAT_VERSION,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "loss": self.loss_descriptor,
            "config": asdict(self.config),
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GBDTModel":
        doc = json.loads(text)
        if doc.get("format") != "asrl-gbdt":
            raise DomainError("not an asrl-gbdt model document")
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise DomainError(f"unsupported model format_version {doc.get('format_version')!r}")
        loss_from_descriptor(doc["loss"])  # validates the descriptor
        return cls(
            base_score=float(doc["base_score"]),
            learning_rate=float(doc["learning_rate"]),
            trees=[RegressionTree.from_dict(t) for t in doc["trees"]],
            loss_descriptor=dict(doc["loss"]),
            n_features=int(doc["n_features"]),
            config=TrainConfig(**doc["config"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "GBDTModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class RoundInfo:
    """Snapshot handed to the ``on_round`` callback of :func:`train`.

    ``residuals`` and ``loss`` are the inputs the round's tree was fitted on;
    ``predictions`` is F after the tree was added.
    """

    round: int
    residuals: np.ndarray
    loss: LossFunction
    tree: RegressionTree
    predictions: np.ndarray


def newton_inputs(loss: LossFunction, y, F, config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (g, h) handed to the tree builder for one round.

    ``curvature="hessian"`` uses the floored second derivative;
    ``"irls"`` uses the loss's majorizer weight, which stays informative in
    regions where the loss is linear or concave. ``hessian_scale="median"``
    divides both g and h by median(h), a positive rescaling of the loss that
    leaves every leaf's Newton step direction unchanged but makes
    ``reg_lambda`` and ``min_child_weight`` count in units of typical rows.
    """
    g = np.asarray(loss.gradient(y, F), dtype=float)
    if config.curvature == "irls":
        h = np.asarray(loss.majorizer(y, F, config.h_floor), dtype=float)
    else:
        h = np.asarray(loss.hessian(y, F, config.h_floor), dtype=float)
    if config.hessian_scale == "median":
        scale = float(np.median(h))
        g = g / scale
        h = h / scale
    return g, h


def train(
    data: Dataset,
    config: TrainConfig,
    loss: LossFunction,
    on_round: Callable[[RoundInfo], None] | None = None,
) -> GBDTModel:
    """Boost ``config.n_rounds`` trees against ``loss`` starting from mean(y).

    Adaptive losses (ASRL) are refitted to the full training residuals at the
    start of every round. Training is deterministic; ``config.seed`` is
    recorded but no step is randomized.
    """
    if not isinstance(config, TrainConfig):
        raise DomainError("config must be a TrainConfig")
    X, y = data.features, data.target
    base = float(np.mean(y))
    F = np.full(y.shape, base)
    presorted = np.argsort(np.ascontiguousarray(X.T), axis=1, kind="stable")
    lr = config.learning_rate
    trees = []
    for k in range(config.n_rounds):
        residuals = y - F
        loss = loss.refreshed(residuals)
        g, h = newton_inputs(loss, y, F, config)
        tree = build_tree(g, h, data, config, presorted)
        F = F + lr * tree.predict(X)
        trees.append(tree)
        if on_round is not None:
            residuals.flags.writeable = False
            on_round(RoundInfo(k, residuals, loss, tree, F))
    if not np.all(np.isfinite(F)):
        raise InvariantError("training diverged to non-finite predictions")
    desc = loss.descriptor()
    return GBDTModel(base, lr, trees, desc, data.n_features, config)


def predict(model: GBDTModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DomainError(f"expected {model.n_features} feature columns, got shape {X.shape}")
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out = out + model.learning_rate * tree.predict(X)
    return out
