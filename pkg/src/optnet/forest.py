"""Bagged regression trees grown on variance reduction.

Each tree gets its own random substream derived from (seed, tree index),
so growing a larger forest with the same seed reproduces the smaller
forest's trees as a prefix. Bootstrap rows are drawn with replacement;
each split considers a random subset of feature columns and picks the
threshold minimizing the summed squared error of the two children.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import seed_sequence
from .errors import EmptyInputError, InvalidConfigError, ShapeMismatchError


@dataclass
class ForestConfig:
    """Forest shape and sampling parameters.

    sample_ratio controls the bootstrap size ceil(sample_ratio * n_rows);
    feature_ratio controls how many columns each split may consider,
    ceil(feature_ratio * n_features). max_depth=None grows until leaves
    are pure or below min_leaf_size.
    """

    n_trees: int = 50
    sample_ratio: float = 0.7
    feature_ratio: float = 0.5
    max_depth: int | None = None
    min_leaf_size: int = 2

    def validate(self) -> None:
        if self.n_trees < 1:
            raise InvalidConfigError("n_trees must be at least 1")
        if not 0.0 < self.sample_ratio <= 1.0:
            raise InvalidConfigError("sample_ratio must lie in (0, 1]")
        if not 0.0 < self.feature_ratio <= 1.0:
            raise InvalidConfigError("feature_ratio must lie in (0, 1]")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidConfigError("max_depth must be non-negative")
        if self.min_leaf_size < 1:
            raise InvalidConfigError("min_leaf_size must be at least 1")


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Flattened binary tree. Node i is a leaf iff feature[i] < 0."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RegressionTree):
            return NotImplemented
        return (np.array_equal(self.feature, other.feature)
                and np.array_equal(self.threshold, other.threshold)
                and np.array_equal(self.left, other.left)
                and np.array_equal(self.right, other.right)
                and np.array_equal(self.value, other.value))

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        out = np.empty(X.shape[0])
        # route row blocks down the tree instead of walking row by row
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, f] <= self.threshold[node]
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out


@dataclass(frozen=True, eq=False)
class ForestModel:
    """A tuple of trees whose predictions are averaged."""

    trees: tuple[RegressionTree, ...]
    config: ForestConfig
    feature_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def __eq__(self, other):
        if not isinstance(other, ForestModel):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and self.config == other.config
                and self.trees == other.trees)


class _TreeGrower:
    def __init__(self, X, y, config, rng):
        self.X = X
        self.y = y
        self.config = config
        self.rng = rng
        self.n_candidates = max(1, math.ceil(config.feature_ratio * X.shape[1]))
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

    def grow(self, root_rows: np.ndarray) -> None:
        # preorder worklist, left child first, so random draws happen in
        # the same order a recursive implementation would make them
        cfg = self.config
        stack: list[tuple[np.ndarray, int, int, bool]] = [
            (root_rows, 0, -1, False)]
        while stack:
            rows, depth, parent, is_right = stack.pop()
            node = self._new_node()
            if parent >= 0:
                if is_right:
                    self.right[parent] = node
                else:
                    self.left[parent] = node
            y = self.y[rows]
            self.value[node] = float(y.mean())
            if (cfg.max_depth is not None and depth >= cfg.max_depth) \
                    or rows.size < 2 * cfg.min_leaf_size \
                    or np.all(y == y[0]):
                continue
            split = self._best_split(rows, y)
            if split is None:
                continue
            feat, thr = split
            self.feature[node] = feat
            self.threshold[node] = thr
            go_left = self.X[rows, feat] <= thr
            stack.append((rows[~go_left], depth + 1, node, True))
            stack.append((rows[go_left], depth + 1, node, False))

    def _best_split(self, rows, y):
        d = self.X.shape[1]
        candidates = self.rng.choice(d, size=min(self.n_candidates, d),
                                     replace=False)
        best_cost = np.inf
        best = None
        min_leaf = self.config.min_leaf_size
        n = rows.size
        for feat in candidates:
            x = self.X[rows, feat]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            ys = y[order]
            # summed squared error of every prefix/suffix in one pass
            csum = np.cumsum(ys)
            csq = np.cumsum(ys * ys)
            total_sum = csum[-1]
            total_sq = csq[-1]
            sizes = np.arange(1, n)
            left_sse = csq[:-1] - csum[:-1] ** 2 / sizes
            right_sum = total_sum - csum[:-1]
            right_sse = (total_sq - csq[:-1]) - right_sum ** 2 / (n - sizes)
            cost = left_sse + right_sse
            valid = (xs[:-1] < xs[1:]) \
                & (sizes >= min_leaf) & (n - sizes >= min_leaf)
            if not np.any(valid):
                continue
            cost = np.where(valid, cost, np.inf)
            k = int(np.argmin(cost))
            if cost[k] < best_cost:
                best_cost = cost[k]
                best = (int(feat), float((xs[k] + xs[k + 1]) / 2.0))
        return best

    def build(self) -> RegressionTree:
        n = self.X.shape[0]
        n_boot = max(1, math.ceil(self.config.sample_ratio * n))
        rows = self.rng.integers(0, n, size=n_boot)
        self.grow(rows)
        return RegressionTree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.value, dtype=np.float64),
        )


def fit_random_forest(features: np.ndarray, target: np.ndarray,
                      config: ForestConfig | None = None, seed: int = 0,
                      feature_names: tuple[str, ...] | None = None
                      ) -> ForestModel:
    """Grow config.n_trees trees, each from its own (seed, index) stream."""
    config = config or ForestConfig()
    config.validate()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatchError("features must be 2-d")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"{X.shape[0]} feature rows vs {y.shape[0]} targets")
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit on zero rows")
    if X.shape[1] == 0:
        raise EmptyInputError("forest needs at least one feature column")
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise ShapeMismatchError("feature_names length mismatch")
    trees = []
    for i in range(config.n_trees):
        rng = np.random.Generator(
            np.random.Philox(seed_sequence(seed, "tree", i)))
        trees.append(_TreeGrower(X, y, config, rng).build())
    return ForestModel(tuple(trees), config, tuple(feature_names))


def predict_forest(model: ForestModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatchError(
            f"expected (n, {model.n_features}) features, got {X.shape}")
    if X.shape[0] == 0:
        return np.zeros(0)
    acc = np.zeros(X.shape[0])
    for tree in model.trees:
        acc += tree.predict(X)
    return acc / len(model.trees)
