"""Greedy binary regression tree grown by sum-of-squares decrease.

Split search per node: for every feature, sort once and sweep candidate
boundaries with prefix sums; thresholds sit at midpoints of adjacent
distinct values. The winning candidate's decrease is then recomputed from
the raw definition sum((y - mean)^2) on each side, and the split is kept
only if that exact decrease is strictly positive. Ties prefer the lowest
feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureMatrix
from .config import CartParams


def node_sse(y: np.ndarray) -> float:
    """Within-node sum of squares around the node mean; 0 for n <= 1."""
    if y.size <= 1:
        return 0.0
    d = y - y.mean()
    return float((d * d).sum())


@dataclass(frozen=True, slots=True)
class CartSplit:
    feature: int
    threshold: float
    decrease: float


@dataclass(slots=True)
class TreeNode:
    prediction: float
    n: int
    sse: float
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"prediction": self.prediction, "n": self.n, "sse": self.sse}
        return {
            "prediction": self.prediction,
            "n": self.n,
            "sse": self.sse,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        node = cls(
            prediction=float(data["prediction"]),
            n=int(data["n"]),
            sse=float(data["sse"]),
        )
        if "feature" in data:
            node.feature = int(data["feature"])
            node.threshold = float(data["threshold"])
            node.left = cls.from_dict(data["left"])
            node.right = cls.from_dict(data["right"])
        return node


def _best_candidate(
    X: np.ndarray, y: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    """Prefix-sum sweep over all (feature, boundary) candidates.

    Returns the (feature, midpoint threshold) with the largest estimated
    decrease, or None when no boundary satisfies the min_leaf constraint.
    """
    n = y.size
    best_dec = 0.0
    best: tuple[int, float] | None = None
    counts = np.arange(1, n, dtype=np.float64)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        if xs[0] == xs[-1]:
            continue
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        total1, total2 = s1[-1], s2[-1]
        left1, left2 = s1[:-1], s2[:-1]
        with np.errstate(invalid="ignore"):
            left_sse = left2 - left1 * left1 / counts
            right_sse = (total2 - left2) - (total1 - left1) ** 2 / (n - counts)
        # decrease = parent - left - right; parent is constant within the
        # node, so maximizing -(left + right) picks the same candidate.
        score = -(left_sse + right_sse)
        valid = (xs[1:] != xs[:-1]) & (counts >= min_leaf) & (counts <= n - min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        a = int(np.argmax(score))  # first max -> lowest threshold in this feature
        parent = total2 - total1 * total1 / n
        dec = parent + score[a]
        if best is None or dec > best_dec:
            best_dec = dec
            best = (j, (xs[a] + xs[a + 1]) / 2.0)
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    params: CartParams,
    records: list[CartSplit],
) -> TreeNode:
    node = TreeNode(prediction=float(y.mean()), n=int(y.size), sse=node_sse(y))
    if depth >= params.max_depth or y.size < 2 * params.min_leaf:
        return node
    candidate = _best_candidate(X, y, params.min_leaf)
    if candidate is None:
        return node
    feature, threshold = candidate
    mask = X[:, feature] <= threshold
    if mask.all() or not mask.any():
        # Midpoint of two adjacent floats can round onto one of them.
        return node
    decrease = node.sse - node_sse(y[mask]) - node_sse(y[~mask])
    if decrease <= 0.0:
        return node
    records.append(CartSplit(feature=feature, threshold=threshold, decrease=decrease))
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(X[mask], y[mask], depth + 1, params, records)
    node.right = _grow(X[~mask], y[~mask], depth + 1, params, records)
    return node


@dataclass(slots=True)
class RegressionTree:
    root: TreeNode
    n_features: int
    params: CartParams
    splits: list[CartSplit] = field(default_factory=list)
    columns: tuple[str, ...] | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.empty(X.shape[0], dtype=np.float64)
        for i in range(X.shape[0]):
            node = self.root
            while node.feature is not None:
                node = node.left if X[i, node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out

    def leaves(self) -> list[TreeNode]:
        out: list[TreeNode] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def total_sse(self) -> float:
        """R(T): sum of within-leaf sums of squares."""
        return sum(leaf.sse for leaf in self.leaves())

    def to_dict(self) -> dict:
        return {
            "root": self.root.to_dict(),
            "n_features": self.n_features,
            "params": {"max_depth": self.params.max_depth, "min_leaf": self.params.min_leaf},
            "splits": [
                {"feature": s.feature, "threshold": s.threshold, "decrease": s.decrease}
                for s in self.splits
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, columns=None) -> "RegressionTree":
        return cls(
            root=TreeNode.from_dict(data["root"]),
            n_features=int(data["n_features"]),
            params=CartParams(**data["params"]),
            splits=[CartSplit(**s) for s in data["splits"]],
            columns=columns,
        )


def cart_fit(train: FeatureMatrix, params: CartParams | None = None) -> RegressionTree:
    if train.n_rows == 0:
        raise ValueError("cannot fit a regression tree on zero rows")
    params = params or CartParams()
    X = np.asarray(train.rows, dtype=np.float64)
    y = np.asarray(train.target, dtype=np.float64)
    records: list[CartSplit] = []
    root = _grow(X, y, 0, params, records)
    return RegressionTree(
        root=root,
        n_features=X.shape[1],
        params=params,
        splits=records,
        columns=tuple(train.column_names),
    )
