"""CART regression tree: split search against a brute-force oracle."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from busflux.errors import ConfigError
from busflux.features import FeatureMatrix
from busflux.models import CartParams, RegressionTree, cart_fit
from busflux.models.tree import node_sse


def matrix(X, y) -> FeatureMatrix:
    return FeatureMatrix.from_arrays(np.asarray(X, float), np.asarray(y, float))


def brute_force_best_split(X, y, min_leaf=1):
    """Enumerate every (feature, midpoint) candidate and score it directly.

    Ties break to the lowest threshold within a feature and the lowest
    feature index across features, mirroring the documented rule.
    """
    X, y = np.asarray(X, float), np.asarray(y, float)
    parent = node_sse(y)
    best = (-np.inf, None, None)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            t = (lo + hi) / 2.0
            mask = X[:, f] <= t
            if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                continue
            dec = parent - node_sse(y[mask]) - node_sse(y[~mask])
            if dec > best[0]:
                best = (dec, f, t)
    return best


# ── node_sse ─────────────────────────────────────────────────────────────────


def test_node_sse_matches_direct_formula():
    y = np.array([1.0, 2.0, 4.0, 4.0])
    assert node_sse(y) == pytest.approx(float(np.sum((y - y.mean()) ** 2)))


def test_node_sse_degenerate_nodes_are_zero():
    assert node_sse(np.array([])) == 0.0
    assert node_sse(np.array([3.0])) == 0.0


# ── Split search ─────────────────────────────────────────────────────────────


def test_root_split_matches_brute_force_on_step_target():
    X = np.column_stack(
        [
            np.random.default_rng(3).normal(0, 1, 20),
            np.arange(20, dtype=float),
            np.random.default_rng(4).uniform(-5, 5, 20),
        ]
    )
    y = np.where(X[:, 1] < 10, 0.0, 10.0)
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=1))
    dec, f, t = brute_force_best_split(X, y)
    assert tree.root.feature == f == 1
    assert tree.root.threshold == t == 9.5
    assert tree.splits[0].decrease == dec == 500.0


def test_threshold_is_midpoint_of_adjacent_values():
    X = np.array([[1.0], [3.0], [10.0], [12.0]])
    y = np.array([0.0, 0.0, 5.0, 5.0])
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=1))
    assert tree.root.threshold == 6.5


def test_tie_breaks_to_lowest_feature_then_lowest_threshold():
    # Feature 0 and feature 1 are identical, so their best splits tie;
    # the documented rule picks feature 0.
    col = np.array([0.0, 1.0, 2.0, 3.0])
    X = np.column_stack([col, col])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=1))
    assert tree.root.feature == 0
    # Within a feature: y = (0, 1, 1, 0) gives equal decrease at 0.5 and
    # 2.5; the sweep must report the lower threshold.
    y2 = np.array([0.0, 1.0, 1.0, 0.0])
    tree2 = cart_fit(matrix(col, y2), CartParams(max_depth=1, min_leaf=1))
    assert tree2.root.threshold == 0.5


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_root_split_matches_brute_force_on_random_data(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 40))
    d = int(rng.integers(1, 5))
    X = np.round(rng.normal(0, 2, (n, d)), 1)  # duplicates exercise midpoints
    y = rng.normal(0, 3, n)
    min_leaf = int(rng.integers(1, 4))
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=min_leaf))
    dec, f, t = brute_force_best_split(X, y, min_leaf=min_leaf)
    if f is None or dec <= 0:
        assert tree.root.is_leaf
    else:
        assert (tree.root.feature, tree.root.threshold) == (f, t)
        assert tree.splits[0].decrease == pytest.approx(dec, rel=1e-9)


# ── Growth constraints ───────────────────────────────────────────────────────


def test_constant_target_yields_single_leaf():
    X = np.arange(10, dtype=float)
    tree = cart_fit(matrix(X, np.full(10, 2.5)))
    assert tree.root.is_leaf
    assert tree.root.prediction == 2.5
    assert tree.splits == []


def test_max_depth_limits_split_levels():
    rng = np.random.default_rng(0)
    X = rng.normal(0, 1, (200, 3))
    y = rng.normal(0, 1, 200)
    tree = cart_fit(matrix(X, y), CartParams(max_depth=2, min_leaf=1))

    def depth(node):
        if node.is_leaf:
            return 0
        return 1 + max(depth(node.left), depth(node.right))

    assert depth(tree.root) <= 2


def test_min_leaf_bounds_every_leaf():
    rng = np.random.default_rng(1)
    X = rng.normal(0, 1, (120, 2))
    y = rng.normal(0, 1, 120)
    tree = cart_fit(matrix(X, y), CartParams(max_depth=8, min_leaf=7))
    assert all(leaf.n >= 7 for leaf in tree.leaves())


def test_deeper_trees_never_increase_training_sse():
    rng = np.random.default_rng(5)
    X = rng.normal(0, 1, (150, 3))
    y = X[:, 0] ** 2 + rng.normal(0, 0.1, 150)
    m = matrix(X, y)
    sse = [cart_fit(m, CartParams(max_depth=d, min_leaf=1)).total_sse() for d in (1, 2, 4, 8)]
    assert all(a >= b for a, b in zip(sse, sse[1:]))


def test_every_recorded_split_decrease_is_positive():
    rng = np.random.default_rng(6)
    X = rng.normal(0, 1, (80, 4))
    y = rng.normal(0, 1, 80)
    tree = cart_fit(matrix(X, y))
    assert all(s.decrease > 0 for s in tree.splits)


# ── Prediction and serialization ─────────────────────────────────────────────


def test_leaf_prediction_is_the_leaf_mean():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = np.array([1.0, 3.0, 10.0, 14.0])
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=1))
    pred = tree.predict(np.array([[0.5], [10.5]]))
    assert pred == pytest.approx([2.0, 12.0])


def test_rows_at_threshold_go_left():
    X = np.array([[0.0], [1.0]])
    y = np.array([0.0, 1.0])
    tree = cart_fit(matrix(X, y), CartParams(max_depth=1, min_leaf=1))
    assert tree.root.threshold == 0.5
    assert tree.predict(np.array([[0.5]]))[0] == 0.0


def test_serialization_round_trip():
    rng = np.random.default_rng(7)
    X = rng.normal(0, 1, (60, 3))
    y = rng.normal(0, 1, 60)
    tree = cart_fit(matrix(X, y), CartParams(max_depth=4, min_leaf=2))
    back = RegressionTree.from_dict(tree.to_dict())
    probe = rng.normal(0, 1, (25, 3))
    assert np.array_equal(back.predict(probe), tree.predict(probe))


def test_params_validation():
    with pytest.raises(ConfigError):
        CartParams(max_depth=0)
    with pytest.raises(ConfigError):
        CartParams(min_leaf=0)
