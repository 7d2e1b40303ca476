"""Shared fixtures and hand-built forest helpers."""

from pathlib import Path

import numpy as np
import pytest

from proxqrf import (BootstrapRecord, Dataset, Forest, Tree, TreeParams,
                     fit_forest)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def make_dataset(n=40, p=3, seed=11, noise=0.3):
    """Synthetic regression set, y = x0 + 0.5 x1 + noise."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = X[:, 0] + noise * rng.normal(size=n)
    if p > 1:
        y = y + 0.5 * X[:, 1]
    return Dataset(X, y, tuple(f"x{j}" for j in range(p)))


def stump(feature, threshold, left_value=0.0, right_value=0.0,
          left_members=(), left_counts=(), right_members=(),
          right_counts=()):
    """One-split tree: node 0 internal, node 1 left leaf, node 2 right."""
    return Tree(
        feature=np.array([feature, -1, -1], dtype=np.int32),
        threshold=np.array([threshold, np.nan, np.nan]),
        left=np.array([1, -1, -1], dtype=np.int32),
        right=np.array([2, -1, -1], dtype=np.int32),
        value=np.array([np.nan, float(left_value), float(right_value)]),
        leaf_members=((), tuple(left_members), tuple(right_members)),
        leaf_counts=((), tuple(left_counts), tuple(right_counts)),
    )


def single_leaf(value, members, counts):
    """Tree with no split at all; everything lands in node 0."""
    return Tree(
        feature=np.array([-1], dtype=np.int32),
        threshold=np.array([np.nan]),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        value=np.array([float(value)]),
        leaf_members=(tuple(members),),
        leaf_counts=(tuple(counts),),
    )


def hand_forest(data, trees, multiplicities, params=None, seed=0):
    """Assemble a Forest from explicit trees and bootstrap multiplicities."""
    if params is None:
        params = TreeParams()
    boots = tuple(BootstrapRecord(np.asarray(m, dtype=np.int64))
                  for m in multiplicities)
    train_leaves = np.column_stack(
        [t.apply(data.features) for t in trees])
    return Forest(trees=tuple(trees), bootstraps=boots, params=params,
                  seed=seed, n_train=data.n, p=data.p,
                  feature_names=data.feature_names,
                  train_leaves=train_leaves)


@pytest.fixture(scope="session")
def toy_data():
    return make_dataset()


@pytest.fixture(scope="session")
def toy_forest(toy_data):
    return fit_forest(toy_data, TreeParams(max_depth=4), n_trees=15, seed=3)


@pytest.fixture(scope="session")
def abalone_path():
    path = DATA_DIR / "abalone.data"
    if not path.exists():
        pytest.skip("bundled abalone file missing")
    return path
