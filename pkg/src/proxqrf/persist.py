"""Versioned model persistence.

The file is self-describing JSON holding the training data, params, seed,
every tree's node arrays, and every bootstrap multiplicity vector (the GAP
scheme cannot be recomputed without them). Floats are serialized with
shortest round-trip formatting, so save/load is lossless; leaf membership
and training-point leaf assignments are recomputed on load by the same
deterministic routing that produced them.
"""

from __future__ import annotations

import json

import numpy as np

from .dataset import Dataset
from .errors import DataError
from .forest import BootstrapRecord, Forest, Tree, TreeParams

FORMAT_NAME = "proxqrf-model"
FORMAT_VERSION = 1


def _tree_payload(tree: Tree) -> dict:
    is_leaf = tree.feature < 0
    return {
        "feature": tree.feature.tolist(),
        "threshold": [None if leaf else float(t)
                      for leaf, t in zip(is_leaf, tree.threshold)],
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": [float(v) if leaf else None
                  for leaf, v in zip(is_leaf, tree.value)],
    }


def save_model(forest: Forest, data: Dataset, path) -> None:
    """Serialize a trained forest together with its training set."""
    if data.n != forest.n_train or data.p != forest.p:
        raise ValueError("dataset does not match the trained forest")
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": {
            "max_depth": forest.params.max_depth,
            "min_samples_split": forest.params.min_samples_split,
            "min_samples_leaf": forest.params.min_samples_leaf,
            "max_features": forest.params.max_features,
            "criterion": forest.params.criterion,
            "pinball_alpha": forest.params.pinball_alpha,
        },
        "seed": forest.seed,
        "n_trees": forest.n_trees,
        "n_train": forest.n_train,
        "feature_names": list(data.feature_names),
        "target_name": data.target_name,
        "features": [[float(v) for v in row] for row in data.features],
        "target": [float(v) for v in data.target],
        "multiplicities": [b.multiplicity.tolist() for b in forest.bootstraps],
        "trees": [_tree_payload(t) for t in forest.trees],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, allow_nan=False)


def _rebuild_tree(spec: dict, features: np.ndarray,
                  multiplicity: np.ndarray) -> Tree:
    feature = np.asarray(spec["feature"], dtype=np.int32)
    threshold = np.array([np.nan if t is None else t
                          for t in spec["threshold"]], dtype=np.float64)
    left = np.asarray(spec["left"], dtype=np.int32)
    right = np.asarray(spec["right"], dtype=np.int32)
    value = np.array([np.nan if v is None else v
                      for v in spec["value"]], dtype=np.float64)
    sizes = {feature.size, threshold.size, left.size, right.size, value.size}
    if len(sizes) != 1 or feature.size == 0:
        raise DataError("corrupt model: tree arrays do not align")
    skeleton = Tree(feature=feature, threshold=threshold, left=left,
                    right=right, value=value,
                    leaf_members=tuple(() for _ in feature),
                    leaf_counts=tuple(() for _ in feature))
    leaves_of_train = skeleton.apply(features)
    members = [[] for _ in range(feature.size)]
    counts = [[] for _ in range(feature.size)]
    for i in np.flatnonzero(multiplicity > 0):
        node = int(leaves_of_train[i])
        members[node].append(int(i))
        counts[node].append(int(multiplicity[i]))
    return Tree(feature=feature, threshold=threshold, left=left, right=right,
                value=value,
                leaf_members=tuple(tuple(m) for m in members),
                leaf_counts=tuple(tuple(c) for c in counts))


def load_model(path) -> tuple:
    """Deserialize (forest, training dataset) from a model file."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model file ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        raise DataError(f"{path}: not a {FORMAT_NAME} file")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported version {payload.get('version')!r}")
    try:
        params = TreeParams(**payload["params"])
        data = Dataset(np.asarray(payload["features"], dtype=np.float64),
                       np.asarray(payload["target"], dtype=np.float64),
                       tuple(payload["feature_names"]),
                       target_name=payload["target_name"])
        records = tuple(BootstrapRecord(np.asarray(m, dtype=np.int64))
                        for m in payload["multiplicities"])
        trees = tuple(
            _rebuild_tree(spec, data.features, rec.multiplicity)
            for spec, rec in zip(payload["trees"], records, strict=True))
        seed = int(payload["seed"])
        n_trees = int(payload["n_trees"])
        n_train = int(payload["n_train"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: corrupt model ({exc})") from exc
    if len(trees) != n_trees or data.n != n_train:
        raise DataError(f"{path}: corrupt model (inconsistent counts)")
    params.validate(data.p)
    train_leaves = np.column_stack([t.apply(data.features) for t in trees])
    forest = Forest(trees=trees, bootstraps=records, params=params,
                    seed=seed, n_train=data.n, p=data.p,
                    feature_names=data.feature_names,
                    train_leaves=train_leaves)
    return forest, data
