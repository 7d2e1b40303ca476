"""The four forest weighting schemes: QRF leaf weights, RF-GAP, OOB, original.

Every scheme produces rows of a WeightMatrix over the n training points:
nonnegative entries, each defined row summing to 1, ready to serve as the
weights of a conditional empirical CDF. QRF and GAP rows are stochastic by
construction; original and OOB rows are renormalized. Rows that have no
support (a training point that was never out-of-bag, or an all-zero OOB
row) are flagged undefined and left as zeros, never imputed.

Train mode evaluates the literal between-training-point definitions; test
mode extends them to unseen queries by treating the query as out-of-bag in
every tree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .forest import Forest

SCHEMES = ("qrf", "gap", "oob", "original")

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class WeightMatrix:
    """Query-by-training weights for one scheme.

    weights has shape (m, n); defined marks rows that carry a valid
    distribution (undefined rows are all zeros).
    """

    weights: np.ndarray
    scheme: str
    mode: str
    defined: np.ndarray

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        defined = np.ascontiguousarray(self.defined, dtype=bool)
        if weights.ndim != 2:
            raise ValueError("weights must be 2-d")
        if defined.shape != (weights.shape[0],):
            raise ValueError("defined mask must have one entry per row")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.mode not in ("train", "test"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if weights.size and weights.min() < 0:
            raise ValueError("negative weight entry")
        sums = weights.sum(axis=1)
        bad = defined & (np.abs(sums - 1.0) > _ROW_SUM_TOL)
        if bad.any():
            raise ValueError(
                f"defined row {int(np.flatnonzero(bad)[0])} sums to "
                f"{sums[bad][0]!r}, not 1")
        if np.any(sums[~defined] != 0):
            raise ValueError("undefined rows must be all zeros")
        weights.setflags(write=False)
        defined.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "defined", defined)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.weights[i]

    def to_csv(self, path) -> None:
        """Dump as CSV: one row per query, training indices as header."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["query", "defined"]
                            + [str(j) for j in range(self.n)])
            for i in range(self.m):
                writer.writerow([str(i), str(int(self.defined[i]))]
                                + [repr(float(v)) for v in self.weights[i]])


def _leaf_groups(leaf_ids: np.ndarray) -> dict:
    """Map leaf id -> positions (into leaf_ids) that landed in it."""
    order = np.argsort(leaf_ids, kind="stable")
    ids = leaf_ids[order]
    bounds = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    bounds = np.append(bounds, ids.size)
    return {int(ids[s]): order[s:e]
            for s, e in zip(bounds[:-1], bounds[1:])}


def _query_matrix(forest: Forest, queries) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if Q.shape[1] != forest.p:
        raise ValueError(f"expected {forest.p} features, got {Q.shape[1]}")
    return Q


def qrf_matrix(forest: Forest, data: Dataset, queries) -> WeightMatrix:
    """QRF leaf weights for m query rows.

    Per tree, every training point in the query's leaf (routing all n
    points) gets 1/leaf-size; the final row averages the k per-tree rows.
    """
    Q = _query_matrix(forest, queries)
    n, k = forest.n_train, forest.n_trees
    weights = np.zeros((Q.shape[0], n))
    for t, tree in enumerate(forest.trees):
        train_groups = _leaf_groups(forest.train_leaves[:, t])
        for leaf, qrows in _leaf_groups(tree.apply(Q)).items():
            members = train_groups[leaf]
            weights[np.ix_(qrows, members)] += 1.0 / members.size
    weights /= k
    return WeightMatrix(weights, scheme="qrf", mode="test",
                        defined=np.ones(Q.shape[0], dtype=bool))


def qrf_weights(forest: Forest, data: Dataset, x) -> np.ndarray:
    """QRF weight row for a single feature row."""
    return qrf_matrix(forest, data, np.asarray(x, dtype=np.float64)
                      .reshape(1, -1)).weights[0]


def gap_train(forest: Forest, data: Dataset) -> WeightMatrix:
    """RF-GAP weights between training points (n x n, mode=train).

    Row i averages, over the trees where i is out-of-bag, the in-bag
    multiplicity distribution of i's leaf. Rows of points that were never
    out-of-bag are undefined. The diagonal is identically zero.
    """
    if data.n != forest.n_train:
        raise ValueError("dataset does not match the training set size")
    n = forest.n_train
    mult = forest.multiplicity_matrix()
    weights = np.zeros((n, n))
    for t in range(forest.n_trees):
        c = mult[:, t]
        for leaf, members in _leaf_groups(forest.train_leaves[:, t]).items():
            cm = c[members]
            oob_rows = members[cm == 0]
            if oob_rows.size == 0:
                continue
            inbag = members[cm > 0]
            share = cm[cm > 0].astype(np.float64)
            weights[np.ix_(oob_rows, inbag)] += share / share.sum()
    n_oob_trees = (mult == 0).sum(axis=1)
    defined = n_oob_trees > 0
    weights[defined] /= n_oob_trees[defined, None]
    return WeightMatrix(weights, scheme="gap", mode="train", defined=defined)


def gap_test(forest: Forest, data: Dataset, queries) -> WeightMatrix:
    """RF-GAP weights for unseen queries (m x n, mode=test).

    The query is treated as out-of-bag in every tree: each tree contributes
    its leaf's in-bag multiplicity distribution, averaged over all k trees.
    Coincides with gap_train rows for training points that were out-of-bag
    everywhere.
    """
    Q = _query_matrix(forest, queries)
    n, k = forest.n_train, forest.n_trees
    weights = np.zeros((Q.shape[0], n))
    for t, tree in enumerate(forest.trees):
        c = forest.bootstraps[t].multiplicity
        train_groups = _leaf_groups(forest.train_leaves[:, t])
        for leaf, qrows in _leaf_groups(tree.apply(Q)).items():
            members = train_groups[leaf]
            cm = c[members]
            inbag = members[cm > 0]
            share = cm[cm > 0].astype(np.float64)
            weights[np.ix_(qrows, inbag)] += share / share.sum()
    weights /= k
    return WeightMatrix(weights, scheme="gap", mode="test",
                        defined=np.ones(Q.shape[0], dtype=bool))


def original_raw(forest: Forest, data: Dataset, queries) -> np.ndarray:
    """Unnormalized original proximity: co-leaf tree fraction, in [0, 1].

    Entry (q, j) counts the trees where query q and training point j share
    a leaf (routing all points), divided by the number of trees. Restricted
    to training queries this is symmetric with unit diagonal.
    """
    Q = _query_matrix(forest, queries)
    n = forest.n_train
    raw = np.zeros((Q.shape[0], n))
    for t, tree in enumerate(forest.trees):
        train_groups = _leaf_groups(forest.train_leaves[:, t])
        for leaf, qrows in _leaf_groups(tree.apply(Q)).items():
            raw[np.ix_(qrows, train_groups[leaf])] += 1.0
    raw /= forest.n_trees
    return raw


def original_proximity(forest: Forest, data: Dataset, queries) -> WeightMatrix:
    """Original proximity rows, renormalized to sum 1.

    Rows are always defined: every query lands in a leaf with at least one
    training point in every tree.
    """
    raw = original_raw(forest, data, queries)
    sums = raw.sum(axis=1, keepdims=True)
    return WeightMatrix(raw / sums, scheme="original", mode="test",
                        defined=np.ones(raw.shape[0], dtype=bool))


def oob_raw(forest: Forest, data: Dataset, queries=None,
            mode: str = "train") -> np.ndarray:
    """Unnormalized OOB proximity (count ratios in [0, 1]).

    Train mode (queries must be None): entry (i, j) is the fraction of
    trees, among those where both i and j are out-of-bag, in which they
    also share a leaf; 0 when they are never jointly out-of-bag.

    Test mode: the query counts as out-of-bag everywhere, j ranges over the
    out-of-bag training points of each tree, and the denominator is the
    number of trees where j is out-of-bag.
    """
    if data.n != forest.n_train:
        raise ValueError("dataset does not match the training set size")
    oob = forest.multiplicity_matrix() == 0
    if mode == "train":
        if queries is not None:
            raise ValueError("train mode computes rows for training points; "
                             "pass queries=None")
        numer = np.zeros((data.n, data.n))
        for t in range(forest.n_trees):
            oob_t = np.flatnonzero(oob[:, t])
            if oob_t.size == 0:
                continue
            for _, pos in _leaf_groups(
                    forest.train_leaves[oob_t, t]).items():
                group = oob_t[pos]
                numer[np.ix_(group, group)] += 1.0
        denom = oob.astype(np.float64) @ oob.T.astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            raw = np.where(denom > 0, numer / denom, 0.0)
        return raw
    if mode != "test":
        raise ValueError(f"unknown mode {mode!r}")
    Q = _query_matrix(forest, queries)
    numer = np.zeros((Q.shape[0], data.n))
    for t, tree in enumerate(forest.trees):
        oob_t = oob[:, t]
        train_groups = _leaf_groups(forest.train_leaves[:, t])
        for leaf, qrows in _leaf_groups(tree.apply(Q)).items():
            members = train_groups[leaf]
            cohabitants = members[oob_t[members]]
            if cohabitants.size:
                numer[np.ix_(qrows, cohabitants)] += 1.0
    denom = oob.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = np.where(denom > 0, numer / denom, 0.0)
    return raw


def oob_proximity(forest: Forest, data: Dataset, queries=None,
                  mode: str = "train") -> WeightMatrix:
    """OOB proximity rows, renormalized to sum 1; all-zero rows -> undefined."""
    raw = oob_raw(forest, data, queries, mode)
    sums = raw.sum(axis=1)
    defined = sums > 0
    weights = np.zeros_like(raw)
    weights[defined] = raw[defined] / sums[defined, None]
    return WeightMatrix(weights, scheme="oob", mode=mode, defined=defined)


def scheme_matrix(forest: Forest, data: Dataset, queries,
                  scheme: str) -> WeightMatrix:
    """Dispatch test-mode weights for unseen query rows by scheme name."""
    if scheme == "qrf":
        return qrf_matrix(forest, data, queries)
    if scheme == "gap":
        return gap_test(forest, data, queries)
    if scheme == "original":
        return original_proximity(forest, data, queries)
    if scheme == "oob":
        return oob_proximity(forest, data, queries, mode="test")
    raise ValueError(f"unknown scheme {scheme!r}")
