"""Regression random forest with explicit bootstrap bookkeeping.

Every tree keeps its bootstrap multiplicity vector and its per-leaf in-bag
composition; the proximity weighting schemes are built on those records, so
they are first-class state here rather than a training by-product.

Determinism contract: tree t draws all of its randomness from the stream
`np.random.default_rng(np.random.SeedSequence(seed).spawn(n_trees)[t])`,
which depends only on (seed, t). Training with any worker count therefore
yields bit-identical forests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset
from .errors import DataError

CRITERIA = ("mse", "mae", "pinball")


@dataclass(frozen=True)
class TreeParams:
    """Growth limits and split criterion for a single tree.

    max_features defaults to floor(sqrt(p)) when None. min_samples_leaf and
    min_samples_split count distinct in-bag indices, not multiplicity.
    """

    max_depth: int = 12
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: int | None = None
    criterion: str = "mse"
    pinball_alpha: float = 0.5

    def validate(self, p: int) -> None:
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.min_samples_split < 2:
            raise ValueError(
                f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if not 0.0 < self.pinball_alpha < 1.0:
            raise ValueError(
                f"pinball_alpha must be in (0, 1), got {self.pinball_alpha}")
        if self.max_features is not None and not 1 <= self.max_features <= p:
            raise ValueError(
                f"max_features must be in [1, {p}], got {self.max_features}")

    def resolved_max_features(self, p: int) -> int:
        if self.max_features is None:
            return max(1, int(math.isqrt(p)))
        return self.max_features

    def leaf_alpha(self) -> float:
        """Quantile level defining the leaf value (and split score center)."""
        if self.criterion == "pinball":
            return self.pinball_alpha
        return 0.5


@dataclass(frozen=True)
class BootstrapRecord:
    """Multiplicity vector c_j of one bootstrap draw; sums to n."""

    multiplicity: np.ndarray

    def __post_init__(self):
        mult = np.ascontiguousarray(self.multiplicity, dtype=np.int64)
        if mult.ndim != 1 or mult.size < 2:
            raise ValueError("multiplicity must be a vector of length >= 2")
        if (mult < 0).any() or mult.sum() != mult.size:
            raise ValueError("multiplicities must be >= 0 and sum to n")
        mult.setflags(write=False)
        object.__setattr__(self, "multiplicity", mult)

    @property
    def n(self) -> int:
        return self.multiplicity.size

    @property
    def oob_indices(self) -> np.ndarray:
        """Indices never drawn: exactly the zero-multiplicity positions."""
        return np.flatnonzero(self.multiplicity == 0)

    @property
    def inbag_indices(self) -> np.ndarray:
        return np.flatnonzero(self.multiplicity > 0)


def bootstrap_sample(n: int, rng: np.random.Generator) -> BootstrapRecord:
    """Draw n times with replacement, uniform over {0..n-1}."""
    if n < 2:
        raise ValueError(f"need n >= 2 to bootstrap, got {n}")
    draws = rng.integers(0, n, size=n)
    return BootstrapRecord(np.bincount(draws, minlength=n))


def weighted_quantile(values, weights, alpha: float) -> float:
    """Smallest value whose cumulative weight share reaches alpha.

    This is inf{y : F(y) >= alpha} for the weighted empirical CDF; the same
    rule the quantile module applies to full weight rows.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    pos = np.searchsorted(cum, alpha * cum[-1], side="left")
    return float(values[order[min(pos, order.size - 1)]])


def _node_loss(y, w, criterion: str, alpha: float) -> float:
    """Multiplicity-weighted impurity of one node (not divided by weight)."""
    if criterion == "mse":
        total = w.sum()
        s = float(np.dot(w, y))
        return float(np.dot(w, y * y) - s * s / total)
    a = 0.5 if criterion == "mae" else alpha
    q = weighted_quantile(y, w, a)
    diff = y - q
    return float(np.dot(w, np.where(diff > 0, a * diff, (a - 1.0) * diff)))


def _mse_split_losses(ys, ws, cuts):
    """Summed child SSE for each cut (left = first `cut` feature-sorted rows).

    ys, ws are target/weight in feature-sorted order.
    """
    cw = np.cumsum(ws)
    cwy = np.cumsum(ws * ys)
    cwyy = np.cumsum(ws * ys * ys)
    lw = cw[cuts - 1]
    ly = cwy[cuts - 1]
    lyy = cwyy[cuts - 1]
    rw = cw[-1] - lw
    ry = cwy[-1] - ly
    ryy = cwyy[-1] - lyy
    left = lyy - ly * ly / lw
    right = ryy - ry * ry / rw
    # moment formula can dip a hair below zero on constant children
    return np.maximum(left, 0.0) + np.maximum(right, 0.0)


def _pinball_child_loss(y_sorted, cum_w, cum_wy, totals_w, totals_wy, alpha):
    """Pinball loss of one child per cut, from masked cumulative sums.

    cum_w/cum_wy hold, per cut (rows), the running in-child weight and
    weighted target in global y-sorted order; totals are the per-cut final
    column. Returns the summed (unaveraged) loss around the in-child
    alpha-quantile.
    """
    m = y_sorted.size
    target = alpha * totals_w
    pos = np.sum(cum_w < target[:, None], axis=1)
    pos = np.minimum(pos, m - 1)
    q = y_sorted[pos]
    take = pos[:, None]
    w_le = np.take_along_axis(cum_w, take, axis=1)[:, 0]
    wy_le = np.take_along_axis(cum_wy, take, axis=1)[:, 0]
    below = (1.0 - alpha) * (q * w_le - wy_le)
    above = alpha * ((totals_wy - wy_le) - q * (totals_w - w_le))
    return below + above


def _quantile_split_losses(ys, ws, cuts, alpha):
    """Summed child pinball losses for each cut of one feature.

    ys, ws are the node's target/weight in feature-sorted order, `cuts` the
    candidate left sizes: the left child at cut c is the first c rows.
    Evaluates every cut at once on a (cuts, m) grid; node sizes are bounded
    by the in-bag sample so the transient is small.
    """
    yorder = np.argsort(ys, kind="stable")
    y_s = ys[yorder]
    w_s = ws[yorder]
    # yorder[r] = feature rank of the element at target rank r
    in_left = yorder[None, :] < cuts[:, None]
    lw = np.cumsum(np.where(in_left, w_s, 0.0), axis=1)
    lwy = np.cumsum(np.where(in_left, w_s * y_s, 0.0), axis=1)
    gw = np.cumsum(w_s)
    gwy = np.cumsum(w_s * y_s)
    left = _pinball_child_loss(y_s, lw, lwy, lw[:, -1], lwy[:, -1], alpha)
    right = _pinball_child_loss(y_s, gw[None, :] - lw, gwy[None, :] - lwy,
                                gw[-1] - lw[:, -1], gwy[-1] - lwy[:, -1],
                                alpha)
    return left + right


def best_split(features, targets, indices, multiplicity, candidate_features,
               criterion: str = "mse", *, min_samples_leaf: int = 1,
               pinball_alpha: float = 0.5):
    """Pick the impurity-minimizing (feature, threshold) for one node.

    Parameters
    ----------
    features, targets : ndarray
        Full training matrix and target vector (views, not copies).
    indices : ndarray
        Distinct in-bag row indices reaching this node.
    multiplicity : ndarray
        Bootstrap multiplicity per training row; the split objective weights
        every point by it.
    candidate_features : ndarray
        Column indices sampled for this node.
    criterion : {"mse", "mae", "pinball"}
    min_samples_leaf : int
        Minimum distinct indices per child.
    pinball_alpha : float
        Level used by the pinball criterion.

    Returns
    -------
    (feature, threshold, impurity_decrease) or None
        Threshold is the midpoint of the two consecutive distinct feature
        values it separates. Ties break toward the lowest feature index,
        then the lowest threshold. None when no split yields two valid
        children with positive decrease.
    """
    idx = np.asarray(indices, dtype=np.intp)
    m = idx.size
    if m < 2:
        return None
    y = targets[idx]
    if np.all(y == y[0]):
        return None
    w = multiplicity[idx].astype(np.float64)
    alpha = 0.5 if criterion == "mae" else pinball_alpha
    parent = _node_loss(y, w, criterion, alpha)
    best = None
    best_loss = np.inf
    for f in np.sort(np.asarray(candidate_features, dtype=np.intp)):
        col = features[idx, f]
        order = np.argsort(col, kind="stable")
        col_sorted = col[order]
        cuts = np.flatnonzero(col_sorted[1:] > col_sorted[:-1]) + 1
        cuts = cuts[(cuts >= min_samples_leaf) & (m - cuts >= min_samples_leaf)]
        if cuts.size == 0:
            continue
        ys = y[order]
        ws = w[order]
        if criterion == "mse":
            losses = _mse_split_losses(ys, ws, cuts)
        else:
            losses = _quantile_split_losses(ys, ws, cuts, alpha)
        j = int(np.argmin(losses))
        if losses[j] < best_loss:
            cut = cuts[j]
            lo = col_sorted[cut - 1]
            hi = col_sorted[cut]
            thr = 0.5 * (lo + hi)
            if thr >= hi:  # float midpoint collapsed onto the upper value
                thr = lo
            best = (int(f), float(thr))
            best_loss = float(losses[j])
    if best is None:
        return None
    decrease = parent - best_loss
    if decrease <= 0:
        return None
    return best[0], best[1], float(decrease)


@dataclass(frozen=True)
class Tree:
    """One grown tree in flat-array form.

    feature[v] is -1 at leaves; left/right are child node ids (-1 at
    leaves); value[v] is the leaf prediction (NaN at internal nodes);
    leaf_members/leaf_counts give, per node id, the in-bag training indices
    with their multiplicities (empty at internal nodes).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    leaf_members: tuple
    leaf_counts: tuple

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X) -> np.ndarray:
        """Leaf node id for each row of X (ties at a threshold go left)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[node]
            live = np.flatnonzero(feat >= 0)
            if live.size == 0:
                return node
            at = node[live]
            go_left = X[live, feat[live]] <= self.threshold[at]
            node[live] = np.where(go_left, self.left[at], self.right[at])

    def leaf_values(self, leaf_ids) -> np.ndarray:
        return self.value[np.asarray(leaf_ids, dtype=np.intp)]


def _leaf_value(y, w, criterion: str, alpha: float) -> float:
    """Criterion's central value: weighted mean, median, or alpha-quantile."""
    if criterion == "mse":
        return float(np.average(y, weights=w))
    return weighted_quantile(y, w, 0.5 if criterion == "mae" else alpha)


def fit_tree(data: Dataset, record: BootstrapRecord, params: TreeParams,
             rng: np.random.Generator) -> Tree:
    """Grow one tree on the in-bag points of `record`, greedily and depth-first.

    Candidate features are freshly sampled without replacement at every
    node from the given stream; routing and tie rules follow best_split.
    """
    if record.n != data.n:
        raise ValueError(
            f"bootstrap over {record.n} points does not match n={data.n}")
    X, y = data.features, data.target
    mult = record.multiplicity
    p = data.p
    n_feats = params.resolved_max_features(p)
    alpha = params.leaf_alpha()

    feature, threshold, left, right, value = [], [], [], [], []
    members, counts = [], []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(np.nan)
        members.append(())
        counts.append(())
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        split = None
        if depth < params.max_depth and idx.size >= params.min_samples_split:
            cand = rng.choice(p, size=n_feats, replace=False)
            split = best_split(X, y, idx, mult, cand, params.criterion,
                               min_samples_leaf=params.min_samples_leaf,
                               pinball_alpha=params.pinball_alpha)
        if split is None:
            value[node] = _leaf_value(y[idx], mult[idx].astype(np.float64),
                                      params.criterion, alpha)
            members[node] = tuple(int(i) for i in idx)
            counts[node] = tuple(int(c) for c in mult[idx])
            return node
        f, thr, _ = split
        feature[node] = f
        threshold[node] = thr
        goes_left = X[idx, f] <= thr
        left[node] = grow(idx[goes_left], depth + 1)
        right[node] = grow(idx[~goes_left], depth + 1)
        return node

    grow(record.inbag_indices, 0)
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
        leaf_members=tuple(members),
        leaf_counts=tuple(counts),
    )


def _fit_one(data: Dataset, params: TreeParams, seed_seq) -> tuple:
    rng = np.random.default_rng(seed_seq)
    record = bootstrap_sample(data.n, rng)
    return fit_tree(data, record, params, rng), record


@dataclass(frozen=True)
class Forest:
    """Trained ensemble plus the bootstrap records it was grown from.

    train_leaves caches, per training point and tree, the leaf reached when
    all n points are routed (row i = leaf_assign of X_i).
    """

    trees: tuple
    bootstraps: tuple
    params: TreeParams
    seed: int
    n_train: int
    p: int
    feature_names: tuple
    train_leaves: np.ndarray

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def multiplicity_matrix(self) -> np.ndarray:
        """(n_train, n_trees) bootstrap multiplicities c_j(t)."""
        return np.column_stack([b.multiplicity for b in self.bootstraps])

    def _check_row(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.p:
            raise ValueError(f"expected {self.p} features, got {x.size}")
        return x

    def apply_all(self, X) -> np.ndarray:
        """(m, n_trees) leaf ids for a query matrix."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.p:
            raise ValueError(f"expected {self.p} features, got {X.shape[1]}")
        return np.column_stack([t.apply(X) for t in self.trees])

    def leaf_assign(self, x) -> np.ndarray:
        """Leaf id per tree for one feature row."""
        return self.apply_all(self._check_row(x)[None, :])[0]

    def predict_mean(self, x) -> float:
        """Average of per-tree leaf predictions at x."""
        leaves = self.leaf_assign(x)
        vals = [t.leaf_values(l) for t, l in zip(self.trees, leaves)]
        return float(np.mean(vals))

    def predict_matrix(self, X) -> np.ndarray:
        """(m, n_trees) per-tree leaf predictions for a query matrix."""
        leaves = self.apply_all(X)
        return np.column_stack(
            [t.leaf_values(leaves[:, i]) for i, t in enumerate(self.trees)])

    def predict_oob(self, data: Dataset) -> np.ndarray:
        """OOB prediction per training point; NaN where no tree left it out."""
        if data.n != self.n_train:
            raise ValueError("dataset does not match the training set size")
        per_tree = np.column_stack([
            t.leaf_values(self.train_leaves[:, i])
            for i, t in enumerate(self.trees)
        ])
        oob = self.multiplicity_matrix() == 0
        n_oob = oob.sum(axis=1)
        total = np.where(oob, per_tree, 0.0).sum(axis=1)
        out = np.full(data.n, np.nan)
        has = n_oob > 0
        out[has] = total[has] / n_oob[has]
        return out


def fit_forest(data: Dataset, params: TreeParams, n_trees: int = 100,
               seed: int = 42, workers: int = 1) -> Forest:
    """Fit n_trees independent (bootstrap, tree) pairs.

    Tree t's randomness comes only from SeedSequence(seed).spawn(...)[t],
    so results are identical for any worker count or schedule.
    """
    params.validate(data.p)
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    if data.n < 2:
        raise DataError("need at least 2 training rows")
    if params.min_samples_leaf > data.n:
        raise DataError(
            f"min_samples_leaf {params.min_samples_leaf} exceeds n={data.n}")
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    if workers == 1:
        fitted = [_fit_one(data, params, s) for s in seeds]
    else:
        fitted = Parallel(n_jobs=workers)(
            delayed(_fit_one)(data, params, s) for s in seeds)
    trees = tuple(t for t, _ in fitted)
    records = tuple(r for _, r in fitted)
    train_leaves = np.column_stack(
        [t.apply(data.features) for t in trees])
    return Forest(trees=trees, bootstraps=records, params=params,
                  seed=int(seed), n_train=data.n, p=data.p,
                  feature_names=data.feature_names,
                  train_leaves=train_leaves)
