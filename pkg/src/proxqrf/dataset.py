"""Tabular regression data: CSV ingestion, target transforms, CV split plans."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

MISSING_TOKENS = ("", "NA", "NaN")

SPLIT_SCHEMES = ("k-fold", "sliding-window", "holdout")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus target vector.

    Parameters
    ----------
    features : ndarray of shape (n, p)
        Finite real feature values. Categorical features are expected
        pre-encoded as 0/1 indicator columns.
    target : ndarray of shape (n,)
        Finite real target values.
    feature_names : tuple of str
        Column labels, one per feature.
    target_name : str
        Label of the target column, kept for round-trips.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str = "target"

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        target = np.ascontiguousarray(self.target, dtype=np.float64)
        if features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if target.ndim != 1:
            raise DataError("target must be a 1-d vector")
        n, p = features.shape
        if n < 2:
            raise DataError(f"need at least 2 rows, got {n}")
        if p < 1:
            raise DataError("need at least 1 feature column")
        if target.shape[0] != n:
            raise DataError(
                f"target length {target.shape[0]} != feature rows {n}")
        if not np.isfinite(features).all() or not np.isfinite(target).all():
            raise DataError("non-finite values after ingestion")
        names = tuple(str(c) for c in self.feature_names)
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} columns")
        features.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        """Row subset as a new Dataset (indices kept in the given order)."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.target[idx],
                       self.feature_names, self.target_name)


@dataclass(frozen=True)
class SplitPlan:
    """Cross-validation folds: (train_indices, test_indices) pairs."""

    folds: tuple
    scheme: str

    def __post_init__(self):
        if self.scheme not in SPLIT_SCHEMES:
            raise ValueError(f"unknown split scheme {self.scheme!r}")
        folds = []
        for train, test in self.folds:
            train = np.asarray(train, dtype=np.intp)
            test = np.asarray(test, dtype=np.intp)
            if np.intersect1d(train, test).size:
                raise ValueError("train and test indices overlap")
            train.setflags(write=False)
            test.setflags(write=False)
            folds.append((train, test))
        object.__setattr__(self, "folds", tuple(folds))

    @property
    def k(self) -> int:
        return len(self.folds)


def _parse_cell(cell: str) -> float | None:
    """Parse one CSV cell; None marks a missing or non-numeric value."""
    text = cell.strip()
    if text in MISSING_TOKENS:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not np.isfinite(value):
        return None
    return value


def load_csv(path, target_column: str, missing_policy: str = "drop-row") -> Dataset:
    """Load a regression dataset from a headered CSV file.

    Parameters
    ----------
    path : str or path-like
        CSV file with a header row, comma delimiter, '.' decimal separator.
    target_column : str
        Header name of the target column; all other columns become features.
    missing_policy : {"drop-row", "error"}
        Handling of empty/"NA"/"NaN"/non-numeric cells: drop the whole row,
        or raise DataError naming the first offending cell.

    Returns
    -------
    Dataset

    Raises
    ------
    DataError
        Missing file, unknown target column, bad cell under policy="error",
        or fewer than 2 usable rows.
    """
    if missing_policy not in ("drop-row", "error"):
        raise ValueError(f"unknown missing_policy {missing_policy!r}")
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(
                f"target column {target_column!r} not in header {header}")
        tcol = header.index(target_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != tcol)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(raw)}")
            parsed = [_parse_cell(c) for c in raw]
            bad = [i for i, v in enumerate(parsed) if v is None]
            if bad:
                if missing_policy == "error":
                    raise DataError(
                        f"{path}:{lineno}: bad value {raw[bad[0]]!r} "
                        f"in column {header[bad[0]]!r}")
                continue
            rows.append(parsed)
    if len(rows) < 2:
        raise DataError(f"{path}: fewer than 2 usable rows")
    table = np.array(rows, dtype=np.float64)
    target = table[:, tcol]
    features = np.delete(table, tcol, axis=1)
    return Dataset(features, target, feature_names, target_name=target_column)


def save_csv(data: Dataset, path) -> None:
    """Write a Dataset back to CSV (features then target column).

    Values are written with shortest round-trip float formatting so a
    reload recovers them bit-for-bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(data.feature_names) + [data.target_name])
        for i in range(data.n):
            row = [repr(float(v)) for v in data.features[i]]
            row.append(repr(float(data.target[i])))
            writer.writerow(row)


def log_transform_target(data: Dataset) -> Dataset:
    """Replace the target with its natural log; features are untouched.

    Raises
    ------
    DataError
        If any target value is <= 0.
    """
    if np.any(data.target <= 0):
        bad = float(data.target[data.target <= 0][0])
        raise DataError(f"log transform needs positive targets, found {bad}")
    return Dataset(data.features, np.log(data.target),
                   data.feature_names, data.target_name)


def shift_target(data: Dataset, horizon: int) -> Dataset:
    """Pair row t's features with the target at t + horizon.

    The last `horizon` rows have no future target and are dropped.

    Raises
    ------
    ValueError
        If horizon is not a positive integer.
    DataError
        If fewer than 2 rows would remain.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if data.n - horizon < 2:
        raise DataError(
            f"horizon {horizon} leaves fewer than 2 of {data.n} rows")
    return Dataset(data.features[:-horizon], data.target[horizon:],
                   data.feature_names, data.target_name)


def kfold_split(n: int, k: int, seed: int) -> SplitPlan:
    """Shuffled k-fold plan: test sets partition {0..n-1}, sizes differ by <= 1.

    Raises
    ------
    ValueError
        If k < 2.
    DataError
        If k > n.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = []
    for test in np.array_split(perm, k):
        test = np.sort(test)
        train = np.setdiff1d(np.arange(n), test)
        folds.append((train, test))
    return SplitPlan(tuple(folds), scheme="k-fold")


def sliding_window_split(n: int, k: int,
                         train_width: int | None = None,
                         test_width: int | None = None) -> SplitPlan:
    """Temporal fixed-width split: each test block directly follows its window.

    With defaults the block size is b = n // (k+1), the train window width is
    w = n - k*b (>= b), and fold f trains on [f*b, f*b + w) and tests on the
    next b rows, so the final test block ends exactly at n. Explicit widths
    keep the same stride (the test width).

    Raises
    ------
    ValueError
        If k < 1.
    DataError
        If n is too small for k folds of at least 2 + 2 rows.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 2 * (k + 1):
        raise DataError(f"need n >= {2 * (k + 1)} rows for k={k}, got {n}")
    b = n // (k + 1) if test_width is None else int(test_width)
    w = n - k * b if train_width is None else int(train_width)
    if b < 1 or w < 2:
        raise DataError(f"window widths too small (train {w}, test {b})")
    folds = []
    for f in range(k):
        start = f * b
        cut = start + w
        if cut + b > n:
            raise DataError(
                f"fold {f} spills past the data (needs {cut + b} rows of {n})")
        folds.append((np.arange(start, cut), np.arange(cut, cut + b)))
    return SplitPlan(tuple(folds), scheme="sliding-window")
