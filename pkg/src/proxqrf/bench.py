"""Benchmark orchestration: grid search, scheme comparison, report emission.

Reports follow the evaluation recipe of the reproduced tables: pinball loss
on a fixed quantile grid, point estimation (MSE / MAPE) from the
conditional median, and 95% interval coverage and width statistics, folded
by either shuffled k-fold (aggregated by mean) or temporal sliding window
(aggregated by median). All emission is deterministic: identical inputs
produce byte-identical report files regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, SplitPlan, kfold_split
from .errors import DataError, NumericError
from .forest import CRITERIA, TreeParams, fit_forest
from .metrics import mape, mse, pinball_loss
from .proximity import SCHEMES
from .quantile import predict_quantiles

EVAL_ALPHAS = (0.005, 0.025, 0.05, 0.5, 0.95, 0.975, 0.995)

INTERVAL_LO = 0.025
INTERVAL_HI = 0.975

ABALONE_COLUMNS = ("sex", "length", "diameter", "height", "whole_weight",
                   "shucked_weight", "viscera_weight", "shell_weight",
                   "rings")
ABALONE_SEX_CODES = ("F", "I", "M")


def load_abalone(path, n_rows: int | None = 500,
                 subsample_seed: int | None = None) -> Dataset:
    """Load the headerless UCI abalone export bundled under data/.

    The sex column is expanded to three 0/1 indicators (F, I, M); the other
    seven physical measurements pass through; rings is the target. With
    n_rows set, the first n_rows rows of the file are kept; the file is not
    randomly ordered, and this deterministic head is what the reference
    benchmark numbers were calibrated on. Pass subsample_seed to draw a
    uniform subsample without replacement instead, via
    np.random.default_rng(subsample_seed), kept in original file order.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    features = []
    target = []
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != len(ABALONE_COLUMNS):
                raise DataError(
                    f"{path}:{lineno}: expected {len(ABALONE_COLUMNS)} "
                    f"columns, got {len(row)}")
            sex = row[0].strip()
            if sex not in ABALONE_SEX_CODES:
                raise DataError(f"{path}:{lineno}: unknown sex code {sex!r}")
            try:
                rest = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            onehot = [1.0 if sex == code else 0.0
                      for code in ABALONE_SEX_CODES]
            features.append(onehot + rest[:-1])
            target.append(rest[-1])
    names = tuple(f"sex_{c}" for c in ABALONE_SEX_CODES) + \
        ABALONE_COLUMNS[1:-1]
    data = Dataset(np.asarray(features), np.asarray(target), names,
                   target_name=ABALONE_COLUMNS[-1])
    if n_rows is not None and n_rows < data.n:
        if subsample_seed is None:
            keep = np.arange(n_rows)
        else:
            rng = np.random.default_rng(subsample_seed)
            keep = np.sort(rng.choice(data.n, size=n_rows, replace=False))
        data = data.subset(keep)
    return data


DATASETS = {"abalone": load_abalone}


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter candidates for exhaustive search (sqrt feature rule)."""

    n_trees: tuple = (50, 100, 200, 500, 1000)
    max_depth: tuple = (2, 4, 8, 12, 16, 20)
    min_samples_leaf: tuple = (2, 4, 8)
    min_samples_split: tuple = (2, 5, 10)

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "min_samples_leaf",
                     "min_samples_split"):
            values = tuple(int(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"{name} candidates must be nonempty")
            object.__setattr__(self, name, values)

    def configs(self):
        """(n_trees, TreeParams) pairs in deterministic enumeration order."""
        for trees, depth, leaf, split in itertools.product(
                self.n_trees, self.max_depth, self.min_samples_leaf,
                self.min_samples_split):
            yield trees, TreeParams(max_depth=depth, min_samples_split=split,
                                    min_samples_leaf=leaf)


@dataclass(frozen=True)
class EvalReport:
    """Aggregated evaluation of one weighting scheme on one CV plan."""

    dataset: str
    method: str
    alphas: tuple
    pinball: tuple
    mse: float
    mape: float | None
    coverage95: float
    width_mean: float
    width_median: float
    aggregation: str
    cv_scheme: str
    n_folds: int
    seed: int
    n_trees: int
    params: TreeParams
    n_test: int
    n_undefined: int

    def pinball_at(self, alpha: float) -> float:
        for a, v in zip(self.alphas, self.pinball):
            if a == alpha:
                return v
        raise ValueError(f"level {alpha} not in report grid")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "alphas": list(self.alphas),
            "pinball": list(self.pinball),
            "mse": self.mse,
            "mape": self.mape,
            "coverage95": self.coverage95,
            "width_mean": self.width_mean,
            "width_median": self.width_median,
            "aggregation": self.aggregation,
            "cv_scheme": self.cv_scheme,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "n_trees": self.n_trees,
            "params": _params_dict(self.params),
            "n_test": self.n_test,
            "n_undefined": self.n_undefined,
        }


def _params_dict(params: TreeParams) -> dict:
    return {
        "criterion": params.criterion,
        "max_depth": params.max_depth,
        "min_samples_split": params.min_samples_split,
        "min_samples_leaf": params.min_samples_leaf,
        "max_features": params.max_features,
        "pinball_alpha": params.pinball_alpha,
    }


def _aggregator(plan: SplitPlan):
    if plan.scheme == "sliding-window":
        return "median", np.median
    return "mean", np.mean


def _check_alphas(alphas) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ValueError("alphas must be a nonempty vector")
    if not ((alphas > 0) & (alphas < 1)).all():
        raise ValueError("levels must be in (0, 1)")
    if alphas.size > 1 and not np.all(np.diff(alphas) > 0):
        raise ValueError("levels must be strictly increasing")
    return alphas


def _evaluation_grid(alphas: np.ndarray) -> np.ndarray:
    """Requested levels plus the median and 95% bounds used for reports."""
    return np.unique(np.concatenate(
        [alphas, [INTERVAL_LO, 0.5, INTERVAL_HI]]))


@dataclass
class _FoldStats:
    pinball: list
    mse: list
    mape: list
    coverage: list
    width_mean: list
    width_median: list
    n_test: int = 0
    n_undefined: int = 0


def _eval_fold(forest, train_data, test_x, test_y, scheme, grid, alphas,
               stats: _FoldStats) -> None:
    estimates = predict_quantiles(forest, train_data, test_x, scheme, grid)
    defined = np.array([e is not None for e in estimates], dtype=bool)
    stats.n_test += len(estimates)
    stats.n_undefined += int((~defined).sum())
    if not defined.any():
        raise NumericError(
            f"scheme {scheme!r}: every weight row in a fold is undefined")
    values = np.vstack([e.values for e in estimates if e is not None])
    y = test_y[defined]
    spots = np.searchsorted(grid, alphas)
    stats.pinball.append([
        pinball_loss(y, values[:, s], float(a))
        for s, a in zip(spots, alphas)])
    median = values[:, int(np.searchsorted(grid, 0.5))]
    stats.mse.append(mse(y, median))
    stats.mape.append(None if np.any(y == 0) else mape(y, median))
    lower = values[:, int(np.searchsorted(grid, INTERVAL_LO))]
    upper = values[:, int(np.searchsorted(grid, INTERVAL_HI))]
    stats.coverage.append(float(np.mean((lower <= y) & (y <= upper))))
    widths = upper - lower
    stats.width_mean.append(float(np.mean(widths)))
    stats.width_median.append(float(np.median(widths)))


def run_benchmark(data: Dataset, params: TreeParams, schemes, plan: SplitPlan,
                  alphas=EVAL_ALPHAS, seed: int = 42, *, n_trees: int = 100,
                  workers: int = 1, dataset_name: str = "data") -> list:
    """Cross-validated comparison of weighting schemes.

    For every fold a forest is fit on the train split (same n_trees/seed
    each fold), each scheme predicts the full quantile grid on the test
    split from one weight row per query, and per-fold metrics are
    aggregated by the plan's rule (k-fold: mean, sliding window: median).
    Undefined weight rows are excluded from metrics and counted.

    Returns one EvalReport per scheme, in the given scheme order.
    """
    schemes = tuple(schemes)
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    if not schemes:
        raise ValueError("no schemes requested")
    alphas = _check_alphas(alphas)
    grid = _evaluation_grid(alphas)
    agg_name, agg = _aggregator(plan)
    per_scheme = {s: _FoldStats([], [], [], [], [], []) for s in schemes}
    for train_idx, test_idx in plan.folds:
        train_data = data.subset(train_idx)
        forest = fit_forest(train_data, params, n_trees=n_trees, seed=seed,
                            workers=workers)
        test_x = data.features[test_idx]
        test_y = data.target[test_idx]
        for scheme in schemes:
            _eval_fold(forest, train_data, test_x, test_y, scheme, grid,
                       alphas, per_scheme[scheme])
    reports = []
    for scheme in schemes:
        st = per_scheme[scheme]
        folded_mape = None
        if all(v is not None for v in st.mape):
            folded_mape = float(agg(st.mape))
        reports.append(EvalReport(
            dataset=dataset_name,
            method=scheme,
            alphas=tuple(float(a) for a in alphas),
            pinball=tuple(float(v)
                          for v in agg(np.asarray(st.pinball), axis=0)),
            mse=float(agg(st.mse)),
            mape=folded_mape,
            coverage95=float(agg(st.coverage)),
            width_mean=float(agg(st.width_mean)),
            width_median=float(agg(st.width_median)),
            aggregation=agg_name,
            cv_scheme=plan.scheme,
            n_folds=plan.k,
            seed=int(seed),
            n_trees=int(n_trees),
            params=params,
            n_test=st.n_test,
            n_undefined=st.n_undefined,
        ))
    return reports


@dataclass(frozen=True)
class GridSearchResult:
    best_params: TreeParams
    best_n_trees: int
    best_score: float
    objective: str
    scheme: str
    table: tuple

    def to_dict(self) -> dict:
        return {
            "best_params": _params_dict(self.best_params),
            "best_n_trees": self.best_n_trees,
            "best_score": self.best_score,
            "objective": self.objective,
            "scheme": self.scheme,
            "table": [dict(row) for row in self.table],
        }


def grid_search(data: Dataset, grid: GridSpec, k: int = 5, seed: int = 42,
                objective: str = "pinball", *, scheme: str = "gap",
                alphas=EVAL_ALPHAS, workers: int = 1) -> GridSearchResult:
    """Exhaustive cross-validated evaluation of a hyperparameter grid.

    Every config is scored on the same k-fold plan: mean-over-folds of the
    mean pinball loss across the alpha grid (objective="pinball") or of the
    conditional-median MSE (objective="mse"). Ties keep the first config in
    enumeration order.
    """
    if objective not in ("pinball", "mse"):
        raise ValueError(f"unknown objective {objective!r}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    alphas = _check_alphas(alphas)
    plan = kfold_split(data.n, k, seed)
    best = None
    table = []
    for n_trees, params in grid.configs():
        reports = run_benchmark(data, params, (scheme,), plan, alphas,
                                seed=seed, n_trees=n_trees, workers=workers)
        rep = reports[0]
        if objective == "pinball":
            score = float(np.mean(rep.pinball))
        else:
            score = rep.mse
        table.append({
            "n_trees": n_trees,
            "max_depth": params.max_depth,
            "min_samples_leaf": params.min_samples_leaf,
            "min_samples_split": params.min_samples_split,
            "score": score,
        })
        if best is None or score < best[0]:
            best = (score, n_trees, params)
    return GridSearchResult(best_params=best[2], best_n_trees=best[1],
                            best_score=best[0], objective=objective,
                            scheme=scheme, table=tuple(table))


@dataclass(frozen=True)
class CriterionStudy:
    """Mean pinball loss per (scheme, alpha, split criterion) over seeds."""

    dataset: str
    schemes: tuple
    alphas: tuple
    criteria: tuple
    seeds: tuple
    table: np.ndarray  # shape (schemes, alphas, criteria)
    n_folds: int
    n_trees: int
    base_params: TreeParams

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "schemes": list(self.schemes),
            "alphas": list(self.alphas),
            "criteria": list(self.criteria),
            "seeds": list(self.seeds),
            "table": self.table.tolist(),
            "n_folds": self.n_folds,
            "n_trees": self.n_trees,
            "base_params": _params_dict(self.base_params),
        }


def criterion_study(data: Dataset, params_base: TreeParams,
                    criteria=CRITERIA, seeds=tuple(range(20)),
                    alphas=EVAL_ALPHAS, *, schemes=SCHEMES, k: int = 5,
                    n_trees: int = 100, workers: int = 1,
                    dataset_name: str = "data") -> CriterionStudy:
    """Re-run the benchmark under each split criterion, averaging over seeds.

    Each seed reshuffles the k-fold plan and reseeds the forests; the table
    entry (scheme, alpha, criterion) is the mean aggregated pinball loss
    over seeds.
    """
    criteria = tuple(criteria)
    seeds = tuple(int(s) for s in seeds)
    schemes = tuple(schemes)
    if not criteria or not seeds:
        raise ValueError("criteria and seeds must be nonempty")
    for c in criteria:
        if c not in CRITERIA:
            raise ValueError(f"unknown criterion {c!r}")
    alphas = _check_alphas(alphas)
    table = np.zeros((len(schemes), alphas.size, len(criteria)))
    for ci, criterion in enumerate(criteria):
        params = replace(params_base, criterion=criterion)
        for seed in seeds:
            plan = kfold_split(data.n, k, seed)
            reports = run_benchmark(data, params, schemes, plan, alphas,
                                    seed=seed, n_trees=n_trees,
                                    workers=workers,
                                    dataset_name=dataset_name)
            for si, rep in enumerate(reports):
                table[si, :, ci] += rep.pinball
    table /= len(seeds)
    return CriterionStudy(dataset=dataset_name, schemes=schemes,
                          alphas=tuple(float(a) for a in alphas),
                          criteria=criteria, seeds=seeds, table=table,
                          n_folds=k, n_trees=n_trees,
                          base_params=params_base)


@dataclass(frozen=True)
class IntervalReport:
    """Per-sample prediction intervals sorted by ascending width."""

    dataset: str
    scheme: str
    level: float
    lower: np.ndarray
    upper: np.ndarray
    width: np.ndarray
    lower_centered: np.ndarray
    upper_centered: np.ndarray
    y_true: np.ndarray
    inside: np.ndarray
    outside_fraction: float
    n_undefined: int
    cv_scheme: str
    n_folds: int
    seed: int
    n_trees: int
    params: TreeParams

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "scheme": self.scheme,
            "level": self.level,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "width": self.width.tolist(),
            "lower_centered": self.lower_centered.tolist(),
            "upper_centered": self.upper_centered.tolist(),
            "y_true": self.y_true.tolist(),
            "inside": self.inside.astype(int).tolist(),
            "outside_fraction": self.outside_fraction,
            "n_undefined": self.n_undefined,
            "cv_scheme": self.cv_scheme,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "n_trees": self.n_trees,
            "params": _params_dict(self.params),
        }


def interval_report(data: Dataset, params: TreeParams, scheme: str,
                    plan: SplitPlan, level: float = 0.95, *, seed: int = 42,
                    n_trees: int = 100, workers: int = 1,
                    dataset_name: str = "data") -> IntervalReport:
    """Collect held-out prediction intervals across all folds.

    Bounds come from the same weight row per query at levels
    (1-level)/2 and 1-(1-level)/2; rows are sorted by ascending width, with
    midpoint-centered bounds alongside for the width-profile plots.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    lo = (1.0 - level) / 2.0
    hi = 1.0 - lo
    grid = np.array([lo, 0.5, hi])
    lowers, uppers, trues = [], [], []
    n_undefined = 0
    for train_idx, test_idx in plan.folds:
        train_data = data.subset(train_idx)
        forest = fit_forest(train_data, params, n_trees=n_trees, seed=seed,
                            workers=workers)
        estimates = predict_quantiles(forest, train_data,
                                      data.features[test_idx], scheme, grid)
        for est, y in zip(estimates, data.target[test_idx]):
            if est is None:
                n_undefined += 1
                continue
            lowers.append(est.values[0])
            uppers.append(est.values[2])
            trues.append(float(y))
    if not lowers:
        raise NumericError("no defined intervals to report")
    lower = np.asarray(lowers)
    upper = np.asarray(uppers)
    y_true = np.asarray(trues)
    width = upper - lower
    order = np.argsort(width, kind="stable")
    lower, upper, width, y_true = (lower[order], upper[order], width[order],
                                   y_true[order])
    inside = (lower <= y_true) & (y_true <= upper)
    return IntervalReport(
        dataset=dataset_name, scheme=scheme, level=float(level),
        lower=lower, upper=upper, width=width,
        lower_centered=-width / 2.0, upper_centered=width / 2.0,
        y_true=y_true, inside=inside,
        outside_fraction=float(np.mean(~inside)),
        n_undefined=n_undefined, cv_scheme=plan.scheme, n_folds=plan.k,
        seed=int(seed), n_trees=int(n_trees), params=params)


# ---------------------------------------------------------------------------
# report emission

FORMATS = ("text", "csv", "json")


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _write(text: str, out) -> str:
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _params_line(params: TreeParams) -> str:
    mf = "sqrt" if params.max_features is None else str(params.max_features)
    return (f"criterion={params.criterion} max_depth={params.max_depth} "
            f"min_samples_split={params.min_samples_split} "
            f"min_samples_leaf={params.min_samples_leaf} "
            f"max_features={mf} pinball_alpha={params.pinball_alpha}")


def _mark_minima(rows: list) -> list:
    """Per column, the set of row indices achieving the minimum (None skipped)."""
    marks = []
    for col in range(len(rows[0])):
        values = [r[col] for r in rows]
        present = [v for v in values if v is not None]
        if not present:
            marks.append(set())
            continue
        low = min(present)
        marks.append({i for i, v in enumerate(values) if v == low})
    return marks


def emit_report(reports, format: str = "text", out=None) -> str:
    """Serialize benchmark reports; deterministic byte output.

    Text tables mark the per-column minimum across methods with '*'.
    Writes to `out` when given and always returns the rendered string.
    """
    if not reports:
        raise ValueError("no reports to emit")
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    first = reports[0]
    for rep in reports:
        if rep.alphas != first.alphas:
            raise ValueError("reports disagree on the alpha grid")
    if format == "json":
        payload = {"reports": [r.to_dict() for r in reports]}
        return _write(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                      out)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = (["dataset", "method", "cv_scheme", "n_folds", "aggregation",
                   "seed", "n_trees", "criterion", "max_depth",
                   "min_samples_split", "min_samples_leaf", "max_features",
                   "pinball_alpha", "n_test", "n_undefined"]
                  + [f"pinball@{a}" for a in first.alphas]
                  + ["mse", "mape_pct", "coverage95", "width_mean",
                     "width_median"])
        writer.writerow(header)
        for rep in reports:
            p = rep.params
            writer.writerow(
                [rep.dataset, rep.method, rep.cv_scheme, rep.n_folds,
                 rep.aggregation, rep.seed, rep.n_trees, p.criterion,
                 p.max_depth, p.min_samples_split, p.min_samples_leaf,
                 "" if p.max_features is None else p.max_features,
                 _fmt(p.pinball_alpha), rep.n_test, rep.n_undefined]
                + [_fmt(v) for v in rep.pinball]
                + [_fmt(rep.mse),
                   _fmt(None if rep.mape is None else 100.0 * rep.mape),
                   _fmt(rep.coverage95), _fmt(rep.width_mean),
                   _fmt(rep.width_median)])
        return _write(buf.getvalue(), out)
    # text
    lines = [
        "# quantile benchmark",
        f"dataset: {first.dataset}",
        (f"cv: {first.cv_scheme} folds={first.n_folds} "
         f"aggregation={first.aggregation} seed={first.seed} "
         f"trees={first.n_trees}"),
        f"params: {_params_line(first.params)}",
        ("undefined rows: "
         + " ".join(f"{r.method}={r.n_undefined}/{r.n_test}"
                    for r in reports)),
        "",
    ]
    headers = ([f"a={a:g}" for a in first.alphas]
               + ["mse", "mape%", "cov95", "w_mean", "w_med"])
    matrix = []
    for rep in reports:
        row = list(rep.pinball) + [
            rep.mse, None if rep.mape is None else 100.0 * rep.mape,
            rep.coverage95, rep.width_mean, rep.width_median]
        matrix.append(row)
    # coverage/width are descriptive, not competitive: no marks there
    marks = _mark_minima([r[:len(first.alphas) + 2] for r in matrix])
    name_w = max(8, max(len(r.method) for r in reports) + 1)
    lines.append("method".ljust(name_w)
                 + "".join(h.rjust(10) for h in headers))
    for i, rep in enumerate(reports):
        cells = []
        for col, v in enumerate(matrix[i]):
            if v is None:
                text = "-"
            else:
                text = f"{v:.4f}"
            if col < len(marks) and i in marks[col]:
                text += "*"
            cells.append(text.rjust(10))
        lines.append(rep.method.ljust(name_w) + "".join(cells))
    return _write("\n".join(lines) + "\n", out)


def emit_criterion_table(study: CriterionStudy, format: str = "text",
                         out=None) -> str:
    """Serialize a criterion study as a (scheme x alpha) x criterion table."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    if format == "json":
        return _write(json.dumps(study.to_dict(), indent=2, sort_keys=True)
                      + "\n", out)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dataset", "scheme", "alpha", "criterion",
                         "mean_pinball"])
        for si, scheme in enumerate(study.schemes):
            for ai, alpha in enumerate(study.alphas):
                for ci, criterion in enumerate(study.criteria):
                    writer.writerow([study.dataset, scheme, _fmt(alpha),
                                     criterion, _fmt(study.table[si, ai, ci])])
        return _write(buf.getvalue(), out)
    lines = [
        "# split-criterion study",
        f"dataset: {study.dataset}",
        (f"seeds: {','.join(str(s) for s in study.seeds)} "
         f"cv: k-fold folds={study.n_folds} trees={study.n_trees}"),
        f"base params: {_params_line(study.base_params)}",
        "",
        "scheme".ljust(10) + "alpha".rjust(8)
        + "".join(c.rjust(12) for c in study.criteria),
    ]
    for si, scheme in enumerate(study.schemes):
        for ai, alpha in enumerate(study.alphas):
            row = scheme.ljust(10) + f"{alpha:g}".rjust(8)
            row += "".join(f"{study.table[si, ai, ci]:12.4f}"
                           for ci in range(len(study.criteria)))
            lines.append(row)
    return _write("\n".join(lines) + "\n", out)


def emit_interval_report(report: IntervalReport, format: str = "text",
                         out=None) -> str:
    """Serialize an interval report (rows already sorted by width)."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}")
    if format == "json":
        return _write(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                      + "\n", out)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "width", "lower", "upper", "lower_centered",
                         "upper_centered", "y_true", "inside"])
        for i in range(report.width.size):
            writer.writerow([i, _fmt(report.width[i]), _fmt(report.lower[i]),
                             _fmt(report.upper[i]),
                             _fmt(report.lower_centered[i]),
                             _fmt(report.upper_centered[i]),
                             _fmt(report.y_true[i]),
                             int(report.inside[i])])
        return _write(buf.getvalue(), out)
    lines = [
        "# prediction intervals (sorted by width)",
        f"dataset: {report.dataset} scheme: {report.scheme} "
        f"level: {report.level:g}",
        (f"cv: {report.cv_scheme} folds={report.n_folds} "
         f"seed={report.seed} trees={report.n_trees}"),
        f"params: {_params_line(report.params)}",
        (f"outside fraction: {report.outside_fraction:.4f} "
         f"undefined rows: {report.n_undefined}"),
        "",
        "rank".rjust(6) + "".join(
            h.rjust(12) for h in ("width", "lower", "upper", "lower_c",
                                  "upper_c", "y_true", "inside")),
    ]
    for i in range(report.width.size):
        lines.append(
            str(i).rjust(6)
            + f"{report.width[i]:12.4f}{report.lower[i]:12.4f}"
            + f"{report.upper[i]:12.4f}{report.lower_centered[i]:12.4f}"
            + f"{report.upper_centered[i]:12.4f}{report.y_true[i]:12.4f}"
            + str(int(report.inside[i])).rjust(12))
    return _write("\n".join(lines) + "\n", out)
