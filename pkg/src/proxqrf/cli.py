"""Command line interface.

Subcommands: train, predict, benchmark, grid-search, criterion-study,
interval-report. Every flag can also be supplied through a JSON config
file (--config) whose keys are the flag names with dashes replaced by
underscores; explicit flags override the file. Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import bench, persist
from .bench import EVAL_ALPHAS
from .dataset import kfold_split, load_csv, sliding_window_split
from .errors import DataError, NumericError
from .forest import CRITERIA, TreeParams, fit_forest
from .proximity import SCHEMES
from .quantile import predict_quantiles


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the CLI contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path, allowed: set) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    unknown = set(config) - allowed
    if unknown:
        raise ValueError(
            f"config {path}: unknown keys {sorted(unknown)}")
    return config


class _Options:
    """Layered option lookup: flag, then config file, then default."""

    def __init__(self, args, defaults: dict):
        self.args = args
        self.defaults = defaults
        self.config = {}
        config_path = getattr(args, "config", None)
        if config_path:
            self.config = _load_config(config_path, set(defaults))

    def get(self, key):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return self.defaults[key]

    def require(self, key):
        value = self.get(key)
        if value is None:
            flag = "--" + key.replace("_", "-")
            raise ValueError(f"missing required option {flag}")
        return value


def _parse_alphas(value) -> tuple:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty alpha list")
        value = [float(p) for p in parts]
    return tuple(float(a) for a in value)


def _parse_schemes(value) -> tuple:
    if isinstance(value, str):
        if value == "all":
            return SCHEMES
        value = [p.strip() for p in value.split(",") if p.strip()]
    schemes = tuple(value)
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(
                f"unknown scheme {s!r} (choose from {', '.join(SCHEMES)})")
    return schemes


def _parse_criteria(value) -> tuple:
    if isinstance(value, str):
        value = [p.strip() for p in value.split(",") if p.strip()]
    criteria = tuple(value)
    for c in criteria:
        if c not in CRITERIA:
            raise ValueError(
                f"unknown criterion {c!r} (choose from {', '.join(CRITERIA)})")
    return criteria


def _parse_cv(value) -> tuple:
    """'kfold:5' or 'sliding:5' -> (kind, k)."""
    text = str(value)
    kind, sep, count = text.partition(":")
    if not sep or kind not in ("kfold", "sliding"):
        raise ValueError(
            f"bad --cv value {text!r}; expected kfold:K or sliding:K")
    try:
        k = int(count)
    except ValueError:
        raise ValueError(f"bad fold count in --cv value {text!r}") from None
    return kind, k


def _build_plan(kind: str, k: int, n: int, seed: int):
    if kind == "kfold":
        return kfold_split(n, k, seed)
    return sliding_window_split(n, k)


_PARAM_DEFAULTS = {
    "trees": 100,
    "max_depth": 12,
    "min_leaf": 1,
    "min_split": 2,
    "criterion": "mse",
    "pinball_alpha": 0.5,
    "max_features": None,
    "seed": 42,
    "workers": 1,
}


def _tree_params(opt: _Options) -> TreeParams:
    max_features = opt.get("max_features")
    if isinstance(max_features, str):
        max_features = None if max_features == "sqrt" else int(max_features)
    return TreeParams(
        max_depth=int(opt.get("max_depth")),
        min_samples_split=int(opt.get("min_split")),
        min_samples_leaf=int(opt.get("min_leaf")),
        max_features=max_features,
        criterion=str(opt.get("criterion")),
        pinball_alpha=float(opt.get("pinball_alpha")),
    )


def _add_param_flags(sub):
    sub.add_argument("--trees", type=int)
    sub.add_argument("--max-depth", type=int)
    sub.add_argument("--min-leaf", type=int)
    sub.add_argument("--min-split", type=int)
    sub.add_argument("--criterion", choices=CRITERIA)
    sub.add_argument("--pinball-alpha", type=float)
    sub.add_argument("--max-features")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--workers", type=int)


def _add_common(sub):
    sub.add_argument("--config", help="JSON file mirroring the flags")


def _dataset_name(opt: _Options) -> str:
    explicit = opt.get("dataset_name")
    if explicit:
        return str(explicit)
    stem = os.path.basename(str(opt.require("data")))
    return stem.rsplit(".", 1)[0] if "." in stem else stem


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)


def _load_data(opt: _Options):
    return load_csv(opt.require("data"), opt.require("target"),
                    str(opt.get("missing_policy")))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_train(args) -> None:
    opt = _Options(args, {
        "data": None, "target": None, "out": None,
        "missing_policy": "drop-row", **_PARAM_DEFAULTS,
    })
    data = _load_data(opt)
    params = _tree_params(opt)
    forest = fit_forest(data, params, n_trees=int(opt.get("trees")),
                        seed=int(opt.get("seed")),
                        workers=int(opt.get("workers")))
    out = opt.require("out")
    persist.save_model(forest, data, out)
    nodes = sum(t.n_nodes for t in forest.trees)
    print(f"saved {out}: n={data.n} p={data.p} trees={forest.n_trees} "
          f"nodes={nodes}")


def _read_query_csv(path, feature_names) -> np.ndarray:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [name for name in feature_names if name not in header]
        if missing:
            raise DataError(f"{path}: missing feature columns {missing}")
        cols = [header.index(name) for name in feature_names]
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            try:
                rows.append([float(raw[c]) for c in cols])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no query rows")
    return np.asarray(rows, dtype=np.float64)


def _cmd_predict(args) -> None:
    opt = _Options(args, {
        "model": None, "data": None, "out": None, "scheme": "gap",
        "alphas": EVAL_ALPHAS,
    })
    forest, train_data = persist.load_model(opt.require("model"))
    queries = _read_query_csv(opt.require("data"), forest.feature_names)
    alphas = np.asarray(_parse_alphas(opt.get("alphas")))
    grid = np.unique(np.concatenate(
        [alphas, [bench.INTERVAL_LO, bench.INTERVAL_HI]]))
    estimates = predict_quantiles(forest, train_data, queries,
                                  str(opt.get("scheme")), grid)
    spots = np.searchsorted(grid, alphas)
    lo = int(np.searchsorted(grid, bench.INTERVAL_LO))
    hi = int(np.searchsorted(grid, bench.INTERVAL_HI))
    buf = []
    header = (["query"] + [f"q@{a:g}" for a in alphas]
              + ["lower", "upper", "width", "defined"])
    buf.append(",".join(header))
    for i, est in enumerate(estimates):
        if est is None:
            buf.append(",".join([str(i)] + [""] * (alphas.size + 3) + ["0"]))
            continue
        cells = [repr(float(est.values[s])) for s in spots]
        lower, upper = float(est.values[lo]), float(est.values[hi])
        cells += [repr(lower), repr(upper), repr(upper - lower), "1"]
        buf.append(",".join([str(i)] + cells))
    text = "\n".join(buf) + "\n"
    out = opt.get("out")
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_benchmark(args) -> None:
    opt = _Options(args, {
        "data": None, "target": None, "schemes": "all", "cv": "kfold:5",
        "alphas": EVAL_ALPHAS, "missing_policy": "drop-row",
        "report": None, "format": "text", "dataset_name": None,
        **_PARAM_DEFAULTS,
    })
    data = _load_data(opt)
    kind, k = _parse_cv(opt.get("cv"))
    seed = int(opt.get("seed"))
    plan = _build_plan(kind, k, data.n, seed)
    reports = bench.run_benchmark(
        data, _tree_params(opt), _parse_schemes(opt.get("schemes")), plan,
        _parse_alphas(opt.get("alphas")), seed=seed,
        n_trees=int(opt.get("trees")), workers=int(opt.get("workers")),
        dataset_name=_dataset_name(opt))
    out = opt.get("report")
    text = bench.emit_report(reports, str(opt.get("format")), out)
    _emit(text, out)


def _cmd_grid_search(args) -> None:
    opt = _Options(args, {
        "data": None, "target": None, "grid": None, "cv": 5,
        "objective": "pinball", "scheme": "gap", "alphas": EVAL_ALPHAS,
        "missing_policy": "drop-row", "report": None, "format": "text",
        "seed": 42, "workers": 1,
    })
    data = _load_data(opt)
    grid_path = opt.get("grid")
    if grid_path is None:
        grid = bench.GridSpec()
    else:
        spec = _load_config(grid_path, {"n_trees", "max_depth",
                                        "min_samples_leaf",
                                        "min_samples_split"})
        grid = bench.GridSpec(**{k: tuple(v) for k, v in spec.items()})
    result = bench.grid_search(
        data, grid, k=int(opt.get("cv")), seed=int(opt.get("seed")),
        objective=str(opt.get("objective")), scheme=str(opt.get("scheme")),
        alphas=_parse_alphas(opt.get("alphas")),
        workers=int(opt.get("workers")))
    fmt = str(opt.get("format"))
    if fmt == "json":
        text = json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    else:
        lines = [
            "# grid search",
            f"objective: {result.objective} scheme: {result.scheme}",
            "trees".rjust(7) + "depth".rjust(7) + "leaf".rjust(6)
            + "split".rjust(7) + "score".rjust(14),
        ]
        for row in result.table:
            lines.append(
                str(row["n_trees"]).rjust(7)
                + str(row["max_depth"]).rjust(7)
                + str(row["min_samples_leaf"]).rjust(6)
                + str(row["min_samples_split"]).rjust(7)
                + f"{row['score']:14.6f}")
        best = result.best_params
        lines.append(
            f"best: trees={result.best_n_trees} depth={best.max_depth} "
            f"leaf={best.min_samples_leaf} split={best.min_samples_split} "
            f"score={result.best_score:.6f}")
        text = "\n".join(lines) + "\n"
    out = opt.get("report")
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_criterion_study(args) -> None:
    opt = _Options(args, {
        "data": None, "target": None, "seeds": 20, "cv": 5,
        "criteria": CRITERIA, "alphas": EVAL_ALPHAS,
        "missing_policy": "drop-row", "report": None, "format": "text",
        "dataset_name": None, **_PARAM_DEFAULTS,
    })
    data = _load_data(opt)
    n_seeds = int(opt.get("seeds"))
    if n_seeds < 1:
        raise ValueError(f"--seeds must be >= 1, got {n_seeds}")
    base = int(opt.get("seed"))
    study = bench.criterion_study(
        data, _tree_params(opt), _parse_criteria(opt.get("criteria")),
        tuple(range(base, base + n_seeds)),
        _parse_alphas(opt.get("alphas")), k=int(opt.get("cv")),
        n_trees=int(opt.get("trees")), workers=int(opt.get("workers")),
        dataset_name=_dataset_name(opt))
    out = opt.get("report")
    text = bench.emit_criterion_table(study, str(opt.get("format")), out)
    _emit(text, out)


def _cmd_interval_report(args) -> None:
    opt = _Options(args, {
        "data": None, "target": None, "scheme": "gap", "level": 0.95,
        "cv": "kfold:5", "missing_policy": "drop-row", "report": None,
        "format": "text", "dataset_name": None, **_PARAM_DEFAULTS,
    })
    data = _load_data(opt)
    kind, k = _parse_cv(opt.get("cv"))
    seed = int(opt.get("seed"))
    plan = _build_plan(kind, k, data.n, seed)
    report = bench.interval_report(
        data, _tree_params(opt), str(opt.get("scheme")), plan,
        float(opt.get("level")), seed=seed, n_trees=int(opt.get("trees")),
        workers=int(opt.get("workers")), dataset_name=_dataset_name(opt))
    out = opt.get("report")
    text = bench.emit_interval_report(report, str(opt.get("format")), out)
    _emit(text, out)


def _build_parser() -> _Parser:
    parser = _Parser(prog="proxqrf",
                     description="Quantile regression with forest "
                                 "proximity weights")
    subs = parser.add_subparsers(dest="command")

    train = subs.add_parser("train", help="fit a forest and save it")
    train.add_argument("--data")
    train.add_argument("--target")
    train.add_argument("--missing-policy", choices=("drop-row", "error"))
    train.add_argument("--out")
    _add_param_flags(train)
    _add_common(train)
    train.set_defaults(func=_cmd_train)

    predict = subs.add_parser("predict",
                              help="quantile predictions from a saved model")
    predict.add_argument("--model")
    predict.add_argument("--data")
    predict.add_argument("--scheme", choices=SCHEMES)
    predict.add_argument("--alphas")
    predict.add_argument("--out")
    _add_common(predict)
    predict.set_defaults(func=_cmd_predict)

    benchmark = subs.add_parser("benchmark",
                                help="cross-validated scheme comparison")
    benchmark.add_argument("--data")
    benchmark.add_argument("--target")
    benchmark.add_argument("--schemes")
    benchmark.add_argument("--cv")
    benchmark.add_argument("--alphas")
    benchmark.add_argument("--missing-policy", choices=("drop-row", "error"))
    benchmark.add_argument("--report")
    benchmark.add_argument("--format", choices=bench.FORMATS)
    benchmark.add_argument("--dataset-name")
    _add_param_flags(benchmark)
    _add_common(benchmark)
    benchmark.set_defaults(func=_cmd_benchmark)

    grid = subs.add_parser("grid-search",
                           help="exhaustive hyperparameter search")
    grid.add_argument("--data")
    grid.add_argument("--target")
    grid.add_argument("--grid", help="JSON file of candidate lists")
    grid.add_argument("--cv", type=int)
    grid.add_argument("--seed", type=int)
    grid.add_argument("--objective", choices=("pinball", "mse"))
    grid.add_argument("--scheme", choices=SCHEMES)
    grid.add_argument("--alphas")
    grid.add_argument("--missing-policy", choices=("drop-row", "error"))
    grid.add_argument("--report")
    grid.add_argument("--format", choices=("text", "json"))
    grid.add_argument("--workers", type=int)
    _add_common(grid)
    grid.set_defaults(func=_cmd_grid_search)

    crit = subs.add_parser("criterion-study",
                           help="split-criterion comparison over seeds")
    crit.add_argument("--data")
    crit.add_argument("--target")
    crit.add_argument("--seeds", type=int,
                      help="number of seeds (base taken from --seed)")
    crit.add_argument("--criteria")
    crit.add_argument("--cv", type=int)
    crit.add_argument("--alphas")
    crit.add_argument("--missing-policy", choices=("drop-row", "error"))
    crit.add_argument("--report")
    crit.add_argument("--format", choices=bench.FORMATS)
    crit.add_argument("--dataset-name")
    _add_param_flags(crit)
    _add_common(crit)
    crit.set_defaults(func=_cmd_criterion_study)

    interval = subs.add_parser("interval-report",
                               help="per-sample prediction intervals")
    interval.add_argument("--data")
    interval.add_argument("--target")
    interval.add_argument("--scheme", choices=SCHEMES)
    interval.add_argument("--level", type=float)
    interval.add_argument("--cv")
    interval.add_argument("--missing-policy", choices=("drop-row", "error"))
    interval.add_argument("--report")
    interval.add_argument("--format", choices=bench.FORMATS)
    interval.add_argument("--dataset-name")
    _add_param_flags(interval)
    _add_common(interval)
    interval.set_defaults(func=_cmd_interval_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 1
    try:
        args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
