"""Quantile regression with random-forest proximity weights.

A regression random forest is reinterpreted as an adaptive weighted
nearest-neighbor model: each query gets a weight row over the training
points (QRF leaf weights, RF-GAP, out-of-bag, or original proximities),
and that row turns the training targets into a full conditional
distribution for quantiles and prediction intervals.
"""

from .dataset import (Dataset, SplitPlan, kfold_split, load_csv, save_csv,
                      log_transform_target, shift_target,
                      sliding_window_split)
from .errors import DataError, NumericError
from .forest import (CRITERIA, BootstrapRecord, Forest, Tree, TreeParams,
                     bootstrap_sample, best_split, fit_forest, fit_tree,
                     weighted_quantile)
from .metrics import mae, mape, mse, pinball_loss
from .persist import load_model, save_model
from .proximity import (SCHEMES, WeightMatrix, gap_test, gap_train,
                        oob_proximity, oob_raw, original_proximity,
                        original_raw, qrf_matrix, qrf_weights, scheme_matrix)
from .quantile import (PredictionInterval, QuantileEstimate,
                       WeightedEmpirical, build_empirical, cdf_at, coverage,
                       prediction_interval, predict_quantiles, quantile_at,
                       quantiles_at)
from .bench import (EVAL_ALPHAS, CriterionStudy, EvalReport, GridSearchResult,
                    GridSpec, IntervalReport, criterion_study, emit_report,
                    emit_criterion_table, emit_interval_report, grid_search,
                    interval_report, load_abalone, run_benchmark)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SplitPlan", "kfold_split", "load_csv", "save_csv",
    "log_transform_target", "shift_target", "sliding_window_split",
    "DataError", "NumericError",
    "CRITERIA", "BootstrapRecord", "Forest", "Tree", "TreeParams",
    "bootstrap_sample", "best_split", "fit_forest", "fit_tree",
    "weighted_quantile",
    "mae", "mape", "mse", "pinball_loss",
    "load_model", "save_model",
    "SCHEMES", "WeightMatrix", "gap_test", "gap_train", "oob_proximity",
    "oob_raw", "original_proximity", "original_raw", "qrf_matrix",
    "qrf_weights", "scheme_matrix",
    "PredictionInterval", "QuantileEstimate", "WeightedEmpirical",
    "build_empirical", "cdf_at", "coverage", "prediction_interval",
    "predict_quantiles", "quantile_at", "quantiles_at",
    "EVAL_ALPHAS", "CriterionStudy", "EvalReport", "GridSearchResult",
    "GridSpec", "IntervalReport", "criterion_study", "emit_report",
    "emit_criterion_table", "emit_interval_report", "grid_search",
    "interval_report", "load_abalone", "run_benchmark",
    "__version__",
]
