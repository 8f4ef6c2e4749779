"""Multi-label ranking losses with a learned none-class threshold."""

from ._core import (
    Model,
    consistency,
    evaluate,
    generate,
    grad_check,
    hashing_featurizer,
    load_dataset,
    loss,
    margins,
    mean_average_precision,
    ncre,
    optimal_margins,
    predict_adaptive,
    predict_global,
    ranking_error,
    run_preset,
    save_dataset,
    train,
)

__all__ = [
    "Model",
    "consistency",
    "evaluate",
    "generate",
    "grad_check",
    "hashing_featurizer",
    "load_dataset",
    "loss",
    "margins",
    "mean_average_precision",
    "ncre",
    "optimal_margins",
    "predict_adaptive",
    "predict_global",
    "ranking_error",
    "run_preset",
    "save_dataset",
    "train",
]
