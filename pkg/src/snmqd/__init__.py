"""Prediction intervals with point estimates from quality-driven ensembles.

Networks are trained with the QD+ loss (interval width, coverage, squared
error and an ordering penalty) and their outputs are combined as a split
normal mixture.
"""

from .ensemble import (
    Ensemble,
    EnsembleConfig,
    aggregate_sem,
    aggregate_snm,
    predict,
    train_ensemble,
)
from .losses import LossParams, loss_qd, loss_qd_plus
from .metrics import EvalReport, IntervalBatch, IntervalPrediction, evaluate, mpiw, nmpiw, picp
from .neuralnet import Mlp, TrainConfig, init_mlp, train
from .splitnorm import FitConfig, SplitNormal, SplitNormalMixture, fit, mixture_quantile

__version__ = "0.1.0"

__all__ = [
    "Ensemble",
    "EnsembleConfig",
    "aggregate_sem",
    "aggregate_snm",
    "predict",
    "train_ensemble",
    "LossParams",
    "loss_qd",
    "loss_qd_plus",
    "EvalReport",
    "IntervalBatch",
    "IntervalPrediction",
    "evaluate",
    "mpiw",
    "nmpiw",
    "picp",
    "Mlp",
    "TrainConfig",
    "init_mlp",
    "train",
    "FitConfig",
    "SplitNormal",
    "SplitNormalMixture",
    "fit",
    "mixture_quantile",
]
