"""
Optimizers, task losses, metrics and the training loops.
"""
from .losses import bce_multilabel_loss, cross_entropy_loss, task_loss
from .metrics import accuracy, compute_metrics, mean_class_accuracy, micro_f1, primary_metric
from .optim import PROTOCOL_DEFAULTS, SGD, Adam, OptimConfig, Optimizer, build_optimizer
from .report import EpochRecord, RunReport, read_report_csv
from .trainer import (
    Batch,
    TrainSettings,
    check_compatible,
    evaluate,
    iterate_batches,
    run_distillation,
    train_model,
)

__all__ = [
    "Adam",
    "Batch",
    "EpochRecord",
    "OptimConfig",
    "Optimizer",
    "PROTOCOL_DEFAULTS",
    "RunReport",
    "SGD",
    "TrainSettings",
    "accuracy",
    "bce_multilabel_loss",
    "build_optimizer",
    "check_compatible",
    "compute_metrics",
    "cross_entropy_loss",
    "evaluate",
    "iterate_batches",
    "mean_class_accuracy",
    "micro_f1",
    "primary_metric",
    "read_report_csv",
    "run_distillation",
    "task_loss",
    "train_model",
]
