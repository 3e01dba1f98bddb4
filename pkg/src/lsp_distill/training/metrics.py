"""
Evaluation metrics: micro-F1 for multilabel tasks, accuracy and mean class
accuracy for multiclass tasks.
"""
from typing import Dict, Optional

import numpy as np
from sklearn.metrics import accuracy_score, f1_score, recall_score

from ..core.logger import logger


def predict(logits: np.ndarray, task: str) -> np.ndarray:
    """Thresholds at logit 0 (multilabel) or takes the argmax (multiclass)."""
    logits = np.asarray(logits)
    if task == "multilabel":
        return (logits > 0).astype(np.int64)
    return np.argmax(logits, axis=1)


def micro_f1(predictions: np.ndarray, targets: np.ndarray) -> float:
    """F1 pooled over every (node, class) decision."""
    targets = np.asarray(targets, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if targets.ndim == 1:
        targets, predictions = targets[:, None], predictions[:, None]
    return float(f1_score(targets, predictions, average="micro", zero_division=0))


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    return float(accuracy_score(labels, predictions))


def mean_class_accuracy(predictions: np.ndarray, labels: np.ndarray,
                        num_classes: Optional[int] = None) -> float:
    """
    Unweighted mean of per-class recall; classes absent from ``labels``
    are left out of the mean.
    """
    labels = np.asarray(labels, dtype=np.int64)
    present = np.unique(labels)
    if num_classes is not None and present.size < num_classes:
        logger.warning(
            f"mean class accuracy: {num_classes - present.size} class(es) absent from targets, excluded"
        )
    recalls = recall_score(labels, predictions, labels=present, average=None, zero_division=0)
    return float(np.mean(recalls))


def compute_metrics(logits: np.ndarray, targets: np.ndarray, task: str,
                    num_classes: Optional[int] = None) -> Dict[str, float]:
    predictions = predict(logits, task)
    if task == "multilabel":
        return {"micro_f1": micro_f1(predictions, targets)}
    return {
        "accuracy": accuracy(predictions, targets),
        "mean_class_accuracy": mean_class_accuracy(predictions, targets, num_classes),
    }


def primary_metric(task: str) -> str:
    """Name of the metric used for model selection."""
    return "micro_f1" if task == "multilabel" else "accuracy"
