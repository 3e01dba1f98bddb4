"""
Task losses, each recorded as a single fused operation.
"""
import numpy as np

from ..core.exceptions import DatasetValidationError, ShapeError
from ..tensor import DTYPE, Tensor, TensorLike, as_tensor, record

TASKS = ("multilabel", "multiclass")


def bce_multilabel_loss(logits: TensorLike, targets: np.ndarray) -> Tensor:
    """
    Mean binary cross entropy over all n×C entries, in the stable form
    ``max(x, 0) − x·y + log(1 + exp(−|x|))``.

    Raises:
        DatasetValidationError: If a target is not 0 or 1
    """
    logits = as_tensor(logits)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f"bce_multilabel_loss: logits {logits.shape} vs targets {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise DatasetValidationError("bce_multilabel_loss: targets must be 0 or 1")
    x = logits.data.astype(np.float64)
    count = max(x.size, 1)
    loss = (np.maximum(x, 0) - x * y + np.log1p(np.exp(-np.abs(x)))).sum() / count
    prob = np.exp(-np.logaddexp(0.0, -x))

    def backward(g: np.ndarray):
        return (g * (prob - y) / count,)

    return record(np.asarray(loss, dtype=DTYPE), (logits,), backward, "bce_multilabel_loss")


def cross_entropy_loss(logits: TensorLike, labels: np.ndarray) -> Tensor:
    """
    Mean softmax cross entropy for integer labels.

    Raises:
        DatasetValidationError: If a label is outside [0, C)
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or labels.size != logits.shape[0]:
        raise ShapeError(f"cross_entropy_loss: logits {logits.shape} vs {labels.size} labels")
    num_classes = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DatasetValidationError(f"cross_entropy_loss: labels must lie in [0, {num_classes})")
    x = logits.data.astype(np.float64)
    shifted = x - x.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(labels.size)
    loss = -log_probs[rows, labels].mean()
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= labels.size

    def backward(g: np.ndarray):
        return (g * grad,)

    return record(np.asarray(loss, dtype=DTYPE), (logits,), backward, "cross_entropy_loss")


def task_loss(logits: TensorLike, targets: np.ndarray, task: str) -> Tensor:
    if task == "multilabel":
        return bce_multilabel_loss(logits, targets)
    return cross_entropy_loss(logits, targets)
