"""
Comparison distillers: soft-label KD, FitNet hints and attention transfer.
"""
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import ContractError, ShapeError, UnsupportedTaskError
from ..models.layers import Linear
from ..tensor import Tensor, TensorLike, as_tensor, ops


def kd_loss(student_logits: TensorLike, teacher_logits: TensorLike, temperature: float = 4.0,
            task: str = "multiclass") -> Tensor:
    """
    ``T² · mean_rows KL(softmax(teacher/T) ‖ softmax(student/T))``.

    Raises:
        UnsupportedTaskError: Under a multilabel task, where the outputs are
            independent sigmoids rather than one distribution
        ShapeError: If the logit shapes differ
    """
    if task == "multilabel":
        raise UnsupportedTaskError(
            "KD needs softmax outputs and is not suitable for the multilabel (BCE) task"
        )
    if temperature <= 0:
        raise ContractError(f"kd_loss: temperature must be positive, got {temperature}")
    student, teacher = as_tensor(student_logits), as_tensor(teacher_logits).detach()
    if student.shape != teacher.shape or student.ndim != 2:
        raise ShapeError(f"kd_loss: logits of shapes {student.shape} and {teacher.shape}")

    inv_t = 1.0 / temperature
    log_p_teacher = ops.log_softmax(ops.scale(teacher, inv_t))
    p_teacher = ops.exp(log_p_teacher)
    log_p_student = ops.log_softmax(ops.scale(student, inv_t))
    kl = ops.sum(ops.mul(p_teacher, ops.sub(log_p_teacher, log_p_student)))
    return ops.scale(kl, temperature ** 2 / student.shape[0])


class FitNetMapper:
    """Trainable linear map from student feature width to teacher width."""

    def __init__(self, student_dim: int, teacher_dim: int, rng: np.random.Generator,
                 init: str = "glorot"):
        self.linear = Linear(student_dim, teacher_dim, rng, name="fitnet.mapper")
        if init == "zeros":
            self.linear.weight.data[...] = 0.0
        elif init == "identity":
            if student_dim != teacher_dim:
                raise ContractError("fitnet: identity mapper needs equal widths")
            self.linear.weight.data[...] = np.eye(student_dim)
        elif init != "glorot":
            raise ContractError(f"fitnet: unknown mapper init {init!r}")

    def parameters(self) -> Dict[str, Tensor]:
        return self.linear.parameters()

    def __call__(self, x: Tensor) -> Tensor:
        return self.linear(x)


def fitnet_loss(student_feat: TensorLike, teacher_feat: TensorLike, mapper: FitNetMapper) -> Tensor:
    """
    Mean squared error between mapped student features and teacher features.

    Raises:
        ContractError: If the mapped features do not match the teacher's shape
    """
    student, teacher = as_tensor(student_feat), as_tensor(teacher_feat).detach()
    try:
        mapped = mapper(student)
    except ShapeError as e:
        raise ContractError(f"fitnet_loss: {e}")
    if mapped.shape != teacher.shape:
        raise ContractError(f"fitnet_loss: mapped shape {mapped.shape} vs teacher shape {teacher.shape}")
    return ops.mean(ops.square(ops.sub(mapped, teacher)))


def attention_map(features: TensorLike, segments: Optional[np.ndarray] = None) -> Tensor:
    """
    Per-node attention ``Σ_c |F_c|``, L2-normalised over the nodes of each
    sample.

    Args:
        features: (N, C) node features
        segments: sample id per row for batched clouds; None treats all
            rows as one sample

    Raises:
        ContractError: If a sample's attention values are all zero
    """
    features = as_tensor(features)
    attention = ops.sum(ops.abs(features), axis=1)
    if segments is None:
        if not np.any(attention.data):
            raise ContractError("attention map is all zero and cannot be normalised")
        return ops.div(attention, ops.sqrt(ops.sum(ops.square(attention))))

    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (attention.shape[0],):
        raise ContractError(f"attention_map: {segments.size} segment ids for {attention.shape[0]} rows")
    count = int(segments.max()) + 1 if segments.size else 0
    squared = ops.scatter_add_rows(ops.reshape(ops.square(attention), (-1, 1)), segments, count)
    if np.any(squared.data[np.bincount(segments, minlength=count) > 0] == 0):
        raise ContractError("attention map of a sample is all zero and cannot be normalised")
    norms = ops.reshape(ops.gather_rows(ops.sqrt(squared), segments), (-1,))
    return ops.div(attention, norms)


def at_loss(student_feat: TensorLike, teacher_feat: TensorLike,
            segments: Optional[np.ndarray] = None) -> Tensor:
    """
    Squared distance between normalised student and teacher attention maps,
    averaged over samples when ``segments`` splits the rows into samples.

    Raises:
        ContractError: If node counts differ or an attention map is all zero
    """
    student, teacher = as_tensor(student_feat), as_tensor(teacher_feat).detach()
    if student.shape[0] != teacher.shape[0]:
        raise ContractError(f"at_loss: {student.shape[0]} student nodes vs {teacher.shape[0]} teacher nodes")
    distance = ops.sum(ops.square(ops.sub(attention_map(student, segments), attention_map(teacher, segments))))
    if segments is None:
        return distance
    return ops.scale(distance, 1.0 / len(np.unique(segments)))
