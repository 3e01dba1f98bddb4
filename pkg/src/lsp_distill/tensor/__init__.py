"""
Reverse-mode automatic differentiation over dense float32 tensors.
"""
from .tensor import (
    DTYPE,
    Tape,
    Tensor,
    TensorLike,
    as_tensor,
    current_tape,
    is_grad_enabled,
    no_grad,
    parameter,
    record,
    reset_default_tape,
)
from .gradcheck import check_gradients, gradient_check
from . import ops

__all__ = [
    "DTYPE",
    "Tape",
    "Tensor",
    "TensorLike",
    "as_tensor",
    "check_gradients",
    "current_tape",
    "gradient_check",
    "is_grad_enabled",
    "no_grad",
    "ops",
    "parameter",
    "record",
    "reset_default_tape",
]
