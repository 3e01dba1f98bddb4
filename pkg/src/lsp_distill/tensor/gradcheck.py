"""
Finite-difference gradient checking.
"""
from typing import Callable, Dict, Sequence

import numpy as np

from ..core.exceptions import ContractError
from .tensor import Tape, Tensor, no_grad


def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-3) -> float:
    """
    Compare the tape gradient of scalar ``f`` at ``x`` with central differences.

    ``f`` must be deterministic; a non-deterministic ``f`` gives a meaningless
    result that is not detected. The step actually taken is measured on the
    stored (float32) values, so rounding of ``x ± step`` does not bias the
    estimate.

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |numeric|)
    """
    return check_gradients(lambda: f(x), [x], step)[0]


def check_gradients(f: Callable[[], Tensor], params: Sequence[Tensor],
                    step: float = 1e-3) -> Dict[int, float]:
    """
    Gradient check of a closure over several leaf tensors at once.

    Returns:
        mapping from position in ``params`` to its max relative error
    """
    if not 1e-5 <= step <= 1e-2:
        raise ContractError(f"gradient_check: step {step} outside [1e-5, 1e-2]")
    for p in params:
        if not p.requires_grad or not p.is_leaf:
            raise ContractError("gradient_check: every parameter must be a leaf requiring grad")

    saved = [p.grad for p in params]
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = f()
        tape.backward(loss)
    analytic = [np.zeros(p.shape) if p.grad is None else p.grad.astype(np.float64) for p in params]
    for p, g in zip(params, saved):
        p.grad = g

    errors: Dict[int, float] = {}
    with no_grad():
        for position, p in enumerate(params):
            flat = p.data.reshape(-1)
            grad = analytic[position].reshape(-1)
            worst = 0.0
            for k in range(flat.size):
                original = flat[k]
                flat[k] = original + np.float32(step)
                upper_x = float(flat[k])
                upper = float(f().item())
                flat[k] = original - np.float32(step)
                lower_x = float(flat[k])
                lower = float(f().item())
                flat[k] = original
                numeric = (upper - lower) / (upper_x - lower_x)
                worst = max(worst, abs(grad[k] - numeric) / max(1.0, abs(numeric)))
            errors[position] = worst
    return errors
