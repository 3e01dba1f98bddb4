"""
Dense tensors and the gradient tape.

A Tensor wraps a contiguous float32 numpy array. Operations between tensors
that require gradients are recorded on the innermost active Tape (or the
thread's default tape); ``backward`` replays the tape in reverse and
accumulates ``dLoss/dLeaf`` into every leaf that requires a gradient.
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ContractError, ShapeError

DTYPE = np.float32

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeEntry:
    """One recorded operation."""
    index: int
    inputs: Tuple["Tensor", ...]
    output: "Tensor"
    backward: BackwardRule
    name: str = ""


class _TapeState(threading.local):
    def __init__(self) -> None:
        self.stack: List["Tape"] = []
        self.default: Optional["Tape"] = None
        self.grad_enabled: bool = True


_state = _TapeState()


class Tape:
    """
    Ordered record of differentiable operations.

    Use as a context manager to scope recording to one training step; leaving
    the context clears the tape and releases every recorded reference.
    """

    def __init__(self) -> None:
        self._ops: List[TapeEntry] = []

    def __len__(self) -> int:
        return len(self._ops)

    def __enter__(self) -> "Tape":
        _state.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _state.stack.remove(self)
        self.clear()

    def record(self, inputs: Sequence["Tensor"], output: "Tensor",
               backward: BackwardRule, name: str = "") -> TapeEntry:
        entry = TapeEntry(len(self._ops), tuple(inputs), output, backward, name)
        self._ops.append(entry)
        output._entry = entry
        output._tape = self
        return entry

    def backward(self, loss: "Tensor") -> None:
        """
        Accumulate ``dLoss/dLeaf`` into every leaf reachable from ``loss``.

        Calling backward twice without ``zero_grad`` adds the gradients again.

        Raises:
            ContractError: If loss is not a scalar recorded on this tape
        """
        if loss.size != 1:
            raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
        if loss._entry is None or loss._tape is not self:
            raise ContractError("backward requires a loss recorded on this tape")

        pending: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape, dtype=DTYPE)}
        for entry in reversed(self._ops[:loss._entry.index + 1]):
            grad = pending.pop(id(entry.output), None)
            if grad is None:
                continue
            input_grads = entry.backward(grad)
            for tensor, g in zip(entry.inputs, input_grads):
                if g is None or not tensor.requires_grad:
                    continue
                g = np.asarray(g, dtype=DTYPE).reshape(tensor.shape)
                if tensor._entry is None:
                    tensor._accumulate(g)
                elif id(tensor) in pending:
                    pending[id(tensor)] = pending[id(tensor)] + g
                else:
                    pending[id(tensor)] = g

    def clear(self) -> None:
        """Forget every recorded operation; recorded outputs become constants."""
        for entry in self._ops:
            entry.output._entry = None
            entry.output._tape = None
            entry.output.requires_grad = False
        self._ops = []


def current_tape() -> Tape:
    """Innermost active tape, falling back to this thread's default tape."""
    if _state.stack:
        return _state.stack[-1]
    if _state.default is None:
        _state.default = Tape()
    return _state.default


def reset_default_tape() -> None:
    """Clear this thread's default tape."""
    if _state.default is not None:
        _state.default.clear()


def is_grad_enabled() -> bool:
    return _state.grad_enabled


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording; used for frozen teachers and evaluation."""
    previous = _state.grad_enabled
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    """
    Dense row-major float32 array with optional gradient participation.

    Attributes:
        data: numpy array holding the values
        requires_grad: whether gradients flow to/through this tensor
        grad: accumulated gradient (leaves only), None until backward
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        self.data: np.ndarray = np.ascontiguousarray(data, dtype=DTYPE)
        self.requires_grad: bool = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._entry: Optional[TapeEntry] = None
        self._tape: Optional[Tape] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._entry is None

    def numpy(self) -> np.ndarray:
        """Read-only view of the values."""
        view = self.data.view()
        view.flags.writeable = False
        return view

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() requires a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, no gradient participation."""
        return Tensor(self.data)

    def _accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.shape:
            raise ShapeError(f"gradient shape {grad.shape} does not match tensor shape {self.shape}")
        if self.grad is None:
            self.grad = grad.astype(DTYPE, copy=True)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Backpropagate from this scalar through the tape that recorded it."""
        if self._tape is None:
            raise ContractError("backward requires a tape-recorded scalar loss")
        self._tape.backward(self)

    # Operator sugar; the rules live in ops.
    def __add__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other: "TensorLike") -> "Tensor":
        from . import ops
        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from . import ops
        return ops.matmul(self, other)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        from . import ops
        return ops.sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        from . import ops
        return ops.mean(self, axis)

    def reshape(self, *shape: int) -> "Tensor":
        from . import ops
        return ops.reshape(self, shape)

    @property
    def T(self) -> "Tensor":
        from . import ops
        return ops.transpose(self)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


TensorLike = Union[Tensor, float, int, np.ndarray]


def as_tensor(value: TensorLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: ArrayLike, name: Optional[str] = None) -> Tensor:
    """Trainable leaf tensor."""
    return Tensor(data, requires_grad=True, name=name)


def record(data: np.ndarray, inputs: Sequence[Tensor], backward: BackwardRule,
           name: str = "") -> Tensor:
    """
    Wrap ``data`` as the output of an operation over ``inputs``.

    The operation is put on the tape only when recording is enabled and at
    least one input requires a gradient.
    """
    out = Tensor(data)
    if _state.grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        current_tape().record(inputs, out, backward, name)
    return out

