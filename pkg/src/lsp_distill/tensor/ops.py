"""
Differentiable operations.

Every function takes Tensors (or scalars where noted) and returns a Tensor,
recording an exact backward rule on the active tape. Reductions accumulate in
float64 and store float32.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ContractError, NumericError, ShapeError
from .tensor import DTYPE, Tensor, TensorLike, as_tensor, record

LOG_EPS = 1e-10


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after row/column broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not compatible")


def _check_index(idx: np.ndarray, n: int, what: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ContractError(f"{what}: index out of range [0, {n})")
    return idx


# ---------------------------------------------------------------- linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``a`` (m×k) and ``b`` (k×n)."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray):
        return g @ b_data.T, a_data.T @ g

    return record(a_data @ b_data, (a, b), backward, "matmul")


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {x.shape}")
    return record(x.data.T.copy(), (x,), lambda g: (g.T,), "transpose")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    original = x.shape
    try:
        data = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {original} into {tuple(shape)}")
    return record(data, (x,), lambda g: (g.reshape(original),), "reshape")


# ---------------------------------------------------------------- elementwise

def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record(a.data + b.data, (a, b), backward, "add")


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record(a.data - b.data, (a, b), backward, "sub")


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray):
        return _unbroadcast(g * b_data, a.shape), _unbroadcast(g * a_data, b.shape)

    return record(a_data * b_data, (a, b), backward, "mul")


def div(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray):
        return (_unbroadcast(g / b_data, a.shape),
                _unbroadcast(-g * a_data / (b_data * b_data), b.shape))

    return record(a_data / b_data, (a, b), backward, "div")


def scale(x: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return record(x.data * DTYPE(factor), (x,), lambda g: (g * factor,), "scale")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return record(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    """Natural log with inputs clamped below at 1e-10."""
    clamped = np.maximum(x.data, DTYPE(LOG_EPS))
    live = x.data > LOG_EPS

    def backward(g: np.ndarray):
        return (np.where(live, g / clamped, 0.0),)

    return record(np.log(clamped), (x,), backward, "log")


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)

    def backward(g: np.ndarray):
        return (np.where(out > 0, g / (2.0 * np.where(out > 0, out, 1.0)), 0.0),)

    return record(out, (x,), backward, "sqrt")


def square(x: Tensor) -> Tensor:
    data = x.data
    return record(data * data, (x,), lambda g: (2.0 * g * data,), "square")


def abs(x: Tensor) -> Tensor:
    data = x.data
    return record(np.abs(data), (x,), lambda g: (g * np.sign(data),), "abs")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    mask = x.data > 0
    factor = np.where(mask, 1.0, slope).astype(DTYPE)
    return record(x.data * factor, (x,), lambda g: (g * factor,), "leaky_relu")


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    data = x.data
    neg = alpha * np.expm1(np.minimum(data, 0.0))
    out = np.where(data > 0, data, neg)
    slope = np.where(data > 0, 1.0, neg + alpha)
    return record(out, (x,), lambda g: (g * slope,), "elu")


def sigmoid(x: Tensor) -> Tensor:
    data = x.data.astype(np.float64)
    out = np.empty_like(data)
    pos = data >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-data[pos]))
    e = np.exp(data[~pos])
    out[~pos] = e / (1.0 + e)
    out = out.astype(DTYPE)
    return record(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool = True) -> Tensor:
    """Inverted dropout; identity when ``rate`` is 0 or not training."""
    if not training or rate <= 0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(DTYPE) / DTYPE(1.0 - rate)
    return record(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 2-D tensors with equal row counts along columns."""
    if not tensors:
        raise ContractError("concat_cols: nothing to concatenate")
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1 or any(t.ndim != 2 for t in tensors):
        raise ShapeError(f"concat_cols: shapes {[t.shape for t in tensors]} do not share a row count")
    widths = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, widths, axis=1))

    return record(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), backward,
                  "concat_cols")


# ---------------------------------------------------------------- reductions

def sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, dtype=np.float64, keepdims=keepdims).astype(DTYPE)
    shape = x.shape

    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return record(out, (x,), backward, "sum")


def mean(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    if count == 0:
        raise ContractError("mean: empty reduction")
    out = x.data.mean(axis=axis, dtype=np.float64, keepdims=keepdims).astype(DTYPE)
    shape = x.shape

    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, shape),)

    return record(out, (x,), backward, "mean")


def max_rows(x: Tensor) -> Tensor:
    """Column-wise maximum over rows; the gradient goes to the first maximal row."""
    if x.ndim != 2 or x.shape[0] == 0:
        raise ContractError(f"max_rows: need at least one row, got shape {x.shape}")
    arg = np.argmax(x.data, axis=0)
    cols = np.arange(x.shape[1])
    shape = x.shape

    def backward(g: np.ndarray):
        grad = np.zeros(shape, dtype=DTYPE)
        grad[arg, cols] = g
        return (grad,)

    return record(x.data[arg, cols], (x,), backward, "max_rows")


def log_softmax(x: Tensor) -> Tensor:
    """Row-wise log-softmax with max shift."""
    data = x.data.astype(np.float64)
    shifted = data - data.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(out)

    def backward(g: np.ndarray):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return record(out.astype(DTYPE), (x,), backward, "log_softmax")


def softmax(x: Tensor) -> Tensor:
    """Row-wise softmax with max shift."""
    return exp(log_softmax(x))


# ---------------------------------------------------------------- gather / scatter / segments

def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Rows ``x[idx]``; the adjoint of :func:`scatter_add_rows`."""
    idx = _check_index(idx, x.shape[0], "gather_rows")
    shape = x.shape

    def backward(g: np.ndarray):
        grad = np.zeros(shape, dtype=np.float64)
        np.add.at(grad, idx, g)
        return (grad,)

    return record(x.data[idx], (x,), backward, "gather_rows")


def scatter_add_rows(x: Tensor, idx: np.ndarray, n: int) -> Tensor:
    """Sum rows of ``x`` into an ``n``-row output at positions ``idx``."""
    idx = _check_index(idx, n, "scatter_add_rows")
    if idx.size != x.shape[0]:
        raise ShapeError(f"scatter_add_rows: {idx.size} indices for {x.shape[0]} rows")
    out = np.zeros((n,) + x.shape[1:], dtype=np.float64)
    np.add.at(out, idx, x.data)

    def backward(g: np.ndarray):
        return (g[idx],)

    return record(out.astype(DTYPE), (x,), backward, "scatter_add_rows")


def segment_softmax(scores: Tensor, segment_ids: np.ndarray, n: int) -> Tensor:
    """
    Softmax of ``scores`` within each segment (receiver node).

    ``scores`` is (E,) or (E, H); each column is normalised independently.
    Segments without entries produce no outputs.

    Raises:
        NumericError: If any score is not finite
    """
    seg = _check_index(segment_ids, n, "segment_softmax")
    if seg.size != scores.shape[0]:
        raise ShapeError(f"segment_softmax: {seg.size} segment ids for {scores.shape[0]} scores")
    if not np.all(np.isfinite(scores.data)):
        raise NumericError("segment_softmax: non-finite score")
    data = scores.data.astype(np.float64)
    seg_max = np.full((n,) + data.shape[1:], -np.inf)
    np.maximum.at(seg_max, seg, data)
    e = np.exp(data - seg_max[seg])
    denom = np.zeros_like(seg_max)
    np.add.at(denom, seg, e)
    out = e / denom[seg]

    def backward(g: np.ndarray):
        weighted = np.zeros_like(seg_max)
        np.add.at(weighted, seg, g * out)
        return (out * (g - weighted[seg]),)

    return record(out.astype(DTYPE), (scores,), backward, "segment_softmax")


def segment_max(x: Tensor, segment_ids: np.ndarray, n: int) -> Tensor:
    """
    Coordinate-wise maximum of the rows of ``x`` within each segment.

    The sub-gradient of each output coordinate goes to the first row that
    attains the maximum.

    Raises:
        ContractError: If a segment has no rows
    """
    seg = _check_index(segment_ids, n, "segment_max")
    if x.ndim != 2 or seg.size != x.shape[0]:
        raise ShapeError(f"segment_max: {seg.size} segment ids for rows of {x.shape}")
    counts = np.bincount(seg, minlength=n)
    if np.any(counts == 0):
        raise ContractError(f"segment_max: segment {int(np.argmin(counts))} is empty")
    out = np.full((n, x.shape[1]), -np.inf, dtype=DTYPE)
    np.maximum.at(out, seg, x.data)
    rows = x.shape[0]
    hit = x.data == out[seg]
    candidates = np.where(hit, np.arange(rows)[:, None], rows)
    first = np.full(out.shape, rows, dtype=np.int64)
    np.minimum.at(first, seg, candidates)
    cols = np.broadcast_to(np.arange(x.shape[1]), out.shape)
    shape = x.shape

    def backward(g: np.ndarray):
        grad = np.zeros(shape, dtype=DTYPE)
        grad[first.ravel(), cols.ravel()] = g.ravel()
        return (grad,)

    return record(out, (x,), backward, "segment_max")


def detach(x: Tensor) -> Tensor:
    return x.detach()
