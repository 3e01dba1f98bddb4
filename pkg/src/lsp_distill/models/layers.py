"""
Graph convolution layers, dense layers and global pooling.
"""
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.exceptions import ContractError, ShapeError
from ..graph import Graph
from ..tensor import Tensor, ops, parameter


def glorot(rng: np.random.Generator, shape: Tuple[int, ...], name: str) -> Tensor:
    """Glorot-uniform initialised parameter; fans are the last two dimensions."""
    fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) > 1 else (shape[0], 1)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return parameter(rng.uniform(-limit, limit, size=shape), name=name)


def zeros(shape: Tuple[int, ...], name: str) -> Tensor:
    return parameter(np.zeros(shape), name=name)


class Linear:
    """Dense layer ``x W + b``."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str,
                 bias: bool = True):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = glorot(rng, (in_dim, out_dim), f"{name}.weight")
        self.bias = zeros((out_dim,), f"{name}.bias") if bias else None

    def parameters(self) -> Dict[str, Tensor]:
        params = {self.weight.name: self.weight}
        if self.bias is not None:
            params[self.bias.name] = self.bias
        return params

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.weight.name}: expected width {self.in_dim}, got shape {x.shape}")
        out = ops.matmul(x, self.weight)
        return out if self.bias is None else ops.add(out, self.bias)


class GatLayer:
    """
    Multi-head graph attention.

    For an edge (j, i) head h scores ``LeakyReLU(a_h · [W_h x_i ‖ W_h x_j])``;
    the scores are normalised over the senders of i and used to sum
    ``W_h x_j``. Heads are concatenated, or averaged on an output layer. An
    optional residual projection of ``x`` is added to every head before the
    merge.
    """

    def __init__(self, in_dim: int, out_dim: int, heads: int, rng: np.random.Generator,
                 name: str, concat: bool = True, residual: bool = False,
                 negative_slope: float = 0.2):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.heads = heads
        self.concat = concat
        self.negative_slope = negative_slope
        projected = heads * out_dim
        self.weight = glorot(rng, (in_dim, projected), f"{name}.weight")
        self.att_src = glorot(rng, (heads, out_dim), f"{name}.att_src")
        self.att_dst = glorot(rng, (heads, out_dim), f"{name}.att_dst")
        self.bias = zeros((self.output_width,), f"{name}.bias")
        self.residual = Linear(in_dim, projected, rng, f"{name}.residual") if residual else None

    @property
    def output_width(self) -> int:
        return self.heads * self.out_dim if self.concat else self.out_dim

    def parameters(self) -> Dict[str, Tensor]:
        params = {p.name: p for p in (self.weight, self.att_src, self.att_dst, self.bias)}
        if self.residual is not None:
            params.update(self.residual.parameters())
        return params

    def __call__(self, x: Tensor, g: Graph) -> Tuple[Tensor, Tensor]:
        """
        Returns:
            (node features n×output_width, attention E×heads in CSR edge order)

        Raises:
            ShapeError: If the input width does not match
            ContractError: If a node has no sender (add self-loops first)
        """
        n = x.shape[0]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.weight.name}: expected width {self.in_dim}, got shape {x.shape}")
        if g.n != n:
            raise ShapeError(f"{self.weight.name}: graph has {g.n} nodes, features have {n} rows")
        if np.any(g.degrees() == 0):
            raise ContractError(
                f"{self.weight.name}: node {int(np.argmin(g.degrees()))} has no senders; "
                "GAT layers need self-loops"
            )
        senders, receivers = g.edge_arrays()
        h = ops.reshape(ops.matmul(x, self.weight), (n, self.heads, self.out_dim))
        score_src = ops.sum(ops.mul(h, self.att_src), axis=2)
        score_dst = ops.sum(ops.mul(h, self.att_dst), axis=2)
        scores = ops.add(ops.gather_rows(score_src, senders), ops.gather_rows(score_dst, receivers))
        scores = ops.leaky_relu(scores, self.negative_slope)
        attention = ops.segment_softmax(scores, receivers, n)

        messages = ops.mul(ops.gather_rows(h, senders),
                           ops.reshape(attention, (len(senders), self.heads, 1)))
        out = ops.scatter_add_rows(messages, receivers, n)
        if self.residual is not None:
            out = ops.add(out, ops.reshape(self.residual(x), (n, self.heads, self.out_dim)))
        if self.concat:
            out = ops.reshape(out, (n, self.heads * self.out_dim))
        else:
            out = ops.mean(out, axis=1)
        return ops.add(out, self.bias), attention


class EdgeConvLayer:
    """
    EdgeConv: ``out_i = max_j LeakyReLU(W [x_i ‖ x_j - x_i] + b)`` over senders j.

    The weight is kept as its centre and difference halves so that the
    per-edge product reduces to two per-node products and a gather.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str,
                 negative_slope: float = 0.2):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.negative_slope = negative_slope
        limit = np.sqrt(6.0 / (2 * in_dim + out_dim))
        full = rng.uniform(-limit, limit, size=(2 * in_dim, out_dim))
        self.weight_center = parameter(full[:in_dim], name=f"{name}.weight_center")
        self.weight_delta = parameter(full[in_dim:], name=f"{name}.weight_delta")
        self.bias = zeros((out_dim,), f"{name}.bias")

    @property
    def output_width(self) -> int:
        return self.out_dim

    def parameters(self) -> Dict[str, Tensor]:
        return {p.name: p for p in (self.weight_center, self.weight_delta, self.bias)}

    def edge_features(self, x: Tensor, g: Graph) -> Tensor:
        """Pre-aggregation activations, one row per edge in CSR order."""
        senders, receivers = g.edge_arrays()
        center = ops.sub(ops.matmul(x, self.weight_center), ops.matmul(x, self.weight_delta))
        neighbour = ops.matmul(x, self.weight_delta)
        h = ops.add(ops.add(ops.gather_rows(center, receivers), ops.gather_rows(neighbour, senders)),
                    self.bias)
        return ops.leaky_relu(h, self.negative_slope)

    def __call__(self, x: Tensor, g: Graph) -> Tensor:
        """
        Raises:
            ShapeError: If the input width does not match
            ContractError: If a node has no senders
        """
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.bias.name}: expected width {self.in_dim}, got shape {x.shape}")
        if np.any(g.degrees() == 0):
            raise ContractError(f"{self.bias.name}: node {int(np.argmin(g.degrees()))} has no senders")
        _, receivers = g.edge_arrays()
        return ops.segment_max(self.edge_features(x, g), receivers, g.n)


def global_pool(features: Tensor, mode: str = "max", batch: Optional[np.ndarray] = None,
                num_sets: Optional[int] = None) -> Tensor:
    """
    Set-level readout over nodes.

    Without ``batch`` the result is a single row (1×F). With ``batch`` (the
    set id of every node) there is one row per set.

    Raises:
        ContractError: For an empty node set or an unknown mode
    """
    if features.ndim != 2 or features.shape[0] == 0:
        raise ContractError(f"global_pool: need at least one node, got shape {features.shape}")
    if batch is None:
        if mode == "max":
            return ops.reshape(ops.max_rows(features), (1, features.shape[1]))
        if mode == "mean":
            return ops.mean(features, axis=0, keepdims=True)
        raise ContractError(f"global_pool: unknown mode {mode!r}")

    batch = np.asarray(batch, dtype=np.int64)
    num_sets = int(batch.max()) + 1 if num_sets is None else num_sets
    if mode == "max":
        return ops.segment_max(features, batch, num_sets)
    if mode == "mean":
        counts = np.bincount(batch, minlength=num_sets).astype(np.float32)
        if np.any(counts == 0):
            raise ContractError("global_pool: empty set in batch")
        return ops.div(ops.scatter_add_rows(features, batch, num_sets), counts[:, None])
    raise ContractError(f"global_pool: unknown mode {mode!r}")
