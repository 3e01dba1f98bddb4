"""
Similarity kernels between node features.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from ..core.config import KERNELS
from ..core.exceptions import ConfigError, ShapeError
from ..tensor import Tensor, TensorLike, as_tensor, ops


@dataclass(frozen=True)
class KernelChoice:
    """
    Similarity used inside local-structure distributions.

    ``l2`` is the squared Euclidean distance itself, so under it farther
    neighbours receive more probability mass; ``rbf`` turns the same distance
    into a decreasing similarity.
    """
    name: str = "rbf"
    degree: int = 2
    offset: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.name not in KERNELS:
            raise ConfigError(f"distill.kernel must be one of {list(KERNELS)}, got {self.name!r}")
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise ConfigError(f"distill.poly_degree must be an integer >= 1, got {self.degree!r}")
        if not self.sigma > 0:
            raise ConfigError(f"distill.rbf_sigma must be positive, got {self.sigma}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelChoice":
        return cls(**data)


def _similarity(a: Tensor, b: Tensor, kernel: KernelChoice) -> Tensor:
    """Kernel between matching rows of ``a`` and ``b``, reducing the last axis."""
    axis = a.ndim - 1
    if kernel.name in ("l2", "rbf"):
        distance = ops.sum(ops.square(ops.sub(a, b)), axis=axis)
        if kernel.name == "l2":
            return distance
        return ops.exp(ops.scale(distance, -1.0 / (2.0 * kernel.sigma ** 2)))

    dot = ops.sum(ops.mul(a, b), axis=axis)
    if kernel.name == "linear":
        return dot
    base = ops.add(dot, kernel.offset) if kernel.offset else dot
    out = base
    for _ in range(kernel.degree - 1):
        out = ops.mul(out, base)
    return out


def kernel_eval(z_i: TensorLike, z_j: TensorLike, kernel: KernelChoice) -> Tensor:
    """
    Similarity of two feature vectors.

    Raises:
        ShapeError: If the widths differ
    """
    z_i, z_j = as_tensor(z_i), as_tensor(z_j)
    if z_i.shape != z_j.shape or z_i.ndim != 1:
        raise ShapeError(f"kernel_eval: expected two vectors of equal width, got {z_i.shape} and {z_j.shape}")
    return _similarity(z_i, z_j, kernel)


def edge_similarity(z: Tensor, senders: np.ndarray, receivers: np.ndarray,
                    kernel: KernelChoice) -> Tensor:
    """``SIM(z_receiver, z_sender)`` for every edge, as an (E,) tensor."""
    if z.ndim != 2:
        raise ShapeError(f"edge_similarity: expected an n×F feature matrix, got shape {z.shape}")
    return _similarity(ops.gather_rows(z, receivers), ops.gather_rows(z, senders), kernel)
