"""
Local structure preserving loss.

The local structure of node i is the softmax, over its senders j, of the
kernel similarity between i and j. The loss is the mean, over nodes with at
least one neighbour, of KL(student ‖ teacher) between aligned distributions.
Self-loops never take part in a local structure.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import LSP_MODES
from ..core.exceptions import AlignmentError, ConfigError, ContractError
from ..core.logger import logger
from ..graph import Graph, GraphLike, as_graph, edge_union, remove_self_loops
from ..tensor import Tensor, TensorLike, as_tensor, no_grad, ops
from .kernels import KernelChoice, edge_similarity


@dataclass
class LocalStructureSet:
    """
    Per-node neighbour distributions over a self-loop-free graph.

    ``probs`` is aligned with the graph's CSR edge order, so the entries of
    node i are ``probs[indptr[i]:indptr[i + 1]]``.
    """
    graph: Graph
    probs: Tensor

    @property
    def n(self) -> int:
        return self.graph.n

    def neighbors(self, i: int) -> np.ndarray:
        return self.graph.senders(i)

    def distribution(self, i: int) -> np.ndarray:
        start, stop = self.graph.indptr[i], self.graph.indptr[i + 1]
        return self.probs.numpy()[start:stop]

    def non_empty(self) -> np.ndarray:
        """Boolean mask of nodes with at least one neighbour."""
        return self.graph.degrees() > 0

    def sums(self) -> np.ndarray:
        _, receivers = self.graph.edge_arrays()
        return np.bincount(receivers, weights=self.probs.numpy().astype(np.float64),
                           minlength=self.n)


def _structure_graph(g: GraphLike) -> Graph:
    return remove_self_loops(as_graph(g))


def local_structure(z: TensorLike, g: GraphLike, kernel: KernelChoice) -> LocalStructureSet:
    """Neighbour distributions of every node of ``g`` under ``kernel``."""
    z = as_tensor(z)
    graph = _structure_graph(g)
    if z.shape[0] != graph.n:
        raise ContractError(f"local_structure: {z.shape[0]} feature rows for a {graph.n}-node graph")
    senders, receivers = graph.edge_arrays()
    scores = edge_similarity(z, senders, receivers, kernel)
    return LocalStructureSet(graph, ops.segment_softmax(scores, receivers, graph.n))


def kl_per_node(ls_s: TensorLike, ls_t: TensorLike) -> Tensor:
    """
    KL(student ‖ teacher) of two aligned probability vectors, logs clamped
    at 1e-10.

    Raises:
        AlignmentError: If the vectors differ in length
    """
    ls_s, ls_t = as_tensor(ls_s), as_tensor(ls_t)
    if ls_s.shape != ls_t.shape:
        raise AlignmentError(f"kl_per_node: distributions of shapes {ls_s.shape} and {ls_t.shape}")
    return ops.sum(ops.mul(ls_s, ops.sub(ops.log(ls_s), ops.log(ls_t))))


def kl_per_node_all(ls_s: LocalStructureSet, ls_t: LocalStructureSet) -> Tensor:
    """Vector of per-node KL terms; nodes without neighbours contribute 0."""
    if ls_s.graph != ls_t.graph:
        raise AlignmentError("kl_per_node_all: local structures are over different neighbour lists")
    _, receivers = ls_s.graph.edge_arrays()
    terms = ops.mul(ls_s.probs, ops.sub(ops.log(ls_s.probs), ops.log(ls_t.probs)))
    return ops.scatter_add_rows(terms, receivers, ls_s.n)


def lsp_loss(z_s: TensorLike, g_s: GraphLike, z_t: TensorLike, g_t: GraphLike,
             kernel: KernelChoice, mode: str = "static") -> Tensor:
    """
    Mean KL(student ‖ teacher) between local structures.

    In ``static`` mode both models must share one graph. In ``union`` mode
    both distributions range over the merged sender lists of the two graphs.
    The teacher side never receives gradients.

    Raises:
        ContractError: For differing graphs in static mode or an unknown mode
    """
    if mode not in LSP_MODES:
        raise ContractError(f"lsp_loss: unknown mode {mode!r}")
    graph_s, graph_t = _structure_graph(g_s), _structure_graph(g_t)
    if mode == "static":
        if graph_s != graph_t:
            raise ContractError(
                "lsp_loss: teacher and student graphs differ; use union mode for dynamic graphs"
            )
        graph = graph_s
    else:
        union = edge_union(graph_t, graph_s)
        logger.debug(f"LSP union graph {union!r}")
        graph = union.graph

    ls_s = local_structure(z_s, graph, kernel)
    with no_grad():
        ls_t = local_structure(as_tensor(z_t).detach(), graph, kernel)

    nodes = int(np.count_nonzero(ls_s.non_empty()))
    if nodes == 0:
        logger.warning("lsp_loss: no node has a neighbour; loss is zero")
        return Tensor(0.0)
    if nodes < graph.n:
        logger.warning(f"lsp_loss: skipping {graph.n - nodes} isolated node(s)")
    return ops.scale(ops.sum(kl_per_node_all(ls_s, ls_t)), 1.0 / nodes)


def total_loss(task_loss: Tensor, lsp: Tensor, lam: float) -> Tensor:
    """
    ``task_loss + lam * lsp``.

    Raises:
        ConfigError: If lam is negative
    """
    if lam < 0:
        raise ConfigError(f"distill.lambda must be non-negative, got {lam}")
    if lam == 0:
        return task_loss
    return ops.add(task_loss, ops.scale(lsp, lam))


def parse_pairs(text: Optional[str]) -> List[Tuple[int, int]]:
    """
    Parse ``"t:s,t:s"`` layer pairs; indices may be negative. Empty or None
    means the last layer of each model.

    Raises:
        ConfigError: For malformed pairs
    """
    if text is None or not str(text).strip():
        return [(-1, -1)]
    pairs = []
    for chunk in str(text).split(","):
        parts = chunk.strip().split(":")
        try:
            if len(parts) != 2:
                raise ValueError
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ConfigError(f"layer pair {chunk.strip()!r} is not of the form teacher:student")
    return pairs


@dataclass
class LspPairing:
    """Teacher/student layer pairs the loss is applied to and the graph mode."""
    pairs: List[Tuple[int, int]] = field(default_factory=lambda: [(-1, -1)])
    mode: str = "union"

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ConfigError("distill.lsp_pairs must name at least one layer pair")
        if self.mode not in LSP_MODES:
            raise ConfigError(f"distill.lsp_mode must be one of {list(LSP_MODES)}, got {self.mode!r}")

    @classmethod
    def parse(cls, text: Optional[str], mode: str = "union") -> "LspPairing":
        return cls(parse_pairs(text), mode)

    def resolve(self, teacher_layers: int, student_layers: int) -> List[Tuple[int, int]]:
        """
        Pairs with negative indices made absolute.

        Raises:
            ConfigError: If an index is out of range for its model
        """
        return [
            (_resolve_index(t, teacher_layers, "teacher"), _resolve_index(s, student_layers, "student"))
            for t, s in self.pairs
        ]

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "mode": self.mode}


def _resolve_index(index: int, count: int, role: str) -> int:
    resolved = index + count if index < 0 else index
    if not 0 <= resolved < count:
        raise ConfigError(f"{role} layer {index} is out of range for a {count}-layer model")
    return resolved


def paired_lsp_loss(student_features: Sequence[Tensor], student_graphs: Sequence[Graph],
                    teacher_features: Sequence[Tensor], teacher_graphs: Sequence[Graph],
                    kernel: KernelChoice, pairing: LspPairing) -> Tensor:
    """Mean of lsp_loss over the configured layer pairs."""
    pairs = pairing.resolve(len(teacher_features), len(student_features))
    losses = [
        lsp_loss(student_features[s], student_graphs[s], teacher_features[t], teacher_graphs[t],
                 kernel, pairing.mode)
        for t, s in pairs
    ]
    loss = losses[0]
    for extra in losses[1:]:
        loss = ops.add(loss, extra)
    return loss if len(losses) == 1 else ops.scale(loss, 1.0 / len(losses))


def structure_divergence(student_features: Sequence[Tensor], student_graphs: Sequence[Graph],
                         teacher_features: Sequence[Tensor], teacher_graphs: Sequence[Graph],
                         kernel: KernelChoice, pairing: LspPairing) -> float:
    """Value of the paired LSP loss without recording gradients."""
    with no_grad():
        return paired_lsp_loss(student_features, student_graphs, teacher_features,
                               teacher_graphs, kernel, pairing).item()
