"""
Directed graphs in CSR form keyed by receiver.

Row ``i`` of the adjacency holds the senders ``j`` of every edge ``(j, i)``,
sorted ascending without duplicates.
"""
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..core.exceptions import GraphError
from ..core.logger import logger


class Graph:
    """
    Immutable directed graph over ``n`` nodes.

    Attributes:
        n: node count
        indptr: CSR row pointer, length n + 1
        indices: senders in receiver-major order
    """

    __slots__ = ("n", "indptr", "indices", "_receivers")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False
        receivers = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        receivers.flags.writeable = False
        self._receivers = receivers

    @classmethod
    def from_scipy(cls, matrix: sparse.spmatrix) -> "Graph":
        """Build from a square sparse matrix whose row i lists the senders of i."""
        csr = sparse.csr_matrix(matrix)
        csr.sum_duplicates()
        csr.sort_indices()
        if csr.shape[0] != csr.shape[1]:
            raise GraphError(f"adjacency must be square, got {csr.shape}")
        return cls(csr.shape[0], csr.indptr, csr.indices)

    def to_scipy(self) -> sparse.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.int32)
        return sparse.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))

    @property
    def num_edges(self) -> int:
        return int(self.indices.size)

    @property
    def has_self_loops(self) -> bool:
        """True when at least one node sends to itself."""
        return bool(np.any(self.indices == self._receivers))

    def senders(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(senders, receivers) of every edge, in CSR order."""
        return self.indices, self._receivers

    def edge_list(self) -> List[Tuple[int, int]]:
        return [(int(s), int(r)) for s, r in zip(self.indices, self._receivers)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.n, self.indptr.tobytes(), self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def build_graph(n: int, edge_list: Iterable[Sequence[int]], undirected: bool = False) -> Graph:
    """
    Build a graph from (sender, receiver) pairs.

    Duplicates collapse; with ``undirected`` every edge is inserted both ways.

    Raises:
        GraphError: Naming the first edge with an index outside [0, n)
    """
    edges = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if n < 0:
        raise GraphError(f"node count must be non-negative, got {n}")
    bad = np.flatnonzero((edges < 0).any(axis=1) | (edges >= n).any(axis=1))
    if bad.size:
        s, r = edges[bad[0]]
        raise GraphError(f"edge ({s}, {r}) has an index outside [0, {n})")
    senders, receivers = edges[:, 0], edges[:, 1]
    if undirected:
        senders, receivers = np.concatenate([senders, receivers]), np.concatenate([receivers, senders])
    matrix = sparse.coo_matrix(
        (np.ones(senders.size, dtype=np.int32), (receivers, senders)), shape=(n, n)
    )
    graph = Graph.from_scipy(matrix)
    logger.debug(f"Built {graph!r} from {len(edges)} input edges (undirected={undirected})")
    return graph


def add_self_loops(g: Graph) -> Graph:
    """Graph where every node also sends to itself; idempotent."""
    return Graph.from_scipy(g.to_scipy() + sparse.identity(g.n, dtype=np.int32, format="csr"))


def remove_self_loops(g: Graph) -> Graph:
    senders, receivers = g.edge_arrays()
    keep = senders != receivers
    if keep.all():
        return g
    return build_graph(g.n, np.stack([senders[keep], receivers[keep]], axis=1))


def empty_graph(n: int) -> Graph:
    return Graph(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))


def adjacency_dense(g: Graph, dtype: Optional[type] = bool) -> np.ndarray:
    """Dense n×n matrix with entry [i, j] set when j sends to i."""
    return g.to_scipy().toarray().astype(dtype)
