"""
Virtual-edge union of a teacher graph and a student graph.

Local structures of dynamic-graph models are compared over the union of both
models' neighbour sets; the models themselves keep aggregating over their own
graphs.
"""
from enum import IntEnum
from typing import Union

import numpy as np

from ..core.exceptions import ContractError
from .graph import Graph


class Provenance(IntEnum):
    """Which input graph(s) an edge of the union came from."""
    TEACHER_ONLY = 1
    STUDENT_ONLY = 2
    BOTH = 3


class EdgeUnionView:
    """
    Per-node merged sender lists plus a provenance tag per edge.

    ``graph`` holds the union; ``provenance`` is aligned with ``graph.indices``.
    """

    def __init__(self, graph: Graph, provenance: np.ndarray):
        self.graph = graph
        self.provenance = np.asarray(provenance, dtype=np.int8)
        self.provenance.flags.writeable = False

    @property
    def n(self) -> int:
        return self.graph.n

    def senders(self, i: int) -> np.ndarray:
        return self.graph.senders(i)

    def provenance_of(self, i: int) -> np.ndarray:
        return self.provenance[self.graph.indptr[i]:self.graph.indptr[i + 1]]

    def counts(self) -> dict:
        return {tag.name.lower(): int(np.sum(self.provenance == tag)) for tag in Provenance}

    def __repr__(self) -> str:
        return f"EdgeUnionView(n={self.n}, edges={self.graph.num_edges}, {self.counts()})"


def edge_union(g_teacher: Graph, g_student: Graph) -> EdgeUnionView:
    """
    Union of two graphs over the same nodes.

    Raises:
        ContractError: If node counts differ
    """
    if g_teacher.n != g_student.n:
        raise ContractError(
            f"edge_union: teacher graph has {g_teacher.n} nodes, student graph has {g_student.n}"
        )
    # Teacher edges weigh 1 and student edges 2, so the summed entry is the tag.
    merged = g_teacher.to_scipy().astype(np.int8) + 2 * g_student.to_scipy().astype(np.int8)
    merged.sum_duplicates()
    merged.sort_indices()
    graph = Graph(g_teacher.n, merged.indptr, merged.indices)
    return EdgeUnionView(graph, merged.data)


GraphLike = Union[Graph, EdgeUnionView]


def as_graph(g: GraphLike) -> Graph:
    return g.graph if isinstance(g, EdgeUnionView) else g
