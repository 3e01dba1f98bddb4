"""
Graph structures: CSR graphs, kNN construction and edge unions.
"""
from .graph import Graph, add_self_loops, adjacency_dense, build_graph, empty_graph, remove_self_loops
from .knn import batched_knn_graph, knn_graph
from .union import EdgeUnionView, GraphLike, Provenance, as_graph, edge_union

__all__ = [
    "EdgeUnionView",
    "Graph",
    "GraphLike",
    "Provenance",
    "add_self_loops",
    "adjacency_dense",
    "as_graph",
    "batched_knn_graph",
    "build_graph",
    "edge_union",
    "empty_graph",
    "knn_graph",
    "remove_self_loops",
]
