"""
Exact k-nearest-neighbour graphs for dynamic graph models.
"""
from typing import Union

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from ..core.exceptions import ContractError, NumericError
from ..tensor import Tensor
from .graph import Graph


def knn_graph(points: Union[Tensor, np.ndarray], k: int) -> Graph:
    """
    Directed graph whose senders for node i are its ``k`` nearest other nodes.

    Distances are Euclidean in float64; ties go to the smaller node index and
    a node is never its own neighbour.

    Raises:
        ContractError: If k is not in [1, n)
        NumericError: If a feature is not finite
    """
    data = points.data if isinstance(points, Tensor) else np.asarray(points)
    data = np.asarray(data, dtype=np.float64).reshape(data.shape[0], -1)
    n = data.shape[0]
    if not 1 <= k < n:
        raise ContractError(f"knn_graph: K={k} must satisfy 1 <= K < n={n}")
    if not np.all(np.isfinite(data)):
        raise NumericError("knn_graph: non-finite feature")

    dist = cdist(data, data, metric="sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    nearest.sort(axis=1)
    indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
    return Graph(n, indptr, nearest.reshape(-1))


def batched_knn_graph(points: Union[Tensor, np.ndarray], k: int, batch: np.ndarray) -> Graph:
    """
    Block-diagonal kNN graph: neighbours are searched only within the set
    that ``batch`` assigns to each node.

    Raises:
        ContractError: If some set has k or fewer nodes
    """
    data = points.data if isinstance(points, Tensor) else np.asarray(points)
    data = np.asarray(data, dtype=np.float64).reshape(data.shape[0], -1)
    batch = np.asarray(batch, dtype=np.int64)
    if batch.shape != (data.shape[0],):
        raise ContractError(f"batched_knn_graph: batch has shape {batch.shape}, expected ({data.shape[0]},)")

    senders = np.empty(data.shape[0] * k, dtype=np.int64)
    receivers = np.empty_like(senders)
    cursor = 0
    for set_id in np.unique(batch):
        members = np.flatnonzero(batch == set_id)
        local = knn_graph(data[members], k)
        local_senders, local_receivers = local.edge_arrays()
        size = local_senders.size
        senders[cursor:cursor + size] = members[local_senders]
        receivers[cursor:cursor + size] = members[local_receivers]
        cursor += size

    matrix = sparse.coo_matrix(
        (np.ones(cursor, dtype=np.int32), (receivers[:cursor], senders[:cursor])),
        shape=(data.shape[0], data.shape[0]),
    )
    return Graph.from_scipy(matrix)
