"""
JSON graph datasets, the PPI converter and feature standardisation.

File layout::

    {"feature_dim": F, "label_dim": C, "task": "multilabel" | "multiclass",
     "directed": false,
     "graphs": [{"split": "train", "num_nodes": n, "edges": [[s, r], ...],
                 "features": [[...], ...], "labels": [[...], ...] or [...]}]}

Edges are stored once; unless ``directed`` is true both directions are built.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from ..core.exceptions import DatasetParseError, DatasetValidationError, GraphError
from ..core.logger import logger
from ..graph import build_graph
from .datasets import GraphDataset, GraphSample

PathLike = Union[str, Path]


def _require(obj: Any, key: str, kind: Any, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise DatasetParseError(f"{where}: missing key {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise DatasetParseError(f"{where}.{key}: expected an integer")
    if not isinstance(value, kind):
        name = getattr(kind, "__name__", "scalar")
        raise DatasetParseError(f"{where}.{key}: expected {name}, got {type(value).__name__}")
    return value


def _matrix(value: Any, where: str, dtype: type) -> np.ndarray:
    try:
        array = np.asarray(value, dtype=dtype)
    except (TypeError, ValueError):
        raise DatasetParseError(f"{where}: not a rectangular numeric array")
    if array.dtype == object:
        raise DatasetParseError(f"{where}: not a rectangular numeric array")
    return array


def parse_graph_dataset(data: Dict[str, Any]) -> GraphDataset:
    """
    Build and validate a dataset from already-decoded JSON.

    Raises:
        DatasetParseError: With the JSON path of a structural problem
        DatasetValidationError: For out-of-range indices, NaNs or widths
    """
    if not isinstance(data, dict):
        raise DatasetParseError("$: expected a JSON object")
    feature_dim = _require(data, "feature_dim", int, "$")
    label_dim = _require(data, "label_dim", int, "$")
    task = _require(data, "task", str, "$")
    if feature_dim < 1 or label_dim < 1:
        raise DatasetValidationError(
            f"$: feature_dim and label_dim must be positive, got {feature_dim} and {label_dim}"
        )
    directed = bool(data.get("directed", False))
    entries = _require(data, "graphs", list, "$")

    dataset = GraphDataset(feature_dim, label_dim, task)
    for i, entry in enumerate(entries):
        where = f"$.graphs[{i}]"
        n = _require(entry, "num_nodes", int, where)
        split = _require(entry, "split", str, where)
        edges = _matrix(_require(entry, "edges", list, where), f"{where}.edges", np.float64)
        if edges.size and (edges.ndim != 2 or edges.shape[1] != 2):
            raise DatasetParseError(f"{where}.edges: expected [sender, receiver] pairs")
        if edges.size and not np.all(np.isfinite(edges) & (edges == np.round(edges))):
            raise DatasetParseError(f"{where}.edges: node indices must be integers")
        try:
            graph = build_graph(n, edges.reshape(-1, 2).astype(np.int64), undirected=not directed)
        except (GraphError, ValueError) as e:
            raise DatasetValidationError(f"{where}.edges: {e}")

        features = _matrix(_require(entry, "features", list, where), f"{where}.features", np.float32)
        if features.size == 0 and n == 0:
            features = features.reshape(0, feature_dim)
        if features.ndim != 2 or features.shape[1] != feature_dim:
            width = features.shape[1] if features.ndim == 2 else "ragged"
            raise DatasetValidationError(
                f"{where}.features has width {width}, but feature_dim is {feature_dim}"
            )
        label_type = np.float32 if task == "multilabel" else np.float64
        labels = _matrix(_require(entry, "labels", list, where), f"{where}.labels", label_type)
        if task == "multiclass":
            if not np.all(np.isfinite(labels) & (labels == np.round(labels))):
                raise DatasetValidationError(f"{where}.labels must be integer class ids")
            labels = labels.astype(np.int64)
        dataset.graphs.append(GraphSample(graph, features, labels, split))

    try:
        return dataset.validate(require_all_splits=False)
    except DatasetValidationError as e:
        raise DatasetValidationError(f"$.{e}")


def load_graph_dataset(path: PathLike) -> GraphDataset:
    """
    Raises:
        DatasetParseError: If the file is unreadable or malformed
        DatasetValidationError: If the content violates the dataset rules
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise DatasetParseError(f"{path}: {e}")
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}")
    except UnicodeDecodeError as e:
        raise DatasetParseError(f"{path}: not UTF-8 text: {e.reason}")
    dataset = parse_graph_dataset(data)
    logger.info(f"Loaded {len(dataset.graphs)} graphs from {path} {dataset.split_sizes()}")
    return dataset


def _is_symmetric(sample: GraphSample) -> bool:
    adjacency = sample.graph.to_scipy()
    return (adjacency != adjacency.T).nnz == 0


def graph_dataset_to_dict(dataset: GraphDataset) -> Dict[str, Any]:
    directed = not all(_is_symmetric(sample) for sample in dataset.graphs)
    graphs: List[Dict[str, Any]] = []
    for sample in dataset.graphs:
        senders, receivers = sample.graph.edge_arrays()
        once = np.ones(senders.size, dtype=bool) if directed else senders <= receivers
        graphs.append({
            "split": sample.split,
            "num_nodes": sample.num_nodes,
            "edges": np.stack([senders[once], receivers[once]], axis=1).tolist(),
            "features": sample.features.tolist(),
            "labels": sample.labels.tolist(),
        })
    return {"feature_dim": dataset.feature_dim, "label_dim": dataset.label_dim,
            "task": dataset.task, "directed": directed, "graphs": graphs}


def save_graph_dataset(dataset: GraphDataset, path: PathLike) -> Path:
    """Write ``dataset`` as JSON; symmetric graphs store each edge once."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(graph_dataset_to_dict(dataset), f)
    logger.debug(f"Wrote {len(dataset.graphs)} graphs to {path}")
    return path


def standardize_features(dataset: GraphDataset) -> GraphDataset:
    """
    Zero-mean unit-variance features using train-split statistics; constant
    columns are only centred.
    """
    train = dataset.split("train") or dataset.graphs
    stacked = np.concatenate([g.features for g in train]).astype(np.float64)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0] = 1.0
    graphs = [
        GraphSample(g.graph, ((g.features - mean) / std).astype(np.float32), g.labels, g.split, g.community)
        for g in dataset.graphs
    ]
    return GraphDataset(dataset.feature_dim, dataset.label_dim, dataset.task, graphs)


def convert_ppi(directory: PathLike, prefix: str = "ppi") -> GraphDataset:
    """
    Convert the public PPI layout into a GraphDataset.

    Reads ``<prefix>-G.json`` (node-link graph whose nodes carry ``val`` and
    ``test`` flags), ``<prefix>-feats.npy``, ``<prefix>-id_map.json`` and
    ``<prefix>-class_map.json``. Each split becomes one graph induced on its
    nodes.

    Raises:
        DatasetParseError: If a file is missing or malformed
    """
    directory = Path(directory)
    try:
        with open(directory / f"{prefix}-G.json") as f:
            node_link = json.load(f)
        with open(directory / f"{prefix}-id_map.json") as f:
            id_map = {str(k): int(v) for k, v in json.load(f).items()}
        with open(directory / f"{prefix}-class_map.json") as f:
            class_map = {str(k): v for k, v in json.load(f).items()}
        feats = np.load(directory / f"{prefix}-feats.npy")
    except (OSError, ValueError) as e:
        raise DatasetParseError(f"{directory}: cannot read PPI files: {e}")

    nodes = _require(node_link, "nodes", list, "$")
    links = _require(node_link, "links", list, "$")
    split_of: Dict[int, str] = {}
    for i, node in enumerate(nodes):
        key = str(_require(node, "id", (int, str), f"$.nodes[{i}]"))
        if key not in id_map:
            raise DatasetParseError(f"$.nodes[{i}]: id {key} missing from id_map")
        split_of[id_map[key]] = "test" if node.get("test") else "val" if node.get("val") else "train"
    labels_by_row = {id_map[k]: v for k, v in class_map.items() if k in id_map}

    label_dim = len(next(iter(labels_by_row.values())))
    dataset = GraphDataset(int(feats.shape[1]), label_dim, "multilabel")
    for split in ("train", "val", "test"):
        rows = np.array(sorted(r for r, s in split_of.items() if s == split), dtype=np.int64)
        if rows.size == 0:
            continue
        local = {int(r): i for i, r in enumerate(rows)}
        edges = []
        for link in links:
            s = id_map.get(str(link.get("source")), link.get("source"))
            r = id_map.get(str(link.get("target")), link.get("target"))
            if s in local and r in local:
                edges.append((local[s], local[r]))
        graph = build_graph(len(rows), edges, undirected=True)
        labels = np.asarray([labels_by_row[int(r)] for r in rows], dtype=np.float32).reshape(len(rows), label_dim)
        dataset.graphs.append(GraphSample(graph, feats[rows].astype(np.float32), labels, split))
    logger.info(f"Converted PPI layout from {directory}: {dataset.split_sizes()}")
    return dataset.validate(require_all_splits=False)
