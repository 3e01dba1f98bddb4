"""
In-memory datasets: node-classification graphs and point clouds.
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..core.exceptions import DatasetValidationError
from ..graph import Graph

SPLITS = ("train", "val", "test")


def _empty_splits(sizes: dict, require_all_splits: bool) -> List[str]:
    """Train must hold data; val and test only when every split is required."""
    required = SPLITS if require_all_splits else ("train",)
    return [name for name in required if sizes[name] == 0]


@dataclass
class GraphSample:
    """
    One graph with node features and labels.

    ``labels`` is n×C binary for multilabel tasks and a length-n vector of
    class ids for multiclass tasks. Synthetic graphs also keep the planted
    ``community`` of every node; it is not written to dataset files.
    """
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    split: str = "train"
    community: Optional[np.ndarray] = None

    @property
    def num_nodes(self) -> int:
        return self.graph.n


@dataclass
class GraphDataset:
    feature_dim: int
    label_dim: int
    task: str
    graphs: List[GraphSample] = field(default_factory=list)

    kind = "graph"

    @property
    def num_classes(self) -> int:
        return self.label_dim

    def split(self, name: str) -> List[GraphSample]:
        return [g for g in self.graphs if g.split == name]

    def split_sizes(self) -> dict:
        return {name: len(self.split(name)) for name in SPLITS}

    def validate(self, require_all_splits: bool = True) -> "GraphDataset":
        """
        Raises:
            DatasetValidationError: Naming the graph and the violated rule
        """
        if self.task not in ("multilabel", "multiclass"):
            raise DatasetValidationError(f"task must be 'multilabel' or 'multiclass', got {self.task!r}")
        for i, sample in enumerate(self.graphs):
            where = f"graphs[{i}]"
            if sample.split not in SPLITS:
                raise DatasetValidationError(f"{where}.split must be one of {list(SPLITS)}, got {sample.split!r}")
            n = sample.graph.n
            if sample.features.shape != (n, self.feature_dim):
                raise DatasetValidationError(
                    f"{where}.features has shape {sample.features.shape}, expected ({n}, {self.feature_dim})"
                )
            if not np.all(np.isfinite(sample.features)):
                raise DatasetValidationError(f"{where}.features contains a non-finite value")
            if self.task == "multilabel":
                if sample.labels.shape != (n, self.label_dim):
                    raise DatasetValidationError(
                        f"{where}.labels has shape {sample.labels.shape}, expected ({n}, {self.label_dim})"
                    )
                if not np.all((sample.labels == 0) | (sample.labels == 1)):
                    raise DatasetValidationError(f"{where}.labels must be 0 or 1")
            else:
                if sample.labels.shape != (n,):
                    raise DatasetValidationError(
                        f"{where}.labels has shape {sample.labels.shape}, expected ({n},)"
                    )
                if n and (sample.labels.min() < 0 or sample.labels.max() >= self.label_dim):
                    raise DatasetValidationError(f"{where}.labels must lie in [0, {self.label_dim})")
        empty = _empty_splits(self.split_sizes(), require_all_splits)
        if empty:
            raise DatasetValidationError(f"split(s) {empty} have no graphs")
        return self


@dataclass
class PointCloudDataset:
    """
    Point clouds of equal size with one class label each.

    Attributes:
        points: (N, n, 3) coordinates
        labels: (N,) class ids
        splits: split name per cloud
        class_names: one name per class id
    """
    points: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    class_names: List[str]

    kind = "pointcloud"
    task = "multiclass"

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_dim(self) -> int:
        return int(self.points.shape[2])

    @property
    def points_per_cloud(self) -> int:
        return int(self.points.shape[1])

    def split(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        mask = self.splits == name
        return self.points[mask], self.labels[mask]

    def split_sizes(self) -> dict:
        return {name: int(np.count_nonzero(self.splits == name)) for name in SPLITS}

    def batches(self, name: str, batch_size: int,
                rng: Optional[np.random.Generator] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Minibatches of one split, shuffled when ``rng`` is given."""
        points, labels = self.split(name)
        order = np.arange(len(labels)) if rng is None else rng.permutation(len(labels))
        for start in range(0, len(order), batch_size):
            chunk = order[start:start + batch_size]
            yield points[chunk], labels[chunk]

    def validate(self, require_all_splits: bool = True) -> "PointCloudDataset":
        """
        Raises:
            DatasetValidationError: Naming the violated rule
        """
        if self.points.ndim != 3 or self.points.shape[2] != 3:
            raise DatasetValidationError(f"points must have shape (N, n, 3), got {self.points.shape}")
        if self.labels.shape != (self.points.shape[0],) or self.splits.shape != self.labels.shape:
            raise DatasetValidationError("labels and splits need one entry per cloud")
        if not np.all(np.isfinite(self.points)):
            bad = int(np.argmax(~np.isfinite(self.points).all(axis=(1, 2))))
            raise DatasetValidationError(f"cloud {bad} contains a non-finite coordinate")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetValidationError(f"labels must lie in [0, {self.num_classes})")
        unknown = sorted(set(self.splits.tolist()) - set(SPLITS))
        if unknown:
            raise DatasetValidationError(f"unknown split name(s) {unknown}")
        empty = _empty_splits(self.split_sizes(), require_all_splits)
        if empty:
            raise DatasetValidationError(f"split(s) {empty} have no clouds")
        return self
