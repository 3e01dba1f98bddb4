"""
Seeded synthetic corpora standing in for the protein-interaction and
CAD-shape benchmarks.
"""
from typing import List

import numpy as np
from scipy.spatial.transform import Rotation

from ..core.exceptions import ContractError
from ..graph import build_graph
from .datasets import GraphDataset, GraphSample, PointCloudDataset

SHAPE_CLASSES = ["sphere", "cube", "cylinder", "plane"]


def _split_names(count: int) -> List[str]:
    """Train-heavy split assignment; val and test get a tenth each (at least one)."""
    if count < 3:
        return ["train"] * count
    held_out = max(1, count // 10)
    return ["train"] * (count - 2 * held_out) + ["val"] * held_out + ["test"] * held_out


def synth_multilabel_graphs(seed: int = 0, n_graphs: int = 20, nodes_per_graph: int = 200,
                            feature_dim: int = 16, num_classes: int = 8,
                            num_communities: int = 4, p_in: float = 0.3, p_out: float = 0.02,
                            noise: float = 0.5) -> GraphDataset:
    """
    Planted-partition graphs whose features and labels depend on each node's
    community.

    Every community has a feature prototype and a label profile: each class
    is likely (0.9) or unlikely (0.1) for it. Node features are the prototype
    plus Gaussian noise; labels are Bernoulli draws from the profile.
    """
    if min(n_graphs, nodes_per_graph, feature_dim, num_classes, num_communities) < 1:
        raise ContractError("synth_multilabel_graphs: sizes must be positive")
    rng = np.random.default_rng(seed)
    prototypes = rng.normal(size=(num_communities, feature_dim))
    profiles = np.where(rng.random((num_communities, num_classes)) < 0.5, 0.9, 0.1)

    dataset = GraphDataset(feature_dim, num_classes, "multilabel")
    for split in _split_names(n_graphs):
        n = nodes_per_graph
        community = rng.integers(num_communities, size=n)
        same = community[:, None] == community[None, :]
        draws = rng.random((n, n)) < np.where(same, p_in, p_out)
        senders, receivers = np.nonzero(np.triu(draws, k=1))
        graph = build_graph(n, np.stack([senders, receivers], axis=1), undirected=True)
        features = prototypes[community] + noise * rng.normal(size=(n, feature_dim))
        labels = (rng.random((n, num_classes)) < profiles[community]).astype(np.float32)
        dataset.graphs.append(GraphSample(graph, features.astype(np.float32), labels, split, community))
    return dataset


def _sample_shape(name: str, count: int, rng: np.random.Generator) -> np.ndarray:
    if name == "sphere":
        points = rng.normal(size=(count, 3))
        return points / np.linalg.norm(points, axis=1, keepdims=True)
    if name == "cube":
        points = rng.uniform(-1.0, 1.0, size=(count, 3))
        axis = rng.integers(3, size=count)
        points[np.arange(count), axis] = rng.choice([-1.0, 1.0], size=count)
        return points
    if name == "cylinder":
        # caps hold a third of the surface area of a unit-radius, height-2 cylinder
        angle = rng.uniform(0.0, 2 * np.pi, size=count)
        radius = np.ones(count)
        z = rng.uniform(-1.0, 1.0, size=count)
        cap = rng.random(count) < 1.0 / 3.0
        radius[cap] = np.sqrt(rng.random(int(cap.sum())))
        z[cap] = rng.choice([-1.0, 1.0], size=int(cap.sum()))
        return np.stack([radius * np.cos(angle), radius * np.sin(angle), z], axis=1)
    if name == "plane":
        xy = rng.uniform(-1.0, 1.0, size=(count, 2))
        return np.concatenate([xy, np.zeros((count, 1))], axis=1)
    raise ContractError(f"unknown shape {name!r}")


def synth_shapes(seed: int = 0, per_class: int = 100, points_per_cloud: int = 64,
                 jitter: float = 0.01) -> PointCloudDataset:
    """
    Randomly rotated, jittered samples of four surfaces: sphere, cube,
    cylinder and plane.

    Each class is split 70/15/15 into train/val/test.
    """
    if per_class < 1 or points_per_cloud < 1:
        raise ContractError("synth_shapes: sizes must be positive")
    rng = np.random.default_rng(seed)
    clouds, labels, splits = [], [], []
    for label, name in enumerate(SHAPE_CLASSES):
        held_out = max(1, int(round(0.15 * per_class))) if per_class >= 3 else 0
        names = ["train"] * (per_class - 2 * held_out) + ["val"] * held_out + ["test"] * held_out
        for split in rng.permutation(names):
            points = _sample_shape(name, points_per_cloud, rng)
            points = Rotation.random(random_state=rng).apply(points)
            points += jitter * rng.normal(size=points.shape)
            clouds.append(points.astype(np.float32))
            labels.append(label)
            splits.append(str(split))
    return PointCloudDataset(np.stack(clouds), np.asarray(labels, dtype=np.int64),
                             np.asarray(splits), list(SHAPE_CLASSES))
