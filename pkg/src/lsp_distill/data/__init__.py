"""
Datasets, file formats, synthetic corpora and checkpoints.
"""
from .checkpoint import load_checkpoint, load_model, save_checkpoint
from .datasets import SPLITS, GraphDataset, GraphSample, PointCloudDataset
from .graph_io import (
    convert_ppi,
    load_graph_dataset,
    parse_graph_dataset,
    save_graph_dataset,
    standardize_features,
)
from .pointcloud_io import load_point_clouds, read_cloud, save_point_clouds
from .synth import SHAPE_CLASSES, synth_multilabel_graphs, synth_shapes

__all__ = [
    "GraphDataset",
    "GraphSample",
    "PointCloudDataset",
    "SHAPE_CLASSES",
    "SPLITS",
    "convert_ppi",
    "load_checkpoint",
    "load_graph_dataset",
    "load_model",
    "load_point_clouds",
    "parse_graph_dataset",
    "read_cloud",
    "save_checkpoint",
    "save_graph_dataset",
    "save_point_clouds",
    "standardize_features",
    "synth_multilabel_graphs",
    "synth_shapes",
]
