"""
Test configuration and fixtures for lsp_distill.
"""
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.lsp_distill.core.config import config
from src.lsp_distill.core.logger import setup_logger
from src.lsp_distill.data import synth_multilabel_graphs, synth_shapes
from src.lsp_distill.tensor import reset_default_tape


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture(autouse=True)
def clean_state():
    """Start every test from default configuration, an empty tape and a live log stream."""
    config.reset_to_defaults()
    reset_default_tape()
    yield
    config.reset_to_defaults()
    reset_default_tape()
    setup_logger(level="WARNING")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_graphs():
    """Six 24-node multilabel graphs: four train, one val, one test."""
    return synth_multilabel_graphs(seed=0, n_graphs=6, nodes_per_graph=24, feature_dim=6,
                                   num_classes=3, num_communities=2)


@pytest.fixture
def tiny_shapes():
    """Six 24-point clouds per shape class, split 4/1/1."""
    return synth_shapes(seed=0, per_class=6, points_per_cloud=24)
