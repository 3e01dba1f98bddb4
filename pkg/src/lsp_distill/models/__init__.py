"""
Teacher and student model zoo: GAT for node classification, DGCNN for
point clouds.
"""
from typing import Dict, Type

from ..core.exceptions import ConfigError
from .base_model import BaseGraphModel, ModelOutput, model_forward
from .dgcnn import DgcnnModel
from .gat import GatModel
from .layers import EdgeConvLayer, GatLayer, Linear, global_pool
from .spec import PRESETS, ModelSpec, count_parameters, preset

MODEL_REGISTRY: Dict[str, Type[BaseGraphModel]] = {
    GatModel.kind: GatModel,
    DgcnnModel.kind: DgcnnModel,
}


def build_model(spec: ModelSpec, seed: int = 0) -> BaseGraphModel:
    """
    Instantiate the model class registered for ``spec.kind``.

    Raises:
        ConfigError: For an unregistered kind
    """
    try:
        model_class = MODEL_REGISTRY[spec.kind]
    except KeyError:
        raise ConfigError(f"no model registered for kind {spec.kind!r}")
    return model_class(spec, seed=seed)


__all__ = [
    "BaseGraphModel",
    "DgcnnModel",
    "EdgeConvLayer",
    "GatLayer",
    "GatModel",
    "Linear",
    "MODEL_REGISTRY",
    "ModelOutput",
    "ModelSpec",
    "PRESETS",
    "build_model",
    "count_parameters",
    "global_pool",
    "model_forward",
    "preset",
]
