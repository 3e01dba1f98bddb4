"""
Base interface shared by the GAT and DGCNN models.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..core.exceptions import CheckpointIntegrityError
from ..core.logger import logger
from ..graph import Graph
from ..tensor import Tensor
from .spec import ModelSpec, count_parameters


@dataclass
class ModelOutput:
    """
    Result of one forward pass.

    Attributes:
        logits: one row per node (GAT) or per point cloud (DGCNN)
        features: output of every graph-convolution layer, in order
        graphs: graph each layer aggregated over (self-loops included for GAT)
        attention: per-layer attention (GAT only)
        batch: sample id of every feature row (DGCNN batches of clouds); None
            when all rows belong to one graph
    """
    logits: Tensor
    features: List[Tensor] = field(default_factory=list)
    graphs: List[Graph] = field(default_factory=list)
    attention: List[Tensor] = field(default_factory=list)
    batch: Optional[np.ndarray] = None


class BaseGraphModel(ABC):
    """
    Abstract base class for graph models built from a ModelSpec.

    Parameters are created in a fixed order from a generator seeded with
    ``seed``, so two models built from the same spec and seed are identical.
    """

    kind: str = ""

    def __init__(self, spec: ModelSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        self.training = True
        self._dropout_rng = np.random.default_rng([seed, 1])
        self._build(np.random.default_rng(seed))
        logger.debug(f"Built {spec.name or spec.kind} with {self.num_parameters} parameters")

    @abstractmethod
    def _build(self, rng: np.random.Generator) -> None:
        """Create layers and parameters."""
        pass

    @abstractmethod
    def parameters(self) -> Dict[str, Tensor]:
        """Named trainable parameters in creation order."""
        pass

    @abstractmethod
    def forward(self, *inputs) -> ModelOutput:
        pass

    def __call__(self, *inputs) -> ModelOutput:
        return self.forward(*inputs)

    @property
    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    @property
    def num_conv_layers(self) -> int:
        return self.spec.num_layers

    def train(self) -> "BaseGraphModel":
        self.training = True
        return self

    def eval(self) -> "BaseGraphModel":
        self.training = False
        return self

    def freeze(self) -> "BaseGraphModel":
        """Inference-only: parameters stop requiring gradients."""
        for p in self.parameters().values():
            p.requires_grad = False
        return self.eval()

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter array keyed by name."""
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy arrays into the parameters.

        Raises:
            CheckpointIntegrityError: If names or shapes differ from the model's
        """
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise CheckpointIntegrityError(
                f"parameter names do not match the model spec "
                f"(missing: {missing[:5]}, unexpected: {unexpected[:5]})"
            )
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise CheckpointIntegrityError(
                    f"parameter {name} has shape {value.shape}, the spec expects {p.shape}"
                )
            p.data[...] = value

    def check_parameter_count(self) -> None:
        expected = count_parameters(self.spec)
        if expected != self.num_parameters:
            raise CheckpointIntegrityError(
                f"model has {self.num_parameters} parameters, spec implies {expected}"
            )


def model_forward(model: BaseGraphModel, *inputs, training: Optional[bool] = None) -> ModelOutput:
    """Run ``model`` on ``inputs``, optionally switching train/eval mode first."""
    if training is not None:
        model.train() if training else model.eval()
    return model.forward(*inputs)
