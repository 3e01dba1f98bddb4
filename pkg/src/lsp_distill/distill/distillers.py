"""
Distiller objects combining a task loss with one distillation term.
"""
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Type

import numpy as np

from ..core.config import DISTILLERS, ConfigManager
from ..core.exceptions import ConfigError, UnsupportedTaskError
from ..core.logger import logger
from ..models import BaseGraphModel, ModelOutput
from ..tensor import Tensor, ops
from .baselines import FitNetMapper, at_loss, fitnet_loss, kd_loss
from .kernels import KernelChoice
from .lsp import LspPairing, paired_lsp_loss, parse_pairs, total_loss


@dataclass
class DistillerConfig:
    """Distiller choice and its weights."""
    method: str = "lsp"
    kernel: KernelChoice = field(default_factory=KernelChoice)
    lam: float = 100.0
    lsp_mode: str = "union"
    lsp_pairs: Optional[str] = None
    kd_alpha: float = 0.1
    kd_temperature: float = 4.0
    fitnet_weight: float = 1.0
    fitnet_pair: Optional[str] = None
    at_weight: float = 100.0
    at_pair: Optional[str] = None

    def __post_init__(self) -> None:
        if self.method not in DISTILLERS:
            raise ConfigError(f"distill.method must be one of {list(DISTILLERS)}, got {self.method!r}")
        for key in ("lam", "kd_alpha", "fitnet_weight", "at_weight"):
            if getattr(self, key) < 0:
                raise ConfigError(f"distill.{key} must be non-negative")
        if self.kd_alpha > 1:
            raise ConfigError("distill.kd_alpha must be at most 1")
        if self.kd_temperature <= 0:
            raise ConfigError("distill.kd_temperature must be positive")

    @classmethod
    def from_config(cls, cfg: ConfigManager) -> "DistillerConfig":
        kernel = KernelChoice(
            name=cfg.get("distill.kernel"),
            degree=cfg.get("distill.poly_degree"),
            offset=float(cfg.get("distill.poly_offset")),
            sigma=float(cfg.get("distill.rbf_sigma")),
        )
        return cls(
            method=cfg.get("distill.method"),
            kernel=kernel,
            lam=float(cfg.get("distill.lambda")),
            lsp_mode=cfg.get("distill.lsp_mode"),
            lsp_pairs=cfg.get("distill.lsp_pairs"),
            kd_alpha=float(cfg.get("distill.kd_alpha")),
            kd_temperature=float(cfg.get("distill.kd_temperature")),
            fitnet_weight=float(cfg.get("distill.fitnet_weight")),
            fitnet_pair=cfg.get("distill.fitnet_pair"),
            at_weight=float(cfg.get("distill.at_weight")),
            at_pair=cfg.get("distill.at_pair"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LossTerms:
    """Total objective plus its two parts; ``distill`` is unweighted."""
    total: Tensor
    task: Tensor
    distill: Tensor


class Distiller(ABC):
    """
    Base class for distillation methods.

    ``prepare`` is called once with both models before training and may
    create extra trainable parameters; ``losses`` is called every step.
    """

    method: str = ""

    def __init__(self, config: DistillerConfig):
        self.config = config

    def prepare(self, teacher: Optional[BaseGraphModel], student: BaseGraphModel, task: str,
                rng: np.random.Generator) -> None:
        """
        Raises:
            UnsupportedTaskError: If the method cannot handle ``task``
        """
        pass

    def parameters(self) -> Dict[str, Tensor]:
        """Trainable parameters owned by the distiller."""
        return {}

    @property
    def needs_teacher(self) -> bool:
        return True

    @abstractmethod
    def distill_loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        pass

    @abstractmethod
    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        pass

    def losses(self, task_loss: Tensor, student: ModelOutput,
               teacher: Optional[ModelOutput]) -> LossTerms:
        distill = self.distill_loss(student, teacher)
        return LossTerms(self.combine(task_loss, distill), task_loss, distill)


class NoDistiller(Distiller):
    """Plain supervised training."""

    method = "none"

    @property
    def needs_teacher(self) -> bool:
        return False

    def distill_loss(self, student: ModelOutput, teacher: Optional[ModelOutput]) -> Tensor:
        return Tensor(0.0)

    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        return task_loss


class KdDistiller(Distiller):
    """``(1 - α) task + α KD``."""

    method = "kd"

    def prepare(self, teacher, student, task, rng) -> None:
        if task == "multilabel":
            raise UnsupportedTaskError(
                "distiller 'kd' needs softmax outputs and is not suitable for the multilabel task"
            )
        self.task = task

    def distill_loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        return kd_loss(student.logits, teacher.logits, self.config.kd_temperature, task=self.task)

    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        alpha = self.config.kd_alpha
        return ops.add(ops.scale(task_loss, 1.0 - alpha), ops.scale(distill, alpha))


def _single_pair(text: Optional[str], teacher: BaseGraphModel, student: BaseGraphModel,
                 option: str):
    pairs = parse_pairs(text)
    if len(pairs) != 1:
        raise ConfigError(f"{option} takes exactly one teacher:student pair")
    return LspPairing(pairs).resolve(teacher.num_conv_layers, student.num_conv_layers)[0]


class FitNetDistiller(Distiller):
    """``task + γ · MSE(mapper(student hint), teacher hint)``."""

    method = "fitnet"

    def prepare(self, teacher, student, task, rng) -> None:
        self.pair = _single_pair(self.config.fitnet_pair, teacher, student, "distill.fitnet_pair")
        t, s = self.pair
        self.mapper = FitNetMapper(_layer_width(student, s), _layer_width(teacher, t), rng)

    def parameters(self) -> Dict[str, Tensor]:
        return self.mapper.parameters()

    def distill_loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        t, s = self.pair
        return fitnet_loss(student.features[s], teacher.features[t], self.mapper)

    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        return ops.add(task_loss, ops.scale(distill, self.config.fitnet_weight))


class AtDistiller(Distiller):
    """``task + β · attention-transfer distance``."""

    method = "at"

    def prepare(self, teacher, student, task, rng) -> None:
        self.pair = _single_pair(self.config.at_pair, teacher, student, "distill.at_pair")

    def distill_loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        t, s = self.pair
        return at_loss(student.features[s], teacher.features[t], student.batch)

    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        return ops.add(task_loss, ops.scale(distill, self.config.at_weight))


class LspDistiller(Distiller):
    """``task + λ · LSP`` over the configured layer pairs."""

    method = "lsp"

    def prepare(self, teacher, student, task, rng) -> None:
        self.pairing = LspPairing.parse(self.config.lsp_pairs, self.config.lsp_mode)
        self.pairing.resolve(teacher.num_conv_layers, student.num_conv_layers)
        logger.debug(f"LSP pairs {self.pairing.to_dict()} with kernel {self.config.kernel.name}")

    def distill_loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        return paired_lsp_loss(student.features, student.graphs, teacher.features,
                               teacher.graphs, self.config.kernel, self.pairing)

    def combine(self, task_loss: Tensor, distill: Tensor) -> Tensor:
        return total_loss(task_loss, distill, self.config.lam)


def _layer_width(model: BaseGraphModel, index: int) -> int:
    spec = model.spec
    if spec.kind == "gat":
        last = index == spec.num_layers - 1
        return spec.widths[index] if last else spec.widths[index] * spec.heads[index]
    return spec.widths[index]


DISTILLER_REGISTRY: Dict[str, Type[Distiller]] = {
    cls.method: cls for cls in (NoDistiller, KdDistiller, FitNetDistiller, AtDistiller, LspDistiller)
}


def build_distiller(config: DistillerConfig) -> Distiller:
    return DISTILLER_REGISTRY[config.method](config)
