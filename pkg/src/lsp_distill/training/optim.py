"""
Optimizers and their configuration.
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..core.config import OPTIMIZERS, PROTOCOLS, ConfigManager
from ..core.exceptions import ConfigError, NumericError
from ..tensor import DTYPE, Tensor

# (kind, lr, epochs) per protocol and task
PROTOCOL_DEFAULTS: Dict[str, Dict[str, tuple]] = {
    "full": {
        "multilabel": ("adam", 0.005, 500),
        "multiclass": ("sgd", 0.1, 250),
    },
    "desk": {
        "multilabel": ("adam", 0.005, 30),
        "multiclass": ("sgd", 0.01, 40),
    },
}


@dataclass
class OptimConfig:
    kind: str = "adam"
    lr: float = 0.005
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    momentum: float = 0.9

    def __post_init__(self) -> None:
        if self.kind not in OPTIMIZERS:
            raise ConfigError(f"optim.kind must be one of {list(OPTIMIZERS)}, got {self.kind!r}")
        if not self.lr > 0:
            raise ConfigError(f"optim.lr must be positive, got {self.lr}")
        if not isinstance(self.epochs, (int, np.integer)) or self.epochs < 1:
            raise ConfigError(f"optim.epochs must be an integer >= 1, got {self.epochs!r}")
        if self.weight_decay < 0 or not 0 <= self.momentum < 1:
            raise ConfigError("optim.weight_decay must be >= 0 and optim.momentum in [0, 1)")

    @classmethod
    def for_protocol(cls, protocol: str, task: str, **overrides: Any) -> "OptimConfig":
        """Protocol defaults for ``task``; None-valued overrides are ignored."""
        if protocol not in PROTOCOLS:
            raise ConfigError(f"training.protocol must be one of {list(PROTOCOLS)}, got {protocol!r}")
        kind, lr, epochs = PROTOCOL_DEFAULTS[protocol][task]
        values: Dict[str, Any] = {"kind": kind, "lr": lr, "epochs": epochs}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def from_config(cls, cfg: ConfigManager, task: str) -> "OptimConfig":
        section = cfg.get("optim", {})
        return cls.for_protocol(cfg.get("training.protocol"), task, **section)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class Optimizer:
    """Updates a fixed set of named parameters in place from their gradients."""

    def __init__(self, params: Dict[str, Tensor], config: OptimConfig):
        self.params = params
        self.config = config
        self.steps = 0

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def _gradient(self, name: str, p: Tensor) -> np.ndarray:
        grad = np.zeros_like(p.data) if p.grad is None else p.grad
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name} at step {self.steps + 1}")
        if self.config.weight_decay:
            grad = grad + DTYPE(self.config.weight_decay) * p.data
        return grad

    def step(self) -> None:
        """
        Raises:
            NumericError: If any gradient is not finite; no parameter is changed
        """
        grads = {name: self._gradient(name, p) for name, p in self.params.items()}
        self.steps += 1
        for name, p in self.params.items():
            self._update(name, p, grads[name])

    def _update(self, name: str, p: Tensor, grad: np.ndarray) -> None:
        raise NotImplementedError


class Adam(Optimizer):
    """Adam with bias correction; weight decay is added to the gradient."""

    def __init__(self, params: Dict[str, Tensor], config: OptimConfig):
        super().__init__(params, config)
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def _update(self, name: str, p: Tensor, grad: np.ndarray) -> None:
        cfg = self.config
        m, v = self.m[name], self.v[name]
        m *= DTYPE(cfg.beta1)
        m += DTYPE(1.0 - cfg.beta1) * grad
        v *= DTYPE(cfg.beta2)
        v += DTYPE(1.0 - cfg.beta2) * grad * grad
        m_hat = m / DTYPE(1.0 - cfg.beta1 ** self.steps)
        v_hat = v / DTYPE(1.0 - cfg.beta2 ** self.steps)
        p.data -= DTYPE(cfg.lr) * m_hat / (np.sqrt(v_hat) + DTYPE(cfg.eps))


class SGD(Optimizer):
    """SGD with momentum: ``v ← μ v + g``, ``p ← p − lr v``."""

    def __init__(self, params: Dict[str, Tensor], config: OptimConfig):
        super().__init__(params, config)
        self.velocity = {name: np.zeros_like(p.data) for name, p in params.items()}

    def _update(self, name: str, p: Tensor, grad: np.ndarray) -> None:
        v = self.velocity[name]
        v *= DTYPE(self.config.momentum)
        v += grad
        p.data -= DTYPE(self.config.lr) * v


def build_optimizer(params: Dict[str, Tensor], config: OptimConfig,
                    kind: Optional[str] = None) -> Optimizer:
    return {"adam": Adam, "sgd": SGD}[kind or config.kind](params, config)
