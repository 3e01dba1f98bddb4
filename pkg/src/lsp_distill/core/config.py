"""
Configuration management for lsp_distill.
"""
import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from .exceptions import ConfigError
from .logger import logger


KERNELS = ("l2", "poly", "rbf", "linear")
DISTILLERS = ("none", "kd", "fitnet", "at", "lsp")
LSP_MODES = ("static", "union")
OPTIMIZERS = ("adam", "sgd")
PROTOCOLS = ("desk", "full")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigManager:
    """
    Manages configuration settings for lsp_distill.

    Values come from DEFAULT_CONFIG, then the user config file, then a
    project file in the working directory, then an explicit ``--config`` file
    and finally command line flags. Every run records the merged result.
    """

    DEFAULT_CONFIG: Dict[str, Any] = {
        "model": {
            "teacher": None,  # preset name or spec file; None picks by dataset kind
            "student": None,
        },
        "distill": {
            "method": "lsp",
            "kernel": "rbf",
            "lambda": 100.0,
            "lsp_mode": "union",
            "lsp_pairs": None,  # None means last conv layer of each model
            "poly_degree": 2,
            "poly_offset": 0.0,
            "rbf_sigma": 1.0,
            "kd_alpha": 0.1,
            "kd_temperature": 4.0,
            "fitnet_weight": 1.0,
            "fitnet_pair": None,
            "at_weight": 100.0,
            "at_pair": None,
        },
        "optim": {
            "kind": None,  # None means the protocol default for the task
            "lr": None,
            "beta1": 0.9,
            "beta2": 0.999,
            "eps": 1e-8,
            "weight_decay": 0.0,
            "momentum": 0.9,
            "epochs": None,
        },
        "training": {
            "seed": 0,
            "protocol": "desk",
            "batch_size": 8,
            "snapshot_epochs": [],
        },
        "data": {
            "standardize": False,
        },
        "logging": {
            "level": "INFO",
            "file_logging": False,
        },
        "output": {
            "out_dir": "runs",
        },
    }

    def __init__(self, load_files: bool = True):
        """
        Initialize configuration manager.

        Args:
            load_files: Read the user and project config files when present
        """
        self.user_config_path = self._get_user_config_path()
        self.project_config_path = Path.cwd() / ".lspdistill.json"
        self._config = copy.deepcopy(self.DEFAULT_CONFIG)
        if load_files:
            self._load_config()

    def _get_user_config_path(self) -> Path:
        """Per-user config file (APPDATA on Windows, ~/.config elsewhere)."""
        if os.name == 'nt':
            config_dir = Path(os.environ.get('APPDATA', Path.home())) / "LspDistill"
        else:
            config_dir = Path.home() / ".config" / "lspdistill"
        return config_dir / "config.json"

    def _load_config(self) -> None:
        """Merge the user file, then the project file; unreadable files are skipped."""
        for path in (self.user_config_path, self.project_config_path):
            if not path.exists():
                continue
            try:
                self.load_file(path)
            except ConfigError as e:
                logger.warning(f"Ignoring config file {path}: {e}")

    def load_file(self, path: Path) -> None:
        """
        Merge a JSON config file into the current configuration.

        Raises:
            ConfigError: If the file cannot be read or is not a JSON object
        """
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")
        self.merge(data)
        logger.debug(f"Loaded config from {path}")

    def merge(self, values: Dict[str, Any]) -> None:
        """Deep-merge a nested dict (same layout as DEFAULT_CONFIG) into the configuration."""
        def merge_into(target: Dict[str, Any], source: Dict[str, Any]) -> None:
            for key, value in source.items():
                if isinstance(target.get(key), dict) and isinstance(value, dict):
                    merge_into(target[key], value)
                else:
                    target[key] = copy.deepcopy(value)

        merge_into(self._config, values)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Look up a dotted key such as ``distill.lambda``; ``default`` when any
        part of the path is missing.
        """
        try:
            value = self._config
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any) -> None:
        """Set a dotted key, creating intermediate sections as needed."""
        keys = key.split('.')
        config = self._config
        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value

    def update(self, overrides: Dict[str, Any]) -> None:
        """Apply dot-notation overrides, skipping None values (unset CLI flags)."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def reset_to_defaults(self) -> None:
        """Reset configuration to default values."""
        self._config = copy.deepcopy(self.DEFAULT_CONFIG)
        logger.debug("Configuration reset to defaults")

    def _require(self, key: str, ok: bool, message: str) -> None:
        if not ok:
            raise ConfigError(f"{key} {message}")

    def validate_config(self) -> bool:
        """
        Validate current configuration.

        Raises:
            ConfigError: Naming the offending field path
        """
        def number(key: str) -> Optional[float]:
            value = self.get(key)
            if value is None:
                return None
            self._require(key, isinstance(value, (int, float)) and not isinstance(value, bool),
                          "must be a number")
            return float(value)

        self._require("distill.method", self.get("distill.method") in DISTILLERS,
                      f"must be one of {list(DISTILLERS)}")
        self._require("distill.kernel", self.get("distill.kernel") in KERNELS,
                      f"must be one of {list(KERNELS)}")
        self._require("distill.lsp_mode", self.get("distill.lsp_mode") in LSP_MODES,
                      f"must be one of {list(LSP_MODES)}")

        for key in ("distill.lambda", "distill.kd_alpha", "distill.fitnet_weight",
                    "distill.at_weight", "optim.weight_decay", "optim.momentum",
                    "distill.poly_offset"):
            value = number(key)
            if key != "distill.poly_offset":
                self._require(key, value is None or value >= 0, "must be non-negative")

        alpha = number("distill.kd_alpha")
        self._require("distill.kd_alpha", alpha is None or alpha <= 1, "must be at most 1")
        for key in ("distill.kd_temperature", "distill.rbf_sigma"):
            value = number(key)
            self._require(key, value is not None and value > 0, "must be positive")

        degree = self.get("distill.poly_degree")
        self._require("distill.poly_degree", isinstance(degree, int) and degree >= 1,
                      "must be an integer >= 1")

        kind = self.get("optim.kind")
        self._require("optim.kind", kind is None or kind in OPTIMIZERS,
                      f"must be one of {list(OPTIMIZERS)}")
        lr = number("optim.lr")
        self._require("optim.lr", lr is None or lr > 0, "must be positive")
        epochs = self.get("optim.epochs")
        self._require("optim.epochs", epochs is None or (isinstance(epochs, int) and epochs >= 1),
                      "must be an integer >= 1")

        self._require("training.protocol", self.get("training.protocol") in PROTOCOLS,
                      f"must be one of {list(PROTOCOLS)}")
        seed = self.get("training.seed")
        self._require("training.seed", isinstance(seed, int) and seed >= 0,
                      "must be a non-negative integer")
        batch = self.get("training.batch_size")
        self._require("training.batch_size", isinstance(batch, int) and batch >= 1,
                      "must be a positive integer")

        self._require("logging.level", self.get("logging.level") in LOG_LEVELS,
                      f"must be one of {list(LOG_LEVELS)}")
        return True

    def save(self, path: Path) -> None:
        """Write the configuration as a JSON file that `--config` accepts."""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w') as f:
                json.dump(self._config, f, indent=2, sort_keys=True)
            logger.info(f"Saved configuration to {path}")
        except OSError as e:
            raise ConfigError(f"Cannot save configuration: {e}")

    def to_dict(self) -> Dict[str, Any]:
        """Deep copy of the resolved configuration."""
        return copy.deepcopy(self._config)

    def __str__(self) -> str:
        return json.dumps(self._config, indent=2)

    def __repr__(self) -> str:
        return f"ConfigManager(user_config={self.user_config_path}, project_config={self.project_config_path})"


# Shared instance used by the CLI
config = ConfigManager()
