"""
Tests for the layered configuration manager.
"""
import json

import pytest

from src.lsp_distill.core.config import ConfigManager
from src.lsp_distill.core.exceptions import ConfigError


class TestConfigManager:
    """Layered configuration: defaults, files, overrides and validation."""

    def test_default_config_initialization(self):
        """Defaults select LSP with the rbf kernel, lambda 100 and the desk protocol."""
        config = ConfigManager(load_files=False)

        assert config.get("distill.method") == "lsp"
        assert config.get("distill.kernel") == "rbf"
        assert config.get("distill.lambda") == 100.0
        assert config.get("distill.lsp_mode") == "union"
        assert config.get("training.protocol") == "desk"
        assert config.get("model.teacher") is None
        assert config.get("logging.level") == "INFO"

    def test_get_with_default(self):
        """Missing keys fall back to the given default; present keys ignore it."""
        config = ConfigManager(load_files=False)

        assert config.get("nonexistent.key", "default_value") == "default_value"
        assert config.get("distill.nonexistent", 42) == 42
        assert config.get("distill.kd_alpha", 0.5) == 0.1

    def test_set_with_dot_notation(self):
        """Dotted keys create intermediate sections."""
        config = ConfigManager(load_files=False)

        config.set("distill.kernel", "poly")
        assert config.get("distill.kernel") == "poly"

        config.set("level1.level2.level3", 123)
        assert config.get("level1.level2.level3") == 123

    def test_update_skips_none(self):
        """Unset command line flags arrive as None and leave the value alone."""
        config = ConfigManager(load_files=False)

        config.update({"distill.lambda": 10.0, "distill.kernel": None})

        assert config.get("distill.lambda") == 10.0
        assert config.get("distill.kernel") == "rbf"

    def test_reset_to_defaults(self):
        """Overrides are discarded by a reset."""
        config = ConfigManager(load_files=False)

        config.set("distill.lambda", 1.0)
        config.reset_to_defaults()

        assert config.get("distill.lambda") == 100.0

    def test_validate_config_valid(self):
        """Default config should be valid."""
        assert ConfigManager(load_files=False).validate_config() is True

    @pytest.mark.parametrize("key,value,message", [
        ("distill.method", "hint", "distill.method must be one of"),
        ("distill.kernel", "cosine", "distill.kernel must be one of"),
        ("distill.lsp_mode", "dynamic", "distill.lsp_mode must be one of"),
        ("distill.lambda", -1.0, "distill.lambda must be non-negative"),
        ("distill.lambda", "big", "distill.lambda must be a number"),
        ("distill.kd_alpha", 2.0, "distill.kd_alpha must be at most 1"),
        ("distill.kd_temperature", 0, "distill.kd_temperature must be positive"),
        ("distill.rbf_sigma", -1.0, "distill.rbf_sigma must be positive"),
        ("distill.poly_degree", 0, "distill.poly_degree must be an integer"),
        ("optim.kind", "rmsprop", "optim.kind must be one of"),
        ("optim.lr", 0.0, "optim.lr must be positive"),
        ("optim.epochs", 2.5, "optim.epochs must be an integer"),
        ("training.protocol", "fast", "training.protocol must be one of"),
        ("training.seed", -1, "training.seed must be a non-negative integer"),
        ("training.batch_size", 0, "training.batch_size must be a positive integer"),
        ("logging.level", "INVALID_LEVEL", "logging.level must be one of"),
    ])
    def test_validation_names_the_field(self, key, value, message):
        """Each invalid value is reported with its field path."""
        config = ConfigManager(load_files=False)
        config.set(key, value)

        with pytest.raises(ConfigError) as exc_info:
            config.validate_config()

        assert message in str(exc_info.value)

    def test_validate_logging_level_valid(self):
        """Every standard level name is accepted."""
        config = ConfigManager(load_files=False)

        for level in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            config.set("logging.level", level)
            assert config.validate_config() is True

    def test_to_dict(self):
        """to_dict returns a detached copy of every section."""
        config = ConfigManager(load_files=False)

        config_dict = config.to_dict()

        assert set(config_dict) >= {"model", "distill", "optim", "training", "logging"}
        config_dict["distill"]["lambda"] = 0.0
        assert config.get("distill.lambda") == 100.0

    def test_str_representation(self):
        """String form is valid JSON."""
        parsed = json.loads(str(ConfigManager(load_files=False)))
        assert "distill" in parsed

    def test_repr_representation(self):
        repr_str = repr(ConfigManager(load_files=False))

        assert "ConfigManager" in repr_str
        assert "user_config" in repr_str
        assert "project_config" in repr_str

    def test_load_config_priority(self, tmp_path):
        """Project config overrides user config."""
        user_config_file = tmp_path / "user_config.json"
        user_config_file.write_text(json.dumps({"distill": {"lambda": 1.0, "kernel": "poly"}}))
        project_config_file = tmp_path / "project_config.json"
        project_config_file.write_text(json.dumps({"distill": {"lambda": 5.0}}))

        config = ConfigManager(load_files=False)
        config.user_config_path = user_config_file
        config.project_config_path = project_config_file
        config._load_config()

        assert config.get("distill.lambda") == 5.0
        assert config.get("distill.kernel") == "poly"
        assert config.get("distill.lsp_mode") == "union"

    def test_load_invalid_json_user_config(self, tmp_path):
        """A broken user config file is ignored with a warning."""
        user_config_file = tmp_path / "config.json"
        user_config_file.write_text("{invalid json content")

        config = ConfigManager(load_files=False)
        config.user_config_path = user_config_file
        config.project_config_path = tmp_path / "missing.json"
        config._load_config()

        assert config.get("distill.lambda") == 100.0

    def test_load_file_errors(self, tmp_path):
        """An explicit config file must be a readable JSON object."""
        config = ConfigManager(load_files=False)
        broken = tmp_path / "broken.json"
        broken.write_text("not valid json at all")
        listing = tmp_path / "list.json"
        listing.write_text("[1, 2]")

        with pytest.raises(ConfigError, match="Cannot read config file"):
            config.load_file(broken)
        with pytest.raises(ConfigError, match="JSON object"):
            config.load_file(listing)
        with pytest.raises(ConfigError):
            config.load_file(tmp_path / "missing.json")

    def test_save_and_reload(self, tmp_path):
        """A saved configuration loads back into a fresh manager."""
        config = ConfigManager(load_files=False)
        config.set("distill.kernel", "linear")
        path = tmp_path / "nested" / "saved_config.json"

        config.save(path)
        fresh = ConfigManager(load_files=False)
        fresh.load_file(path)

        assert fresh.get("distill.kernel") == "linear"
        assert fresh.to_dict() == config.to_dict()

    def test_merge_is_deep(self):
        """Merging a partial section keeps the section's other keys."""
        config = ConfigManager(load_files=False)

        config.merge({"distill": {"kernel": "l2"}, "extra": {"note": "x"}})

        assert config.get("distill.kernel") == "l2"
        assert config.get("distill.lambda") == 100.0
        assert config.get("extra.note") == "x"
