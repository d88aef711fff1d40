"""
Unit tests for settings loading and validation
"""
import pytest
from pydantic import ValidationError

from src.main.python.core.config import CONFIG_FILE, Settings, get_settings

pytestmark = pytest.mark.unit


class TestSettings:
    def test_packaged_defaults(self):
        config = Settings()
        assert CONFIG_FILE.exists()
        assert config.default_depth == 8
        assert config.enumeration_budget == 5_000_000
        assert config.tau_factor == 4.0
        assert config.dimension_tolerance == 0.05
        assert config.log_file == "logs/ifs.log"

    def test_environment_overrides_yaml(self, monkeypatch):
        monkeypatch.setenv("IFS_TAU_FACTOR", "6")
        monkeypatch.setenv("IFS_WORKERS", "4")
        config = Settings()
        assert config.tau_factor == 6.0
        assert config.workers == 4

    def test_log_level_is_normalized(self):
        assert Settings(log_level="debug").log_level == "DEBUG"
        with pytest.raises(ValidationError):
            Settings(log_level="chatty")

    @pytest.mark.parametrize(
        "field, value",
        [
            ("measure_decay_ratio", 1.5),
            ("measure_decay_ratio", 0.0),
            ("tau_factor", 0.0),
            ("orthogonality_tolerance", -1e-12),
            ("enumeration_budget", 0),
            ("workers", 0),
        ],
    )
    def test_invalid_values(self, field, value):
        with pytest.raises(ValidationError):
            Settings(**{field: value})

    def test_settings_are_cached(self):
        assert get_settings() is get_settings()
