"""
Configuration module for the similarity boundary analysis toolkit
"""
from functools import lru_cache
from pathlib import Path
from typing import Tuple, Type

from pydantic import field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)

CONFIG_FILE = Path(__file__).resolve().parents[2] / "resources" / "config" / "config.yaml"


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="IFS_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
        yaml_file=CONFIG_FILE,
    )

    # Application
    app_name: str = "similarity-boundary-analysis"
    app_version: str = "0.1.0"

    # Resolution
    default_depth: int = 8
    enumeration_budget: int = 5_000_000
    brute_force_threshold: int = 2000
    tau_factor: float = 4.0
    margin_factor: float = 3.0
    pair_lookahead: int = 2

    # Battery thresholds
    dimension_tolerance: float = 0.05
    dimension_refute_factor: float = 5.0
    measure_width_cells: float = 10.0
    measure_decay_ratio: float = 0.95
    branch_width_tolerance: float = 0.02
    sosc_levels: int = 3
    interior_margin_factor: float = 8.0

    # Similitude validation
    orthogonality_tolerance: float = 1e-12
    orthogonality_repair_limit: float = 1e-8
    validation_samples: int = 64
    seed: int = 0

    # Execution
    workers: int = 1

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_file: str = "logs/ifs.log"

    @field_validator("enumeration_budget", "brute_force_threshold", "workers")
    @classmethod
    def validate_positive_count(cls, v):
        if v < 1:
            raise ValueError("count settings must be at least 1")
        return v

    @field_validator(
        "tau_factor",
        "margin_factor",
        "dimension_tolerance",
        "measure_width_cells",
        "branch_width_tolerance",
        "orthogonality_tolerance",
        "orthogonality_repair_limit",
    )
    @classmethod
    def validate_positive_real(cls, v):
        if v <= 0:
            raise ValueError("tolerance settings must be positive")
        return v

    @field_validator("measure_decay_ratio")
    @classmethod
    def validate_decay_ratio(cls, v):
        if not 0 < v < 1:
            raise ValueError("measure_decay_ratio must lie in (0, 1)")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        if v.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return v.upper()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # Environment wins over the packaged YAML defaults
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            YamlConfigSettingsSource(settings_cls),
        )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Global settings instance
settings = get_settings()
