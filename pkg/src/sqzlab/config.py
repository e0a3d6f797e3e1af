"""Process-level settings for sqzlab."""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from environment variables (prefix ``SQZLAB_``) and ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="SQZLAB_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Parallelism
    threads: int = Field(default=1, ge=1, description="Worker cap for parallel sweeps")

    # Logging
    log_level: str = "INFO"
    log_format: str = "console"

    # Reproducibility
    default_seed: int = 20240601

    # Device defaults
    group_index: float = Field(default=2.2, gt=0.0)
    fsr_ghz: float = Field(default=5.7, gt=0.0)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
