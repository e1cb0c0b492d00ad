# app/conf/config.py

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Settings class to load environment variables (prefix ``PIFF_``) and the
    optional .env file. Library functions read their defaults from here.
    """
    # Parallelism
    THREADS: int = 1

    # Numeric tolerances
    SIMPLEX_TOLERANCE: float = 1e-12
    DRIFT_LIMIT: float = 1e-9

    # Sampled nonnegativity fallback of the stochasticity check
    SAMPLE_POINTS: int = 64
    SAMPLE_SEED: int = 0

    # Compiler defaults
    PRUNE: bool = True

    # Logging
    LOG_LEVEL: str = "WARNING"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # HTTP surface
    API_TITLE: str = "PiFF compiler"
    CORS_ORIGINS: list[str] = ["*"]

    model_config = SettingsConfigDict(
        env_prefix="PIFF_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    This function uses a cache so the settings object is created only once,
    making it safe to call from multiple places without re-reading .env.
    """
    return Settings()
