"""
Configuration management for the codeword overlap toolkit.
Uses pydantic-settings for environment variable management.
"""
import logging
from pathlib import Path
from typing import Optional

from pydantic import model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    # Application
    app_name: str = "Codeword Overlap Bench"
    app_version: str = "0.1.0"

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # Sweeps
    workers: int = 1  # Worker pool size for grid points (1 = run inline)
    progress: bool = True  # tqdm bars on stderr
    slow_stage_seconds: float = 30.0

    # Sphere averaging
    quadrature_nodes: int = 32  # Per axis: 32 x 32 ~ 1000 states
    mc_points: int = 1024

    # Numerical tolerances
    state_tolerance: float = 1e-9  # Hermiticity, trace, positivity
    identity_tolerance: float = 1e-12  # Exact algebraic identities
    coherent_tail: float = 1e-10  # Allowed Fock truncation tail of coherent states
    nogo_tolerance: float = 1e-9  # Margin below which F' < F counts as a violation

    # Caches
    channel_cache_size: int = 512

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    @model_validator(mode="after")
    def check_ranges(self) -> "Settings":
        """Reject settings no sweep could run with."""
        if self.workers < 1:
            raise ValueError("WORKERS must be at least 1")
        if self.quadrature_nodes < 1 or self.mc_points < 1:
            raise ValueError("QUADRATURE_NODES and MC_POINTS must be positive")
        for name in ("state_tolerance", "identity_tolerance", "coherent_tail", "nogo_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name.upper()} must be positive")
        return self


# Global settings instance
settings = Settings()


def setup_logging(log_level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """
    Configure application logging.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to log file
    """
    level = getattr(logging, (log_level or settings.log_level).upper(), logging.INFO)

    handlers: list[logging.Handler] = [logging.StreamHandler()]

    if log_file:
        # Ensure log directory exists
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
        force=True,
    )

    # Third-party loggers are chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)
