"""
Environment configuration for swclock.

Values are read from the process environment (and a local .env file) with the
SWCLOCK_ prefix, e.g. SWCLOCK_OUT=/tmp/runs.
"""
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """Process-wide settings."""

    model_config = SettingsConfigDict(env_prefix="SWCLOCK_", extra="ignore")

    # Overrides --out when set
    out: Optional[Path] = Field(None, description="Output directory for artifacts")
    log_level: str = Field("INFO", description="Root log level")
    workers: int = Field(1, ge=1, le=256, description="Processes used by sweeps")


@lru_cache
def get_settings() -> Settings:
    return Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for command-line entry points."""
    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)
