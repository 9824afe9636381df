"""Environment settings for the lipidmc command-line tools."""

from __future__ import annotations

import logging
import os
from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process-wide settings loaded from ``LIPIDMC_*`` environment variables and ``.env``.

    Attributes
    ----------
    log_level : str
        Root log level (default: ``"INFO"``).
    log_format : str
        ``"console"`` for aligned key=value lines, ``"json"`` for one JSON object per line.
    output_root : str
        Directory under which runs without an explicit ``output_dir`` are written (default: ``"runs"``).
    max_lanes : int
        Upper bound on MPKK worker lanes (default: CPU count).

    """

    model_config = SettingsConfigDict(env_prefix="LIPIDMC_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    log_format: Literal["console", "json"] = "console"
    output_root: str = "runs"
    max_lanes: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)


@lru_cache
def get_settings() -> Settings:
    """Return the settings instance (cached).

    Returns
    -------
    Settings
        The process settings.

    """
    s = Settings()
    logger.debug("Settings loaded", extra={"log_level": s.log_level, "max_lanes": s.max_lanes})
    return s
