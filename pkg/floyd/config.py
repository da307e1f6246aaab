"""Run-wide settings and logging setup."""

import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

LOG_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s'

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    """Knobs shared by every subcommand, built from CLI flags."""
    model_config = ConfigDict(frozen=True)

    verbose: bool = False
    log_file: Optional[Path] = None
    max_len: int = Field(default=6, ge=0)
    budget: Optional[int] = Field(default=None, ge=1)


def configure_logging(settings: Settings) -> None:
    """Send log records to stderr (stdout carries artifacts) and optionally to a file."""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file is not None:
        settings.log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.log_file))

    logging.basicConfig(
        level=logging.DEBUG if settings.verbose else logging.WARNING,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    logger.debug(f"Logging configured (verbose={settings.verbose}, log_file={settings.log_file})")
