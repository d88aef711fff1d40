"""
Logging configuration for the similarity boundary analysis toolkit
"""
import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from .config import settings


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """
    Setup application logging configuration

    Args:
        level: Optional override of settings.log_level
        log_file: Optional override of settings.log_file; empty string disables the file
    """
    level_name = (level or settings.log_level).upper()
    target = settings.log_file if log_file is None else log_file

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level_name))

    # Remove existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console handler (stderr keeps reports on stdout clean)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, level_name))
    console_handler.setFormatter(logging.Formatter(settings.log_format))
    root_logger.addHandler(console_handler)

    # File handler with rotation
    if target:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            target,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5,
        )
        file_handler.setLevel(getattr(logging, level_name))
        file_handler.setFormatter(logging.Formatter(settings.log_format))
        root_logger.addHandler(file_handler)

    # Set third-party library log levels
    logging.getLogger("hypothesis").setLevel(logging.WARNING)

    logging.info("Logging configuration initialized")
