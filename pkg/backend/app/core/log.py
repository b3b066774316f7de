import logging
import logging.config
import sys
from pathlib import Path

from backend.app.core.config import get_settings

LOGGING_CONFIG = Path(__file__).resolve().parents[2] / "logging.ini"


def configure_logging() -> logging.Logger:
    """Configure logging from backend/logging.ini; only entry points call this."""
    settings = get_settings()  # creates the log directory
    if LOGGING_CONFIG.exists():
        logging.config.fileConfig(
            LOGGING_CONFIG,
            disable_existing_loggers=False,
            defaults={"sys": sys, "log_dir": settings.log_dir.as_posix()},
        )
    else:  # pragma: no cover - fallback logging configuration
        logging.basicConfig(
            level=logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s - %(message)s",
            stream=sys.stderr,
        )
    return logging.getLogger("ldp-lab")
