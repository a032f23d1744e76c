import logging
import logging.config
import sys
from typing import Optional

from . import config

# Basic logging configuration dictionary
LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        },
        "brief": {
            "format": "%(levelname)s: %(message)s"
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG", # Filtering happens on the loggers
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "stream": sys.stderr, # stdout is reserved for tables and file inventories
        },
        "progress": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "brief",
            "stream": sys.stderr,
        },
    },
    "loggers": {
        "": { # Root logger
            "handlers": ["console"],
            "level": "INFO",
            "propagate": True,
        },
        # Step progress lines without timestamps
        "backend.src.training.trainer": {
            "level": "INFO",
            "handlers": ["progress"],
            "propagate": False,
        },
    }
}

def setup_logging(level: Optional[str] = None):
    """Applies the logging configuration.

    Args:
        level: Root log level name. Defaults to SANGAM_LOG_LEVEL from the environment.
    """
    level = (level or config.LOG_LEVEL).upper()
    logging_config = {**LOGGING_CONFIG, "loggers": {name: dict(spec) for name, spec in LOGGING_CONFIG["loggers"].items()}}
    for logger_spec in logging_config["loggers"].values():
        logger_spec["level"] = level
    logging.config.dictConfig(logging_config)
    logging.getLogger(__name__).debug(f"Logging configured at level {level}.")
