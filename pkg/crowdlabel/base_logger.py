"""Defines a single instance of a logging.logger used across crowdlabel modules.
"""
import logging
from typing import Optional

LOGGER_NAME = "crowdlabel"


def make_logger(log_level: int = logging.WARN) -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(log_level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def get_logger(logger: Optional[logging.Logger] = None) -> logging.Logger:
    if logger is not None:
        return logger
    return logging.getLogger(LOGGER_NAME)
