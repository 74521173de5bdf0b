# logger_utils.py
import logging
import os
import sys
from typing import Optional, Union

from multipitch import settings

FORMAT = "[%(levelname)s] %(name)s: %(message)s"

PathLike = Union[str, os.PathLike]


def _has_file_handler(logger: logging.Logger, path: str) -> bool:
    return any(
        isinstance(h, logging.FileHandler) and h.baseFilename == path for h in logger.handlers
    )


def attach_file_handler(log_file: PathLike, logger: Optional[logging.Logger] = None) -> logging.Logger:
    """Adds a file handler once per path; defaults to the root logger, which
    receives every multipitch logger's records."""
    logger = logger if logger is not None else logging.getLogger()
    path = os.path.abspath(log_file)
    if not _has_file_handler(logger, path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
        file_handler = logging.FileHandler(path, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(FORMAT))
        logger.addHandler(file_handler)
    return logger


def get_logger(name: str, level=None, log_file: Optional[PathLike] = None) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(level if level is not None else settings.LOG_LEVEL)

    # stdout handler only once per logger
    if not any(getattr(h, "_multipitch_stdout", False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(logging.Formatter(FORMAT))
        handler._multipitch_stdout = True
        logger.addHandler(handler)

    if log_file is not None:
        attach_file_handler(log_file, logger)

    return logger


def detach_file_handlers(logger: Optional[logging.Logger] = None) -> None:
    """Close and remove every file handler, e.g. at the end of a run."""
    logger = logger if logger is not None else logging.getLogger()
    for handler in list(logger.handlers):
        if isinstance(handler, logging.FileHandler):
            handler.close()
            logger.removeHandler(handler)
