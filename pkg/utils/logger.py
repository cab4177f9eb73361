"""Logging configuration for the application."""
import logging
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

from config.settings import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(run)s] %(message)s'

# Active command or benchmark cell, e.g. "rgatv2 seed 3"
_run: ContextVar[str] = ContextVar("run", default="-")


class RunContextFilter(logging.Filter):
    """Stamp each record with the active run label."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = _run.get()
        return True


@contextmanager
def run_context(label: str) -> Iterator[None]:
    """Tag every log line emitted inside the block with `label`."""
    token = _run.set(label)
    try:
        yield
    finally:
        _run.reset(token)


def current_run() -> str:
    return _run.get()


def setup_logger(name: str) -> logging.Logger:
    """Setup and return a configured logger."""
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, settings.LOG_LEVEL))

    # stderr keeps the CLI tables on stdout clean
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(getattr(logging, settings.LOG_LEVEL))
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        logger.addFilter(RunContextFilter())

    return logger
