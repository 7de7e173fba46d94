"""Logging helpers."""

import logging

from ..config import settings

_ROOT = "carnotgg"


def get_logger(name: str = _ROOT) -> logging.Logger:
    """Return a logger under the package namespace with sane defaults.

    The handler lives on the package logger only, so module loggers such as
    ``carnotgg.mollify`` propagate to it instead of printing twice.
    """
    root = logging.getLogger(_ROOT)
    if not root.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        handler.setFormatter(formatter)
        root.addHandler(handler)
        root.setLevel(settings.log_level)
    if name == _ROOT or name.startswith(_ROOT + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{_ROOT}.{name}")
