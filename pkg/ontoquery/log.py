import logging
import os

ENV_LEVEL = "ONTOQUERY_DEBUG"
DEFAULT_LEVEL = "WARNING"

_configured = set()


def get_logger(name: str) -> logging.Logger:
    """Return a module logger whose level follows ONTOQUERY_DEBUG."""
    logger = logging.getLogger(name)
    if name in _configured:
        return logger
    level_name = os.environ.get(ENV_LEVEL, DEFAULT_LEVEL).upper()
    try:
        logger.setLevel(getattr(logging, level_name))
    except AttributeError:
        logger.setLevel(getattr(logging, DEFAULT_LEVEL))
    if not logger.hasHandlers():
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        logger.addHandler(handler)
    _configured.add(name)
    return logger
