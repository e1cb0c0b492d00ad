# app/conf/logging.py

import logging
import sys
from typing import Optional

from app.conf.config import get_settings

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """
    Installs one stderr handler on the ``app`` logger.

    :param level: Level name; defaults to ``Settings.LOG_LEVEL``.
    """
    global _configured
    settings = get_settings()
    root = logging.getLogger("app")
    root.setLevel((level or settings.LOG_LEVEL).upper())
    if _configured:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
    root.addHandler(handler)
    _configured = True
