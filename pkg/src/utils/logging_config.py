import logging
import sys
from typing import Optional

from pythonjsonlogger import jsonlogger

from src.config.config import Config

_configured = False


def setup_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """
    Configure the root logger once

    Args:
        level: Logging level name; defaults to the runtime config
        fmt: "json" for structured records, "plain" for human-readable lines
    """
    global _configured
    runtime = Config.get_runtime_config()
    level = (level or runtime["log_level"]).upper()
    fmt = fmt or runtime["log_format"]

    handler = logging.StreamHandler(sys.stderr)
    if fmt == "plain":
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    else:
        handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s"))

    root = logging.getLogger()
    if _configured:
        for existing in list(root.handlers):
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)
    _configured = True
