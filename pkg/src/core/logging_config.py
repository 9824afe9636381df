"""Root logging setup.

Modules log through ``logging.getLogger(__name__)`` with structured fields passed in ``extra``.
This module routes those records through structlog's ``ProcessorFormatter`` so the fields are
rendered instead of dropped.
"""

from __future__ import annotations

import logging
import sys

import structlog

_HANDLER_NAME = "lipidmc"


def configure_logging(level: str = "INFO", fmt: str = "console") -> None:
    """Install (or replace) the lipidmc handler on the root logger.

    Parameters
    ----------
    level : str
        Log level name.
    fmt : str
        ``"console"`` or ``"json"``.

    """
    renderer: structlog.types.Processor
    if fmt == "json":
        renderer = structlog.processors.JSONRenderer(sort_keys=True)
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    formatter = structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=[
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.ExtraAdder(),
            structlog.processors.TimeStamper(fmt="iso"),
        ],
        processors=[
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            renderer,
        ],
    )

    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    for existing in list(root.handlers):
        if existing.get_name() == _HANDLER_NAME:
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())
