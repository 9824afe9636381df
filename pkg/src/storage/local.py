"""Local filesystem storage implementation for run artefacts."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import IO, Any

from storage.base import RunStorage

logger = logging.getLogger(__name__)


class LocalRunStorage(RunStorage):
    """Filesystem backend storing every artefact of a run in one directory.

    Parameters
    ----------
    base_path : str | Path
        The run directory; created if missing.

    """

    def __init__(self, base_path: str | Path) -> None:
        self.base_path = Path(base_path)
        self.base_path.mkdir(parents=True, exist_ok=True)
        self._handles: dict[str, IO[str]] = {}

    def path_for(self, name: str) -> Path:
        """Return the file path for artefact ``name``.

        Parameters
        ----------
        name : str
            File name relative to the run directory.

        Returns
        -------
        Path
            The file path.

        """
        return self.base_path / name

    def write_text(self, name: str, content: str) -> str:
        """Write ``content`` to ``name`` (UTF-8, ``\\n`` line endings)."""
        target = self.path_for(name)
        target.write_text(content, encoding="utf-8", newline="\n")
        logger.info("Stored artefact", extra={"path": str(target)})
        return str(target)

    def write_bytes(self, name: str, data: bytes) -> str:
        """Write raw bytes to ``name``."""
        target = self.path_for(name)
        target.write_bytes(data)
        logger.debug("Stored binary artefact", extra={"path": str(target), "size": len(data)})
        return str(target)

    def write_json(self, name: str, data: dict[str, Any]) -> str:
        """Write ``data`` as indented JSON with sorted keys."""
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")

    def append_line(self, name: str, line: str) -> None:
        """Append ``line`` to ``name``; the first append truncates the file."""
        handle = self._handles.get(name)
        if handle is None:
            handle = self.path_for(name).open("w", encoding="utf-8", newline="\n")
            self._handles[name] = handle
        handle.write(line + "\n")

    def read_text(self, name: str) -> str | None:
        """Read artefact ``name``.

        Returns
        -------
        str | None
            The content, or ``None`` if not found.

        """
        target = self.path_for(name)
        if not target.exists():
            return None
        return target.read_text(encoding="utf-8")

    def flush(self) -> None:
        """Flush all open append handles."""
        for handle in self._handles.values():
            handle.flush()

    def close(self) -> None:
        """Close all open append handles."""
        for name, handle in self._handles.items():
            handle.close()
            logger.debug("Closed artefact", extra={"path": str(self.path_for(name))})
        self._handles.clear()
