"""Abstract base class for run artefact storage backends."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Self

if TYPE_CHECKING:
    from pathlib import Path
    from types import TracebackType


class RunStorage(ABC):
    """Abstract base class for run artefact storage.

    A storage instance owns one run directory. Line-oriented files (stats, trajectory) are appended
    incrementally so that a failed run leaves its partial output behind after :meth:`close`.
    """

    @abstractmethod
    def path_for(self, name: str) -> Path:
        """Return the location of artefact ``name``.

        Parameters
        ----------
        name : str
            File name relative to the run directory.

        Returns
        -------
        Path
            Absolute location of the artefact.

        """

    @abstractmethod
    def write_text(self, name: str, content: str) -> str:
        """Write a whole text artefact, replacing any previous content.

        Parameters
        ----------
        name : str
            File name relative to the run directory.
        content : str
            UTF-8 text to store.

        Returns
        -------
        str
            The storage location of the artefact.

        """

    @abstractmethod
    def write_json(self, name: str, data: dict[str, Any]) -> str:
        """Write a JSON artefact with sorted keys.

        Returns
        -------
        str
            The storage location of the artefact.

        """

    @abstractmethod
    def write_bytes(self, name: str, data: bytes) -> str:
        """Write a binary artefact (snapshot images), replacing any previous content.

        Returns
        -------
        str
            The storage location of the artefact.

        """

    @abstractmethod
    def append_line(self, name: str, line: str) -> None:
        """Append one line (newline added) to a line-oriented artefact."""

    @abstractmethod
    def read_text(self, name: str) -> str | None:
        """Return the text of artefact ``name``, or ``None`` if it does not exist."""

    @abstractmethod
    def flush(self) -> None:
        """Flush buffered appends."""

    @abstractmethod
    def close(self) -> None:
        """Flush and release all open handles."""

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()
