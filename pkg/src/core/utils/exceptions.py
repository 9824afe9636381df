"""Custom exceptions for the lipidmc package."""

from __future__ import annotations


class LipidMCError(Exception):
    """Base class for every error raised by lipidmc."""


class ContractViolationError(LipidMCError, ValueError):
    """Exception raised when an operation is called outside its preconditions.

    Typical causes are out-of-range site indices, exchanging a site with itself, or a lattice whose
    composition counters no longer match its site array.
    """


class CoverageError(LipidMCError, ValueError):
    """Exception raised when MPKK is requested on lattice dimensions without an exact 7-site coverage."""

    def __init__(self, length: int, rows: int, suggestion: tuple[int, int] | None = None) -> None:
        msg = f"Lattice {length}x{rows} has no exact coverage by 7-site domains."
        if suggestion is not None:
            msg += f" Nearest valid size is L={suggestion[0]}, M={suggestion[1]} ({suggestion[0]}, {suggestion[1]})."
        super().__init__(msg)
        self.suggestion = suggestion


class ConfigError(LipidMCError, ValueError):
    """Exception raised when a run configuration cannot be parsed or validated."""

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key


class FrameFormatError(LipidMCError, ValueError):
    """Exception raised when a trajectory frame line is malformed."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class AnalysisError(LipidMCError, ValueError):
    """Exception raised when an observable is undefined for its input."""


class ImageError(LipidMCError, OSError):
    """Exception raised when a snapshot cannot be rendered, encoded, written or read."""

    def __init__(self, message: str, path: str | None = None) -> None:
        super().__init__(f"{message}: {path}" if path else message)
        self.path = path


class ObserverError(LipidMCError, RuntimeError):
    """Exception raised when an observer fails during a run.

    Raised only after every observer has been closed, so partial outputs are on disk.
    """
