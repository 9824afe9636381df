"""Storage module for lipidmc run artefacts."""

from storage.base import RunStorage
from storage.local import LocalRunStorage

__all__ = ["LocalRunStorage", "RunStorage"]
