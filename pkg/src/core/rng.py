"""Seedable random streams with labelled derivation.

A stream is identified by a root seed and a tuple of non-negative integer labels. The labels become
the ``spawn_key`` of a :class:`numpy.random.SeedSequence`, which keys a counter-based Philox generator.
Two streams with the same seed and labels produce the same draws; streams with different labels are
independent for all practical purposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any

import numpy as np


class StreamPurpose(IntEnum):
    """First label of top-level streams, one per consumer."""

    KINETICS = 1
    FFN = 2
    IMAGE_FFN = 3
    INIT = 4


@dataclass
class RngStream:
    """A reproducible random stream.

    Attributes
    ----------
    seed : int
        Root seed (64-bit).
    labels : tuple[int, ...]
        Derivation path from the root.

    """

    seed: int
    labels: tuple[int, ...] = ()
    _generator: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.seed < 0 or self.seed >= 2**64:
            msg = f"seed must be a 64-bit unsigned integer, got {self.seed}"
            raise ValueError(msg)
        if any(label < 0 for label in self.labels):
            msg = f"stream labels must be non-negative, got {self.labels}"
            raise ValueError(msg)

    @property
    def generator(self) -> np.random.Generator:
        """The underlying generator, created on first use."""
        if self._generator is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=self.labels)
            self._generator = np.random.Generator(np.random.Philox(seq))
        return self._generator

    def derive(self, *labels: int) -> RngStream:
        """Return the child stream ``labels`` below this one (independent of how much this one was used)."""
        return RngStream(self.seed, self.labels + tuple(int(label) for label in labels))

    def integers(self, high: int, size: int | tuple[int, ...] | None = None) -> Any:
        """Draw uniform integers in ``[0, high)``."""
        return self.generator.integers(0, high, size=size)

    def random(self, size: int | tuple[int, ...] | None = None) -> Any:
        """Draw uniform floats in ``[0, 1)``."""
        return self.generator.random(size)

    @property
    def state(self) -> dict[str, Any]:
        """Bit-generator state; restoring it with :meth:`restore` replays the stream."""
        return self.generator.bit_generator.state

    def restore(self, state: dict[str, Any]) -> None:
        """Restore a state captured with :attr:`state`."""
        self.generator.bit_generator.state = state
