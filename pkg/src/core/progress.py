"""Observer protocol for sampling a running simulation.

Defines the shared types used by the kinetics loop and the harness to record samples during
long-running simulations.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Protocol

if TYPE_CHECKING:
    from core.lattice import Lattice


class Observer(Protocol):
    """Protocol for objects sampled by :func:`core.kinetics.run`.

    ``observe`` is called at step 0 and at every multiple of ``interval``. Observers run in the
    same thread as the kinetics loop, between steps.
    """

    interval: int

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:
        """Record a sample.

        Parameters
        ----------
        step : int
            Number of completed steps.
        lattice : Lattice
            Current configuration. Must not be mutated.
        energy : float
            Current energy in kT.

        """
        ...

    def close(self) -> None:
        """Flush and release resources. Called exactly once, also after failures."""
        ...


class NoOpObserver:
    """Observer that records nothing."""

    def __init__(self, interval: int = 1) -> None:
        self.interval = interval

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
        """Do nothing."""

    def close(self) -> None:
        """Do nothing."""


class EnergyTrace:
    """Observer keeping ``(step, energy)`` pairs in memory."""

    def __init__(self, interval: int = 1) -> None:
        self.interval = interval
        self.samples: list[tuple[int, float]] = []

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
        """Append the sample."""
        self.samples.append((step, energy))

    def close(self) -> None:
        """Nothing to release."""
