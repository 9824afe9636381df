"""Schemas for kinetics bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, auto
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from core.lattice import Lattice


class IterationOutcome(Enum):
    """Result of a single exchange attempt."""

    TRIVIAL = auto()  # both sites hold the same species
    ACCEPTED = auto()
    REJECTED = auto()


@dataclass
class StepStats:
    """Aggregated outcome of one or more exchange attempts.

    Attributes
    ----------
    attempted : int
        Exchange attempts, trivial ones included.
    accepted : int
        Accepted nontrivial exchanges.
    trivial_same_type : int
        Attempts that drew two sites of the same species.
    energy_after : float
        Energy in kT after the last attempt.
    contact_change : int
        Net change of the unlike-contact count over the attempts.

    """

    attempted: int = 0
    accepted: int = 0
    trivial_same_type: int = 0
    energy_after: float = 0.0
    contact_change: int = 0

    def __post_init__(self) -> None:
        if self.accepted > self.attempted:
            msg = f"accepted ({self.accepted}) exceeds attempted ({self.attempted})"
            raise ValueError(msg)

    @property
    def rejected(self) -> int:
        """Nontrivial attempts that were rejected."""
        return self.attempted - self.accepted - self.trivial_same_type

    @property
    def acceptance_ratio(self) -> float:
        """Accepted over nontrivial attempts (0 when there were none)."""
        nontrivial = self.attempted - self.trivial_same_type
        return self.accepted / nontrivial if nontrivial else 0.0

    def record(self, outcome: IterationOutcome, contact_change: int = 0) -> None:
        """Add one attempt."""
        self.attempted += 1
        if outcome is IterationOutcome.TRIVIAL:
            self.trivial_same_type += 1
        elif outcome is IterationOutcome.ACCEPTED:
            self.accepted += 1
            self.contact_change += contact_change

    def __add__(self, other: StepStats) -> StepStats:
        return StepStats(
            attempted=self.attempted + other.attempted,
            accepted=self.accepted + other.accepted,
            trivial_same_type=self.trivial_same_type + other.trivial_same_type,
            energy_after=other.energy_after,
            contact_change=self.contact_change + other.contact_change,
        )


@dataclass
class RunResult:
    """Final state and per-step history of a run."""

    lattice: Lattice
    history: list[StepStats] = field(default_factory=list)
    samples: int = 0

    @property
    def totals(self) -> StepStats:
        """All steps merged."""
        total = StepStats()
        for stats in self.history:
            total = total + stats
        return total
