"""Sequential exchange kinetics and the run loop.

Two sequential engines are provided: classical Kawasaki kinetics (swap a site with one of its six
neighbours) and a nonlocal variant that swaps a site with any site of the other species. The nonlocal
engine samples the same equilibrium but its time axis has no physical meaning; use it for
equilibration only. :func:`run` drives any engine, MPKK included, and feeds observers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from core.config import ENERGY_TOLERANCE_PER_SITE, N_NEIGHBORS
from core.energy import acceptance_probability, count_unlike_contacts, delta_contacts
from core.lattice import SiteType, neighbor_table
from core.mpkk import LanePool, mpkk_step
from core.rng import StreamPurpose
from core.schemas.run import Engine
from core.schemas.stats import IterationOutcome, RunResult, StepStats
from core.utils.exceptions import AnalysisError, ContractViolationError, ObserverError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from core.energy import InteractionModel
    from core.lattice import Lattice
    from core.progress import Observer
    from core.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Attempt:
    """A single exchange attempt.

    Attributes
    ----------
    outcome : IterationOutcome
        Trivial, accepted or rejected.
    i, j : int
        The proposed pair.
    contact_change : int
        Change of the unlike-contact count (0 unless accepted).

    """

    outcome: IterationOutcome
    i: int
    j: int
    contact_change: int = 0


def _attempt(lattice: Lattice, model: InteractionModel, i: int, j: int, u: float) -> Attempt:
    sites = lattice.sites
    if sites[i] == sites[j]:
        return Attempt(IterationOutcome.TRIVIAL, i, j)
    change = delta_contacts(lattice, i, j)
    if u < acceptance_probability(model.omega_AB * change):
        sites[i], sites[j] = sites[j], sites[i]
        return Attempt(IterationOutcome.ACCEPTED, i, j, change)
    return Attempt(IterationOutcome.REJECTED, i, j)


def kawasaki_iteration(lattice: Lattice, model: InteractionModel, rng: RngStream) -> Attempt:
    """Propose swapping a uniform site with a uniform one of its six neighbours; Metropolis-accept.

    Consumes three draws from ``rng``: site, direction, acceptance uniform.
    """
    n = lattice.dims.N
    i = int(rng.integers(n))
    j = int(neighbor_table(lattice.dims)[i, int(rng.integers(N_NEIGHBORS))])
    return _attempt(lattice, model, i, j, float(rng.random()))


def kawasaki_step(lattice: Lattice, model: InteractionModel, rng: RngStream) -> StepStats:
    """Perform ``N`` calls of :func:`kawasaki_iteration` on one stream."""
    stats = StepStats()
    for _ in range(lattice.dims.N):
        attempt = kawasaki_iteration(lattice, model, rng)
        stats.record(attempt.outcome, attempt.contact_change)
    stats.energy_after = model.omega_AB * count_unlike_contacts(lattice)
    return stats


class SpeciesIndex:
    """Positions of each species, updated in O(1) per swap.

    Used by the nonlocal engine to draw a uniform site of the opposite species.
    """

    def __init__(self, lattice: Lattice) -> None:
        self._positions = [np.flatnonzero(lattice.sites == species).tolist() for species in (0, 1)]
        self._slot = np.empty(lattice.dims.N, dtype=np.int64)
        for positions in self._positions:
            self._slot[positions] = np.arange(len(positions))

    def count(self, species: int) -> int:
        """Number of sites holding ``species``."""
        return len(self._positions[species])

    def pick(self, species: int, rank: int) -> int:
        """Return the ``rank``-th site holding ``species``."""
        return self._positions[species][rank]

    def swap(self, i: int, species_i: int, j: int, species_j: int) -> None:
        """Record that ``i`` (was ``species_i``) and ``j`` (was ``species_j``) exchanged lipids."""
        slot_i, slot_j = int(self._slot[i]), int(self._slot[j])
        self._positions[species_i][slot_i] = j
        self._positions[species_j][slot_j] = i
        self._slot[i], self._slot[j] = slot_j, slot_i


def nonlocal_exchange_iteration(
    lattice: Lattice,
    model: InteractionModel,
    rng: RngStream,
    index: SpeciesIndex | None = None,
) -> Attempt:
    """Propose swapping a uniform site with a uniform site of the other species; Metropolis-accept.

    Raises
    ------
    AnalysisError
        If only one species is present.

    """
    if lattice.count_A == 0 or lattice.count_B == 0:
        msg = "Nonlocal exchange needs both species on the lattice"
        raise AnalysisError(msg)
    index = index or SpeciesIndex(lattice)
    sites = lattice.sites
    i = int(rng.integers(lattice.dims.N))
    species_i = SiteType(int(sites[i]))
    species_j = species_i.opposite
    j = index.pick(species_j, int(rng.integers(index.count(species_j))))
    attempt = _attempt(lattice, model, i, j, float(rng.random()))
    if attempt.outcome is IterationOutcome.ACCEPTED:
        index.swap(i, species_i, j, species_j)
    return attempt


def nonlocal_step(lattice: Lattice, model: InteractionModel, rng: RngStream) -> StepStats:
    """Perform ``N`` nonlocal exchange iterations."""
    index = SpeciesIndex(lattice)
    stats = StepStats()
    for _ in range(lattice.dims.N):
        attempt = nonlocal_exchange_iteration(lattice, model, rng, index)
        stats.record(attempt.outcome, attempt.contact_change)
    stats.energy_after = model.omega_AB * count_unlike_contacts(lattice)
    return stats


def _sample(observers: Sequence[Observer], step: int, lattice: Lattice, energy: float) -> int:
    taken = 0
    for observer in observers:
        if step % observer.interval == 0:
            try:
                observer.observe(step, lattice, energy)
            except Exception as exc:
                msg = f"Observer {type(observer).__name__} failed at step {step}: {exc}"
                raise ObserverError(msg) from exc
            taken += 1
    return taken


def run(  # noqa: PLR0913
    engine: Engine,
    lattice: Lattice,
    model: InteractionModel,
    n_steps: int,
    observers: Sequence[Observer],
    rng: RngStream,
    *,
    lanes: int = 1,
) -> RunResult:
    """Run ``n_steps`` steps of ``engine`` on ``lattice`` (updated in place).

    Step ``s`` draws from ``rng.derive(KINETICS, s)`` for the sequential engines and from the
    ``(s, sweep)`` streams below ``rng.derive(KINETICS)`` for MPKK, so a run is a pure function of
    the seed. Composition is checked after every step; the incrementally tracked contact count is
    checked against a recompute at every sample.

    Parameters
    ----------
    engine : Engine
        Engine selector.
    lattice : Lattice
        Starting configuration.
    model : InteractionModel
        Interaction model.
    n_steps : int
        Number of steps.
    observers : Sequence[Observer]
        Observers sampled at step 0 and every multiple of their interval.
    rng : RngStream
        Root stream.
    lanes : int
        MPKK worker lanes (ignored by sequential engines).

    Returns
    -------
    RunResult
        The final lattice and per-step stats.

    Raises
    ------
    ObserverError
        If an observer fails; all observers are closed first.

    """
    if n_steps < 0:
        msg = f"n_steps must be >= 0, got {n_steps}"
        raise ContractViolationError(msg)
    kinetics_rng = rng.derive(StreamPurpose.KINETICS)
    contacts = count_unlike_contacts(lattice)
    result = RunResult(lattice=lattice)

    logger.info(
        "Starting run",
        extra={"engine": str(engine), "dims": str(lattice.dims), "n_steps": n_steps, "omega_AB": model.omega_AB},
    )
    pool = LanePool(lanes if engine is Engine.MPKK else 1)
    try:
        result.samples += _sample(observers, 0, lattice, model.omega_AB * contacts)
        for step in range(1, n_steps + 1):
            if engine is Engine.MPKK:
                stats = mpkk_step(lattice, model, kinetics_rng, step_index=step, pool=pool)
            elif engine is Engine.KAWASAKI:
                stats = kawasaki_step(lattice, model, kinetics_rng.derive(step))
            else:
                stats = nonlocal_step(lattice, model, kinetics_rng.derive(step))
            lattice.check_composition()
            contacts += stats.contact_change
            result.history.append(stats)

            if any(step % o.interval == 0 for o in observers):
                _check_energy(lattice, model, contacts)
                result.samples += _sample(observers, step, lattice, model.omega_AB * contacts)
    finally:
        for observer in observers:
            observer.close()

    totals = result.totals
    logger.info(
        "Run finished",
        extra={"steps": n_steps, "accepted": totals.accepted, "acceptance_ratio": round(totals.acceptance_ratio, 6)},
    )
    return result


def _check_energy(lattice: Lattice, model: InteractionModel, contacts: int) -> None:
    recomputed = count_unlike_contacts(lattice)
    drift = abs(model.omega_AB * (contacts - recomputed))
    if drift > ENERGY_TOLERANCE_PER_SITE * lattice.dims.N:
        msg = f"Energy bookkeeping drifted: tracked {contacts} unlike contacts, recomputed {recomputed}"
        raise ContractViolationError(msg)
