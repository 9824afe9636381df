"""Massively parallel Kawasaki kinetics on minimal 7-site domains.

A minimal domain is a center site plus its six neighbours. When ``N`` is a multiple of 7 and the six
neighbour offsets fall into six distinct nonzero residue classes modulo 7, the centers
``{i : i % 7 == k}`` generate a partition of the lattice into such domains for each ``k`` in
``0..6``. One MPKK sweep performs one Kawasaki attempt per domain of a decomposition; one step runs
seven sweeps over randomly drawn decompositions, i.e. ``N`` attempts in total.

Sweeps are two-phase. Every domain decides against the configuration at sweep start (its energy
reads reach past its own seven sites), then all accepted swaps are written. Writes of different
domains touch disjoint sites, so the outcome does not depend on how domains are split across lanes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, TypeVar

import numba
import numpy as np
from numba import njit, prange

from core.config import DOMAIN_SIZE, N_NEIGHBORS
from core.energy import count_unlike_contacts, pair_delta_contacts
from core.lattice import MIN_LENGTH, MIN_ROWS, MIN_SITES, LatticeDims, neighbor_table
from core.schemas.stats import StepStats
from core.utils.exceptions import ContractViolationError, CoverageError

if TYPE_CHECKING:
    from collections.abc import Callable

    from core.energy import InteractionModel
    from core.lattice import Lattice
    from core.rng import RngStream

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Label below a step stream reserved for the decomposition offset draws
_OFFSET_LABEL = DOMAIN_SIZE


@dataclass(frozen=True)
class Coverage:
    """Whether a lattice admits exact 7-site domain coverings.

    Attributes
    ----------
    dims : LatticeDims
        The lattice checked.
    valid : bool
        ``True`` if all seven decompositions partition the lattice.
    residues : tuple[int, ...]
        Neighbour offsets modulo 7, in :func:`~core.lattice.neighbors` order.
    partition_verified : bool
        ``True`` if the constructive check (centers ``0, 7, 14, ...``) found an exact partition.

    """

    dims: LatticeDims
    valid: bool
    residues: tuple[int, ...]
    partition_verified: bool


@dataclass(frozen=True)
class Domain:
    """A center site and its six neighbours."""

    center: int
    members: tuple[int, ...]


@dataclass(frozen=True)
class Decomposition:
    """Decomposition ``D(k)``: all domains centred on sites congruent to ``k`` modulo 7."""

    offset: int
    dims: LatticeDims
    centers: np.ndarray = field(repr=False, compare=False)

    @property
    def n_domains(self) -> int:
        """Number of domains, ``N / 7``."""
        return len(self.centers)

    @property
    def members(self) -> np.ndarray:
        """``(N / 7, 7)`` array; row ``d`` lists the center of domain ``d`` followed by its neighbours."""
        return np.column_stack([self.centers, neighbor_table(self.dims)[self.centers]])

    def domains(self) -> list[Domain]:
        """Materialise the domains in ordinal order."""
        return [Domain(int(row[0]), tuple(int(m) for m in row)) for row in self.members]


def _partition_check(dims: LatticeDims, k: int) -> bool:
    n = dims.N
    if n % DOMAIN_SIZE:
        return False
    centers = np.arange(k, n, DOMAIN_SIZE)
    members = np.column_stack([centers, neighbor_table(dims)[centers]]).ravel()
    return len(members) == n and bool(np.all(np.bincount(members, minlength=n) == 1))


@lru_cache(maxsize=64)
def validate_dims(dims: LatticeDims) -> Coverage:
    """Decide whether ``dims`` admits exact 7-site coverings.

    The residue criterion and the constructive partition check must agree.

    Raises
    ------
    RuntimeError
        If the two checks disagree, which would mean the neighbour convention and the criterion
        have drifted apart.

    """
    residues = tuple(d % DOMAIN_SIZE for d in dims.offsets)
    by_residue = dims.N % DOMAIN_SIZE == 0 and len(set(residues)) == N_NEIGHBORS and 0 not in residues
    constructive = _partition_check(dims, 0)
    if by_residue != constructive:
        msg = f"Coverage checks disagree for {dims}: residues={residues}, partition={constructive}"
        raise RuntimeError(msg)
    return Coverage(dims=dims, valid=by_residue, residues=residues, partition_verified=constructive)


def suggest_dims(target_L: int, target_M: int) -> LatticeDims:  # noqa: N803
    """Return the closest valid ``(L, M)`` not smaller than the targets.

    Candidates are visited by increasing total growth ``(L - target_L) + (M - target_M)``; within
    the same total, larger ``L`` growth comes first.
    """
    base_l = max(target_L, MIN_LENGTH)
    base_m = max(target_M, MIN_ROWS)
    growth = 0
    while True:
        for grow_l in range(growth, -1, -1):
            length, rows = base_l + grow_l, base_m + growth - grow_l
            if length * rows < MIN_SITES:
                continue
            dims = LatticeDims(length, rows)
            if validate_dims(dims).valid:
                return dims
        growth += 1


def generate_decomposition(dims: LatticeDims, k: int) -> Decomposition:
    """Return decomposition ``D(k)``.

    Raises
    ------
    CoverageError
        If ``dims`` has no exact coverage.
    ContractViolationError
        If ``k`` is outside ``0..6``.

    """
    if not 0 <= k < DOMAIN_SIZE:
        msg = f"Decomposition offset must be in 0..6, got {k}"
        raise ContractViolationError(msg)
    if not validate_dims(dims).valid:
        suggestion = suggest_dims(dims.L, dims.M)
        raise CoverageError(dims.L, dims.M, (suggestion.L, suggestion.M))
    return _decomposition(dims, k)


@lru_cache(maxsize=64)
def _decomposition(dims: LatticeDims, k: int) -> Decomposition:
    centers = np.arange(k, dims.N, DOMAIN_SIZE, dtype=np.int64)
    centers.setflags(write=False)
    return Decomposition(offset=k, dims=dims, centers=centers)


# Per-domain decision codes written by the decide kernel
REJECTED = 0
ACCEPTED = 1
SAME_TYPE = 2


@njit(parallel=True, cache=True, nogil=True)
def _decide_kernel(  # noqa: PLR0913
    sites: np.ndarray,
    table: np.ndarray,
    centers: np.ndarray,
    directions: np.ndarray,
    uniforms: np.ndarray,
    omega: float,
    partners: np.ndarray,
    status: np.ndarray,
) -> None:
    for d in prange(centers.shape[0]):
        c = centers[d]
        j = table[c, directions[d]]
        partners[d] = j
        if sites[c] == sites[j]:
            status[d] = SAME_TYPE
        else:
            delta_e = omega * pair_delta_contacts(sites, table, c, j)
            if delta_e <= 0.0 or uniforms[d] < math.exp(-delta_e):
                status[d] = ACCEPTED
            else:
                status[d] = REJECTED


@njit(parallel=True, cache=True, nogil=True)
def _apply_kernel(sites: np.ndarray, centers: np.ndarray, partners: np.ndarray, status: np.ndarray) -> None:
    for d in prange(centers.shape[0]):
        if status[d] == ACCEPTED:
            c = centers[d]
            j = partners[d]
            held = sites[c]
            sites[c] = sites[j]
            sites[j] = held


class LanePool:
    """Worker lanes for MPKK sweeps.

    The sweep kernels are compiled with numba and spread their domain loop over threads with
    ``prange``, outside the GIL. A pool fixes the thread count for every kernel it launches. Requests
    above numba's thread limit (the core count unless ``NUMBA_NUM_THREADS`` says otherwise) are capped.

    Parameters
    ----------
    lanes : int
        Number of lanes (at least 1).

    """

    def __init__(self, lanes: int = 1) -> None:
        if lanes < 1:
            msg = f"lanes must be >= 1, got {lanes}"
            raise ValueError(msg)
        self.lanes = lanes
        self.threads = min(lanes, numba.config.NUMBA_NUM_THREADS)
        if self.threads < lanes:
            logger.warning(
                "Lane count capped by the numba thread limit",
                extra={"requested": lanes, "threads": self.threads},
            )

    def launch(self, kernel: Callable[..., T], *args: object) -> T:
        """Call ``kernel(*args)`` with this pool's thread count, restoring the previous count after."""
        previous = numba.get_num_threads()
        numba.set_num_threads(self.threads)
        try:
            return kernel(*args)
        finally:
            numba.set_num_threads(previous)


def mpkk_sweep(  # noqa: PLR0913
    lattice: Lattice,
    model: InteractionModel,
    decomposition: Decomposition,
    rng_root: RngStream,
    step_index: int,
    sweep_index: int,
    *,
    pool: LanePool | None = None,
) -> StepStats:
    """Perform one Kawasaki attempt in every domain of ``decomposition``.

    Domain ``d`` (ordinal in ``decomposition.centers``) uses element ``d`` of the direction and
    uniform arrays drawn from ``rng_root.derive(step_index, sweep_index)``. The returned
    ``energy_after`` is not filled in; :func:`mpkk_step` sets it.

    Parameters
    ----------
    lattice : Lattice
        Configuration, updated in place.
    model : InteractionModel
        Interaction model.
    decomposition : Decomposition
        Domains to sweep; must match ``lattice.dims``.
    rng_root : RngStream
        Root stream of the run.
    step_index, sweep_index : int
        Position of this sweep in the run.
    pool : LanePool | None
        Lanes to spread domains over (default: one lane).

    Returns
    -------
    StepStats
        Attempt counts for the sweep.

    """
    if decomposition.dims != lattice.dims:
        msg = f"Decomposition for {decomposition.dims} applied to a {lattice.dims} lattice"
        raise ContractViolationError(msg)

    n_domains = decomposition.n_domains
    stream = rng_root.derive(step_index, sweep_index)
    directions = stream.integers(N_NEIGHBORS, size=n_domains)
    uniforms = stream.random(n_domains)

    sites = lattice.sites
    table = neighbor_table(lattice.dims)
    centers = decomposition.centers
    partners = np.empty(n_domains, dtype=np.int64)
    status = np.empty(n_domains, dtype=np.int8)

    pool = pool or LanePool(1)
    pool.launch(_decide_kernel, sites, table, centers, directions, uniforms, model.omega_AB, partners, status)
    # Every read above happened before any write below
    pool.launch(_apply_kernel, sites, centers, partners, status)

    return StepStats(
        attempted=n_domains,
        accepted=int(np.count_nonzero(status == ACCEPTED)),
        trivial_same_type=int(np.count_nonzero(status == SAME_TYPE)),
    )


def mpkk_step(
    lattice: Lattice,
    model: InteractionModel,
    rng: RngStream,
    *,
    step_index: int = 0,
    pool: LanePool | None = None,
) -> StepStats:
    """Run seven sweeps, each over a decomposition ``D(k)`` with ``k`` drawn uniformly (with replacement).

    The offsets come from ``rng.derive(step_index, 7)``; sweep ``s`` uses ``rng.derive(step_index, s)``.

    Returns
    -------
    StepStats
        ``attempted == N``; ``energy_after`` and ``contact_change`` are exact.

    """
    dims = lattice.dims
    if not validate_dims(dims).valid:
        suggestion = suggest_dims(dims.L, dims.M)
        raise CoverageError(dims.L, dims.M, (suggestion.L, suggestion.M))

    contacts_before = count_unlike_contacts(lattice)
    offsets = rng.derive(step_index, _OFFSET_LABEL).integers(DOMAIN_SIZE, size=DOMAIN_SIZE)

    stats = StepStats()
    for sweep_index, k in enumerate(offsets):
        decomposition = _decomposition(dims, int(k))
        stats = stats + mpkk_sweep(lattice, model, decomposition, rng, step_index, sweep_index, pool=pool)

    contacts_after = count_unlike_contacts(lattice)
    stats.contact_change = contacts_after - contacts_before
    stats.energy_after = model.omega_AB * contacts_after
    logger.debug(
        "MPKK step done",
        extra={"step": step_index, "accepted": stats.accepted, "trivial": stats.trivial_same_type},
    )
    return stats
