"""Contact Hamiltonian and Metropolis acceptance.

The energy of a configuration is ``omega_AB * N_AB`` where ``N_AB`` counts unordered nearest-neighbour
pairs of unlike lipids. Energies are in units of kT, so the Boltzmann factor of a change ``dE`` is
``exp(-dE)``.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Self

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.lattice import neighbor_table
from core.utils.exceptions import ContractViolationError

if TYPE_CHECKING:
    from core.lattice import Lattice


def omega_from_gibbs(g_AA: float, g_AB: float, g_BB: float) -> float:  # noqa: N803
    """Return the reduced interaction parameter ``g_AB - (g_AA + g_BB) / 2``.

    Raises
    ------
    ValueError
        If any input is not finite.

    """
    values = (g_AA, g_AB, g_BB)
    if not all(math.isfinite(v) for v in values):
        msg = f"Gibbs interaction energies must be finite, got {values}"
        raise ValueError(msg)
    return g_AB - (g_AA + g_BB) / 2


class InteractionModel(BaseModel):
    """The one-parameter interaction model.

    Attributes
    ----------
    omega_AB : float
        Unlike-contact energy in kT.
    g_AA, g_AB, g_BB : float | None
        Optional pair Gibbs energies; when given, ``omega_AB`` must equal :func:`omega_from_gibbs` of them.

    """

    model_config = ConfigDict(frozen=True)

    omega_AB: float  # noqa: N815
    g_AA: float | None = None  # noqa: N815
    g_AB: float | None = None  # noqa: N815
    g_BB: float | None = None  # noqa: N815

    @field_validator("omega_AB")
    @classmethod
    def _finite_omega(cls, v: float) -> float:
        if not math.isfinite(v):
            err = "omega_AB must be finite"
            raise ValueError(err)
        return v

    @model_validator(mode="after")
    def _consistent_gibbs(self) -> Self:
        gibbs = (self.g_AA, self.g_AB, self.g_BB)
        if all(g is None for g in gibbs):
            return self
        if any(g is None for g in gibbs):
            err = "g_AA, g_AB and g_BB must be given together"
            raise ValueError(err)
        if omega_from_gibbs(*gibbs) != self.omega_AB:  # type: ignore[arg-type]
            err = f"omega_AB={self.omega_AB} disagrees with the supplied Gibbs energies"
            raise ValueError(err)
        return self

    @classmethod
    def from_gibbs(cls, g_AA: float, g_AB: float, g_BB: float) -> InteractionModel:  # noqa: N803
        """Build a model whose ``omega_AB`` is derived from pair Gibbs energies."""
        return cls(omega_AB=omega_from_gibbs(g_AA, g_AB, g_BB), g_AA=g_AA, g_AB=g_AB, g_BB=g_BB)


def count_unlike_contacts(lattice: Lattice) -> int:
    """Return ``N_AB``, each unordered unlike pair counted once."""
    table = neighbor_table(lattice.dims)
    sites = lattice.sites
    # Forward offsets +1, +L, +(L+1) visit every bond exactly once
    forward = table[:, 0::2]
    return int(np.count_nonzero(sites[:, None] != sites[forward]))


def total_energy(lattice: Lattice, model: InteractionModel) -> float:
    """Return ``omega_AB * N_AB`` in kT."""
    return model.omega_AB * count_unlike_contacts(lattice)


def delta_contacts(lattice: Lattice, i: int, j: int) -> int:
    """Return the change of ``N_AB`` if the lipids at ``i`` and ``j`` were swapped.

    Only the neighbourhoods of ``i`` and ``j`` are read. A direct ``i``-``j`` bond stays unlike across
    the swap and is excluded from both sums.
    """
    if i == j:
        msg = f"Cannot evaluate an exchange of site {i} with itself"
        raise ContractViolationError(msg)
    sites = lattice.sites
    si = sites[i]
    sj = sites[j]
    if si == sj:
        return 0
    table = neighbor_table(lattice.dims)
    change = 0
    for k in table[i]:
        if k != j:
            # k loses a contact with si and gains one with sj
            change += int(sites[k] != sj) - int(sites[k] != si)
    for k in table[j]:
        if k != i:
            change += int(sites[k] != si) - int(sites[k] != sj)
    return change


@njit(cache=True, nogil=True)
def pair_delta_contacts(sites: np.ndarray, table: np.ndarray, i: int, j: int) -> int:
    """Compiled :func:`delta_contacts` on raw arrays, callable from parallel kernels; ``i != j`` is assumed."""
    si = sites[i]
    sj = sites[j]
    if si == sj:
        return 0
    change = 0
    for n in range(table.shape[1]):
        k = table[i, n]
        if k != j:
            change += int(sites[k] != sj) - int(sites[k] != si)
        k = table[j, n]
        if k != i:
            change += int(sites[k] != si) - int(sites[k] != sj)
    return change


def delta_energy_exchange(lattice: Lattice, model: InteractionModel, i: int, j: int) -> float:
    """Return ``E(after swap) - E(before swap)`` for exchanging sites ``i`` and ``j``.

    Raises
    ------
    ContractViolationError
        If ``i == j``.

    """
    return model.omega_AB * delta_contacts(lattice, i, j)


def acceptance_probability(delta_e: float) -> float:
    """Return the Metropolis acceptance ``min(1, exp(-delta_e))``."""
    if delta_e <= 0:
        return 1.0
    return math.exp(-delta_e)
