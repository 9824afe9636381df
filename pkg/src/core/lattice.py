"""Triangular lattice with helical boundary conditions.

Sites are stored in a flat array; site ``i`` sits in row ``i // L`` and column ``i % L``. The
six neighbours are reached by the fixed offsets ``+-1``, ``+-L`` and ``+-(L + 1)`` taken modulo
``N``, so rows wrap into each other and the whole lattice is a single cycle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from core.utils.exceptions import ContractViolationError, FrameFormatError

logger = logging.getLogger(__name__)

MIN_LENGTH = 3
MIN_ROWS = 2
MIN_SITES = 14


class SiteType(IntEnum):
    """Lipid species occupying a site."""

    B = 0
    A = 1

    @property
    def char(self) -> str:
        """Single-character frame representation."""
        return self.name

    @property
    def opposite(self) -> SiteType:
        """The other species."""
        return SiteType.A if self is SiteType.B else SiteType.B


@dataclass(frozen=True)
class LatticeDims:
    """Lattice dimensions.

    Attributes
    ----------
    L : int
        Row length (number of columns).
    M : int
        Number of rows.

    """

    L: int  # noqa: N815
    M: int  # noqa: N815

    def __post_init__(self) -> None:
        if self.L < MIN_LENGTH or self.M < MIN_ROWS or self.L * self.M < MIN_SITES:
            msg = f"Lattice {self.L}x{self.M} is too small (need L >= {MIN_LENGTH}, M >= {MIN_ROWS}, N >= {MIN_SITES})"
            raise ContractViolationError(msg)

    @property
    def N(self) -> int:  # noqa: N802
        """Total number of sites."""
        return self.L * self.M

    @property
    def offsets(self) -> tuple[int, int, int, int, int, int]:
        """Neighbour offsets in flat-index space."""
        return (1, -1, self.L, -self.L, self.L + 1, -(self.L + 1))

    def __str__(self) -> str:
        return f"{self.L}x{self.M}"


@dataclass
class Lattice:
    """A binary lipid configuration.

    ``sites`` holds one ``uint8`` per site (``SiteType`` values). The counters are kept in step
    with the array by every mutating operation in this package.
    """

    dims: LatticeDims
    sites: np.ndarray
    count_A: int = field(default=-1)  # noqa: N815
    count_B: int = field(default=-1)  # noqa: N815

    def __post_init__(self) -> None:
        self.sites = np.ascontiguousarray(self.sites, dtype=np.uint8)
        if self.sites.shape != (self.dims.N,):
            msg = f"Expected {self.dims.N} sites for a {self.dims} lattice, got shape {self.sites.shape}"
            raise ContractViolationError(msg)
        if self.count_A < 0:
            self.count_A = int(np.count_nonzero(self.sites))
            self.count_B = self.dims.N - self.count_A
        self.check_composition()

    @property
    def fraction_A(self) -> float:  # noqa: N802
        """Fraction of sites occupied by species A."""
        return self.count_A / self.dims.N

    def count(self, species: SiteType) -> int:
        """Return the number of sites occupied by ``species``."""
        return self.count_A if species is SiteType.A else self.count_B

    def copy(self) -> Lattice:
        """Return an independent copy."""
        return Lattice(self.dims, self.sites.copy(), self.count_A, self.count_B)

    def check_composition(self) -> None:
        """Verify the counters against the site array.

        Raises
        ------
        ContractViolationError
            If the counters disagree with the array or do not sum to ``N``.

        """
        actual = int(np.count_nonzero(self.sites))
        if actual != self.count_A or self.count_A + self.count_B != self.dims.N:
            msg = f"Composition drift: counters A={self.count_A}, B={self.count_B}, array holds A={actual}"
            raise ContractViolationError(msg)


def neighbors(i: int, dims: LatticeDims) -> tuple[int, ...]:
    """Return the six neighbours of site ``i`` in the order ``+1, -1, +L, -L, +(L+1), -(L+1)``.

    Raises
    ------
    ContractViolationError
        If ``i`` is not a site index.

    """
    n = dims.N
    if not 0 <= i < n:
        msg = f"Site index {i} out of range [0, {n})"
        raise ContractViolationError(msg)
    return tuple((i + d) % n for d in dims.offsets)


@lru_cache(maxsize=16)
def neighbor_table(dims: LatticeDims) -> np.ndarray:
    """Return the read-only ``(N, 6)`` neighbour table, columns ordered as in :func:`neighbors`."""
    idx = np.arange(dims.N, dtype=np.int64)
    table = (idx[:, None] + np.asarray(dims.offsets, dtype=np.int64)[None, :]) % dims.N
    table.setflags(write=False)
    return table


def composition_count(fraction_A: float, n: int) -> int:  # noqa: N803
    """Return ``round(fraction_A * n)`` with halves rounded up.

    The fraction is read through its decimal representation so that ``0.1`` means one tenth.
    """
    if not 0 <= fraction_A <= 1:
        msg = f"fraction_A must lie in [0, 1], got {fraction_A}"
        raise ContractViolationError(msg)
    exact = Fraction(str(fraction_A)) * n
    return math.floor(exact + Fraction(1, 2))


def init_random(dims: LatticeDims, fraction_A: float, seed: int) -> Lattice:  # noqa: N803
    """Place ``round(fraction_A * N)`` A lipids uniformly at random.

    Parameters
    ----------
    dims : LatticeDims
        Lattice dimensions.
    fraction_A : float
        Target fraction of A lipids in [0, 1].
    seed : int
        Seed of the shuffle; equal seeds give equal lattices.

    Returns
    -------
    Lattice
        The new configuration.

    """
    count_a = composition_count(fraction_A, dims.N)
    sites = np.zeros(dims.N, dtype=np.uint8)
    sites[:count_a] = SiteType.A
    np.random.default_rng(seed).shuffle(sites)
    logger.debug("Random lattice initialised", extra={"dims": str(dims), "count_A": count_a, "seed": seed})
    return Lattice(dims, sites, count_a, dims.N - count_a)


def init_block(dims: LatticeDims, fraction_A: float) -> Lattice:  # noqa: N803
    """Fill the first ``round(fraction_A * N)`` flat indices with A, the rest with B."""
    count_a = composition_count(fraction_A, dims.N)
    sites = np.zeros(dims.N, dtype=np.uint8)
    sites[:count_a] = SiteType.A
    return Lattice(dims, sites, count_a, dims.N - count_a)


def exchange(lattice: Lattice, i: int, j: int) -> Lattice:
    """Swap the lipids at ``i`` and ``j`` in place and return the lattice.

    Raises
    ------
    ContractViolationError
        If ``i == j`` or either index is out of range.

    """
    n = lattice.dims.N
    if i == j:
        msg = f"Cannot exchange site {i} with itself"
        raise ContractViolationError(msg)
    if not (0 <= i < n and 0 <= j < n):
        msg = f"Exchange indices ({i}, {j}) out of range [0, {n})"
        raise ContractViolationError(msg)
    sites = lattice.sites
    sites[i], sites[j] = sites[j], sites[i]
    return lattice


def format_frame(lattice: Lattice) -> str:
    """Encode the lattice as one line of ``'A'``/``'B'`` characters (no newline)."""
    codes = np.where(lattice.sites == SiteType.A, ord(SiteType.A.char), ord(SiteType.B.char))
    return codes.astype(np.uint8).tobytes().decode("ascii")


def parse_frame(line: str, dims: LatticeDims, line_number: int = 1) -> Lattice:
    """Decode a frame line produced by :func:`format_frame`.

    Raises
    ------
    FrameFormatError
        If the line length differs from ``N`` or it contains characters other than ``A``/``B``.

    """
    text = line.rstrip("\r\n")
    if len(text) != dims.N:
        msg = f"frame has {len(text)} sites, expected {dims.N}"
        raise FrameFormatError(msg, line_number)
    raw = np.frombuffer(text.encode("ascii", errors="replace"), dtype=np.uint8)
    is_a = raw == ord("A")
    bad = ~(is_a | (raw == ord("B")))
    if bad.any():
        pos = int(np.argmax(bad))
        msg = f"invalid site character {text[pos]!r} at column {pos}"
        raise FrameFormatError(msg, line_number)
    return Lattice(dims, is_a.astype(np.uint8))
