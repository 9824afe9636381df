"""Fixtures for tests."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from core.analysis import (
    average_cluster_size,
    cluster_size_distribution,
    fraction_first_neighbors_exact,
    hoshen_kopelman,
)
from core.energy import InteractionModel
from core.kinetics import run
from core.lattice import Lattice, LatticeDims, SiteType, init_block, init_random
from core.progress import NoOpObserver
from core.rng import RngStream
from core.schemas import Engine, InitMode
from core.settings import Settings

WriteConfigFunc = Callable[..., Path]

BASE_CONFIG = {
    "L": "9",
    "M": "7",
    "fraction_A": "0.5",
    "omega_AB": "0.8",
    "n_steps": "20",
    "seed": "42",
    "sample_interval": "5",
}


def _config_text(**overrides: object) -> str:
    """Render a key=value configuration from :data:`BASE_CONFIG` plus ``overrides``.

    An override of ``None`` drops the key.
    """
    values: dict[str, object] = dict(BASE_CONFIG)
    for key, value in overrides.items():
        if value is None:
            values.pop(key, None)
        else:
            values[key] = value
    return "".join(f"{key}={value}\n" for key, value in values.items())


def _flood_fill_sizes(lattice: Lattice, target: int) -> list[int]:
    """Reference cluster sizes by breadth-first search, sorted descending."""
    n = lattice.dims.N
    offsets = lattice.dims.offsets
    seen = [False] * n
    sizes = []
    for start in range(n):
        if seen[start] or lattice.sites[start] != target:
            continue
        seen[start] = True
        queue = [start]
        size = 0
        while queue:
            i = queue.pop()
            size += 1
            for d in offsets:
                k = (i + d) % n
                if not seen[k] and lattice.sites[k] == target:
                    seen[k] = True
                    queue.append(k)
        sizes.append(size)
    return sorted(sizes, reverse=True)



class _ObservableTrace(NoOpObserver):
    """Collect exact FFN, number-average cluster size and A occupancy from ``burn_in`` on."""

    def __init__(self, interval: int, burn_in: int) -> None:
        super().__init__(interval)
        self.burn_in = burn_in
        self.ffn: list[float] = []
        self.cluster_size: list[float] = []
        self.occupancy: np.ndarray | None = None

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
        if step < self.burn_in:
            return
        self.ffn.append(fraction_first_neighbors_exact(lattice))
        self.cluster_size.append(average_cluster_size(cluster_size_distribution(hoshen_kopelman(lattice))))
        occupied = (lattice.sites == SiteType.A).astype(np.float64)
        self.occupancy = occupied if self.occupancy is None else self.occupancy + occupied


@dataclass
class ReplicaMeans:
    """Per-replica time averages of one engine at one interaction strength.

    Attributes
    ----------
    ffn, cluster_size : np.ndarray
        One stationary mean per replica.
    occupancy : np.ndarray
        ``(replicas, N)`` share of samples in which each site held A.

    """

    ffn: np.ndarray
    cluster_size: np.ndarray
    occupancy: np.ndarray


def _replica_means(  # noqa: PLR0913
    engine: Engine,
    dims: LatticeDims,
    omega: float,
    *,
    replicas: int,
    n_steps: int,
    burn_in: int,
    interval: int,
    init: InitMode = InitMode.RANDOM,
    seed: int = 0,
) -> ReplicaMeans:
    """Run independent replicas at fraction_A = 0.5 and average each over its samples from ``burn_in`` on."""
    model = InteractionModel(omega_AB=omega)
    ffn, cluster_size, occupancy = [], [], []
    for replica in range(replicas):
        if init is InitMode.BLOCK:
            lattice = init_block(dims, 0.5)
        else:
            lattice = init_random(dims, 0.5, seed=seed * 1000 + replica)
        trace = _ObservableTrace(interval, burn_in)
        run(engine, lattice, model, n_steps, [trace], RngStream(seed).derive(replica))
        ffn.append(np.mean(trace.ffn))
        cluster_size.append(np.mean(trace.cluster_size))
        occupancy.append(trace.occupancy / len(trace.ffn))
    return ReplicaMeans(np.array(ffn), np.array(cluster_size), np.array(occupancy))


def _within_standard_errors(first: np.ndarray, second: np.ndarray, n_se: float = 3.0) -> bool:
    """True when the replica means agree within ``n_se`` combined standard errors."""
    combined = np.sqrt(first.var(ddof=1) / first.size + second.var(ddof=1) / second.size)
    return bool(abs(first.mean() - second.mean()) <= n_se * combined)

@pytest.fixture
def dims() -> LatticeDims:
    """Smallest lattice with exact 7-site coverage."""
    return LatticeDims(9, 7)


@pytest.fixture
def medium_dims() -> LatticeDims:
    """A 16x14 lattice (224 sites) with exact coverage."""
    return LatticeDims(16, 14)


@pytest.fixture
def half_lattice(dims: LatticeDims) -> Lattice:
    """A random 9x7 lattice with 32 A sites."""
    return init_random(dims, 0.5, seed=7)


@pytest.fixture
def model() -> InteractionModel:
    """Demixing interaction, omega_AB = 0.8 kT."""
    return InteractionModel(omega_AB=0.8)


@pytest.fixture
def rng() -> RngStream:
    """Root stream with a fixed seed."""
    return RngStream(1234)


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    """Settings writing runs below ``tmp_path``."""
    return Settings(output_root=str(tmp_path / "runs"), max_lanes=8, log_level="DEBUG")


@pytest.fixture
def write_config(tmp_path: Path) -> WriteConfigFunc:
    """Provide a helper to write configuration files."""

    def _write_config(name: str = "run.cfg", **overrides: object) -> Path:
        path = tmp_path / name
        path.write_text(_config_text(**overrides), encoding="utf-8")
        return path

    return _write_config


@pytest.fixture
def config_text() -> Callable[..., str]:
    """Provide :func:`_config_text`."""
    return _config_text


@pytest.fixture
def flood_fill() -> Callable[[Lattice, int], list[int]]:
    """Provide the breadth-first cluster-size reference."""
    return _flood_fill_sizes


@pytest.fixture
def replica_means() -> Callable[..., ReplicaMeans]:
    """Provide :func:`_replica_means`."""
    return _replica_means


@pytest.fixture
def within_standard_errors() -> Callable[..., bool]:
    """Provide :func:`_within_standard_errors`."""
    return _within_standard_errors
