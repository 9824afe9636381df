"""Tests for cluster labelling and FFN observables."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from core.analysis import (
    ClusterSizeDistribution,
    average_cluster_size,
    cluster_size_distribution,
    cluster_statistics,
    fraction_first_neighbors,
    fraction_first_neighbors_exact,
    hoshen_kopelman,
    ideal_mixing_ffn,
    weight_average_cluster_size,
)
from core.energy import count_unlike_contacts
from core.lattice import Lattice, LatticeDims, SiteType, init_block, init_random
from core.rng import RngStream, StreamPurpose
from core.utils.exceptions import AnalysisError

FloodFill = Callable[[Lattice, int], list[int]]


def _single_site(dims: LatticeDims, site: int, species: SiteType = SiteType.A) -> Lattice:
    sites = np.full(dims.N, species.opposite, dtype=np.uint8)
    sites[site] = species
    return Lattice(dims, sites)


class TestHoshenKopelman:
    """Tests for hoshen_kopelman."""

    def test_single_site(self, dims: LatticeDims) -> None:
        """One A site is one cluster of size 1."""
        labeling = hoshen_kopelman(_single_site(dims, 40))
        assert labeling.n_clusters == 1
        assert labeling.sizes == {1: 1}
        assert labeling.labels[40] == 1
        assert average_cluster_size(cluster_size_distribution(labeling)) == 1.0

    def test_all_target_is_one_cluster(self, dims: LatticeDims) -> None:
        """A uniform lattice percolates as a single cluster."""
        labeling = hoshen_kopelman(Lattice(dims, np.ones(dims.N, dtype=np.uint8)))
        assert labeling.sizes == {1: dims.N}

    def test_wrap_around_bond(self, dims: LatticeDims) -> None:
        """The last and first sites are neighbours through the helical wrap."""
        sites = np.zeros(dims.N, dtype=np.uint8)
        sites[[0, dims.N - 1]] = SiteType.A
        assert hoshen_kopelman(Lattice(dims, sites)).sizes == {1: 2}

    def test_canonical_labels(self, half_lattice: Lattice) -> None:
        """Labels are 1..n in order of each cluster's smallest site."""
        labels = hoshen_kopelman(half_lattice).labels
        first_seen = []
        for label in labels.tolist():
            if label and label not in first_seen:
                first_seen.append(label)
        assert first_seen == list(range(1, len(first_seen) + 1))

    def test_other_species(self, half_lattice: Lattice, flood_fill: FloodFill) -> None:
        """B clusters are labelled when B is the target."""
        labeling = hoshen_kopelman(half_lattice, SiteType.B)
        assert sorted(labeling.sizes.values(), reverse=True) == flood_fill(half_lattice, SiteType.B)
        assert not labeling.labels[half_lattice.sites == SiteType.A].any()

    @settings(max_examples=1000, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.floats(min_value=0.1, max_value=0.9),
        st.sampled_from([(9, 7), (16, 14), (7, 5), (11, 3)]),
    )
    def test_matches_flood_fill(
        self, seed: int, fraction: float, shape: tuple[int, int], flood_fill: FloodFill
    ) -> None:
        """Cluster sizes agree with a breadth-first search on the same adjacency."""
        lattice = init_random(LatticeDims(*shape), fraction, seed)
        labeling = hoshen_kopelman(lattice)
        assert sorted(labeling.sizes.values(), reverse=True) == flood_fill(lattice, SiteType.A)
        assert sum(labeling.sizes.values()) == lattice.count_A

    @pytest.mark.parametrize("fraction", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_seeded_grid_matches_flood_fill(self, fraction: float, flood_fill: FloodFill) -> None:
        """112 seeded 9x7 lattices per composition, 1008 in all, without a mismatch."""
        for seed in range(112):
            lattice = init_random(LatticeDims(9, 7), fraction, seed)
            assert sorted(hoshen_kopelman(lattice).sizes.values(), reverse=True) == flood_fill(lattice, SiteType.A)

    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.floats(min_value=0.1, max_value=0.9),
        st.integers(min_value=1, max_value=62),
    )
    def test_invariant_under_cyclic_shift(self, seed: int, fraction: float, shift: int) -> None:
        """Rolling the flat site array is a lattice translation and keeps the size multiset."""
        lattice = init_random(LatticeDims(9, 7), fraction, seed)
        shifted = Lattice(lattice.dims, np.roll(lattice.sites, shift))
        assert sorted(hoshen_kopelman(shifted).sizes.values()) == sorted(hoshen_kopelman(lattice).sizes.values())


class TestClusterStatistics:
    """Tests for the cluster-size distribution and its averages."""

    def test_distribution(self) -> None:
        """Sizes 1, 1, 3 give n_1 = 2 and n_3 = 1."""
        distribution = ClusterSizeDistribution(histogram={1: 2, 3: 1})
        assert distribution.n_clusters == 3
        assert distribution.n_sites == 5
        assert average_cluster_size(distribution) == pytest.approx(5 / 3)
        assert weight_average_cluster_size(distribution) == pytest.approx(11 / 5)

    def test_empty_distribution(self) -> None:
        """Averages are undefined without clusters."""
        with pytest.raises(AnalysisError):
            average_cluster_size(ClusterSizeDistribution())
        with pytest.raises(AnalysisError):
            weight_average_cluster_size(ClusterSizeDistribution())

    def test_statistics_without_clusters(self, dims: LatticeDims) -> None:
        """An all-B lattice reports zero A clusters."""
        labeling = hoshen_kopelman(Lattice(dims, np.zeros(dims.N, dtype=np.uint8)))
        stats = cluster_statistics(cluster_size_distribution(labeling))
        assert (stats.n_clusters, stats.average_size, stats.weight_average_size, stats.largest) == (0, 0.0, 0.0, 0)

    def test_block_start(self, medium_dims: LatticeDims) -> None:
        """A half-filled block start is one A cluster."""
        lattice = init_block(medium_dims, 0.5)
        stats = cluster_statistics(cluster_size_distribution(hoshen_kopelman(lattice), step=0))
        assert stats.n_clusters == 1
        assert stats.largest == lattice.count_A

    def test_weight_average_not_below_number_average(self, half_lattice: Lattice) -> None:
        """The weight average never falls below the number average."""
        stats = cluster_statistics(cluster_size_distribution(hoshen_kopelman(half_lattice)))
        assert stats.weight_average_size >= stats.average_size


class TestFractionFirstNeighbors:
    """Tests for the stochastic and exact FFN."""

    def test_uniform_lattice(self, dims: LatticeDims, rng: RngStream) -> None:
        """A single-species lattice has FFN 1."""
        lattice = Lattice(dims, np.ones(dims.N, dtype=np.uint8))
        assert fraction_first_neighbors(lattice, rng) == 1.0
        assert fraction_first_neighbors_exact(lattice) == 1.0

    def test_exact_formula(self, half_lattice: Lattice) -> None:
        """Exact FFN = 1 - 2 * unlike contacts / (6N)."""
        n = half_lattice.dims.N
        expected = 1.0 - 2 * count_unlike_contacts(half_lattice) / (6 * n)
        assert fraction_first_neighbors_exact(half_lattice) == pytest.approx(expected)

    def test_isolated_site(self, dims: LatticeDims) -> None:
        """A lone A removes twelve of the 6N ordered same-species pairs."""
        lattice = _single_site(dims, 5)
        assert fraction_first_neighbors_exact(lattice) == pytest.approx(1 - 12 / (6 * dims.N))

    def test_reproducible(self, half_lattice: Lattice) -> None:
        """The stochastic estimate depends only on the stream."""
        first = fraction_first_neighbors(half_lattice, RngStream(3).derive(StreamPurpose.FFN, 10))
        second = fraction_first_neighbors(half_lattice, RngStream(3).derive(StreamPurpose.FFN, 10))
        assert first == second

    def test_stochastic_mean_matches_exact(self, half_lattice: Lattice) -> None:
        """Averaged over many draws the stochastic FFN approaches the exact one."""
        root = RngStream(99)
        draws = [fraction_first_neighbors(half_lattice, root.derive(s)) for s in range(2000)]
        assert float(np.mean(draws)) == pytest.approx(fraction_first_neighbors_exact(half_lattice), abs=0.01)

    def test_ideal_mixing(self) -> None:
        """Half-filled large lattice: just under one half."""
        assert ideal_mixing_ffn(4, 2) == pytest.approx(1 / 3)
        assert ideal_mixing_ffn(10000, 5000) == pytest.approx(0.5, abs=1e-4)

    def test_ideal_mixing_single_site(self) -> None:
        """At least two sites are needed."""
        with pytest.raises(AnalysisError):
            ideal_mixing_ffn(1, 1)
