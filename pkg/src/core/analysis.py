"""Observables: Hoshen-Kopelman clusters and fraction of first neighbours."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from core.config import N_NEIGHBORS
from core.energy import count_unlike_contacts
from core.lattice import SiteType, neighbor_table
from core.utils.exceptions import AnalysisError

if TYPE_CHECKING:
    from core.lattice import Lattice
    from core.rng import RngStream

logger = logging.getLogger(__name__)


class _LabelForest:
    """Union-find over provisional cluster labels; the root of a set is its smallest label."""

    def __init__(self) -> None:
        self._parent: list[int] = [0]  # label 0 is reserved for non-target sites

    def new_label(self) -> int:
        label = len(self._parent)
        self._parent.append(label)
        return label

    def find(self, label: int) -> int:
        parent = self._parent
        root = label
        while parent[root] != root:
            root = parent[root]
        while parent[label] != root:  # path compression
            parent[label], label = root, parent[label]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self._parent[rb] = ra
        return ra


@dataclass
class ClusterLabeling:
    """Cluster labels of one species.

    Attributes
    ----------
    labels : np.ndarray
        Cluster id per site; 0 for sites of the other species. Ids are ``1..n_clusters`` in order of
        each cluster's smallest site index.
    sizes : dict[int, int]
        Site count per cluster id.
    target : SiteType
        Species that was clustered.

    """

    labels: np.ndarray
    sizes: dict[int, int]
    target: SiteType

    @property
    def n_clusters(self) -> int:
        """Number of clusters."""
        return len(self.sizes)


@dataclass
class ClusterSizeDistribution:
    """Histogram ``size -> number of clusters`` at one sample."""

    histogram: dict[int, int] = field(default_factory=dict)
    step: int = 0

    @property
    def n_clusters(self) -> int:
        """Total number of clusters."""
        return sum(self.histogram.values())

    @property
    def n_sites(self) -> int:
        """Total number of clustered sites, ``sum(s * n_s)``."""
        return sum(s * n for s, n in self.histogram.items())


@dataclass(frozen=True)
class ClusterStatistics:
    """Summary of a cluster-size distribution."""

    n_clusters: int
    average_size: float
    weight_average_size: float
    largest: int


def hoshen_kopelman(lattice: Lattice, target: SiteType = SiteType.A) -> ClusterLabeling:
    """Label connected clusters of ``target`` sites over the six-neighbour helical adjacency.

    Sites are visited in flat-index order. A site joins the labels of its already-labelled
    neighbours, so wrap-around bonds to later sites are merged when the later site is visited.

    Parameters
    ----------
    lattice : Lattice
        Configuration to analyse.
    target : SiteType
        Species to cluster.

    Returns
    -------
    ClusterLabeling
        Canonical labels and cluster sizes.

    """
    n = lattice.dims.N
    is_target = (lattice.sites == target).tolist()
    table = neighbor_table(lattice.dims).tolist()
    provisional = [0] * n
    forest = _LabelForest()

    for i in range(n):
        if not is_target[i]:
            continue
        label = 0
        for k in table[i]:
            neighbor_label = provisional[k]
            if neighbor_label:
                label = forest.union(label, neighbor_label) if label else forest.find(neighbor_label)
        provisional[i] = label or forest.new_label()

    canonical: dict[int, int] = {}
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if provisional[i]:
            root = forest.find(provisional[i])
            labels[i] = canonical.setdefault(root, len(canonical) + 1)

    counts = np.bincount(labels, minlength=len(canonical) + 1)
    sizes = {label: int(counts[label]) for label in range(1, len(canonical) + 1)}
    return ClusterLabeling(labels=labels, sizes=sizes, target=target)


def cluster_size_distribution(labeling: ClusterLabeling, step: int = 0) -> ClusterSizeDistribution:
    """Return the histogram of cluster sizes, keys in ascending order."""
    histogram = Counter(labeling.sizes.values())
    return ClusterSizeDistribution(histogram=dict(sorted(histogram.items())), step=step)


def average_cluster_size(distribution: ClusterSizeDistribution) -> float:
    """Return the number-average cluster size ``sum(s * n_s) / sum(n_s)``.

    Raises
    ------
    AnalysisError
        If the distribution has no clusters.

    """
    if distribution.n_clusters == 0:
        msg = "Average cluster size is undefined without clusters"
        raise AnalysisError(msg)
    return distribution.n_sites / distribution.n_clusters


def weight_average_cluster_size(distribution: ClusterSizeDistribution) -> float:
    """Return the weight-average cluster size ``sum(s^2 * n_s) / sum(s * n_s)``.

    Dominated by the largest clusters, so it exposes lattice-size artifacts that the number average hides.
    """
    if distribution.n_clusters == 0:
        msg = "Weight-average cluster size is undefined without clusters"
        raise AnalysisError(msg)
    return sum(s * s * n for s, n in distribution.histogram.items()) / distribution.n_sites


def cluster_statistics(distribution: ClusterSizeDistribution) -> ClusterStatistics:
    """Summarise a distribution; all fields are 0 when there are no clusters."""
    if distribution.n_clusters == 0:
        return ClusterStatistics(n_clusters=0, average_size=0.0, weight_average_size=0.0, largest=0)
    return ClusterStatistics(
        n_clusters=distribution.n_clusters,
        average_size=average_cluster_size(distribution),
        weight_average_size=weight_average_cluster_size(distribution),
        largest=max(distribution.histogram),
    )


def fraction_first_neighbors(lattice: Lattice, rng: RngStream) -> float:
    """For every site draw one uniform neighbour; return the fraction of same-species draws."""
    n = lattice.dims.N
    table = neighbor_table(lattice.dims)
    drawn = table[np.arange(n), rng.integers(N_NEIGHBORS, size=n)]
    sites = lattice.sites
    return float(np.count_nonzero(sites == sites[drawn])) / n


def fraction_first_neighbors_exact(lattice: Lattice) -> float:
    """Return the share of same-species ordered neighbour pairs, the expectation of the stochastic FFN."""
    n = lattice.dims.N
    ordered_pairs = N_NEIGHBORS * n
    return (ordered_pairs - 2 * count_unlike_contacts(lattice)) / ordered_pairs


def ideal_mixing_ffn(n_sites: int, count: int) -> float:
    """Expected FFN of a uniformly random configuration with ``count`` A sites among ``n_sites``.

    A neighbour of a site is one of the other ``n_sites - 1`` sites, so it matches with probability
    ``(count - 1) / (n_sites - 1)`` for an A site and ``(n_sites - count - 1) / (n_sites - 1)`` for a B site.
    """
    if n_sites < 2:  # noqa: PLR2004
        msg = "Ideal mixing FFN needs at least two sites"
        raise AnalysisError(msg)
    same = count * (count - 1) + (n_sites - count) * (n_sites - count - 1)
    return same / (n_sites * (n_sites - 1))
