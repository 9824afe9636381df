"""Tests for the sequential engines and the run loop."""

from __future__ import annotations

from collections import Counter
from typing import TYPE_CHECKING, Any

import numpy as np
import pytest

from core.analysis import fraction_first_neighbors_exact, ideal_mixing_ffn
from core.energy import InteractionModel, count_unlike_contacts, total_energy
from core.kinetics import (
    SpeciesIndex,
    kawasaki_iteration,
    kawasaki_step,
    nonlocal_exchange_iteration,
    nonlocal_step,
    run,
)
from core.lattice import Lattice, LatticeDims, SiteType, init_block, init_random
from core.progress import EnergyTrace, NoOpObserver
from core.rng import RngStream
from core.schemas import Engine, InitMode, IterationOutcome, StepStats
from core.utils.exceptions import AnalysisError, ContractViolationError, ObserverError

if TYPE_CHECKING:
    from collections.abc import Callable

    from pytest_mock import MockerFixture

FREE = InteractionModel(omega_AB=0.0)


class TestStepStats:
    """Tests for the StepStats bookkeeping."""

    def test_record(self) -> None:
        """Outcomes land in the right counters."""
        stats = StepStats()
        stats.record(IterationOutcome.TRIVIAL)
        stats.record(IterationOutcome.ACCEPTED, contact_change=-2)
        stats.record(IterationOutcome.REJECTED)
        assert (stats.attempted, stats.accepted, stats.trivial_same_type, stats.rejected) == (3, 1, 1, 1)
        assert stats.contact_change == -2
        assert stats.acceptance_ratio == 0.5

    def test_accepted_cannot_exceed_attempted(self) -> None:
        """The invariant is enforced on construction."""
        with pytest.raises(ValueError, match="exceeds"):
            StepStats(attempted=1, accepted=2)

    def test_add(self) -> None:
        """Merging sums counts and keeps the later energy."""
        merged = StepStats(attempted=5, accepted=1, energy_after=3.0) + StepStats(attempted=5, energy_after=1.0)
        assert merged.attempted == 10
        assert merged.energy_after == 1.0


class TestKawasaki:
    """Tests for the sequential Kawasaki engine."""

    def test_all_a_is_trivial(self, dims: LatticeDims, model: InteractionModel, rng: RngStream) -> None:
        """A single-species lattice never changes."""
        lattice = Lattice(dims, np.ones(dims.N, dtype=np.uint8))
        for _ in range(50):
            assert kawasaki_iteration(lattice, model, rng).outcome is IterationOutcome.TRIVIAL
        assert lattice.sites.all()

    def test_free_mixing_always_accepts(self, half_lattice: Lattice, rng: RngStream) -> None:
        """With omega = 0 no nontrivial proposal is rejected."""
        outcomes = {kawasaki_iteration(half_lattice, FREE, rng).outcome for _ in range(300)}
        assert IterationOutcome.REJECTED not in outcomes

    def test_proposals_are_neighbours(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """j is always one of the six neighbours of i."""
        dims = half_lattice.dims
        for _ in range(100):
            attempt = kawasaki_iteration(half_lattice, model, rng)
            assert (attempt.j - attempt.i) % dims.N in {d % dims.N for d in dims.offsets}

    def test_step_attempts_n(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """One step is N attempts and reports the recomputed energy."""
        stats = kawasaki_step(half_lattice, model, rng)
        assert stats.attempted == half_lattice.dims.N
        assert stats.energy_after == pytest.approx(total_energy(half_lattice, model))
        half_lattice.check_composition()

    def test_step_all_b(self, dims: LatticeDims, model: InteractionModel, rng: RngStream) -> None:
        """An all-B step accepts nothing and is entirely trivial."""
        stats = kawasaki_step(Lattice(dims, np.zeros(dims.N, dtype=np.uint8)), model, rng)
        assert stats.accepted == 0
        assert stats.trivial_same_type == dims.N

    def test_step_contact_change_exact(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """Summed contact changes equal the recomputed difference."""
        before = count_unlike_contacts(half_lattice)
        stats = kawasaki_step(half_lattice, model, rng)
        assert count_unlike_contacts(half_lattice) - before == stats.contact_change

    def test_reproducible(self, dims: LatticeDims, model: InteractionModel) -> None:
        """Equal seeds give bit-identical trajectories."""
        first = init_random(dims, 0.5, seed=3)
        second = first.copy()
        for step in range(5):
            kawasaki_step(first, model, RngStream(9).derive(step))
            kawasaki_step(second, model, RngStream(9).derive(step))
        np.testing.assert_array_equal(first.sites, second.sites)

    def test_step_is_n_iterations(self, half_lattice: Lattice, model: InteractionModel) -> None:
        """A step equals N iterations drawn from the same stream, lattice and counts alike."""
        by_step = half_lattice.copy()
        stats = kawasaki_step(by_step, model, RngStream(77))
        rng = RngStream(77)
        outcomes = Counter(kawasaki_iteration(half_lattice, model, rng).outcome for _ in range(half_lattice.dims.N))
        np.testing.assert_array_equal(by_step.sites, half_lattice.sites)
        assert stats.attempted == half_lattice.dims.N
        assert stats.accepted == outcomes[IterationOutcome.ACCEPTED]
        assert stats.trivial_same_type == outcomes[IterationOutcome.TRIVIAL]


class TestNonlocal:
    """Tests for the nonlocal exchange engine."""

    def test_single_species_rejected(self, dims: LatticeDims, model: InteractionModel, rng: RngStream) -> None:
        """Without an opposite-species site the move is undefined."""
        lattice = Lattice(dims, np.ones(dims.N, dtype=np.uint8))
        with pytest.raises(AnalysisError):
            nonlocal_exchange_iteration(lattice, model, rng)

    def test_free_mixing_always_accepts(self, half_lattice: Lattice, rng: RngStream) -> None:
        """With omega = 0 every proposal is accepted (pairs are always unlike)."""
        for _ in range(100):
            assert nonlocal_exchange_iteration(half_lattice, FREE, rng).outcome is IterationOutcome.ACCEPTED

    def test_pairs_are_unlike(self, half_lattice: Lattice, rng: RngStream) -> None:
        """The partner always holds the other species at proposal time."""
        strong = InteractionModel(omega_AB=5.0)
        index = SpeciesIndex(half_lattice)
        for _ in range(200):
            before = half_lattice.sites.copy()
            attempt = nonlocal_exchange_iteration(half_lattice, strong, rng, index)
            assert before[attempt.i] != before[attempt.j]

    def test_index_tracks_swaps(self, half_lattice: Lattice, rng: RngStream) -> None:
        """The species index stays consistent with the lattice."""
        index = SpeciesIndex(half_lattice)
        for _ in range(200):
            nonlocal_exchange_iteration(half_lattice, FREE, rng, index)
        for species in (SiteType.A, SiteType.B):
            picked = {index.pick(species, r) for r in range(index.count(species))}
            assert picked == set(np.flatnonzero(half_lattice.sites == species).tolist())

    def test_composition_conserved(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """Counts are exact after many steps."""
        count_a = half_lattice.count_A
        for step in range(20):
            nonlocal_step(half_lattice, model, rng.derive(step))
        assert int(np.count_nonzero(half_lattice.sites)) == count_a


class TestRun:
    """Tests for the run loop."""

    def test_zero_steps_keeps_lattice(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """n_steps = 0 returns the input lattice and samples step 0 only."""
        before = half_lattice.sites.copy()
        trace = EnergyTrace(interval=1)
        result = run(Engine.MPKK, half_lattice, model, 0, [trace], rng)
        np.testing.assert_array_equal(result.lattice.sites, before)
        assert trace.samples == [(0, pytest.approx(total_energy(half_lattice, model)))]

    def test_negative_steps(self, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """n_steps < 0 is a contract violation."""
        with pytest.raises(ContractViolationError):
            run(Engine.KAWASAKI, half_lattice, model, -1, [], rng)

    @pytest.mark.parametrize("engine", list(Engine))
    def test_fencepost(self, engine: Engine, half_lattice: Lattice, model: InteractionModel, rng: RngStream) -> None:
        """Interval 10 over 100 steps gives 11 samples including step 0."""
        trace = EnergyTrace(interval=10)
        result = run(engine, half_lattice, model, 100, [trace], rng)
        assert [step for step, _ in trace.samples] == list(range(0, 101, 10))
        assert result.samples == 11
        assert len(result.history) == 100

    @pytest.mark.parametrize("engine", list(Engine))
    def test_deterministic(self, engine: Engine, dims: LatticeDims, model: InteractionModel) -> None:
        """A fixed seed reproduces the final lattice and the energy trace."""
        outcomes = []
        for _ in range(2):
            trace = EnergyTrace(interval=5)
            result = run(engine, init_random(dims, 0.4, seed=1), model, 30, [trace], RngStream(77))
            outcomes.append((result.lattice.sites.tobytes(), trace.samples))
        assert outcomes[0] == outcomes[1]

    def test_sampled_energy_matches_recompute(
        self, half_lattice: Lattice, model: InteractionModel, rng: RngStream
    ) -> None:
        """The tracked energy handed to observers equals a full recompute."""
        energies = []

        class _Recorder(NoOpObserver):
            def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
                energies.append((energy, total_energy(lattice, model)))

        run(Engine.KAWASAKI, half_lattice, model, 20, [_Recorder(interval=4)], rng)
        assert len(energies) == 6
        for tracked, recomputed in energies:
            assert tracked == pytest.approx(recomputed, abs=1e-9)

    def test_observer_failure_closes_all(
        self, half_lattice: Lattice, model: InteractionModel, rng: RngStream, mocker: MockerFixture
    ) -> None:
        """A failing observer aborts the run after every observer has been closed."""
        failing = NoOpObserver(interval=5)
        mocker.patch.object(failing, "observe", side_effect=[None, OSError("disk full")])
        close_failing = mocker.patch.object(failing, "close")
        other = EnergyTrace(interval=1)
        close_other = mocker.spy(other, "close")

        with pytest.raises(ObserverError, match="disk full"):
            run(Engine.MPKK, half_lattice, model, 20, [other, failing], rng)
        close_failing.assert_called_once()
        close_other.assert_called_once()
        assert [s for s, _ in other.samples] == [0, 1, 2, 3, 4, 5]

    def test_free_mixing_from_block_start(self, medium_dims: LatticeDims) -> None:
        """At omega = 0 a block start relaxes to the ideal-mixing FFN."""
        lattice = init_block(medium_dims, 0.5)
        ffn = []

        class _Ffn(NoOpObserver):
            def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
                if step >= 300:
                    ffn.append(fraction_first_neighbors_exact(lattice))

        run(Engine.MPKK, lattice, FREE, 600, [_Ffn(interval=10)], RngStream(4))
        ideal = ideal_mixing_ffn(medium_dims.N, lattice.count_A)
        assert abs(float(np.mean(ffn)) - ideal) < 0.05


@pytest.mark.slow
class TestSequentialEquilibrium:
    """Stationary observables of the sequential engines."""

    def test_kawasaki_ideal_mixing(self, medium_dims: LatticeDims, replica_means: Callable[..., Any]) -> None:
        """At omega = 0 Kawasaki from a block start reaches the ideal-mixing FFN within 3 standard errors."""
        means = replica_means(
            Engine.KAWASAKI, medium_dims, 0.0, replicas=10, n_steps=300, burn_in=150, interval=10, init=InitMode.BLOCK
        )
        ideal = ideal_mixing_ffn(medium_dims.N, medium_dims.N // 2)
        standard_error = means.ffn.std(ddof=1) / np.sqrt(means.ffn.size)
        assert abs(means.ffn.mean() - ideal) <= 3 * standard_error

    def test_nonlocal_matches_kawasaki(
        self,
        medium_dims: LatticeDims,
        replica_means: Callable[..., Any],
        within_standard_errors: Callable[..., bool],
    ) -> None:
        """In the mixed phase both engines give the same stationary FFN."""
        kawasaki = replica_means(
            Engine.KAWASAKI, medium_dims, 0.4, replicas=10, n_steps=350, burn_in=150, interval=10, seed=3
        )
        nonlocal_ = replica_means(
            Engine.NONLOCAL, medium_dims, 0.4, replicas=10, n_steps=300, burn_in=100, interval=10, seed=4
        )
        assert within_standard_errors(kawasaki.ffn, nonlocal_.ffn)

    def test_start_independent_cluster_size(
        self,
        medium_dims: LatticeDims,
        replica_means: Callable[..., Any],
        within_standard_errors: Callable[..., bool],
    ) -> None:
        """At omega = 1 random and block starts reach the same average cluster size."""
        runs = [
            replica_means(
                Engine.NONLOCAL,
                medium_dims,
                1.0,
                replicas=10,
                n_steps=400,
                burn_in=200,
                interval=5,
                init=init,
                seed=seed,
            )
            for init, seed in ((InitMode.RANDOM, 5), (InitMode.BLOCK, 6))
        ]
        assert within_standard_errors(runs[0].cluster_size, runs[1].cluster_size)
