"""Main entry points for running, benchmarking and re-analysing simulations."""

from __future__ import annotations

import json
import logging
import statistics
import time
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING

from core.analysis import (
    cluster_size_distribution,
    cluster_statistics,
    fraction_first_neighbors,
    fraction_first_neighbors_exact,
    hoshen_kopelman,
)
from core.config import (
    DEFAULT_BENCH_REPEATS,
    DEFAULT_DELTA_COL,
    FINAL_FRAME_FILE_NAME,
    METADATA_FILE_NAME,
    STATS_FILE_NAME,
    TRAJECTORY_FILE_NAME,
)
from core.energy import InteractionModel, total_energy
from core.imaging import (
    encode_image,
    frame_step,
    image_ffn,
    read_image,
    render_pitch,
    render_snapshot,
    snapshot_file_name,
)
from core.kinetics import run
from core.lattice import LatticeDims, SiteType, format_frame, init_block, init_random, parse_frame
from core.mpkk import validate_dims
from core.output_formats import format_stats_row, parse_trajectory_header, stats_header, trajectory_header
from core.parser import validate_config
from core.rng import RngStream, StreamPurpose
from core.schemas import BenchEntry, BenchReport, Engine, InitMode, RunConfig
from core.settings import get_settings
from core.utils.exceptions import AnalysisError, ConfigError, ImageError
from storage.local import LocalRunStorage

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from core.lattice import Lattice
    from core.progress import Observer
    from core.schemas import ImageFormat, RenderConfig, RunResult
    from core.settings import Settings
    from storage.base import RunStorage

# Initialize logger for this module
logger = logging.getLogger(__name__)


class AnalysisMode(StrEnum):
    """Observables that ``analyze`` can recompute."""

    CLUSTERS = "clusters"
    FFN = "ffn"
    FFN_EXACT = "ffn_exact"
    IMAGE_FFN = "image_ffn"


class StatsObserver:
    """Append one ``stats.csv`` row per sample.

    The stochastic FFN of step ``s`` draws from ``rng.derive(FFN, s)``, so ``analyze --mode ffn``
    on the trajectory reproduces the column with the same seed.
    """

    def __init__(self, storage: RunStorage, rng: RngStream, interval: int, target: SiteType = SiteType.A) -> None:
        self.storage = storage
        self.rng = rng
        self.interval = interval
        self.target = target
        self.rows = 0
        storage.append_line(STATS_FILE_NAME, stats_header())

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:
        """Compute the observables of ``lattice`` and append a row."""
        labeling = hoshen_kopelman(lattice, self.target)
        clusters = cluster_statistics(cluster_size_distribution(labeling, step))
        row = format_stats_row(
            step,
            energy,
            fraction_first_neighbors(lattice, self.rng.derive(StreamPurpose.FFN, step)),
            fraction_first_neighbors_exact(lattice),
            clusters,
        )
        self.storage.append_line(STATS_FILE_NAME, row)
        self.rows += 1

    def close(self) -> None:
        """Flush the file."""
        self.storage.flush()


class TrajectoryObserver:
    """Append one frame line per sample to ``trajectory.txt``."""

    def __init__(self, storage: RunStorage, dims: LatticeDims, interval: int) -> None:
        self.storage = storage
        self.interval = interval
        self.frames = 0
        storage.append_line(TRAJECTORY_FILE_NAME, trajectory_header(dims, interval))

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
        """Append the frame."""
        self.storage.append_line(TRAJECTORY_FILE_NAME, format_frame(lattice))
        self.frames += 1

    def close(self) -> None:
        """Flush the file."""
        self.storage.flush()


class SnapshotObserver:
    """Render and store ``frame_<step>.<ext>`` every ``interval`` steps."""

    def __init__(self, storage: RunStorage, render: RenderConfig, fmt: ImageFormat, interval: int) -> None:
        self.storage = storage
        self.render = render
        self.fmt = fmt
        self.interval = interval

    def observe(self, step: int, lattice: Lattice, energy: float) -> None:  # noqa: ARG002
        """Render and write the snapshot."""
        snapshot = render_snapshot(lattice, self.render, step)
        self.storage.write_bytes(snapshot_file_name(step, self.fmt), encode_image(snapshot, self.fmt))

    def close(self) -> None:
        """Nothing buffered."""


def resolve_output_dir(config: RunConfig, settings: Settings | None = None) -> Path:
    """Return ``config.output_dir`` or ``<output_root>/run``."""
    if config.output_dir is not None:
        return config.output_dir
    settings = settings or get_settings()
    return Path(settings.output_root) / "run"


def initial_lattice(config: RunConfig, rng: RngStream) -> Lattice:
    """Build the starting configuration; the random start is seeded from the ``INIT`` stream."""
    if config.init is InitMode.BLOCK:
        return init_block(config.dims, config.fraction_A)
    init_seed = int(rng.derive(StreamPurpose.INIT).integers(2**63))
    return init_random(config.dims, config.fraction_A, init_seed)


def _effective_lanes(requested: int, settings: Settings) -> int:
    if requested > settings.max_lanes:
        logger.warning(
            "Lane count capped by settings",
            extra={"requested": requested, "max_lanes": settings.max_lanes},
        )
        return settings.max_lanes
    return requested


def simulate(config: RunConfig, storage: RunStorage, *, settings: Settings | None = None) -> RunResult:
    """Run ``config`` and write every artefact through ``storage``.

    Parameters
    ----------
    config : RunConfig
        The run configuration.
    storage : RunStorage
        Destination of stats, trajectory, snapshots, final frame and metadata.
    settings : Settings | None
        Environment settings (default: :func:`get_settings`).

    Returns
    -------
    RunResult
        The final lattice and per-step stats.

    """
    settings = settings or get_settings()
    rng = RngStream(config.seed)
    lattice = initial_lattice(config, rng)
    model = InteractionModel(omega_AB=config.omega_AB)
    lanes = _effective_lanes(config.lanes, settings)

    stats_observer = StatsObserver(storage, rng, config.sample_interval, config.cluster_target)
    trajectory_observer = TrajectoryObserver(storage, config.dims, config.sample_interval)
    observers: list[Observer] = [stats_observer, trajectory_observer]
    if config.snapshot_interval:
        observers.append(SnapshotObserver(storage, config.render, config.image_format, config.snapshot_interval))

    started = time.perf_counter()
    result = run(config.engine, lattice, model, config.n_steps, observers, rng, lanes=lanes)
    wall_time = time.perf_counter() - started

    storage.write_text(FINAL_FRAME_FILE_NAME, format_frame(result.lattice) + "\n")
    totals = result.totals
    coverage = validate_dims(config.dims)
    storage.write_json(
        METADATA_FILE_NAME,
        {
            "config": config.model_dump(mode="json"),
            "coverage": {"valid": coverage.valid, "residues": list(coverage.residues)},
            "final": {
                "count_A": result.lattice.count_A,
                "count_B": result.lattice.count_B,
                "energy_kT": total_energy(result.lattice, model),
            },
            "kinetics": {
                "attempted": totals.attempted,
                "accepted": totals.accepted,
                "trivial_same_type": totals.trivial_same_type,
                "acceptance_ratio": totals.acceptance_ratio,
            },
            "samples": {"stats_rows": stats_observer.rows, "trajectory_frames": trajectory_observer.frames},
            "wall_time_s": wall_time,
        },
    )
    logger.info(
        "Run artefacts written",
        extra={"output_dir": str(storage.path_for("")), "frames": trajectory_observer.frames},
    )
    return result


def run_simulation(config: RunConfig, *, settings: Settings | None = None) -> int:
    """Run ``config`` into its output directory.

    Append handles are closed on every exit path, so a failing run leaves its partial stats and
    trajectory behind.

    Returns
    -------
    int
        Exit status, 0 on success.

    Raises
    ------
    ObserverError
        If writing a sample fails during the run.
    OSError
        If the output directory or the final artefacts cannot be written.

    """
    settings = settings or get_settings()
    output_dir = resolve_output_dir(config, settings)
    logger.info("Starting simulation", extra={"output_dir": str(output_dir), "seed": config.seed})
    with LocalRunStorage(output_dir) as storage:
        simulate(config, storage, settings=settings)
    return 0


def _time_engine(  # noqa: PLR0913
    config: RunConfig,
    engine: Engine,
    lanes: int,
    n_steps: int,
    repeats: int,
    model: InteractionModel,
) -> BenchEntry:
    rng = RngStream(config.seed)
    timings = []
    for repeat in range(repeats):
        lattice = initial_lattice(config, rng)
        run(engine, lattice, model, 1, [], rng.derive(repeat, 0), lanes=lanes)  # warmup
        started = time.perf_counter()
        run(engine, lattice, model, n_steps, [], rng.derive(repeat, 1), lanes=lanes)
        timings.append(time.perf_counter() - started)
    wall_time = statistics.median(timings)
    attempts = n_steps * config.dims.N
    entry = BenchEntry(
        engine=engine,
        lanes=lanes,
        L=config.L,
        M=config.M,
        n_steps=n_steps,
        wall_time_s=wall_time,
        attempts_per_second=attempts / max(wall_time, 1e-12),
    )
    logger.info(
        "Benchmark entry",
        extra={
            "engine": str(engine),
            "lanes": lanes,
            "dims": str(config.dims),
            "attempts_per_second": round(entry.attempts_per_second, 1),
        },
    )
    return entry


def run_benchmark(
    config: RunConfig,
    lane_counts: Sequence[int],
    *,
    repeats: int = DEFAULT_BENCH_REPEATS,
    n_steps: int | None = None,
) -> BenchReport:
    """Time sequential Kawasaki against MPKK at each lane count.

    Each timing is the median of ``repeats`` runs of ``n_steps`` steps, each preceded by one untimed
    warmup step. Throughput is attempted exchanges per second (``N`` per step for both engines).

    Parameters
    ----------
    config : RunConfig
        Run configuration; its dimensions must admit MPKK coverage.
    lane_counts : Sequence[int]
        MPKK lane counts to time.
    repeats : int
        Timed repeats per entry, at least 3.
    n_steps : int | None
        Steps per timed run (default: ``config.n_steps``).

    Returns
    -------
    BenchReport
        The entries and ``speedup`` = MPKK throughput at the largest lane count over Kawasaki throughput.

    Raises
    ------
    ConfigError
        If the dimensions lack coverage, no lane count is given, ``repeats < 3`` or ``n_steps < 1``.

    """
    steps = config.n_steps if n_steps is None else n_steps
    if steps < 1:
        msg = f"Benchmark needs at least one step, got {steps}"
        raise ConfigError(msg, "n_steps")
    if repeats < DEFAULT_BENCH_REPEATS:
        msg = f"Benchmark needs at least {DEFAULT_BENCH_REPEATS} repeats, got {repeats}"
        raise ConfigError(msg, "repeats")
    if not lane_counts or min(lane_counts) < 1:
        msg = f"Lane counts must be positive integers, got {list(lane_counts)}"
        raise ConfigError(msg, "lanes")
    if not validate_dims(config.dims).valid:
        msg = f"Benchmark lattice {config.dims} has no exact 7-site coverage"
        raise ConfigError(msg, "L")

    model = InteractionModel(omega_AB=config.omega_AB)
    kawasaki = _time_engine(config, Engine.KAWASAKI, 1, steps, repeats, model)
    mpkk = [_time_engine(config, Engine.MPKK, lanes, steps, repeats, model) for lanes in sorted(set(lane_counts))]
    speedup = mpkk[-1].attempts_per_second / kawasaki.attempts_per_second
    logger.info("Benchmark finished", extra={"dims": str(config.dims), "speedup": round(speedup, 3)})
    return BenchReport(entries=[kawasaki, *mpkk], speedup=speedup)


def resize_config(config: RunConfig, length: int, rows: int) -> RunConfig:
    """Return a validated copy of ``config`` with lattice size ``length x rows``."""
    data = config.model_dump()
    data.update(L=length, M=rows)
    return validate_config(data)


def _trajectory_frames(path: Path) -> Iterator[tuple[int, Lattice]]:
    """Yield ``(step, lattice)`` for every frame of a trajectory file."""
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        length, rows, interval = parse_trajectory_header(header)
        dims = LatticeDims(length, rows)
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            yield index * interval, parse_frame(line, dims, line_number=index + 2)


def _image_frames(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    frames = [p for p in path.glob("frame_*") if p.suffix.lower() in {".pgm", ".png"}]
    if not frames:
        msg = "No frame_<step>.pgm or .png snapshots found"
        raise ImageError(msg, str(path))
    return sorted(frames, key=frame_step)


def _recorded_geometry(frame_dir: Path) -> tuple[LatticeDims, int] | None:
    """Return the lattice size and render pitch recorded in the run metadata next to the snapshots."""
    text = LocalRunStorage(frame_dir).read_text(METADATA_FILE_NAME)
    if text is None:
        return None
    try:
        config = validate_config(json.loads(text)["config"])
    except (ValueError, KeyError, TypeError) as exc:
        logger.warning("Ignoring unreadable run metadata", extra={"path": str(frame_dir), "error": str(exc)})
        return None
    pitch = render_pitch(config.dims, config.render)
    return None if pitch is None else (config.dims, pitch)


def run_analyze(
    path: Path | str,
    mode: AnalysisMode,
    *,
    seed: int = 0,
    delta_col: int = DEFAULT_DELTA_COL,
    target: SiteType = SiteType.A,
    pitch: int | None = None,
) -> tuple[tuple[str, ...], list[tuple[int | float, ...]]]:
    """Recompute an observable for every frame of a trajectory or every snapshot image.

    Parameters
    ----------
    path : Path | str
        ``trajectory.txt`` for the lattice modes; a snapshot file or directory of snapshots for
        ``image_ffn``.
    mode : AnalysisMode
        Observable to compute.
    seed : int
        Root seed for the stochastic modes (``ffn`` draws from ``derive(FFN, step)``,
        ``image_ffn`` from ``derive(IMAGE_FFN, step)``).
    delta_col : int
        Similarity threshold for ``image_ffn``.
    target : SiteType
        Species clustered in ``clusters`` mode.
    pitch : int | None
        Site pitch of the snapshots for ``image_ffn``. By default it is taken from the
        ``metadata.json`` of the run that wrote them, for frames whose size matches; other frames use
        8-connected neighbours.

    Returns
    -------
    tuple[tuple[str, ...], list[tuple[int | float, ...]]]
        Column names and one row per frame, ``step`` first.

    Raises
    ------
    FrameFormatError
        If a trajectory line is malformed; the message carries the file line number.
    ImageError
        If snapshots are missing or unreadable.

    """
    path = Path(path)
    rng = RngStream(seed)
    rows: list[tuple[int | float, ...]] = []

    if mode is AnalysisMode.IMAGE_FFN:
        frames = _image_frames(path)
        geometry = None if pitch is not None else _recorded_geometry(frames[0].parent)
        for frame in frames:
            snapshot = read_image(frame)
            if geometry is not None:
                dims, recorded = geometry
                if (snapshot.width, snapshot.height) == (dims.L * recorded, dims.M * recorded):
                    snapshot.pitch = recorded
            stream = rng.derive(StreamPurpose.IMAGE_FFN, snapshot.step)
            value = image_ffn(snapshot, delta_col, stream, pitch)
            rows.append((snapshot.step, value))
        return ("step", "image_ffn"), rows

    if not path.is_file():
        msg = f"Trajectory file not found: {path}"
        raise AnalysisError(msg)

    for step, lattice in _trajectory_frames(path):
        if mode is AnalysisMode.CLUSTERS:
            stats = cluster_statistics(cluster_size_distribution(hoshen_kopelman(lattice, target), step))
            rows.append((step, stats.n_clusters, stats.average_size, stats.weight_average_size, stats.largest))
        elif mode is AnalysisMode.FFN:
            rows.append((step, fraction_first_neighbors(lattice, rng.derive(StreamPurpose.FFN, step))))
        elif mode is AnalysisMode.FFN_EXACT:
            rows.append((step, fraction_first_neighbors_exact(lattice)))
        else:
            msg = f"Unsupported analysis mode {mode}"
            raise AnalysisError(msg)

    if mode is AnalysisMode.CLUSTERS:
        return ("step", "n_clusters", "avg_cluster_size", "weight_avg_cluster_size", "largest_cluster"), rows
    return ("step", str(mode)), rows
