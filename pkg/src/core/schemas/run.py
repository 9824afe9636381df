"""Schemas for run, render and benchmark configuration."""

from __future__ import annotations

from enum import StrEnum
from pathlib import Path  # noqa: TC003 (typing-only-standard-library-import) needed at runtime by pydantic
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import (
    DEFAULT_DELTA_COL,
    DEFAULT_LANES,
    DEFAULT_SAMPLE_INTERVAL,
    DEFAULT_SNAPSHOT_INTERVAL,
    DEFAULT_SUPERSAMPLE,
)
from core.lattice import LatticeDims, SiteType


class Engine(StrEnum):
    """Kinetics engine selector."""

    KAWASAKI = "kawasaki"
    MPKK = "mpkk"
    NONLOCAL = "nonlocal"


class InitMode(StrEnum):
    """Starting configuration."""

    RANDOM = "random"
    BLOCK = "block"


class ImageFormat(StrEnum):
    """Snapshot file formats."""

    PGM = "pgm"
    PNG = "png"


class RenderConfig(BaseModel):
    """Snapshot rendering parameters.

    Attributes
    ----------
    target_width : int | None
        Output width in pixels; ``None`` renders at two pixels per lattice column.
    supersample : int
        Pixels per site along each axis before downscaling.
    delta_col : int
        Intensity threshold under which two pixels count as similar.

    """

    model_config = ConfigDict(frozen=True)

    target_width: int | None = Field(default=None, ge=1)
    supersample: int = Field(default=DEFAULT_SUPERSAMPLE, ge=1)
    delta_col: int = Field(default=DEFAULT_DELTA_COL, ge=0, le=255)


class RunConfig(BaseModel):  # pylint: disable=too-many-instance-attributes
    """Fully resolved run configuration.

    Attributes
    ----------
    L, M : int
        Lattice row length and row count.
    fraction_A : float
        Fraction of A lipids.
    omega_AB : float
        Unlike-contact energy in kT.
    n_steps : int
        Steps to perform (one step is ``N`` attempted exchanges).
    seed : int
        Root seed of every random stream in the run.
    engine : Engine
        Kinetics engine (default: ``mpkk``).
    init : InitMode
        Random or block start (default: ``random``).
    sample_interval : int
        Steps between stats and trajectory samples (default: 100).
    snapshot_interval : int
        Steps between snapshots; 0 disables them (default: 0).
    cluster_target : SiteType
        Species whose clusters are reported (default: A).
    lanes : int
        Worker lanes for MPKK sweeps (default: 1).
    render : RenderConfig
        Snapshot rendering parameters.
    image_format : ImageFormat
        Snapshot file format (default: ``pgm``).
    output_dir : Path | None
        Output directory; ``None`` resolves to ``<output_root>/run``.

    """

    model_config = ConfigDict(frozen=True)

    L: int = Field(ge=3)
    M: int = Field(ge=2)
    fraction_A: float = Field(ge=0.0, le=1.0)  # noqa: N815
    omega_AB: float = Field(allow_inf_nan=False)  # noqa: N815
    n_steps: int = Field(ge=0)
    seed: int = Field(ge=0, lt=2**64)
    engine: Engine = Engine.MPKK
    init: InitMode = InitMode.RANDOM
    sample_interval: int = Field(default=DEFAULT_SAMPLE_INTERVAL, ge=1)
    snapshot_interval: int = Field(default=DEFAULT_SNAPSHOT_INTERVAL, ge=0)
    cluster_target: SiteType = SiteType.A
    lanes: int = Field(default=DEFAULT_LANES, ge=1)
    render: RenderConfig = Field(default_factory=RenderConfig)
    image_format: ImageFormat = ImageFormat.PGM
    output_dir: Path | None = None

    @model_validator(mode="after")
    def _check_dims(self) -> Self:
        dims = LatticeDims(self.L, self.M)
        if self.engine is Engine.MPKK:
            from core.mpkk import suggest_dims, validate_dims  # noqa: PLC0415
            from core.utils.exceptions import CoverageError  # noqa: PLC0415

            if not validate_dims(dims).valid:
                suggestion = suggest_dims(self.L, self.M)
                raise CoverageError(self.L, self.M, (suggestion.L, suggestion.M))
        return self

    @property
    def dims(self) -> LatticeDims:
        """Lattice dimensions."""
        return LatticeDims(self.L, self.M)


class BenchEntry(BaseModel):
    """Median timing of one engine at one lane count."""

    engine: Engine
    lanes: int
    L: int
    M: int
    n_steps: int
    wall_time_s: float = Field(ge=0.0)
    attempts_per_second: float = Field(gt=0.0)


class BenchReport(BaseModel):
    """Benchmark result for one lattice size."""

    entries: list[BenchEntry]
    speedup: float = Field(gt=0.0)

    @property
    def kawasaki(self) -> BenchEntry:
        """The sequential reference entry."""
        return next(e for e in self.entries if e.engine is Engine.KAWASAKI)

    @property
    def mpkk(self) -> list[BenchEntry]:
        """MPKK entries, ordered by lane count."""
        return sorted((e for e in self.entries if e.engine is Engine.MPKK), key=lambda e: e.lanes)
