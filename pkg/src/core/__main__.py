"""Command-line interface for lipidmc."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

import click

from core.config import BENCH_FILE_NAME, DEFAULT_BENCH_REPEATS, DEFAULT_DELTA_COL
from core.entrypoint import AnalysisMode, resize_config, resolve_output_dir, run_analyze, run_benchmark, run_simulation
from core.lattice import SiteType
from core.logging_config import configure_logging
from core.mpkk import suggest_dims
from core.output_formats import OutputFormat, format_bench, format_series
from core.parser import parse_config, validate_config
from core.settings import get_settings
from core.utils.exceptions import LipidMCError
from storage.local import LocalRunStorage

if TYPE_CHECKING:
    from collections.abc import Callable

    from core.schemas import BenchReport, RunConfig

logger = logging.getLogger(__name__)


def _int_list(ctx: click.Context, param: click.Parameter, value: str) -> list[int]:  # noqa: ARG001
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        msg = f"expected comma-separated integers, got {value!r}"
        raise click.BadParameter(msg) from None
    if not values or min(values) < 1:
        msg = f"expected positive integers, got {value!r}"
        raise click.BadParameter(msg)
    return values


def _size_list(ctx: click.Context, param: click.Parameter, value: str | None) -> list[tuple[int, int]]:  # noqa: ARG001
    if not value:
        return []
    sizes = []
    for part in value.split(","):
        length, sep, rows = part.strip().lower().partition("x")
        if not sep or not length.isdigit() or not rows.isdigit():
            msg = f"expected sizes like '9x7,100x98', got {value!r}"
            raise click.BadParameter(msg)
        sizes.append((int(length), int(rows)))
    return sizes


def _load_config(path: Path) -> RunConfig:
    return parse_config(path.read_text(encoding="utf-8"))


def _with_overrides(config: RunConfig, **overrides: object) -> RunConfig:
    changed = {k: v for k, v in overrides.items() if v is not None}
    if not changed:
        return config
    logger.warning("Command-line options override the configuration file", extra={"overrides": sorted(changed)})
    data = config.model_dump()
    data.update(changed)
    return validate_config(data)


def _guarded(fn: Callable[[], None]) -> None:
    """Run ``fn``, turning library and I/O errors into a clean CLI failure (exit status 1)."""
    try:
        fn()
    except (LipidMCError, OSError) as exc:
        logger.debug("Command failed", exc_info=True)
        raise click.ClickException(str(exc)) from exc


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level.")
def cli(verbose: bool) -> None:  # noqa: FBT001
    """Lattice Monte Carlo of binary lipid mixtures."""
    settings = get_settings()
    configure_logging("DEBUG" if verbose else settings.log_level, settings.log_format)


@cli.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--lanes", type=click.IntRange(min=1), default=None, help="MPKK worker lanes.")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
def run_command(config_path: Path, lanes: int | None, output_dir: Path | None) -> None:
    """Run the simulation described by CONFIG_PATH."""

    def _run() -> None:
        config = _with_overrides(_load_config(config_path), lanes=lanes, output_dir=output_dir)
        run_simulation(config)
        click.echo(str(resolve_output_dir(config)))

    _guarded(_run)


@cli.command("bench")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--lanes", "lane_counts", default="1,2,4,8", callback=_int_list, show_default=True)
@click.option("--repeats", type=click.IntRange(min=DEFAULT_BENCH_REPEATS), default=DEFAULT_BENCH_REPEATS)
@click.option("--steps", type=click.IntRange(min=1), default=None, help="Timed steps (default: n_steps).")
@click.option("--sizes", default=None, callback=_size_list, help="Lattice sizes, e.g. 9x7,100x98.")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
def bench_command(  # noqa: PLR0913
    config_path: Path,
    lane_counts: list[int],
    repeats: int,
    steps: int | None,
    sizes: list[tuple[int, int]],
    output_dir: Path | None,
) -> None:
    """Time sequential Kawasaki against MPKK at each lane count."""

    def _bench() -> None:
        config = _with_overrides(_load_config(config_path), output_dir=output_dir)
        configs = [resize_config(config, length, rows) for length, rows in sizes] or [config]
        reports: list[BenchReport] = [
            run_benchmark(c, lane_counts, repeats=repeats, n_steps=steps) for c in configs
        ]
        text = format_bench(reports)
        with LocalRunStorage(resolve_output_dir(config)) as storage:
            storage.write_text(BENCH_FILE_NAME, text)
        click.echo(text, nl=False)

    _guarded(_bench)


@cli.command("analyze")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice([m.value for m in AnalysisMode]), required=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, show_default=True)
@click.option("--delta-col", type=click.IntRange(min=0, max=255), default=DEFAULT_DELTA_COL, show_default=True)
@click.option("--target", type=click.Choice(["A", "B"]), default="A", show_default=True)
@click.option(
    "--pitch",
    type=click.IntRange(min=2),
    default=None,
    help="Site pitch of the snapshots in pixels (default: from the run metadata).",
)
@click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), default="csv")
def analyze_command(  # noqa: PLR0913
    path: Path,
    mode: str,
    seed: int,
    delta_col: int,
    target: str,
    pitch: int | None,
    output_format: str,
) -> None:
    """Recompute an observable per frame of a trajectory or snapshot directory."""

    def _analyze() -> None:
        header, rows = run_analyze(
            path,
            AnalysisMode(mode),
            seed=seed,
            delta_col=delta_col,
            target=SiteType[target],
            pitch=pitch,
        )
        click.echo(format_series(header, rows, OutputFormat(output_format)), nl=False)

    _guarded(_analyze)


@cli.command("suggest-dims")
@click.argument("length", type=click.IntRange(min=1))
@click.argument("rows", type=click.IntRange(min=1))
def suggest_dims_command(length: int, rows: int) -> None:
    """Print the nearest lattice size with exact 7-site domain coverage."""
    dims = suggest_dims(length, rows)
    click.echo(f"{dims.L} {dims.M}")


def main() -> None:
    """Run the ``lipidmc`` command."""
    cli()


if __name__ == "__main__":
    main()
