"""Text renderers for run statistics, trajectories, benchmarks and analysis series.

Every renderer is a pure function of its inputs, so equal runs produce byte-identical files. CSV
output uses ``,`` separators, ``.`` decimals and ``\\n`` line endings.
"""

from __future__ import annotations

import csv
import io
import json
import re
from enum import StrEnum
from typing import TYPE_CHECKING

from core.config import STATS_COLUMNS
from core.utils.exceptions import FrameFormatError

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from core.analysis import ClusterStatistics
    from core.lattice import LatticeDims
    from core.schemas import BenchReport

BENCH_COLUMNS = ("L", "M", "engine", "lanes", "n_steps", "wall_time_s", "attempts_per_second", "speedup")

_TRAJECTORY_HEADER = re.compile(r"^#\s*L=(\d+)\s+M=(\d+)\s+sample_interval=(\d+)\s*$")


class OutputFormat(StrEnum):
    """Supported formats for ``analyze`` output."""

    CSV = "csv"
    JSON = "json"


def format_value(value: float | int | str) -> str:
    """Render one cell; floats use 12 significant digits."""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def format_csv(header: Sequence[str], rows: Iterable[Sequence[float | int | str]]) -> str:
    """Render a header row and data rows as CSV text."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([format_value(v) for v in row] for row in rows)
    return buffer.getvalue()


def stats_header() -> str:
    """Return the ``stats.csv`` header line (no newline)."""
    return ",".join(STATS_COLUMNS)


def format_stats_row(
    step: int,
    energy: float,
    ffn_stochastic: float,
    ffn_exact: float,
    clusters: ClusterStatistics,
) -> str:
    """Return one ``stats.csv`` data line (no newline), in :data:`STATS_COLUMNS` order."""
    values = (
        step,
        float(energy),
        ffn_stochastic,
        ffn_exact,
        clusters.n_clusters,
        clusters.average_size,
        clusters.weight_average_size,
        clusters.largest,
    )
    return ",".join(format_value(v) for v in values)


def trajectory_header(dims: LatticeDims, sample_interval: int) -> str:
    """Return the ``#`` header line of ``trajectory.txt``."""
    return f"# L={dims.L} M={dims.M} sample_interval={sample_interval}"


def parse_trajectory_header(line: str) -> tuple[int, int, int]:
    """Parse a header written by :func:`trajectory_header`.

    Returns
    -------
    tuple[int, int, int]
        ``(L, M, sample_interval)``.

    Raises
    ------
    FrameFormatError
        If the line is not a trajectory header.

    """
    match = _TRAJECTORY_HEADER.match(line.strip())
    if match is None:
        msg = "expected header '# L=<int> M=<int> sample_interval=<int>'"
        raise FrameFormatError(msg, 1)
    length, rows, interval = (int(g) for g in match.groups())
    return length, rows, interval


def format_bench(reports: Sequence[BenchReport]) -> str:
    """Render benchmark reports as ``bench.csv`` text, one row per engine and lane count."""
    rows = [
        (e.L, e.M, str(e.engine), e.lanes, e.n_steps, e.wall_time_s, e.attempts_per_second, report.speedup)
        for report in reports
        for e in report.entries
    ]
    return format_csv(BENCH_COLUMNS, rows)


def format_series(
    header: Sequence[str],
    rows: Sequence[Sequence[float | int | str]],
    output_format: OutputFormat = OutputFormat.CSV,
) -> str:
    """Produce an analysis series in the requested format.

    Parameters
    ----------
    header : Sequence[str]
        Column names.
    rows : Sequence[Sequence[float | int | str]]
        One row per frame.
    output_format : OutputFormat
        ``csv`` (default) or ``json`` (a list of objects keyed by column).

    Returns
    -------
    str
        Formatted output string.

    """
    if output_format == OutputFormat.JSON:
        records = [dict(zip(header, row, strict=True)) for row in rows]
        return json.dumps(records, indent=2) + "\n"
    return format_csv(header, rows)
