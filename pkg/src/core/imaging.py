"""Snapshot rendering and image-domain fraction of first neighbours.

A snapshot is produced in three stages:

1. Each site becomes an ``s x s`` block (``s`` = supersample factor), white for A and black for B.
2. Lattice row ``y`` is shifted left by ``y * s // 2`` pixels, half a site per row, which turns the
   square raster into the triangular geometry. A row continues helically past its right end into the
   next row, and the last rows wrap to the first sites, so every pair of touching blocks is a pair of
   lattice neighbours.
3. The canvas is reduced to the target width with an area-weighted box filter, keeping the aspect
   ratio. Pixels straddling a cluster boundary become gray.

The box filter preserves the canvas mean up to the final rounding to 8 bits. Where rows meet, about
half a site per row is cut off or shown twice, so the canvas mean tracks the composition closely but
not exactly.

The default target width is two pixels per site. Every output pixel then lies inside one site, the
image stays binary and :func:`image_ffn` can use the hexagonal stencil at that pitch.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import png

from core.config import DEFAULT_PIXELS_PER_SITE, SNAPSHOT_FILE_TEMPLATE
from core.lattice import SiteType
from core.schemas.run import ImageFormat, RenderConfig
from core.utils.exceptions import AnalysisError, ImageError

if TYPE_CHECKING:
    from core.lattice import Lattice, LatticeDims
    from core.rng import RngStream

logger = logging.getLogger(__name__)

WHITE = 255
BLACK = 0

# 8-connected raster neighbourhood as (dy, dx), used when the site pitch is unknown
_RASTER_OFFSETS = np.array(
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
    dtype=np.int64,
)

_PGM_HEADER = re.compile(rb"\AP5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")
_FRAME_STEP = re.compile(r"^frame_(\d+)$")


@dataclass
class Snapshot:
    """An 8-bit grayscale raster.

    Attributes
    ----------
    pixels : np.ndarray
        ``(height, width)`` ``uint8`` array, row-major.
    step : int
        Simulation step the snapshot was taken at.
    pitch : int | None
        Site pitch in pixels when every pixel lies inside one lattice site, else ``None``.

    """

    pixels: np.ndarray
    step: int = 0
    pitch: int | None = None

    def __post_init__(self) -> None:
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.size == 0:  # noqa: PLR2004
            msg = f"Snapshot pixels must be a nonempty 2-D array, got shape {self.pixels.shape}"
            raise ImageError(msg)

    @property
    def width(self) -> int:
        """Width in pixels."""
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        """Height in pixels."""
        return int(self.pixels.shape[0])


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """Return the ``(n_out, n_in)`` area-overlap matrix; each row averages one output span."""
    scale = n_in / n_out
    lo = np.arange(n_out)[:, None] * scale
    hi = lo + scale
    left = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, left + 1) - np.maximum(lo, left), 0.0, None)
    return overlap / scale


def site_map(dims: LatticeDims, pitch: int) -> np.ndarray:
    """Return the flat site index drawn at each pixel of an ``(M * pitch, L * pitch)`` sheared raster.

    Pixel ``(Y, X)`` in lattice row ``y = Y // pitch`` shows site
    ``(y * L + (X + y * pitch // 2) // pitch) mod N``.
    """
    ys = np.arange(dims.M * pitch)[:, None] // pitch
    xs = np.arange(dims.L * pitch)[None, :]
    return (ys * dims.L + (xs + (ys * pitch) // 2) // pitch) % dims.N


def sheared_canvas(lattice: Lattice, supersample: int) -> np.ndarray:
    """Return the supersampled, sheared ``(M * s, L * s)`` float canvas."""
    covered = lattice.sites[site_map(lattice.dims, supersample)]
    return np.where(covered == SiteType.A, float(WHITE), float(BLACK))


def output_width(dims: LatticeDims, config: RenderConfig) -> int:
    """Return ``target_width``, or two pixels per lattice column (one with ``supersample = 1``)."""
    return config.target_width or dims.L * min(config.supersample, DEFAULT_PIXELS_PER_SITE)


def render_pitch(dims: LatticeDims, config: RenderConfig | None = None) -> int | None:
    """Return the output site pitch of ``config`` if the render is exact, else ``None``.

    A render is exact when the box filter merges whole ``f x f`` pixel blocks that never straddle a
    site, so the output is binary. Only even pitches qualify, because the shear and the hexagonal
    stencil both step half a site.
    """
    config = config or RenderConfig()
    s = config.supersample
    out_w = output_width(dims, config)
    if (dims.L * s) % out_w:
        return None
    factor = dims.L * s // out_w
    if s % factor:
        return None
    pitch = s // factor
    return pitch if pitch % 2 == 0 else None


def render_snapshot(lattice: Lattice, config: RenderConfig | None = None, step: int = 0) -> Snapshot:
    """Render ``lattice`` to a grayscale snapshot.

    Parameters
    ----------
    lattice : Lattice
        Configuration to draw.
    config : RenderConfig | None
        Rendering parameters (default: :class:`RenderConfig` defaults).
    step : int
        Step recorded on the snapshot.

    Returns
    -------
    Snapshot
        The rendered image, carrying its site pitch when the render is exact.

    Raises
    ------
    ImageError
        If ``target_width`` exceeds the sheared canvas width (no upscaling).

    """
    config = config or RenderConfig()
    canvas = sheared_canvas(lattice, config.supersample)
    canvas_h, canvas_w = canvas.shape
    out_w = output_width(lattice.dims, config)
    if out_w > canvas_w:
        msg = f"target_width {out_w} exceeds the sheared canvas width {canvas_w}"
        raise ImageError(msg)
    out_h = max(1, round(canvas_h * out_w / canvas_w))

    reduced = _box_weights(canvas_h, out_h) @ canvas @ _box_weights(canvas_w, out_w).T
    pixels = np.clip(np.rint(reduced), BLACK, WHITE).astype(np.uint8)
    return Snapshot(pixels=pixels, step=step, pitch=render_pitch(lattice.dims, config))


def hex_offsets(pitch: int) -> np.ndarray:
    """Return the six ``(dy, dx)`` pixel offsets to the neighbouring sites at site pitch ``pitch``.

    On a render with that pitch the offsets land on sites ``i +- 1``, ``i +- L`` and
    ``i +- (L + 1)`` from every pixel of site ``i``.
    """
    half = pitch // 2
    return np.array(
        [(0, pitch), (0, -pitch), (pitch, -half), (pitch, half), (-pitch, -half), (-pitch, half)],
        dtype=np.int64,
    )


def _valid_neighbor_mask(height: int, width: int, offsets: np.ndarray) -> np.ndarray:
    ys = np.arange(height)[:, None, None] + offsets[None, None, :, 0]
    xs = np.arange(width)[None, :, None] + offsets[None, None, :, 1]
    return (ys >= 0) & (ys < height) & (xs >= 0) & (xs < width)


def image_ffn(snapshot: Snapshot, delta_col: int, rng: RngStream, pitch: int | None = None) -> float:
    """Image-domain fraction of first neighbours.

    For every pixel one in-bounds neighbour is drawn uniformly; the pair is similar when their
    intensities differ by less than ``delta_col``. With a site pitch (``pitch``, else
    ``snapshot.pitch``) the neighbours are the six pixels of :func:`hex_offsets`, one per lattice
    direction. Without one they are the 8-connected pixels. Pixels with no in-bounds neighbour are
    left out.

    Raises
    ------
    AnalysisError
        If the pitch is not a positive even number or no pixel has an in-bounds neighbour.

    """
    pitch = pitch if pitch is not None else snapshot.pitch
    if pitch is None:
        offsets = _RASTER_OFFSETS
    elif pitch < 2 or pitch % 2:  # noqa: PLR2004
        msg = f"Site pitch must be a positive even number of pixels, got {pitch}"
        raise AnalysisError(msg)
    else:
        offsets = hex_offsets(pitch)

    height, width = snapshot.height, snapshot.width
    valid = _valid_neighbor_mask(height, width, offsets)
    n_valid = valid.sum(axis=2)
    sampled = n_valid > 0
    n_sampled = int(sampled.sum())
    if not n_sampled:
        msg = f"No pixel of a {width}x{height} image has an in-bounds neighbour"
        raise AnalysisError(msg)

    rank = np.floor(rng.random((height, width)) * n_valid).astype(np.int64)
    # index of the (rank+1)-th valid offset
    choice = np.argmax(np.cumsum(valid, axis=2) > rank[..., None], axis=2)

    ys = np.arange(height)[:, None] + np.where(sampled, offsets[choice, 0], 0)
    xs = np.arange(width)[None, :] + np.where(sampled, offsets[choice, 1], 0)
    pixels = snapshot.pixels.astype(np.int16)
    similar = (np.abs(pixels - pixels[ys, xs]) < delta_col) & sampled
    return float(np.count_nonzero(similar)) / n_sampled


def snapshot_file_name(step: int, fmt: ImageFormat) -> str:
    """Return ``frame_<step>.<ext>``."""
    return SNAPSHOT_FILE_TEMPLATE.format(step=step, ext=fmt.value)

def encode_pgm(snapshot: Snapshot) -> bytes:
    """Encode as binary PGM (P5, maxval 255)."""
    header = f"P5\n{snapshot.width} {snapshot.height}\n255\n".encode("ascii")
    return header + snapshot.pixels.tobytes()


def decode_pgm(data: bytes, path: str | None = None) -> np.ndarray:
    """Decode a binary PGM with maxval 255."""
    match = _PGM_HEADER.match(data)
    if match is None:
        msg = "Not a binary PGM (P5) file"
        raise ImageError(msg, path)
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != WHITE:
        msg = f"Unsupported PGM maxval {maxval}"
        raise ImageError(msg, path)
    body = data[match.end() : match.end() + width * height]
    if len(body) != width * height:
        msg = f"Truncated PGM body ({len(body)} of {width * height} bytes)"
        raise ImageError(msg, path)
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def encode_png(snapshot: Snapshot) -> bytes:
    """Encode as 8-bit grayscale PNG."""
    buffer = io.BytesIO()
    writer = png.Writer(width=snapshot.width, height=snapshot.height, greyscale=True, bitdepth=8)
    writer.write(buffer, snapshot.pixels.tolist())
    return buffer.getvalue()


def encode_image(snapshot: Snapshot, fmt: ImageFormat = ImageFormat.PGM) -> bytes:
    """Encode ``snapshot`` losslessly in ``fmt``."""
    return encode_pgm(snapshot) if fmt is ImageFormat.PGM else encode_png(snapshot)


def write_image(snapshot: Snapshot, path: Path | str, fmt: ImageFormat = ImageFormat.PGM) -> Path:
    """Write ``snapshot`` losslessly as PGM or PNG.

    Raises
    ------
    ImageError
        On I/O failure, with the path in the message.

    """
    path = Path(path)
    try:
        path.write_bytes(encode_image(snapshot, fmt))
    except OSError as exc:
        msg = f"Cannot write snapshot ({exc.strerror or exc})"
        raise ImageError(msg, str(path)) from exc
    logger.debug("Snapshot written", extra={"path": str(path), "step": snapshot.step})
    return path


def frame_step(path: Path | str) -> int:
    """Return the step of a ``frame_<step>.<ext>`` file name, 0 for other names."""
    match = _FRAME_STEP.match(Path(path).stem)
    return int(match.group(1)) if match else 0


def read_image(path: Path | str) -> Snapshot:
    """Read a PGM or PNG written by :func:`write_image`.

    The step is taken from a ``frame_<step>`` file stem when present, else 0.
    """
    path = Path(path)
    step = frame_step(path)
    try:
        if path.suffix.lower() == ".png":
            width, height, rows, info = png.Reader(filename=str(path)).asDirect()
            if not info.get("greyscale") or info.get("alpha") or info.get("bitdepth") != 8:  # noqa: PLR2004
                msg = "Only 8-bit grayscale PNG snapshots are supported"
                raise ImageError(msg, str(path))
            pixels = np.array([np.asarray(row, dtype=np.uint8) for row in rows], dtype=np.uint8)
            pixels = pixels.reshape(height, width)
        else:
            pixels = decode_pgm(path.read_bytes(), str(path))
    except OSError as exc:
        if isinstance(exc, ImageError):
            raise
        msg = f"Cannot read snapshot ({exc.strerror or exc})"
        raise ImageError(msg, str(path)) from exc
    except png.Error as exc:
        msg = f"Invalid PNG ({exc})"
        raise ImageError(msg, str(path)) from exc
    return Snapshot(pixels=pixels, step=step)
