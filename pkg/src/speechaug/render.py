"""Spectrogram image rendering: grayscale PGM (binary P5) and PNG.

Images put time on the horizontal axis and mel frequency on the vertical,
with frequency increasing upward (image row 0 is the highest channel).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import MelSpectrogram
from .errors import BadParamsError

IMAGE_FORMATS = ("pgm", "png")


@dataclass(frozen=True)
class ImageSpec:
    format: str = "pgm"
    gamma: float = 1.0
    db_range: tuple[float, float] | None = None  # None selects the grid min/max

    def __post_init__(self):
        if self.format not in IMAGE_FORMATS:
            raise BadParamsError(f"format must be one of {IMAGE_FORMATS}")
        if self.gamma <= 0:
            raise BadParamsError("gamma must be positive")
        if self.db_range is not None and self.db_range[0] >= self.db_range[1]:
            raise BadParamsError("db_range must satisfy lo < hi")


def spectrogram_pixels(spec: MelSpectrogram, image_spec: ImageSpec = ImageSpec()) -> np.ndarray:
    """Map a spectrogram to a (n_mels, n_frames) uint8 pixel grid.

    pixel = round(255 * clamp01((v - lo) / (hi - lo)) ** gamma).  A
    degenerate automatic range (constant grid) yields uniform mid-gray 128.
    """
    if spec.n_frames < 1:
        raise BadParamsError("cannot render a spectrogram with zero frames")
    grid = spec.values
    if image_spec.db_range is None:
        lo, hi = float(grid.min()), float(grid.max())
        if lo == hi:
            return np.full((spec.n_mels, spec.n_frames), 128, dtype=np.uint8)
    else:
        lo, hi = image_spec.db_range
    unit = np.clip((grid - lo) / (hi - lo), 0.0, 1.0)
    if image_spec.gamma != 1.0:
        unit = unit**image_spec.gamma
    pixels = np.rint(255.0 * unit).astype(np.uint8)
    return pixels.T[::-1]  # row 0 = highest mel channel


def pgm_bytes(pixels: np.ndarray) -> bytes:
    height, width = pixels.shape
    return b"P5\n%d %d\n255\n" % (width, height) + pixels.tobytes()


def png_bytes(pixels: np.ndarray) -> bytes:
    """Minimal 8-bit grayscale non-interlaced PNG encoding."""
    height, width = pixels.shape

    def chunk(tag: bytes, body: bytes) -> bytes:
        raw = tag + body
        return struct.pack(">I", len(body)) + raw + struct.pack(">I", zlib.crc32(raw))

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    raster = b"".join(b"\x00" + pixels[y].tobytes() for y in range(height))
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raster, 9))
        + chunk(b"IEND", b"")
    )


def image_bytes(spec: MelSpectrogram, image_spec: ImageSpec = ImageSpec()) -> bytes:
    pixels = spectrogram_pixels(spec, image_spec)
    if image_spec.format == "png":
        return png_bytes(pixels)
    return pgm_bytes(pixels)


def render_spectrogram(
    spec: MelSpectrogram, image_spec: ImageSpec, path: str | Path
) -> None:
    """Write the rendered image to ``path``."""
    with open(path, "wb") as fh:
        fh.write(image_bytes(spec, image_spec))
