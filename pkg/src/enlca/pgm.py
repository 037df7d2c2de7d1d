"""Minimal binary PGM (P5) writer for correlation-map heatmaps.

Values are min-max normalized per image to the 0..255 range; a constant
map renders as all zeros. No image library involved.
"""

from __future__ import annotations

from pathlib import Path
from typing import IO, Union

import numpy as np

from .matrices import ShapeError, as_vector

__all__ = ["export_correlation_pgm", "read_pgm"]


def export_correlation_pgm(map_values, height: int, width: int, dest: Union[str, Path, IO[bytes]]) -> None:
    """Write a length-(height*width) map as an 8-bit grayscale P5 image."""
    values = as_vector(map_values, "correlation map")
    if height < 1 or width < 1 or height * width != values.size:
        raise ShapeError(
            f"map of length {values.size} does not reshape to {height}x{width}"
        )
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) * (255.0 / (hi - lo)))
        pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    else:
        pixels = np.zeros(values.size, dtype=np.uint8)
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    owned = isinstance(dest, (str, Path))
    fp = open(dest, "wb") if owned else dest
    try:
        fp.write(header)
        fp.write(pixels.tobytes())
    finally:
        if owned:
            fp.close()


def read_pgm(src: Union[str, Path, IO[bytes]]) -> np.ndarray:
    """Parse a binary P5 image back into a height x width uint8 array."""
    owned = isinstance(src, (str, Path))
    fp = open(src, "rb") if owned else src
    try:
        blob = fp.read()
    finally:
        if owned:
            fp.close()
    parts = blob.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError("not a binary P5 image")
    width, height = (int(tok) for tok in parts[1].split())
    if parts[2] != b"255":
        raise ValueError(f"unsupported maxval {parts[2]!r}")
    payload = parts[3]
    if len(payload) != width * height:
        raise ValueError(f"payload holds {len(payload)} bytes, expected {width * height}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
