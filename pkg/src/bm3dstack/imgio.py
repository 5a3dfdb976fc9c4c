"""Grayscale image and frame-stack I/O.

Frames are real-valued 2D numpy arrays throughout the library;
quantization happens only on write.  PGM (P5, maxval 255 or 65535) is
the bit-exact reference format; PNG (8/16-bit gray) goes through Pillow.
"""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

MIN_FRAME_SIDE = 16


class ImageFormatError(ValueError):
    """Input file is not a readable single-channel raster."""


def _detect_format(path: Path, explicit: str | None) -> str:
    if explicit is not None:
        return explicit.lower()
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("pgm", "png"):
        return suffix
    raise ImageFormatError(f"cannot infer format from {path.name!r}; pass format=")


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # Header: magic, width, height, maxval; comments allowed between tokens.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if m is None:
            raise ImageFormatError(f"{path}: truncated PGM header")
        pos += m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P5":
        raise ImageFormatError(f"{path}: only binary (P5) PGM is supported")
    pos += 1  # exactly one whitespace byte separates the header from the raster
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    raster = data[pos:pos + count * dtype.itemsize]
    if len(raster) < count * dtype.itemsize:
        raise ImageFormatError(f"{path}: raster shorter than header promises")
    values = np.frombuffer(raster, dtype=dtype, count=count)
    return values.reshape(height, width).astype(np.float64)


def _write_pgm(frame: np.ndarray, path: Path, maxval: int) -> None:
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{frame.shape[1]} {frame.shape[0]}\n{maxval}\n".encode()
    path.write_bytes(header + frame.astype(dtype).tobytes())


def read_image(path: str | os.PathLike, format: str | None = None) -> np.ndarray:
    """Read a single-channel raster as a float64 frame."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    fmt = _detect_format(path, format)
    if fmt == "pgm":
        return _read_pgm(path)
    if fmt == "png":
        with Image.open(path) as img:
            if img.mode in ("L", "I", "I;16", "I;16B"):
                return np.asarray(img, dtype=np.float64)
            raise ImageFormatError(
                f"{path}: single-channel required, got mode {img.mode!r}")
    raise ImageFormatError(f"unsupported format {fmt!r}")


def write_image(frame: np.ndarray, path: str | os.PathLike,
                format: str | None = None, maxval: int = 255) -> None:
    """Quantize a frame (round, then clamp to [0, maxval]) and write it."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError("frames are 2D arrays")
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    path = Path(path)
    fmt = _detect_format(path, format)
    quantized = np.clip(np.rint(frame), 0, maxval)
    if fmt == "pgm":
        _write_pgm(quantized, path, maxval)
    elif fmt == "png":
        if maxval > 255:
            Image.fromarray(quantized.astype(np.uint16), mode="I;16").save(path)
        else:
            Image.fromarray(quantized.astype(np.uint8), mode="L").save(path)
    else:
        raise ImageFormatError(f"unsupported format {fmt!r}")


def validate_frame(frame: np.ndarray) -> np.ndarray:
    """Check the frame invariants used by the denoising pipeline."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError("frames are 2D arrays")
    if frame.shape[0] < MIN_FRAME_SIDE or frame.shape[1] < MIN_FRAME_SIDE:
        raise ValueError(f"frame must be at least {MIN_FRAME_SIDE} px per side")
    if not np.all(np.isfinite(frame)):
        raise ValueError("frame contains NaN or Inf")
    return frame


def as_stack(frames: Sequence[np.ndarray]) -> np.ndarray:
    """Stack frames of identical dimensions into a (L, H, W) array."""
    if len(frames) == 0:
        raise ValueError("empty frame list")
    shapes = {f.shape for f in map(np.asarray, frames)}
    if len(shapes) != 1:
        raise ValueError(f"frame dimensions differ: {sorted(shapes)}")
    return np.stack([validate_frame(f) for f in frames])


def load_stack(source: str | os.PathLike | Iterable[str | os.PathLike]) -> np.ndarray:
    """Load a frame stack from a directory or an explicit file list.

    Files are ordered lexicographically by name so repeated runs see the
    same stack.
    """
    if isinstance(source, (str, os.PathLike)):
        root = Path(source)
        if root.is_dir():
            paths = sorted(p for p in root.iterdir()
                           if p.suffix.lower() in (".pgm", ".png"))
        else:
            paths = [root]
    else:
        paths = sorted(Path(p) for p in source)
    if not paths:
        raise ValueError(f"no frames found in {source!r}")
    return as_stack([read_image(p) for p in paths])
