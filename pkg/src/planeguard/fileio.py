"""Image and file I/O: binary PGM, PNG input, atomic writes.

PGM (P5, maxval 255) is the canonical on-disk format for every image
this package writes. PNG is accepted on input for convenience; color
inputs are collapsed to integer Rec.601 luminance.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .bitplanes import as_gray, to_luminance
from .errors import DataFormatError

PGM_MAXVAL = 255


def atomic_write_bytes(path, data: bytes) -> None:
    """Write a file via a temp sibling and atomic rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) file with maxval 255."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c.isspace():
                pos += 1
            elif c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataFormatError(f"{path}: truncated PGM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise DataFormatError(f"{path}: not a binary PGM (magic {magic!r}, expected P5)")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise DataFormatError(f"{path}: malformed PGM header: {exc}") from exc
    if width <= 0 or height <= 0:
        raise DataFormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if maxval != PGM_MAXVAL:
        raise DataFormatError(f"{path}: only 8-bit PGM supported (maxval {maxval}, expected {PGM_MAXVAL})")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise DataFormatError(f"{path}: PGM raster truncated ({len(raster)} of {width * height} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, img) -> None:
    """Write a 2-D uint8 array as binary PGM, atomically."""
    arr = as_gray(img)
    rows, cols = arr.shape
    header = f"P5\n{cols} {rows}\n{PGM_MAXVAL}\n".encode("ascii")
    atomic_write_bytes(path, header + arr.tobytes())


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            if mode == "L":
                return np.asarray(im, dtype=np.uint8)
            if mode == "RGB":
                return to_luminance(np.asarray(im, dtype=np.uint8))
    except DataFormatError:
        raise
    except Exception as exc:
        raise DataFormatError(f"{path}: cannot read PNG: {exc}") from exc
    raise DataFormatError(f"{path}: unsupported PNG mode {mode!r} (8-bit grayscale or RGB only)")


def read_image(path) -> np.ndarray:
    """Read a PGM or PNG file as a 2-D uint8 grayscale array."""
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm",):
        return read_pgm(path)
    if suffix in (".png",):
        return _read_png(path)
    raise DataFormatError(f"{path}: unsupported image format {suffix!r} (use .pgm or .png)")
