"""Bit-level transforms of 8-bit grayscale images.

Plane index k counts from the most significant bit, so a pixel value is
sum_k bit_k * 2**(7-k). Selective encryption XORs planes k = 0..s-1
with keystream bits and leaves the 8-s low planes untouched; zeroing
and left-shifting expose what an analyst (or a CNN) sees of the clear
planes. Images are 2-D numpy uint8 arrays of shape (rows, cols).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .keystream import KEY_BYTES, NONCE_BYTES, KeystreamSpec, keystream_bits

N_PLANES = 8


def as_gray(img) -> np.ndarray:
    """Validate and return a 2-D uint8 image array."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D grayscale array, got ndim={arr.ndim}")
    if arr.dtype != np.uint8:
        raise InvalidInputError(f"expected dtype uint8, got {arr.dtype}")
    if arr.size == 0:
        raise InvalidInputError("image is empty")
    return arr


def _check_s(s: int) -> int:
    if not isinstance(s, (int, np.integer)) or not 0 <= s <= N_PLANES:
        raise InvalidArgumentError(f"s must be an integer in [0, {N_PLANES}], got {s!r}")
    return int(s)


def to_luminance(rgb) -> np.ndarray:
    """Integer Rec.601 luminance of an (rows, cols, 3) uint8 array."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected shape (rows, cols, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        raise InvalidInputError(f"expected dtype uint8, got {arr.dtype}")
    r = arr[..., 0].astype(np.uint32)
    g = arr[..., 1].astype(np.uint32)
    b = arr[..., 2].astype(np.uint32)
    return ((299 * r + 587 * g + 114 * b + 500) // 1000).astype(np.uint8)


@dataclass(frozen=True)
class EncryptionParams:
    """Key, per-image nonce, and number of encrypted planes."""

    key: bytes
    nonce: bytes
    s: int

    def __post_init__(self):
        # KeystreamSpec re-checks lengths; fail early with the same wording
        KeystreamSpec(self.key, self.nonce)
        _check_s(self.s)


def encrypt_planes(img, params: EncryptionParams) -> np.ndarray:
    """XOR the s most significant planes with the keystream.

    Bit t of the stream lands on plane t // (rows*cols) at raster
    position t % (rows*cols). The operation is its own inverse for a
    fixed (key, nonce, s).
    """
    arr = as_gray(img)
    s = _check_s(params.s)
    if s == 0:
        return arr.copy()
    rows, cols = arr.shape
    bits = keystream_bits(KeystreamSpec(params.key, params.nonce), s * rows * cols)
    planes = bits.reshape(s, rows, cols)
    mask = np.zeros_like(arr)
    for k in range(s):
        mask |= planes[k] << (N_PLANES - 1 - k)
    return arr ^ mask


def zero_planes(img, s: int) -> np.ndarray:
    """Clear the s most significant planes: img & (0xFF >> s)."""
    arr = as_gray(img)
    s = _check_s(s)
    return arr & np.uint8(0xFF >> s)


def shift_planes(img, s: int) -> np.ndarray:
    """Left-shift the clear planes into the most significant positions.

    (img << s) mod 256: promotes the 8-s low planes to the top so their
    content dominates the dynamic range; the s top planes fall off.
    """
    arr = as_gray(img)
    s = _check_s(s)
    return ((arr.astype(np.uint16) << s) & 0xFF).astype(np.uint8)


__all__ = [
    "N_PLANES",
    "KEY_BYTES",
    "NONCE_BYTES",
    "EncryptionParams",
    "as_gray",
    "encrypt_planes",
    "shift_planes",
    "to_luminance",
    "zero_planes",
]
