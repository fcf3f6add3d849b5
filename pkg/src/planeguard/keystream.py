"""Deterministic keystream for bitplane encryption.

A 256-bit key plus a 96-bit per-image nonce drive a ChaCha20 stream with
a 32-bit little-endian block counter starting at zero. Keystream bit t
is bit (7 - t % 8) of byte t // 8, i.e. bits are consumed MSB-first
within each byte. The caller assigns bit t to plane k = t // (rows*cols)
and raster position t % (rows*cols), so each plane gets a contiguous
slice of one stream and no bit is ever reused.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .errors import InvalidArgumentError

KEY_BYTES = 32
NONCE_BYTES = 12


@dataclass(frozen=True)
class KeystreamSpec:
    """Key material identifying one image's keystream."""

    key: bytes
    nonce: bytes

    def __post_init__(self):
        if not isinstance(self.key, bytes) or len(self.key) != KEY_BYTES:
            raise InvalidArgumentError(
                f"key must be {KEY_BYTES} bytes, got {0 if not isinstance(self.key, bytes) else len(self.key)}"
            )
        if not isinstance(self.nonce, bytes) or len(self.nonce) != NONCE_BYTES:
            raise InvalidArgumentError(
                f"nonce must be {NONCE_BYTES} bytes, got {0 if not isinstance(self.nonce, bytes) else len(self.nonce)}"
            )


def keystream_bytes(spec: KeystreamSpec, count: int) -> bytes:
    """Return the first `count` bytes of the stream for (key, nonce)."""
    if count < 0:
        raise InvalidArgumentError("byte count must be >= 0")
    if count == 0:
        return b""
    # The cipher's 16-byte IV is the 32-bit little-endian block counter
    # (starting at 0) followed by the 96-bit nonce.
    iv = (0).to_bytes(4, "little") + spec.nonce
    encryptor = Cipher(algorithms.ChaCha20(spec.key, iv), mode=None).encryptor()
    return encryptor.update(bytes(count))


def keystream_bits(spec: KeystreamSpec, count: int) -> np.ndarray:
    """Return the first `count` keystream bits as a uint8 array of 0/1.

    Bits come from successive bytes, most significant bit first, so any
    prefix of a longer request is identical to a shorter request.
    """
    if count < 0:
        raise InvalidArgumentError("bit count must be >= 0")
    nbytes = (count + 7) // 8
    raw = np.frombuffer(keystream_bytes(spec, nbytes), dtype=np.uint8)
    return np.unpackbits(raw)[:count]


def derive_nonce(index: int) -> bytes:
    """Nonce for the image at position `index` in ingestion order.

    Big-endian 96-bit encoding of the index; distinct indices give
    distinct nonces, which keeps (key, nonce) pairs unique within a run.
    """
    if not 0 <= index < (1 << (8 * NONCE_BYTES)):
        raise InvalidArgumentError("nonce index outside the 96-bit range")
    return index.to_bytes(NONCE_BYTES, "big")


def parse_key_hex(text: str) -> bytes:
    """Parse a 64-hex-digit key string."""
    try:
        key = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise InvalidArgumentError(f"key is not valid hex: {exc}") from exc
    if len(key) != KEY_BYTES:
        raise InvalidArgumentError(f"key must be {2 * KEY_BYTES} hex digits, got {len(text.strip())}")
    return key


def parse_nonce_hex(text: str) -> bytes:
    """Parse a 24-hex-digit nonce string."""
    try:
        nonce = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise InvalidArgumentError(f"nonce is not valid hex: {exc}") from exc
    if len(nonce) != NONCE_BYTES:
        raise InvalidArgumentError(f"nonce must be {2 * NONCE_BYTES} hex digits, got {len(text.strip())}")
    return nonce
