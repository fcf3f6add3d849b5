"""Keystream tests, checked against an independent cipher implementation.

The reference ChaCha20 block function below is written straight from the
published algorithm (quarter rounds on a 16-word state, 20 rounds,
little-endian serialization) and shares no code with the package.
"""

import struct

import numpy as np
import pytest

from planeguard import KeystreamSpec, derive_nonce, keystream_bits, keystream_bytes
from planeguard.errors import InvalidArgumentError
from planeguard.keystream import parse_key_hex, parse_nonce_hex

_M = 0xFFFFFFFF

# First 64 bytes for the all-zero key, nonce 0x000000000000000000000002,
# counter 0; computed with the reference implementation below and frozen.
GOLDEN_64 = bytes.fromhex(
    "c2c64d378cd536374ae204b9ef933fcd1a8b2288b3dfa49672ab765b54ee27c7"
    "8a970e0e955c14f3a88e741b97c286f75f8fc299e8148362fa198a39531bed6d"
)


def _rotl(x, n):
    return ((x << n) | (x >> (32 - n))) & _M


def _quarter(st, a, b, c, d):
    st[a] = (st[a] + st[b]) & _M; st[d] ^= st[a]; st[d] = _rotl(st[d], 16)
    st[c] = (st[c] + st[d]) & _M; st[b] ^= st[c]; st[b] = _rotl(st[b], 12)
    st[a] = (st[a] + st[b]) & _M; st[d] ^= st[a]; st[d] = _rotl(st[d], 8)
    st[c] = (st[c] + st[d]) & _M; st[b] ^= st[c]; st[b] = _rotl(st[b], 7)


def reference_block(key, counter, nonce):
    state = [0x61707865, 0x3320646E, 0x79622D32, 0x6B206574]
    state += list(struct.unpack("<8L", key)) + [counter] + list(struct.unpack("<3L", nonce))
    work = state.copy()
    for _ in range(10):
        _quarter(work, 0, 4, 8, 12)
        _quarter(work, 1, 5, 9, 13)
        _quarter(work, 2, 6, 10, 14)
        _quarter(work, 3, 7, 11, 15)
        _quarter(work, 0, 5, 10, 15)
        _quarter(work, 1, 6, 11, 12)
        _quarter(work, 2, 7, 8, 13)
        _quarter(work, 3, 4, 9, 14)
    return struct.pack("<16L", *((work[i] + state[i]) & _M for i in range(16)))


def reference_stream(key, nonce, count):
    out = b""
    counter = 0
    while len(out) < count:
        out += reference_block(key, counter, nonce)
        counter += 1
    return out[:count]


def test_reference_block_known_answer():
    # published block-function test vector: key 00..1f, counter 1,
    # nonce 000000090000004a00000000
    block = reference_block(bytes(range(32)), 1, bytes.fromhex("000000090000004a00000000"))
    assert block.hex().startswith("10f1e7e4d13b5915500fdd1fa32071c4")


def test_golden_vector_frozen_and_recomputed():
    spec = KeystreamSpec(bytes(32), bytes.fromhex("000000000000000000000002"))
    got = keystream_bytes(spec, 64)
    assert got == GOLDEN_64
    assert got == reference_stream(spec.key, spec.nonce, 64)


def test_matches_reference_across_block_boundaries(key):
    spec = KeystreamSpec(key, derive_nonce(9))
    assert keystream_bytes(spec, 200) == reference_stream(key, spec.nonce, 200)


def test_determinism_and_prefix(key):
    spec = KeystreamSpec(key, derive_nonce(3))
    assert keystream_bytes(spec, 100) == keystream_bytes(spec, 100)
    long = keystream_bits(spec, 333)
    short = keystream_bits(spec, 100)
    assert np.array_equal(long[:100], short)


def test_bits_msb_first(key):
    spec = KeystreamSpec(key, derive_nonce(0))
    first = keystream_bytes(spec, 1)[0]
    bits = keystream_bits(spec, 8)
    assert [int(b) for b in bits] == [(first >> (7 - i)) & 1 for i in range(8)]


def test_bit_balance(key):
    bits = keystream_bits(KeystreamSpec(key, derive_nonce(0)), 100_000)
    assert 0.49 <= bits.mean() <= 0.51


def test_distinct_nonces_decorrelated(key):
    b1 = keystream_bits(KeystreamSpec(key, derive_nonce(1)), 1024)
    b2 = keystream_bits(KeystreamSpec(key, derive_nonce(2)), 1024)
    distance = int((b1 ^ b2).sum())
    assert 512 - 120 <= distance <= 512 + 120


def test_derive_nonce_encoding():
    assert derive_nonce(0) == bytes(12)
    assert derive_nonce(1)[-1] == 1
    assert derive_nonce(258)[-2:] == b"\x01\x02"
    assert derive_nonce(5) != derive_nonce(6)
    with pytest.raises(InvalidArgumentError):
        derive_nonce(-1)
    with pytest.raises(InvalidArgumentError):
        derive_nonce(1 << 96)


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        KeystreamSpec(bytes(31), bytes(12))
    with pytest.raises(InvalidArgumentError):
        KeystreamSpec(bytes(32), bytes(11))
    with pytest.raises(InvalidArgumentError):
        keystream_bytes(KeystreamSpec(bytes(32), bytes(12)), -1)
    assert keystream_bytes(KeystreamSpec(bytes(32), bytes(12)), 0) == b""


def test_hex_parsers():
    assert parse_key_hex("00" * 32) == bytes(32)
    assert parse_nonce_hex("0b" * 12) == bytes([11] * 12)
    with pytest.raises(InvalidArgumentError):
        parse_key_hex("zz" * 32)
    with pytest.raises(InvalidArgumentError):
        parse_key_hex("00" * 31)
    with pytest.raises(InvalidArgumentError):
        parse_nonce_hex("00" * 13)
