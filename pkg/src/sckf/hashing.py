"""Seeded 64-bit hashing used for cell addressing and fingerprints.

Everything here is built on a splitmix64-style finalizer: cheap, seedable,
and with full avalanche on all 64 output bits.  Byte strings are folded in
8-byte little-endian chunks, and the input length is mixed in last so that
trailing zero bytes change the hash.

The ``*_many`` variants run the identical arithmetic on numpy uint64 arrays
(wrapping multiplication matches the scalar mod-2^64 behaviour bit for bit);
they exist so experiments can hash millions of elements without a Python
loop per element.
"""

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

_GOLDEN_U64 = np.uint64(_GOLDEN)
_MULT1_U64 = np.uint64(_MULT1)
_MULT2_U64 = np.uint64(_MULT2)


def mix64(value: int) -> int:
    """Bijective 64-bit scramble (splitmix64 increment + finalizer)."""
    z = (value + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def hash_bytes(data: bytes, seed: int) -> int:
    """Hash an arbitrary byte string to a uniform 64-bit value."""
    h = seed & MASK64
    for i in range(0, len(data), 8):
        h = mix64(h ^ int.from_bytes(data[i : i + 8], "little"))
    return mix64(h ^ len(data))


def hash_u64(value: int, seed: int) -> int:
    """Hash one 64-bit value; equals hash_bytes() of its 8-byte LE encoding."""
    return mix64(mix64((seed ^ value) & MASK64) ^ 8)


def hash_u64_many(values: np.ndarray, seed: int) -> np.ndarray:
    """Vectorized hash_u64 over a uint64 array."""
    v = np.asarray(values, dtype=np.uint64)
    h = _mix64_many(v ^ np.uint64(seed))
    return _mix64_many(h ^ np.uint64(8))


def _mix64_many(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN_U64
    z = (z ^ (z >> np.uint64(30))) * _MULT1_U64
    z = (z ^ (z >> np.uint64(27))) * _MULT2_U64
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, index: int) -> int:
    """Independent sub-seed for stream ``index`` of a master seed."""
    return hash_u64(index, seed)


def encode_u64(value: int) -> bytes:
    """Canonical 8-byte little-endian encoding of a 64-bit counter."""
    return value.to_bytes(8, "little")
