"""Plain Bloom filter used as the false-positive baseline in experiments.

Probes use double hashing: probe i lands at ``(h_a + i * h_b) mod bits``.
Index arithmetic wraps at 64 bits before the final modulo so the scalar
and vectorized paths are bit-identical.
"""

import math

import numpy as np

from . import hashing

MASK64 = (1 << 64) - 1

_STREAM_A = 0
_STREAM_B = 1


def hash_count_for(num_bits: int, n: int) -> int:
    """Probe count minimizing the false-positive rate for n elements."""
    if num_bits < 1 or n < 1:
        raise ValueError("num_bits and n must be positive")
    return max(1, round(num_bits * math.log(2.0) / n))


class BloomFilter:
    """Fixed-size bit array with k double-hashed probes per element."""

    def __init__(self, num_bits: int, num_hashes: int, seed: int = 0):
        if num_bits < 1:
            raise ValueError(f"num_bits must be positive, got {num_bits}")
        if num_hashes < 1:
            raise ValueError(f"num_hashes must be positive, got {num_hashes}")
        self.num_bits = num_bits
        self.num_hashes = num_hashes
        self.seed = seed & MASK64
        self._seed_a = hashing.derive_seed(self.seed, _STREAM_A)
        self._seed_b = hashing.derive_seed(self.seed, _STREAM_B)
        self._bits = np.zeros(num_bits, dtype=bool)

    def add(self, element: bytes) -> None:
        a = hashing.hash_bytes(element, self._seed_a)
        b = self._step(hashing.hash_bytes(element, self._seed_b))
        for i in range(self.num_hashes):
            self._bits[((a + i * b) & MASK64) % self.num_bits] = True

    def contains(self, element: bytes) -> bool:
        a = hashing.hash_bytes(element, self._seed_a)
        b = self._step(hashing.hash_bytes(element, self._seed_b))
        return all(
            self._bits[((a + i * b) & MASK64) % self.num_bits]
            for i in range(self.num_hashes)
        )

    def add_many(self, values: np.ndarray) -> None:
        """Vectorized add of 64-bit counters (8-byte LE elements)."""
        a, b = self._hash_many(values)
        for i in range(self.num_hashes):
            self._bits[(a + np.uint64(i) * b) % np.uint64(self.num_bits)] = True

    def contains_many(self, values: np.ndarray) -> np.ndarray:
        a, b = self._hash_many(values)
        out = np.ones(a.shape, dtype=bool)
        for i in range(self.num_hashes):
            out &= self._bits[(a + np.uint64(i) * b) % np.uint64(self.num_bits)]
        return out

    def _hash_many(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        values = np.asarray(values, dtype=np.uint64)
        a = hashing.hash_u64_many(values, self._seed_a)
        b = hashing.hash_u64_many(values, self._seed_b)
        step = b % np.uint64(self.num_bits)
        step = np.where(step == 0, np.uint64(1), step)
        return a, step

    def _step(self, raw: int) -> int:
        step = raw % self.num_bits
        return step if step else 1

    def fill_fraction(self) -> float:
        return float(self._bits.mean())
