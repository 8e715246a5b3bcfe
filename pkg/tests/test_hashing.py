"""Hash primitive: determinism, encoding equivalence, and uniformity."""

import numpy as np
import pytest
from scipy import stats

from sckf import hashing


def test_mix64_is_deterministic_and_spreads():
    assert hashing.mix64(0) == hashing.mix64(0)
    outputs = {hashing.mix64(value) for value in range(1000)}
    assert len(outputs) == 1000
    assert all(0 <= value <= hashing.MASK64 for value in outputs)


def test_hash_bytes_distinguishes_length_and_content():
    assert hashing.hash_bytes(b"a", 7) != hashing.hash_bytes(b"a\x00", 7)
    assert hashing.hash_bytes(b"", 7) != hashing.hash_bytes(b"\x00", 7)
    assert hashing.hash_bytes(b"abcdefgh1", 7) != hashing.hash_bytes(b"abcdefgh2", 7)
    assert hashing.hash_bytes(b"payload", 1) != hashing.hash_bytes(b"payload", 2)


def test_hash_u64_matches_byte_encoding():
    for seed in (0, 1, 2**63):
        for value in (0, 1, 255, 2**32, hashing.MASK64):
            assert hashing.hash_u64(value, seed) == hashing.hash_bytes(
                hashing.encode_u64(value), seed
            )


def test_vectorized_hash_matches_scalar():
    values = np.arange(4096, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    batch = hashing.hash_u64_many(values, seed=42)
    scalar = [hashing.hash_u64(int(value), 42) for value in values]
    assert batch.tolist() == scalar


def test_derive_seed_streams_are_distinct():
    seeds = {hashing.derive_seed(99, index) for index in range(64)}
    assert len(seeds) == 64


@pytest.mark.parametrize("bits", [4, 8])
def test_fingerprint_bins_are_uniform(bits):
    # chi-square over the 2**bits - 1 nonzero fingerprint values
    bins = (1 << bits) - 1
    values = hashing.hash_u64_many(np.arange(10**6, dtype=np.uint64), seed=3)
    fingerprints = values % np.uint64(bins)
    counts = np.bincount(fingerprints.astype(np.int64), minlength=bins)
    result = stats.chisquare(counts)
    assert result.pvalue > 0.001, f"chi-square p={result.pvalue}"


def test_subtable_assignment_is_balanced():
    # each subtable within 5 sigma of its binomial expectation
    num_subtables, bits, n = 16, 8, 10**6
    num_cells = num_subtables << bits
    homes = hashing.hash_u64_many(np.arange(n, dtype=np.uint64), seed=5) % np.uint64(num_cells)
    counts = np.bincount((homes >> np.uint64(bits)).astype(np.int64), minlength=num_subtables)
    expected = n / num_subtables
    sigma = (n * (1 / num_subtables) * (1 - 1 / num_subtables)) ** 0.5
    assert np.all(np.abs(counts - expected) <= 5 * sigma)


def test_seed_changes_every_output():
    values = np.arange(1000, dtype=np.uint64)
    a = hashing.hash_u64_many(values, seed=1)
    b = hashing.hash_u64_many(values, seed=2)
    assert not np.any(a == b)
