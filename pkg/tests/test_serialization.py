"""Wire format: round trips, and a distinct error for every way to break it."""

import pytest

from conftest import counters
from sckf.filter import (
    BadMagicError,
    CuckooFilter,
    FilterParams,
    InsertOutcome,
    SerializationError,
    TruncatedError,
    UnsupportedVersionError,
    Variant,
)

HEADER_SIZE = 32


def small_filter(**overrides) -> CuckooFilter:
    defaults = dict(capacity=64, block_size=3, fingerprint_bits=4, num_subtables=2)
    defaults.update(overrides)
    return CuckooFilter(FilterParams(**defaults))


def table_bytes(filt: CuckooFilter) -> int:
    p = filt.params
    dense_words = -(-(p.block_size * p.fingerprint_bits) // 64)
    return p.num_cells * dense_words * 8


def test_empty_round_trip_is_byte_identical():
    filt = small_filter(seed=11)
    payload = filt.to_bytes()
    restored = CuckooFilter.from_bytes(payload)
    assert restored.to_bytes() == payload
    assert restored.stored_count == 0
    p, q = filt.params, restored.params
    assert (p.block_size, p.fingerprint_bits, p.num_subtables, p.seed) == (
        q.block_size, q.fingerprint_bits, q.num_subtables, q.seed
    )
    assert q.capacity == q.total_slots  # planned capacity is not on the wire


def test_populated_round_trip_preserves_answers():
    filt = small_filter(capacity=300, fingerprint_bits=8, num_subtables=2, seed=5)
    elements = counters(0, 300)
    for element in elements:
        assert filt.insert(element) is InsertOutcome.STORED
    for element in elements[:40]:
        assert filt.delete(element)
    payload = filt.to_bytes()
    restored = CuckooFilter.from_bytes(payload)
    assert restored.stored_count == filt.stored_count
    probes = counters(0, 2000)
    assert [restored.query(e) for e in probes] == [filt.query(e) for e in probes]
    assert restored.to_bytes() == payload


def test_round_trip_keeps_stash_entries():
    filt = small_filter(
        capacity=16, block_size=1, fingerprint_bits=2, num_subtables=1, stash_capacity=2
    )
    stored = [e for e in counters(0, 60) if filt.insert(e) is not InsertOutcome.FAILED]
    assert filt.stash_count == 2
    restored = CuckooFilter.from_bytes(filt.to_bytes())
    assert restored.stash_count == 2
    assert all(restored.query(element) for element in stored)


def test_restored_filter_mutates_identically():
    filt = small_filter(capacity=200, fingerprint_bits=8, seed=3)
    for element in counters(0, 150):
        filt.insert(element)
    restored = CuckooFilter.from_bytes(filt.to_bytes())
    fresh = counters(150, 50)
    assert [restored.insert(e) for e in fresh] == [filt.insert(e) for e in fresh]
    assert [restored.delete(e) for e in fresh] == [filt.delete(e) for e in fresh]
    assert restored.to_bytes() == filt.to_bytes()


def test_original_variant_round_trip():
    filt = small_filter(
        capacity=500, fingerprint_bits=8, num_subtables=4, variant=Variant.ORIGINAL
    )
    for element in counters(0, 500):
        filt.insert(element)
    restored = CuckooFilter.from_bytes(filt.to_bytes())
    assert restored.params.variant is Variant.ORIGINAL
    assert all(restored.query(element) for element in counters(0, 500))


# -- error taxonomy -----------------------------------------------------------


def test_too_short_for_magic():
    with pytest.raises(TruncatedError):
        CuckooFilter.from_bytes(b"SC")


def test_bad_magic():
    payload = bytearray(small_filter().to_bytes())
    payload[0] ^= 0xFF
    with pytest.raises(BadMagicError):
        CuckooFilter.from_bytes(bytes(payload))
    with pytest.raises(BadMagicError):
        CuckooFilter.from_bytes(b"NOPE" + bytes(payload[4:]))


def test_missing_version_byte():
    payload = small_filter().to_bytes()
    with pytest.raises(TruncatedError):
        CuckooFilter.from_bytes(payload[:4])


def test_unsupported_version():
    payload = bytearray(small_filter().to_bytes())
    payload[4] = 99
    with pytest.raises(UnsupportedVersionError):
        CuckooFilter.from_bytes(bytes(payload))


def test_truncated_header():
    payload = small_filter().to_bytes()
    with pytest.raises(TruncatedError):
        CuckooFilter.from_bytes(payload[:20])


def test_truncated_table():
    filt = small_filter()
    payload = filt.to_bytes()
    cut = HEADER_SIZE + table_bytes(filt) - 8
    with pytest.raises(TruncatedError):
        CuckooFilter.from_bytes(payload[:cut])


def test_truncated_stash_section():
    payload = small_filter().to_bytes()
    with pytest.raises(TruncatedError):
        CuckooFilter.from_bytes(payload[:-1])


def test_trailing_bytes_rejected():
    payload = small_filter().to_bytes()
    with pytest.raises(SerializationError):
        CuckooFilter.from_bytes(payload + b"\x00")


def test_nonzero_padding_bits_rejected():
    filt = small_filter(block_size=4, fingerprint_bits=12)  # 48 payload bits per word
    payload = bytearray(filt.to_bytes())
    payload[HEADER_SIZE + 7] = 0x80
    with pytest.raises(SerializationError, match="padding"):
        CuckooFilter.from_bytes(bytes(payload))


def test_stored_count_mismatch_rejected():
    payload = bytearray(small_filter().to_bytes())
    payload[24] = 1  # claim one stored fingerprint in an empty table
    with pytest.raises(SerializationError, match="stored"):
        CuckooFilter.from_bytes(bytes(payload))


def test_invalid_geometry_rejected():
    payload = bytearray(small_filter().to_bytes())
    payload[6] = 1  # fingerprint width below the supported minimum
    with pytest.raises(SerializationError):
        CuckooFilter.from_bytes(bytes(payload))


def test_unknown_variant_code_rejected():
    payload = bytearray(small_filter().to_bytes())
    payload[5] = 7
    with pytest.raises(SerializationError):
        CuckooFilter.from_bytes(bytes(payload))


def test_stash_count_beyond_capacity_rejected():
    filt = small_filter(
        capacity=16, block_size=1, fingerprint_bits=2, num_subtables=1, stash_capacity=1
    )
    for element in counters(0, 60):
        filt.insert(element)
    assert filt.stash_count == 1
    payload = bytearray(filt.to_bytes())
    count_at = HEADER_SIZE + table_bytes(filt)
    payload[count_at] = 2
    with pytest.raises(SerializationError, match="capacity"):
        CuckooFilter.from_bytes(bytes(payload))


def test_stash_entry_out_of_range_rejected():
    filt = small_filter(
        capacity=16, block_size=1, fingerprint_bits=2, num_subtables=1, stash_capacity=1
    )
    for element in counters(0, 60):
        filt.insert(element)
    payload = bytearray(filt.to_bytes())
    entry_at = HEADER_SIZE + table_bytes(filt) + 2
    payload[entry_at + 4 : entry_at + 8] = b"\x00\x00\x00\x00"  # zero fingerprint
    with pytest.raises(SerializationError, match="out of range"):
        CuckooFilter.from_bytes(bytes(payload))
