"""Cuckoo filter with blocked cells, subtables, and an overflow stash.

The table is ``num_subtables`` subtables of ``2**fingerprint_bits`` cells;
each cell is a block of ``block_size`` fingerprint slots.  An element hashes
to a home cell and a nonzero fingerprint, and the fingerprint may live in
the home cell or its alternate:

* ``simplified`` variant: the alternate is the home cell with its low
  fingerprint-bits XORed with the fingerprint, so both candidates stay in
  the same subtable and any cell count works.
* ``original`` variant: the alternate is the home XORed with a second hash
  of the fingerprint, which requires the total cell count to be a power of
  two for the mapping to be an involution.

Inserts that cannot be placed even after a bounded breadth-first eviction
search overflow into a small per-subtable stash (simplified variant only);
when the stash is full too, the insert fails and the filter is untouched.

Queries never report a stored element as absent.  False positives occur at
a rate bounded by ``2n / (num_cells * (2**fingerprint_bits - 1))``.

A filter instance is not thread-safe for writes; concurrent experiments
should use one instance per worker.  Instances are plain Python state and
move freely between threads or processes.
"""

import enum
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import bitmatch, hashing

MASK64 = (1 << 64) - 1

SERIAL_MAGIC = b"SCKF"
SERIAL_VERSION = 1

_HEADER = struct.Struct("<4sBBBBIIQQ")
_STASH_COUNT = struct.Struct("<H")
_STASH_ENTRY = struct.Struct("<II")

# sub-seed stream indexes of the master seed
_STREAM_FP = 0
_STREAM_HOME = 1
_STREAM_ALT = 2


class Variant(enum.Enum):
    SIMPLIFIED = "simplified"
    ORIGINAL = "original"


_VARIANT_CODE = {Variant.SIMPLIFIED: 0, Variant.ORIGINAL: 1}
_VARIANT_FROM_CODE = {code: variant for variant, code in _VARIANT_CODE.items()}


class InsertOutcome(enum.Enum):
    STORED = "stored"
    STASHED = "stashed"
    FAILED = "failed"


class CellIndex(NamedTuple):
    """A cell named by (subtable, local index within the subtable)."""

    subtable: int
    local: int


class SerializationError(ValueError):
    """Base error for malformed serialized filters."""


class BadMagicError(SerializationError):
    pass


class UnsupportedVersionError(SerializationError):
    pass


class TruncatedError(SerializationError):
    pass


@dataclass(frozen=True)
class FilterParams:
    """Geometry and seeding of a filter.

    capacity is the number of elements the table was sized for; it is
    bookkeeping only and does not constrain inserts.
    """

    capacity: int
    block_size: int
    fingerprint_bits: int
    num_subtables: int = 1
    variant: Variant = Variant.SIMPLIFIED
    stash_capacity: int = 0
    seed: int = 0
    max_evictions: int = 512

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not 1 <= self.block_size <= 255:
            raise ValueError(f"block_size must be in [1, 255], got {self.block_size}")
        if not bitmatch.MIN_WIDTH <= self.fingerprint_bits <= bitmatch.MAX_WIDTH:
            raise ValueError(
                f"fingerprint_bits must be in [{bitmatch.MIN_WIDTH}, "
                f"{bitmatch.MAX_WIDTH}], got {self.fingerprint_bits}"
            )
        if not 1 <= self.num_subtables <= 0xFFFFFFFF:
            raise ValueError(f"num_subtables must be in [1, 2^32), got {self.num_subtables}")
        if not 0 <= self.stash_capacity <= 0xFFFF:
            raise ValueError(f"stash_capacity must be in [0, 65535], got {self.stash_capacity}")
        if self.stash_capacity > 0 and self.variant is not Variant.SIMPLIFIED:
            raise ValueError("the stash extension applies to the simplified variant only")
        if self.variant is Variant.ORIGINAL and self.num_subtables & (self.num_subtables - 1):
            raise ValueError(
                "the original variant needs a power-of-two cell count; "
                f"num_subtables={self.num_subtables} breaks that"
            )
        if self.max_evictions < 1:
            raise ValueError(f"max_evictions must be positive, got {self.max_evictions}")
        object.__setattr__(self, "seed", self.seed & MASK64)

    @property
    def num_cells(self) -> int:
        return self.num_subtables << self.fingerprint_bits

    @property
    def total_slots(self) -> int:
        return self.num_cells * self.block_size


def hash_element(element: bytes, params: FilterParams) -> tuple[CellIndex, int]:
    """Home cell and fingerprint of an element.

    The fingerprint is uniform over [1, 2^fingerprint_bits - 1]; zero is
    reserved to mean an empty slot.  Home cell and fingerprint come from
    independent sub-seeds of the filter seed.
    """
    f = params.fingerprint_bits
    home = hashing.hash_bytes(element, hashing.derive_seed(params.seed, _STREAM_HOME))
    home %= params.num_cells
    fp = hashing.hash_bytes(element, hashing.derive_seed(params.seed, _STREAM_FP))
    fp = fp % ((1 << f) - 1) + 1
    return CellIndex(home >> f, home & ((1 << f) - 1)), fp


def alt_location(location: CellIndex, fingerprint: int, params: FilterParams) -> CellIndex:
    """The other candidate cell for a fingerprint; an involution."""
    f = params.fingerprint_bits
    if not 1 <= fingerprint < (1 << f):
        raise ValueError(f"fingerprint out of range for {f} bits: {fingerprint}")
    if params.variant is Variant.SIMPLIFIED:
        return CellIndex(location.subtable, location.local ^ fingerprint)
    index = (location.subtable << f) | location.local
    index ^= _alt_offset(fingerprint, params.num_cells, params.seed)
    return CellIndex(index >> f, index & ((1 << f) - 1))


def _alt_offset(fingerprint: int, num_cells: int, seed: int) -> int:
    """Nonzero offset hash of a fingerprint for the original variant."""
    h = hashing.hash_u64(fingerprint, hashing.derive_seed(seed, _STREAM_ALT))
    return h % (num_cells - 1) + 1 if num_cells > 1 else 0


class CuckooFilter:
    """Approximate membership with insert, query, and delete.

    >>> params = FilterParams(capacity=1000, block_size=4, fingerprint_bits=12)
    >>> filt = CuckooFilter(params)
    >>> filt.insert(b"alpha")
    <InsertOutcome.STORED: 'stored'>
    >>> b"alpha" in filt
    True
    >>> filt.delete(b"alpha")
    True
    """

    def __init__(self, params: FilterParams):
        self.params = params
        f = params.fingerprint_bits
        self._f = f
        self._fp_mask = (1 << f) - 1
        self._fp_modulus = (1 << f) - 1
        self._block_size = params.block_size
        self._n_cells = params.num_cells
        self._lanes = 63 // f
        self._words_per_block = -(-params.block_size // self._lanes)
        self._lane_const = bitmatch.make_lane_constant(f, self._lanes)
        self._carry_mask = self._lane_const << f
        self._seed_fp = hashing.derive_seed(params.seed, _STREAM_FP)
        self._seed_home = hashing.derive_seed(params.seed, _STREAM_HOME)
        self._seed_alt = hashing.derive_seed(params.seed, _STREAM_ALT)
        self._simplified = params.variant is Variant.SIMPLIFIED
        self._words = [0] * (self._n_cells * self._words_per_block)
        self._occupancy = bytearray(self._n_cells)
        self._stashes: list[list[tuple[int, int]]] = [[] for _ in range(params.num_subtables)]
        self._table_count = 0
        self._stash_count = 0
        self._alt_memo: dict[int, int] = {}

    # -- membership ---------------------------------------------------------

    def insert(self, element: bytes) -> InsertOutcome:
        """Insert one copy of an element; duplicates accumulate."""
        home, fp = self._hash(element)
        return self.insert_hashed(home, fp)

    def insert_hashed(self, home: int, fingerprint: int) -> InsertOutcome:
        """Insert by precomputed global home cell and fingerprint.

        Exposed so bulk experiments can batch the hashing; behaves exactly
        like insert() for the element that hashed to these values.
        """
        occupancy = self._occupancy
        block = self._block_size
        if occupancy[home] < block:
            self._place(home, fingerprint)
            return InsertOutcome.STORED
        alt = self._alt(home, fingerprint)
        if occupancy[alt] < block:
            self._place(alt, fingerprint)
            return InsertOutcome.STORED
        freed = self._evict_path(home, alt)
        if freed is not None:
            self._place(freed, fingerprint)
            return InsertOutcome.STORED
        if self._simplified and self.params.stash_capacity > 0:
            stash = self._stashes[home >> self._f]
            if len(stash) < self.params.stash_capacity:
                stash.append((self._canonical_local(home, fingerprint), fingerprint))
                self._stash_count += 1
                return InsertOutcome.STASHED
        return InsertOutcome.FAILED

    def query(self, element: bytes) -> bool:
        """Membership check: never false for a stored element."""
        home, fp = self._hash(element)
        if self._cell_contains(home, fp) or self._cell_contains(self._alt(home, fp), fp):
            return True
        return self._stash_contains(home, fp)

    def query_many(self, values: np.ndarray) -> np.ndarray:
        """Vectorized query over 64-bit counters (8-byte LE elements).

        Equivalent to query(encode_u64(v)) for each v, evaluated with
        numpy over the whole array at once.
        """
        values = np.asarray(values, dtype=np.uint64)
        f = self._f
        homes = hashing.hash_u64_many(values, self._seed_home) % np.uint64(self._n_cells)
        fps = hashing.hash_u64_many(values, self._seed_fp) % np.uint64(self._fp_modulus)
        fps += np.uint64(1)
        if self._simplified:
            alts = homes ^ fps
        else:
            offsets = hashing.hash_u64_many(fps, self._seed_alt)
            offsets = offsets % np.uint64(self._n_cells - 1) + np.uint64(1)
            alts = homes ^ offsets
        words = np.array(self._words, dtype=np.uint64)
        per_block = np.uint64(self._words_per_block)
        hits = np.zeros(values.shape, dtype=bool)
        for k in range(self._words_per_block):
            offset = np.uint64(k)
            r1 = bitmatch.match_bits_many(
                words[homes * per_block + offset], fps, self._lane_const, f
            )
            r2 = bitmatch.match_bits_many(
                words[alts * per_block + offset], fps, self._lane_const, f
            )
            hits |= (r1 != 0) | (r2 != 0)
        if self._stash_count:
            hits |= self._stash_contains_many(homes, fps)
        return hits

    def delete(self, element: bytes) -> bool:
        """Remove exactly one stored copy; False when none is present."""
        home, fp = self._hash(element)
        if self._remove_from_cell(home, fp):
            return True
        if self._remove_from_cell(self._alt(home, fp), fp):
            return True
        if not self._stash_count:
            return False
        stash = self._stashes[home >> self._f]
        entry = (self._canonical_local(home, fp), fp)
        try:
            stash.remove(entry)
        except ValueError:
            return False
        self._stash_count -= 1
        return True

    def __contains__(self, element: bytes) -> bool:
        return self.query(element)

    def __len__(self) -> int:
        return self.stored_count

    # -- accounting ----------------------------------------------------------

    @property
    def stored_count(self) -> int:
        """Fingerprints held, table slots plus stash entries."""
        return self._table_count + self._stash_count

    @property
    def stash_count(self) -> int:
        return self._stash_count

    def load_factor(self) -> float:
        """Occupied fraction of table slots; stash entries do not count."""
        return self._table_count / self.params.total_slots

    # -- internals -----------------------------------------------------------

    def _hash(self, element: bytes) -> tuple[int, int]:
        home = hashing.hash_bytes(element, self._seed_home) % self._n_cells
        fp = hashing.hash_bytes(element, self._seed_fp) % self._fp_modulus + 1
        return home, fp

    def _alt(self, cell: int, fingerprint: int) -> int:
        if self._simplified:
            return cell ^ fingerprint
        offset = self._alt_memo.get(fingerprint)
        if offset is None:
            offset = _alt_offset(fingerprint, self._n_cells, self.params.seed)
            self._alt_memo[fingerprint] = offset
        return cell ^ offset

    def _canonical_local(self, cell: int, fingerprint: int) -> int:
        local = cell & self._fp_mask
        return min(local, local ^ fingerprint)

    def _slot(self, cell: int, slot: int) -> int:
        word = self._words[cell * self._words_per_block + slot // self._lanes]
        return (word >> ((slot % self._lanes) * self._f)) & self._fp_mask

    def _set_slot(self, cell: int, slot: int, value: int) -> None:
        index = cell * self._words_per_block + slot // self._lanes
        self._words[index] = bitmatch.write_lane(
            self._words[index], slot % self._lanes, self._f, value
        )

    def _place(self, cell: int, fingerprint: int) -> None:
        """Drop a fingerprint into the lowest free slot of a non-full cell."""
        for slot in range(self._block_size):
            if self._slot(cell, slot) == 0:
                self._set_slot(cell, slot, fingerprint)
                self._occupancy[cell] += 1
                self._table_count += 1
                return
        raise AssertionError("placement into a full cell")

    def _cell_contains(self, cell: int, fingerprint: int) -> bool:
        base = cell * self._words_per_block
        for k in range(self._words_per_block):
            if bitmatch.match_bits(self._words[base + k], fingerprint, self._lane_const, self._f):
                return True
        return False

    def _find_slot(self, cell: int, fingerprint: int) -> int | None:
        base = cell * self._words_per_block
        return bitmatch.find_in_words(
            self._words[base : base + self._words_per_block],
            fingerprint,
            self._lane_const,
            self._f,
        )

    def _remove_from_cell(self, cell: int, fingerprint: int) -> bool:
        slot = self._find_slot(cell, fingerprint)
        if slot is None:
            return False
        self._set_slot(cell, slot, 0)
        self._occupancy[cell] -= 1
        self._table_count -= 1
        return True

    def _stash_contains(self, home: int, fingerprint: int) -> bool:
        if not self._stash_count:
            return False
        entry = (self._canonical_local(home, fingerprint), fingerprint)
        return entry in self._stashes[home >> self._f]

    def _stash_contains_many(self, homes: np.ndarray, fps: np.ndarray) -> np.ndarray:
        stash_fps = {fp for stash in self._stashes for _, fp in stash}
        hits = np.zeros(homes.shape, dtype=bool)
        candidates = np.isin(fps, np.fromiter(stash_fps, dtype=np.uint64))
        for i in np.nonzero(candidates)[0]:
            hits[i] = self._stash_contains(int(homes[i]), int(fps[i]))
        return hits

    def _evict_path(self, home: int, alt: int) -> int | None:
        """Breadth-first eviction search from two full candidate cells.

        Walks cells reachable by relocating one stored fingerprint, up to
        max_evictions visited cells.  Relocations are applied only after a
        complete path to a free cell is known, so a failed search leaves
        the table untouched.  Returns the cell that ends up with a free
        slot for the new fingerprint, or None.
        """
        block = self._block_size
        occupancy = self._occupancy
        budget = self.params.max_evictions
        visited = {home, alt}
        # parent links: (cell, parent_entry, slot_in_parent)
        level = [(cell, None, 0) for cell in sorted((home, alt))]
        seen = 2
        while level:
            free_hits = []
            next_level = []
            for entry in level:
                cell = entry[0]
                for slot in range(block):
                    if seen >= budget:
                        break
                    neighbor = self._alt(cell, self._slot(cell, slot))
                    if neighbor in visited:
                        continue
                    visited.add(neighbor)
                    seen += 1
                    child = (neighbor, entry, slot)
                    if occupancy[neighbor] < block:
                        free_hits.append(child)
                    else:
                        next_level.append(child)
            if free_hits:
                # ties between equal-depth free cells: lowest global index
                return self._relocate(min(free_hits, key=lambda c: c[0]))
            level = next_level
        return None

    def _relocate(self, tail) -> int:
        """Apply a found eviction path leaf-first; returns the freed root cell."""
        moves = []
        entry = tail
        while entry[1] is not None:
            moves.append((entry[1][0], entry[2], entry[0]))
            entry = entry[1]
        for source, slot, destination in moves:
            fp = self._slot(source, slot)
            for free in range(self._block_size):
                if self._slot(destination, free) == 0:
                    self._set_slot(destination, free, fp)
                    break
            self._occupancy[destination] += 1
            self._set_slot(source, slot, 0)
            self._occupancy[source] -= 1
        return entry[0]

    # -- serialization --------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Serialize to the versioned little-endian wire format.

        Layout: magic, version, variant code, fingerprint bits, block size,
        num_subtables (u32), stash_capacity (u32), seed (u64), stored count
        (u64); then every block as ceil(block_size * fingerprint_bits / 64)
        words of densely packed slots; then per subtable a u16 entry count
        followed by (canonical_local u32, fingerprint u32) stash entries.
        """
        p = self.params
        out = bytearray(
            _HEADER.pack(
                SERIAL_MAGIC,
                SERIAL_VERSION,
                _VARIANT_CODE[p.variant],
                p.fingerprint_bits,
                p.block_size,
                p.num_subtables,
                p.stash_capacity,
                p.seed,
                self.stored_count,
            )
        )
        dense_words = _dense_words_per_block(p.block_size, p.fingerprint_bits)
        span = self._lanes * self._f
        base = 0
        for _ in range(self._n_cells):
            acc = 0
            for k in range(self._words_per_block):
                acc |= self._words[base + k] << (k * span)
            base += self._words_per_block
            for k in range(dense_words):
                out += struct.pack("<Q", (acc >> (64 * k)) & MASK64)
        for stash in self._stashes:
            out += _STASH_COUNT.pack(len(stash))
            for local, fp in stash:
                out += _STASH_ENTRY.pack(local, fp)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CuckooFilter":
        """Rebuild a filter from to_bytes() output.

        The wire format carries no planned capacity or eviction budget;
        those come back as the physical slot count and the default.
        """
        if len(data) < len(SERIAL_MAGIC):
            raise TruncatedError("payload shorter than the magic prefix")
        if data[: len(SERIAL_MAGIC)] != SERIAL_MAGIC:
            raise BadMagicError(f"bad magic {data[:4]!r}, expected {SERIAL_MAGIC!r}")
        if len(data) < len(SERIAL_MAGIC) + 1:
            raise TruncatedError("payload ends before the version byte")
        version = data[len(SERIAL_MAGIC)]
        if version != SERIAL_VERSION:
            raise UnsupportedVersionError(f"unsupported version {version}")
        if len(data) < _HEADER.size:
            raise TruncatedError(f"header needs {_HEADER.size} bytes, got {len(data)}")
        (_, _, variant_code, f, block, subtables, stash_capacity, seed, stored) = _HEADER.unpack_from(
            data
        )
        if variant_code not in _VARIANT_FROM_CODE:
            raise SerializationError(f"unknown variant code {variant_code}")
        try:
            params = FilterParams(
                capacity=max(1, (subtables << f) * block),
                block_size=block,
                fingerprint_bits=f,
                num_subtables=subtables,
                variant=_VARIANT_FROM_CODE[variant_code],
                stash_capacity=stash_capacity,
                seed=seed,
            )
        except ValueError as exc:
            raise SerializationError(f"invalid geometry in header: {exc}") from exc
        dense_words = _dense_words_per_block(block, f)
        table_bytes = params.num_cells * dense_words * 8
        offset = _HEADER.size
        if len(data) < offset + table_bytes:
            raise TruncatedError(
                f"table needs {table_bytes} bytes, got {len(data) - offset}"
            )
        filt = cls(params)
        filt._load_table(data, offset, dense_words)
        offset += table_bytes
        offset = filt._load_stashes(data, offset)
        if offset != len(data):
            raise SerializationError(f"{len(data) - offset} trailing bytes after the stash")
        if filt.stored_count != stored:
            raise SerializationError(
                f"header claims {stored} stored fingerprints, payload holds {filt.stored_count}"
            )
        return filt

    def _load_table(self, data: bytes, offset: int, dense_words: int) -> None:
        f = self._f
        block = self._block_size
        span = self._lanes * f
        span_mask = (1 << span) - 1
        count = 0
        for cell in range(self._n_cells):
            acc = 0
            for k in range(dense_words):
                acc |= int.from_bytes(data[offset : offset + 8], "little") << (64 * k)
                offset += 8
            if acc >> (block * f):
                raise SerializationError(f"nonzero padding bits in block {cell}")
            if acc == 0:
                continue
            base = cell * self._words_per_block
            occupied = 0
            for k in range(self._words_per_block):
                self._words[base + k] = (acc >> (k * span)) & span_mask
            for slot in range(block):
                if (acc >> (slot * f)) & self._fp_mask:
                    occupied += 1
            self._occupancy[cell] = occupied
            count += occupied
        self._table_count = count

    def _load_stashes(self, data: bytes, offset: int) -> int:
        capacity = self.params.stash_capacity
        for subtable in range(self.params.num_subtables):
            if len(data) < offset + _STASH_COUNT.size:
                raise TruncatedError(f"stash count missing for subtable {subtable}")
            (count,) = _STASH_COUNT.unpack_from(data, offset)
            offset += _STASH_COUNT.size
            if count > capacity:
                raise SerializationError(
                    f"subtable {subtable} stash holds {count} > capacity {capacity}"
                )
            if len(data) < offset + count * _STASH_ENTRY.size:
                raise TruncatedError(f"stash entries missing for subtable {subtable}")
            stash = self._stashes[subtable]
            for _ in range(count):
                local, fp = _STASH_ENTRY.unpack_from(data, offset)
                offset += _STASH_ENTRY.size
                if not 1 <= fp <= self._fp_mask or local > self._fp_mask:
                    raise SerializationError(
                        f"stash entry ({local}, {fp}) out of range for {self._f} bits"
                    )
                stash.append((local, fp))
                self._stash_count += 1
        return offset


def _dense_words_per_block(block_size: int, fingerprint_bits: int) -> int:
    return (block_size * fingerprint_bits + 63) // 64
