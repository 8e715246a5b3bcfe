"""Branch-free fingerprint search inside packed 64-bit words.

A block of small fingerprints is stored as contiguous ``width``-bit lanes
inside a 64-bit word.  Matching a fingerprint against every lane at once
uses a four-step carry trick instead of a per-lane loop:

1. Broadcast the complement of the sought fingerprint to every lane by
   multiplying it with the lane constant F (one bit set per lane).  XOR
   with the word turns every matching lane into all-ones.
2. Add F.  Each all-ones lane overflows and sends a carry into the bit
   just above the lane.
3. ``(q + F) ^ q ^ F`` isolates the positions where the addition carried,
   i.e. the bits that differ from the carry-free sum.
4. Mask with ``F << width`` to keep only the carry bit above each lane;
   the lowest set bit then marks the first matching lane.

A carry out of a matching lane can ripple through a directly adjacent lane
whose value differs from the target only in its lowest bit, setting a
spurious carry bit *above* the true match.  The lowest set bit is always a
genuine match, so first-match semantics are unaffected.

Lane capacity per word is ``63 // width``, not ``64 // width``: the top
lane needs its carry bit to land inside the word, and keeping the total
at or below bit 63 also means step 2 can never overflow the word.

The ``*_many`` variants run the same steps on numpy uint64 arrays for the
bulk query paths and the randomized oracle tests.
"""

import numpy as np

MASK64 = (1 << 64) - 1

MIN_WIDTH = 2
MAX_WIDTH = 32


def lanes_per_word(width: int) -> int:
    """Maximum number of width-bit lanes a 64-bit word can hold."""
    _check_width(width)
    return 63 // width


def make_lane_constant(width: int, lanes: int) -> int:
    """Constant with a single 1 bit at the bottom of each of ``lanes`` lanes."""
    _check_width(width)
    if lanes < 1:
        raise ValueError(f"need at least one lane, got {lanes}")
    if lanes * width > 63:
        raise ValueError(
            f"{lanes} lanes of {width} bits exceed the 63-bit budget "
            "(the top lane's carry bit must stay inside the word)"
        )
    constant = 0
    for i in range(lanes):
        constant |= 1 << (i * width)
    return constant


def match_bits(word: int, fingerprint: int, lane_constant: int, width: int) -> int:
    """Carry bits of the lane-match addition, masked to lane boundaries.

    Bit ``(i + 1) * width`` is set when lane ``i`` matches ``fingerprint``
    (or received a carry rippling up from a lower matching lane).  Zero
    means no lane matches.
    """
    ones = (1 << width) - 1
    q = word ^ ((fingerprint ^ ones) * lane_constant)
    return ((q + lane_constant) ^ q ^ lane_constant) & (lane_constant << width)


def find_fingerprint(word: int, fingerprint: int, lane_constant: int, width: int) -> int | None:
    """Index of the lowest lane equal to ``fingerprint``, or None."""
    r = match_bits(word, fingerprint, lane_constant, width)
    if r == 0:
        return None
    low = r & -r
    return (low.bit_length() - 1) // width - 1


def naive_find(word: int, fingerprint: int, width: int, lanes: int) -> int | None:
    """Loop-based reference for find_fingerprint."""
    ones = (1 << width) - 1
    for i in range(lanes):
        if (word >> (i * width)) & ones == fingerprint:
            return i
    return None


def find_in_words(words, fingerprint: int, lane_constant: int, width: int) -> int | None:
    """First slot holding ``fingerprint`` in a multi-word block, or None.

    Slot k lives in lane ``k % lanes`` of word ``k // lanes``.  Unused high
    lanes of the final word must be zero; they can never match because
    fingerprints are nonzero.
    """
    lanes = 63 // width
    for k, word in enumerate(words):
        hit = find_fingerprint(word, fingerprint, lane_constant, width)
        if hit is not None:
            return k * lanes + hit
    return None


def clear_lane(word: int, lane: int, width: int) -> int:
    """Zero lane ``lane`` of ``word``."""
    return word & ~(((1 << width) - 1) << (lane * width))


def read_lane(word: int, lane: int, width: int) -> int:
    return (word >> (lane * width)) & ((1 << width) - 1)


def write_lane(word: int, lane: int, width: int, value: int) -> int:
    shift = lane * width
    return (word & ~(((1 << width) - 1) << shift)) | (value << shift)


def pack_words(values, width: int) -> list[int]:
    """Pack a slot sequence into lane-layout words (test/debug helper)."""
    lanes = lanes_per_word(width)
    words = [0] * ((len(values) + lanes - 1) // lanes) if values else []
    for k, value in enumerate(values):
        words[k // lanes] |= value << ((k % lanes) * width)
    return words


def unpack_words(words, width: int, count: int) -> list[int]:
    """Inverse of pack_words."""
    lanes = lanes_per_word(width)
    ones = (1 << width) - 1
    return [(words[k // lanes] >> ((k % lanes) * width)) & ones for k in range(count)]


# ---------------------------------------------------------------------------
# vectorized twins (bit-identical to the scalar forms, tested as such)

def match_bits_many(
    words: np.ndarray, fingerprints: np.ndarray, lane_constant: int, width: int
) -> np.ndarray:
    """match_bits over parallel uint64 arrays of words and fingerprints."""
    w = np.asarray(words, dtype=np.uint64)
    fp = np.asarray(fingerprints, dtype=np.uint64)
    ones = np.uint64((1 << width) - 1)
    lane_c = np.uint64(lane_constant)
    q = w ^ ((fp ^ ones) * lane_c)
    return ((q + lane_c) ^ q ^ lane_c) & np.uint64((lane_constant << width) & MASK64)


def find_fingerprint_many(
    words: np.ndarray, fingerprints: np.ndarray, lane_constant: int, width: int
) -> np.ndarray:
    """First matching lane per element as int64, -1 where absent."""
    r = match_bits_many(words, fingerprints, lane_constant, width)
    low = r & (~r + np.uint64(1))
    # lowest set bit is an exact power of two, so float64 log2 is exact
    safe = np.where(low == 0, np.uint64(1), low)
    position = np.log2(safe.astype(np.float64)).astype(np.int64)
    lane = position // width - 1
    return np.where(r == 0, np.int64(-1), lane)


def naive_find_many(
    words: np.ndarray, fingerprints: np.ndarray, width: int, lanes: int
) -> np.ndarray:
    """Vectorized per-lane reference for find_fingerprint_many."""
    w = np.asarray(words, dtype=np.uint64)
    fp = np.asarray(fingerprints, dtype=np.uint64)
    ones = np.uint64((1 << width) - 1)
    out = np.full(w.shape, -1, dtype=np.int64)
    for i in range(lanes - 1, -1, -1):
        lane_value = (w >> np.uint64(i * width)) & ones
        out = np.where(lane_value == fp, np.int64(i), out)
    return out


def _check_width(width: int) -> None:
    if not MIN_WIDTH <= width <= MAX_WIDTH:
        raise ValueError(f"lane width must be in [{MIN_WIDTH}, {MAX_WIDTH}], got {width}")
