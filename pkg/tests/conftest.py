"""Shared test helpers: element encoding and an independent table oracle."""

import random

from sckf.hashing import encode_u64


class BlockedCuckooTable:
    """Plain blocked cuckoo table storing fingerprints in Python lists.

    Independent implementation used as a membership oracle: same two
    candidate cells per element (cell and cell XOR fingerprint), same
    block capacity, but random-walk eviction instead of breadth-first
    search.  Any placement of the same multiset of (cell pair,
    fingerprint) entries answers membership identically, which is what
    the equivalence tests rely on.
    """

    def __init__(self, num_cells: int, block_size: int, rng: random.Random, max_kicks: int = 5000):
        assert num_cells & (num_cells - 1) == 0
        self.num_cells = num_cells
        self.block_size = block_size
        self.cells = [[] for _ in range(num_cells)]
        self.rng = rng
        self.max_kicks = max_kicks

    def insert(self, cell: int, fingerprint: int) -> bool:
        if len(self.cells[cell]) < self.block_size:
            self.cells[cell].append(fingerprint)
            return True
        alt = cell ^ fingerprint
        if len(self.cells[alt]) < self.block_size:
            self.cells[alt].append(fingerprint)
            return True
        current = self.rng.choice((cell, alt))
        for _ in range(self.max_kicks):
            victim_slot = self.rng.randrange(self.block_size)
            victim = self.cells[current][victim_slot]
            self.cells[current][victim_slot] = fingerprint
            fingerprint = victim
            current ^= fingerprint
            if len(self.cells[current]) < self.block_size:
                self.cells[current].append(fingerprint)
                return True
        return False

    def query(self, cell: int, fingerprint: int) -> bool:
        return fingerprint in self.cells[cell] or fingerprint in self.cells[cell ^ fingerprint]

    def delete(self, cell: int, fingerprint: int) -> bool:
        for candidate in (cell, cell ^ fingerprint):
            if fingerprint in self.cells[candidate]:
                self.cells[candidate].remove(fingerprint)
                return True
        return False


def counters(start: int, count: int) -> list[bytes]:
    return [encode_u64(value) for value in range(start, start + count)]
