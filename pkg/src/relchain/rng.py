"""Seeded 64-bit split-mix generator.

The exact recurrence is part of the artifact contract so that any
reimplementation reproduces workload sequences bit for bit:

    state := (state + 0x9E3779B97F4A7C15) mod 2^64
    z := state
    z := ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z := ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output := z XOR (z >> 31)

``randint(lo, hi)`` maps an output into [lo, hi] by modulus; the tiny
modulo bias is irrelevant here and keeps the mapping trivially portable.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi], inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, items):
        return items[self.next_u64() % len(items)]

    def fork(self, salt: int) -> "SplitMix64":
        """Independent stream derived from this seed and a salt."""
        mixed = SplitMix64((self.state ^ (salt * GOLDEN_GAMMA)) & MASK64)
        mixed.next_u64()
        return mixed


def derive_seed(seed: int, *parts: str) -> int:
    """Stable 64-bit seed from a base seed and string labels."""
    import hashlib

    h = hashlib.sha256()
    h.update(seed.to_bytes(8, "big", signed=False))
    for part in parts:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")
