"""64-bit linear congruential generator with a fixed, documented stream.

state' = (A * state + C) mod 2**64; a draw in [0, 1) is (state' >> 11) / 2**53.
Any language with 64-bit integers reproduces the same sequence.
"""

from __future__ import annotations

A = 6364136223846793005
C = 1442695040888963407
MASK = (1 << 64) - 1


class LCG:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (A * self.state + C) & MASK
        return self.state

    def uniform(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def uniform_between(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()
