"""Deterministic, splittable pseudorandom generator.

SplitMix64: the stream state advances by the 64-bit golden-ratio constant
and each output is the murmur-style finalizer of the state.  Substreams are
derived from the parent seed and a label hashed with FNV-1a, so a substream
depends only on (seed, label), never on draw order.  Everything is pure
64-bit integer arithmetic, reproducible across platforms and runs.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK
    return h


class Rng:
    def __init__(self, seed: int):
        self.seed = seed & MASK
        self._state = self.seed

    def next64(self) -> int:
        self._state = (self._state + GAMMA) & MASK
        return mix(self._state)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), by rejection on the top multiple of n."""
        if n <= 0:
            raise ValueError("randrange needs a positive bound")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.randrange(hi - lo + 1)

    def chance(self, num: int, den: int) -> bool:
        return self.randrange(den) < num

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def substream(self, label: str | int) -> "Rng":
        tag = _fnv1a(str(label))
        return Rng(mix(self.seed ^ tag))
