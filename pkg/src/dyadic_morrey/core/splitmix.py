"""SplitMix64: the single seeded source of randomness.

state <- state + 0x9E3779B97F4A7C15 (mod 2^64)
z <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
out <- z ^ (z >> 31)

A uniform double in [0, 1) is (out >> 11) * 2^-53.  Draws are consumed in
the order documented by each ensemble builder, so any port of the generator
reproduces the ensembles exactly.
"""
import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


class SplitMix64:

    def __init__(self, seed: int):
        self._state = int(seed) & MASK

    @property
    def state(self) -> int:
        return self._state

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK
        z = self._state
        z = ((z ^ (z >> 30)) * MIX_1) & MASK
        z = ((z ^ (z >> 27)) * MIX_2) & MASK
        return z ^ (z >> 31)

    def next_u64_array(self, size: int) -> np.ndarray:
        """The next `size` outputs at once; identical to repeated next_u64."""
        # the k-th state is seed + k * gamma, so the stream vectorizes
        steps = np.arange(1, size + 1, dtype=np.uint64)
        with np.errstate(over='ignore'):
            z = np.uint64(self._state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + size * GOLDEN_GAMMA) & MASK
        return z

    def uniform(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        unit = (self.next_u64_array(size) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return low + (high - low) * unit

    def integers(self, size: int, bound: int) -> np.ndarray:
        """Integers in [0, bound) by multiply-shift on the top 32 bits."""
        top = (self.next_u64_array(size) >> np.uint64(32)).astype(np.float64)
        return np.floor(top * bound / 2.0 ** 32).astype(np.int64)
