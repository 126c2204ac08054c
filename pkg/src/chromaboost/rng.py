"""Deterministic, platform-independent random number generation.

The generator is counter-based SplitMix64: output ``i`` is a fixed bit mix
of ``seed + (i + 1) * GOLDEN``, so the sequence depends only on the 64-bit
seed and how many words have been consumed.  Floating-point derivations
(uniform, Gaussian via Box-Muller) use only IEEE-754 double arithmetic,
which makes every sequence bit-identical across runs and platforms.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps mod 2**64.
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


class Rng:
    """Seeded stream of random words with uniform/Gaussian/permutation views.

    State is (seed, counter); consuming n words advances the counter by n.
    Two instances with equal seeds yield equal sequences for equal call
    patterns.
    """

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self.counter = 0

    def words(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words as a uint64 array."""
        if n < 0:
            raise ValueError("word count must be non-negative")
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(self.seed + idx * _GOLDEN)

    def uniform(self, shape) -> np.ndarray:
        """Uniform float64 samples in [0, 1), one word each (53-bit mantissa)."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        u = (self.words(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return u.reshape(shape)

    def normal(self, shape, std: float = 1.0) -> np.ndarray:
        """Zero-mean Gaussian float64 samples via Box-Muller."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        u = (self.words(2 * pairs) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        u1 = 1.0 - u[:pairs]  # (0, 1]: keeps log() finite
        u2 = u[pairs:]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return (z * std).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting random keys."""
        keys = self.words(n)
        return np.argsort(keys, kind="stable")

    def integers(self, n: int, upper: int) -> np.ndarray:
        """``n`` integers in [0, upper) (floor of scaled uniforms)."""
        if upper <= 0:
            raise ValueError("upper bound must be positive")
        u = (self.words(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return np.minimum((u * upper).astype(np.int64), upper - 1)


def _as_shape(shape) -> tuple:
    if isinstance(shape, int):
        return (shape,)
    return tuple(int(s) for s in shape)
