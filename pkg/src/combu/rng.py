"""Seeded random streams and the distribution samplers used by the data generators.

All randomness in the package flows through :class:`Rng` so that a single
64-bit seed reproduces every downstream draw.  Normal variates are produced
by the Box-Muller transform applied to the raw uniform stream (rather than
the generator's native method), so the exact sample sequence is pinned by
this module alone.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer; bijective on 64-bit ints
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class Rng:
    """Deterministic random stream with derivable sub-streams.

    Two instances built with the same seed produce identical samples.
    ``child(i)`` derives an independent stream; children with different
    indices never share a seed.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, i: int) -> "Rng":
        return Rng(_mix64(self.seed ^ ((int(i) + 1) * _GOLDEN & _MASK64)))

    def next_seed(self) -> int:
        """Draw a fresh 64-bit seed from the stream."""
        return int(self._gen.integers(0, 1 << 64, dtype=np.uint64))

    def random(self, size=None):
        """Uniform floats in [0, 1)."""
        return self._gen.random(size)

    def uniform(self, a: float, b: float, size=None):
        return a + (b - a) * self._gen.random(size)

    def integers(self, a: int, b: int, size=None):
        """Uniform integers on [a, b], inclusive of both endpoints."""
        return self._gen.integers(a, b, size=size, endpoint=True)

    def normal(self, mu: float = 0.0, sigma: float = 1.0, size=None):
        """Normal variates via Box-Muller on the uniform stream.

        Each pair of output values consumes two uniforms; for odd sizes the
        second value of the last pair is discarded.  A scalar draw therefore
        consumes two uniforms.
        """
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1]: keeps log finite
        u2 = self._gen.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(2.0 * math.pi * u2)
        z[1::2] = r * np.sin(2.0 * math.pi * u2)
        z = mu + sigma * z[:n]
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice_no_replace(self, pool: np.ndarray, k: int) -> np.ndarray:
        """Draw k elements from pool without replacement."""
        if k > len(pool):
            raise ParameterError(f"cannot draw {k} from pool of {len(pool)}")
        idx = self._gen.choice(len(pool), size=k, replace=False)
        return np.asarray(pool)[idx]


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma >= 0.0):
            raise ParameterError(f"Normal sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a <= self.b):
            raise ParameterError(f"Uniform requires a <= b, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class IntUniform:
    """Uniform over the integers a..b, inclusive on both ends."""

    a: int
    b: int

    def __post_init__(self):
        if not (self.a <= self.b):
            raise ParameterError(f"IntUniform requires a <= b, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class Discrete:
    values: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ParameterError("Discrete needs equally many values and probs")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ParameterError("Discrete probs must lie in [0, 1]")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ParameterError(f"Discrete probs must sum to 1, got {sum(self.probs)!r}")


@dataclass(frozen=True)
class ExpScaled:
    """v = a * 10**b with a drawn from ``base`` and b from ``exponent``."""

    base: object
    exponent: object


def sample(dist, rng: Rng) -> float:
    """Draw one value from a distribution description."""
    if isinstance(dist, Normal):
        return rng.normal(dist.mu, dist.sigma)
    if isinstance(dist, Uniform):
        return rng.uniform(dist.a, dist.b)
    if isinstance(dist, IntUniform):
        return float(rng.integers(dist.a, dist.b))
    if isinstance(dist, Discrete):
        u = rng.random()
        cum = 0.0
        for v, p in zip(dist.values, dist.probs):
            cum += p
            if u < cum:
                return float(v)
        return float(dist.values[-1])  # u landed in the 1e-16 tail of rounding
    if isinstance(dist, ExpScaled):
        a = sample(dist.base, rng)
        b = sample(dist.exponent, rng)
        return a * 10.0 ** b
    raise ParameterError(f"unknown distribution {dist!r}")
