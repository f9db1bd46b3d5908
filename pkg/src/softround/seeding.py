"""Deterministic, splittable random streams.

Every stochastic piece of the library draws from a :class:`SeedStream`, a
value object identified by ``(root, index)``.  A stream is *pure*: asking the
same stream for the same draw always returns the same numbers, so experiment
code never threads mutable generator state around.  Independent randomness is
obtained by deriving child streams (one per trial, instance, sample, ...),
which keeps trials embarrassingly parallel and reruns byte-identical.

The underlying bit generator is numpy's Philox (counter based); stream keys
are derived with a SplitMix64-style finalizer, which is bijective in the
child index for a fixed parent.  Standard normals are produced with the
Box-Muller transform on top of the uniform stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(value: int) -> int:
    z = (value + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _stream_key(root: int, index: int) -> int:
    # Bijective in `index` for fixed `root`: xor of two bijections fed to one.
    return _splitmix64(_splitmix64(root & _MASK64) ^ _splitmix64(index + 1))


@dataclass(frozen=True)
class SeedStream:
    """An immutable handle on one reproducible random stream."""

    root: int
    index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.root <= _MASK64:
            raise ValueError(f"root seed must fit in 64 bits, got {self.root}")
        if self.index < 0:
            raise ValueError(f"stream index must be non-negative, got {self.index}")

    @property
    def key(self) -> int:
        return _stream_key(self.root, self.index)

    def child(self, index: int) -> "SeedStream":
        """Derive the `index`-th independent child stream.

        Distinct indices give distinct streams for a fixed parent; the same
        arguments always give the same stream.
        """
        return SeedStream(root=self.key, index=index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key))

    def uniforms(self, count: int) -> np.ndarray:
        """`count` i.i.d. uniforms on [0, 1) as float64."""
        if count < 0:
            raise ValueError("count must be non-negative")
        return self.generator().random(count)

    def normals(self, count: int) -> np.ndarray:
        """`count` i.i.d. standard normals via Box-Muller."""
        if count < 0:
            raise ValueError("count must be non-negative")
        if count == 0:
            return np.zeros(0)
        pairs = (count + 1) // 2
        u = self.uniforms(2 * pairs)
        u1 = 1.0 - u[:pairs]  # in (0, 1], keeps log finite
        u2 = u[pairs:]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random permutation of 0..n-1."""
        if n < 0:
            raise ValueError("n must be non-negative")
        return self.generator().permutation(n)
