"""Deterministic, implementation-independent random streams.

Synthetic embeddings must be reproducible bit-for-bit across runs and across
reimplementations, so this module fixes the exact generator rather than
relying on any library's RNG:

* ``fnv1a64(text)`` -- the 64-bit FNV-1a hash of the UTF-8 bytes of ``text``
  (offset basis 0xcbf29ce484222325, prime 0x100000001b3).
* ``KeyedStream(seed, key)`` -- a splitmix64 stream whose initial state is
  ``(seed * 0x9E3779B97F4A7C15) XOR fnv1a64(key)``, truncated to 64 bits.
  Each call to ``next_u64`` advances the state by the splitmix64 increment
  and returns the mixed output.
* Uniform doubles take the top 53 bits: ``(u64 >> 11) * 2**-53``.
* Normal deviates use one Box-Muller cosine term per draw:
  ``sqrt(-2 ln u1) * cos(2 pi u2)`` with ``u1`` forced into (0, 1].

Anything that only needs per-run determinism (weight init, shuffles) uses
``numpy.random.default_rng`` instead; this stream is reserved for data that
crosses the file-format boundary.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class KeyedStream:
    """splitmix64 stream keyed by an integer seed and a string identity."""

    def __init__(self, seed: int, key: str):
        self._state = ((seed * _GOLDEN) & _MASK64) ^ fnv1a64(key)

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_normal(self) -> float:
        """Standard normal deviate (Box-Muller, cosine branch)."""
        u1 = (self.next_u64() >> 11) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        # u1 == 0 would make log blow up; shift into (0, 1].
        u1 = 1.0 - u1
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, count: int) -> list[float]:
        return [self.next_normal() for _ in range(count)]

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()
