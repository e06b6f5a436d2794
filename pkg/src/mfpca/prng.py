"""Counter-based SplitMix64 streams.

Output ``k`` (0-based) of a stream keyed by ``key`` is

    z = key + (k + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

which is exactly the classic sequential SplitMix64 seeded with ``key``, but
any block of outputs can be produced directly from its counter. Named
substreams use ``key = mix64(seed ^ mix64(stream_id))``.

Derived variates:

* uniform in [0, 1): ``(out >> 11) * 2**-53``
* standard normal: Box-Muller on consecutive pairs ``(u1, u2)``,
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``; one normal per pair.

Test vectors live in ``docs/prng.md`` and ``tests/test_prng.py``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["GAMMA", "mix64", "splitmix64", "Stream"]

GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def splitmix64(key: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start + count - 1`` of the stream keyed by ``key``."""
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK) + k * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


class Stream:
    """Sequential reader over one named substream of a seed."""

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.key = mix64((seed & _MASK) ^ mix64(stream))
        self.position = 0

    def raw(self, count: int) -> np.ndarray:
        out = splitmix64(self.key, self.position, count)
        self.position += count
        return out

    def uniform(self, count: int) -> np.ndarray:
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count: int) -> np.ndarray:
        u = self.uniform(2 * count)
        u1, u2 = u[0::2], u[1::2]
        return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
