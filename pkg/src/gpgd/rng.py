"""Deterministic, splittable random streams.

Reproducibility across runs, platforms and languages matters more here than
raw statistical firepower, so the generator is spelled out in full rather
than delegated to an opaque library default:

* Draw ``i`` (zero-based) of stream ``(seed, stream_id)`` is the 64-bit word

      u_i = mix64(s0 + (i + 1) * GOLDEN  mod 2**64)

  where ``GOLDEN = 0x9E3779B97F4A7C15``, ``mix64`` is the SplitMix64
  finalizer (xor-shift / multiply / xor-shift / multiply / xor-shift) and
  the stream origin is ``s0 = mix64(seed ^ mix64(stream_id ^ GOLDEN))``.
* Uniforms in [0, 1) take the top 53 bits: ``u >> 11) * 2**-53``.
* Normals use the Box-Muller cosine branch on consecutive word pairs
  ``(u_{2j}, u_{2j+1})``; the sine companion is discarded so that the j-th
  normal of a stream never depends on how draws were batched.

The counter-based layout makes draws a pure function of
``(seed, stream_id, index)``: distinct streams are independent by
construction and a stream can be replayed or split at any point.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on an array of uint64."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class RngStream:
    """One reproducible stream of random draws.

    Identical ``(seed, stream_id)`` replay bit-identical 64-bit words on
    every platform; the float transforms on top are deterministic given
    IEEE-754 double arithmetic.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        with np.errstate(over="ignore"):
            s = _mix64(np.uint64(self.stream_id) ^ GOLDEN)
            self._origin = _mix64(np.uint64(self.seed) ^ s)
        self._counter = 0

    def split(self, stream_id: int) -> "RngStream":
        """Independent stream with the same seed and a new stream id."""
        return RngStream(self.seed, stream_id)

    def _words(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix64(self._origin + idx * GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """n uniforms in [0, 1)."""
        return (self._words(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """n standard normal draws (Box-Muller, cosine branch)."""
        if n < 1:
            return np.zeros(0)
        w = self._words(2 * n)
        u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
        u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n integers uniform in [0, bound) (modulo reduction; bound << 2**64)."""
        return (self._words(n) % np.uint64(bound)).astype(np.int64)

    def choice(self, pool: int, size: int) -> np.ndarray:
        """size distinct indices from range(pool), order given by a random key sort."""
        if size > pool:
            raise ValueError("cannot draw more distinct indices than the pool holds")
        keys = self._words(pool)
        return np.argsort(keys, kind="stable")[:size]


def sample_gaussian(rng: RngStream, n: int) -> np.ndarray:
    """n i.i.d. standard normals from the stream (module-level spelling)."""
    if n < 1:
        raise ValueError("need at least one draw")
    return rng.normal(n)
