"""Counter-based deterministic random number generation.

The generator is a vectorized SplitMix64: draw i of stream (key, pos) is
``mix64(key + (pos + i) * GOLDEN)``, so any draw depends only on the key and
the absolute counter position.  Streams can be split by label into
statistically independent child streams, which is how one run seed fans out
into per-component randomness (init, masking, batch order, noise...).

Reproducibility contract: same seed and call sequence give bitwise identical
outputs on any platform running this implementation.  No global state.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4B7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = 0xFFFFFFFFFFFFFFFF
# 2^-53, doubles in [0, 1) from the top 53 bits of a u64
_INV53 = 1.0 / float(1 << 53)

# counter bases are read-only and reused heavily by dropout draws
_ARANGE_CACHE: dict = {}


def _mix64(z: np.ndarray) -> np.ndarray:
    """Stafford mix13 finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    """Same finalizer on a plain Python int (numpy warns on scalar overflow)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _hash_label(label) -> int:
    """Stable 64-bit hash of a split label (int or str). FNV-1a for strings."""
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    h = 0xCBF29CE484222325
    for byte in str(label).encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


class Rng:
    """Splittable counter-based generator.

    State is (key, pos): key identifies the stream, pos the next counter
    value.  Drawing n values advances pos by the number of u64s consumed.
    """

    def __init__(self, seed: int, _pos: int = 0):
        self.key = int(seed) & _MASK64
        self.pos = int(_pos)

    def __repr__(self):
        return f"Rng(key={self.key:#018x}, pos={self.pos})"

    def split(self, *labels) -> "Rng":
        """Derive an independent child stream keyed by the label path."""
        key = self.key
        for label in labels:
            key = _mix64_int(key + _hash_label(label) * 0x9E3779B97F4B7C15)
        return Rng(key)

    def _raw(self, n: int) -> np.ndarray:
        base = _ARANGE_CACHE.get(n)
        if base is None and n <= 1 << 22:
            base = _ARANGE_CACHE[n] = np.arange(n, dtype=np.uint64)
        elif base is None:
            base = np.arange(n, dtype=np.uint64)
        counters = np.uint64(self.pos) + base
        self.pos += n
        return _mix64(np.uint64(self.key) + counters * _GOLDEN)

    def u64(self, n: int) -> np.ndarray:
        """n raw 64-bit draws."""
        return self._raw(n)

    def uniform(self, shape=()) -> np.ndarray:
        """Doubles in [0, 1), one u64 each."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV53
        return u.reshape(shape) if shape else float(u[0])

    def normal(self, shape=(), mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Gaussian draws via Box-Muller on pairs of uniforms."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        half = (n + 1) // 2
        # u1 in (0, 1] so log() is finite
        u1 = ((self._raw(half) >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
        u2 = (self._raw(half) >> np.uint64(11)).astype(np.float64) * _INV53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        z = mean + std * z
        return z.reshape(shape) if shape else float(z[0])

    def integers(self, high: int, shape=()) -> np.ndarray:
        """Uniform integers in [0, high). high must be positive."""
        if high <= 0:
            raise ValueError("high must be positive")
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        u = self.uniform(shape if shape else (1,))
        out = np.minimum((u * high).astype(np.int64), high - 1)
        return out.reshape(shape) if shape else int(out[0])

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting random keys."""
        keys = self._raw(n)
        return np.argsort(keys, kind="stable")

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        """size indices from range(n); without replacement uses a permutation prefix."""
        if replace:
            return self.integers(n, (size,))
        if size > n:
            raise ValueError(f"cannot draw {size} from {n} without replacement")
        return self.permutation(n)[:size]
