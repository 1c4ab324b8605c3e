"""Counter-based randomness built on the splitmix64 finalizer.

Every draw is a pure function of (seed, counter), not of call order, so
labels and sample streams are reproducible under any chunking or thread
count.  All arithmetic is wrapping uint64; outputs are mapped to the
target distribution at the end.
"""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1

SQRT3 = math.sqrt(3.0)


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise over uint64 input."""
    z = np.asarray(x, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def words(seed: int, index) -> np.ndarray:
    """Word `index` of the uint64 stream keyed by `seed` (vectorized)."""
    idx = np.atleast_1d(np.asarray(index, dtype=np.uint64))
    state = np.uint64(seed & _U64_MASK) + (idx + np.uint64(1)) * _GOLDEN
    return mix64(state)


def words2(seed: int, rows, cols) -> np.ndarray:
    """Independent words indexed by (row, col); shape (len(rows), len(cols)).

    Row r is its own substream, so slicing by rows (e.g. Monte Carlo
    chunks) yields the same values regardless of chunk boundaries.
    """
    r = words(seed, rows)
    c = (np.asarray(cols, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
    return mix64(r[:, None] + c[None, :])


def to_unit(w: np.ndarray) -> np.ndarray:
    """Map uint64 words to uniform [0, 1) doubles (53 significant bits)."""
    return (w >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def to_alphabet(w: np.ndarray, size: int) -> np.ndarray:
    """Map uint64 words to uniform integers in {0, ..., size-1}."""
    vals = (to_unit(w) * size).astype(np.int64)
    return np.minimum(vals, size - 1)


def to_rademacher(w: np.ndarray) -> np.ndarray:
    """Map uint64 words to +-1 with equal probability."""
    return 1.0 - 2.0 * (w >> np.uint64(63)).astype(np.float64)


def to_centered_uniform(w: np.ndarray) -> np.ndarray:
    """Map uint64 words to uniform on [-sqrt(3), sqrt(3)] (mean 0, variance 1)."""
    return (to_unit(w) - 0.5) * (2.0 * SQRT3)


def randint(seed: int, index, n: int) -> np.ndarray:
    """Deterministic integer draw in {0, ..., n-1} at stream position `index`."""
    return to_alphabet(words(seed, index), n)
