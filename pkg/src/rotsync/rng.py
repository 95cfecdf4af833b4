"""Counter-based SplitMix64 streams.

Every random quantity is a pure function of ``(seed, stream index, step)``,
so a sample computed by one worker is bit-identical to the same sample
computed by any other worker, in any order.
"""
from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


def derive(seed: int, *tags) -> int:
    """Derive an independent 64-bit seed for a named purpose.

    Tags may be ints or strings; strings are hashed with FNV-1a.
    """
    s = mix((int(seed) & MASK) + GAMMA)
    for tag in tags:
        t = _fnv1a(tag) if isinstance(tag, str) else int(tag) & MASK
        s = mix(s ^ mix(t + GAMMA))
    return s


def stream_key(seed: int, index: int) -> int:
    base = mix((int(seed) & MASK) + GAMMA)
    return mix(base + ((int(index) + 1) * GAMMA & MASK))


def _mix_arr(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def stream_keys(seed: int, indices) -> np.ndarray:
    """Vectorized :func:`stream_key` returning a uint64 array."""
    idx = np.asarray(indices, dtype=np.uint64)
    base = np.uint64(mix((int(seed) & MASK) + GAMMA))
    with np.errstate(over="ignore"):
        return _mix_arr(base + (idx + np.uint64(1)) * np.uint64(GAMMA))


def uniforms(keys, step: int) -> np.ndarray:
    """Uniform doubles in [0, 1) for each key at counter ``step``."""
    k = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix_arr(k + np.uint64(((int(step) + 1) * GAMMA) & MASK))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def uniform_block(key: int, start: int, count: int) -> np.ndarray:
    """Uniforms of a single stream at steps ``start .. start+count-1``."""
    steps = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix_arr(np.uint64(key) + (steps + np.uint64(1)) * np.uint64(GAMMA))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def letters_from_uniforms(u: np.ndarray, cumnu: np.ndarray) -> np.ndarray:
    """Map uniforms to 0-based letters: count of cumulative weights <= u."""
    k = len(cumnu)
    idx = np.searchsorted(cumnu, u, side="right")
    return np.minimum(idx, k - 1).astype(np.int32)


def cumulative(nu) -> np.ndarray:
    c = np.cumsum(np.asarray(nu, dtype=np.float64))
    return c
