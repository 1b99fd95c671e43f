"""Deterministic seeding and per-point value streams.

All randomness in the toolkit derives from 64-bit seeds through a
counter-based scheme (splitmix64 mixing + Philox generators), so that
per-trial and per-node streams are independent of each other and stable
across platforms.  Randomized oracles draw their per-point values from a
stateless hash of (seed, point index): repeated queries at the same point
return the identical value without any memo storage.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = (z + _GAMMA) & _U64
    z = ((z ^ (z >> 30)) * _MIX1) & _U64
    z = ((z ^ (z >> 27)) * _MIX2) & _U64
    return z ^ (z >> 31)


def _part_to_int(part) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.blake2b(part.encode(), digest_size=8).digest(), "big")
    return int(part) & _U64


def derive_seed(base: int, *parts) -> int:
    """Fold `parts` (ints or strings) into `base`, yielding a new 64-bit seed."""
    z = _mix(int(base) & _U64)
    for part in parts:
        z = _mix(z ^ _part_to_int(part))
    return z


def generator(base: int, *parts) -> np.random.Generator:
    """A Philox generator keyed by derive_seed(base, *parts)."""
    return np.random.Generator(np.random.Philox(key=derive_seed(base, *parts)))


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def point_hash(seed: int, flat: np.ndarray, tag: int = 0) -> np.ndarray:
    """Stateless uint64 hash of each point index under (seed, tag)."""
    base = np.uint64(derive_seed(seed, "point", tag))
    return _mix_array(np.asarray(flat, dtype=np.uint64) ^ base)


def point_uniform(seed: int, flat: np.ndarray, tag: int = 0) -> np.ndarray:
    """Per-point uniforms in (0, 1), deterministic in (seed, point)."""
    h = point_hash(seed, flat, tag)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def point_bernoulli(seed: int, flat: np.ndarray, rho: float, tag: int = 0) -> np.ndarray:
    return point_uniform(seed, flat, tag) < rho


def point_uniform_int(seed: int, flat: np.ndarray, width: int, tag: int = 0) -> np.ndarray:
    """Per-point integers uniform in [0, width)."""
    h = point_hash(seed, flat, tag)
    return (h % np.uint64(width)).astype(np.int64)


def point_gaussian(seed: int, flat: np.ndarray, sigma: float, tag: int = 0) -> np.ndarray:
    """Per-point N(0, sigma^2) draws via Box-Muller on two hashed substreams."""
    u1 = point_uniform(seed, flat, tag=2 * tag + 1)
    u2 = point_uniform(seed, flat, tag=2 * tag + 2)
    return sigma * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
