"""Counter-based pseudo-random function for mark variables.

Mark streams must be random-access: the value at (seed, owner, position) is
needed without generating any preceding values, marks for shared point
prefixes must coincide across runs with different point counts, and
replications must be reproducible regardless of how they are scheduled
across worker processes.  A keyed 64-bit mixing function gives all of that
statelessly.  The mixer is the splitmix64 finalizer (Steele, Lea, Flood's
constants), applied twice with an XOR in between, which is enough avalanche
for Monte-Carlo edge indicators.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_UNIT = 2.0**-52


def mix64(x: np.ndarray | int) -> np.ndarray | np.uint64:
    """splitmix64 finalizer on uint64 scalars or arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GAMMA
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        z = z ^ (z >> _S31)
    if np.ndim(x) == 0:
        return np.uint64(z)
    return z


def derive_key(*parts: int) -> np.uint64:
    """Fold integers into one uint64 key, order-sensitively.

    Used for domain separation: derive_key(seed, tag) and
    derive_key(seed, tag, index) never collide by construction order.
    """
    key = np.uint64(0)
    with np.errstate(over="ignore"):
        for p in parts:
            key = mix64(key ^ (np.uint64(int(p) & 0xFFFFFFFFFFFFFFFF) + _GAMMA))
    return key


def stream_keys(seed: int, tag: int, count: int) -> np.ndarray:
    """Per-index keys derive_key(seed, tag, i) for i in range(count), vectorized."""
    base = derive_key(seed, tag)
    idx = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base ^ (idx + _GAMMA))


def unit_from_bits(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to floats strictly inside (0, 1).

    ((bits >> 12) + 0.5) * 2^-52 hits the open interval only, so a
    comparison t <= phi is never satisfied at phi = 0 and always at phi = 1.
    Keeping 52 bits (not 53) makes the +0.5 exactly representable, so the
    top word cannot round up to 1.0.
    """
    return ((bits >> _S12).astype(np.float64) + 0.5) * _UNIT


def mark_values(keys: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Mark t at (owner key, position) pairs; arrays broadcast together."""
    with np.errstate(over="ignore"):
        bits = mix64(np.asarray(keys, dtype=np.uint64) ^ mix64(positions))
    return unit_from_bits(bits)
