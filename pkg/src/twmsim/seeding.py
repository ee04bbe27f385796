"""Deterministic sub-seed derivation (splitmix64)."""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x):
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master, index):
    """Independent 64-bit seed for stream ``index`` of ``master``."""
    if master < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    return _mix((int(master) + int(index) * _GOLDEN) & _MASK)


def rng(master, index=0):
    return np.random.default_rng(derive_seed(master, index))
