"""Seed derivation and the public 64-bit mixing function.

``mix64`` is SplitMix64's finalizer applied to a combination of its
arguments. It is used for minhash values and for deriving child seeds
(per chunk, per repeat, per run), so outputs never depend on execution
order or worker count.
"""
import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _finalize(z: int) -> int:
    z = (z ^ (z >> 30)) * _M1 & MASK64
    z = (z ^ (z >> 27)) * _M2 & MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit value."""
    h = 0
    for x in parts:
        h = _finalize((h + _GOLDEN + (int(x) & MASK64)) & MASK64)
    return h


def mix64_array(seed: int, j: int, values: np.ndarray) -> np.ndarray:
    """Vectorized ``mix64(seed, j, v)`` for every v in ``values``."""
    prefix = np.uint64(mix64(seed, j))
    z = np.asarray(values, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = prefix + np.uint64(_GOLDEN) + z
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return z


def derive_seed(seed: int, *tags: int) -> int:
    return mix64(seed, *tags)


def rng_for(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & MASK64, *[int(t) & MASK64 for t in tags]]))
