"""Seedable 64-bit hashing of identifiers onto the open unit interval.

All randomness in the package flows through this module: a seed selects one
concrete hash function, and per-trial seeds are derived deterministically so
experiments are reproducible and trials are mutually independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# value = (raw + 1/2) * 2**-64, so 0 < value < 1 for every 64-bit raw.
_SCALE = 2.0**-64


def mix64(z: int) -> int:
    """Finalizing avalanche mix of a 64-bit word (splitmix64 finalizer)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def fnv1a64(data: bytes) -> int:
    """Seed-independent FNV-1a fold of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def seed_key(seed: int) -> int:
    """Mixing key selected by a seed; applied on top of the identifier fold."""
    return mix64((seed + _GOLDEN) & MASK64)


def unit_value(raw: int) -> float:
    return (raw + 0.5) * _SCALE


@dataclass(frozen=True, order=True)
class UnitHash:
    """A 64-bit hash and its canonical fraction strictly inside (0, 1).

    Ordering compares the raw words; ``value`` is the monotone image
    ``(raw + 1/2) * 2**-64`` used wherever a threshold is a real number.
    """

    raw: int

    @property
    def value(self) -> float:
        return unit_value(self.raw)


def hash_identifier(identifier: bytes, seed: int) -> UnitHash:
    """Deterministic hash of a byte-string identifier under the given seed."""
    return UnitHash(mix64(fnv1a64(identifier) ^ seed_key(seed)))


def derive_trial_seed(base: int, trial_index: int) -> int:
    """Seed of the trial_index-th independent hash function derived from base."""
    if trial_index < 0:
        raise ValueError("trial_index must be nonnegative")
    return mix64((base + (trial_index + 1) * _GOLDEN) & MASK64)


# ---------------------------------------------------------------------------
# Vectorized twins of the scalar functions above.  These operate on uint64
# arrays and are exact replicas bit for bit; tests assert the agreement.
# ---------------------------------------------------------------------------

_U = np.uint64


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _U(30)
    z *= _U(0xBF58476D1CE4E5B9)
    z ^= z >> _U(27)
    z *= _U(0x94D049BB133111EB)
    z ^= z >> _U(31)
    return z


def fold_identifiers(identifiers) -> np.ndarray:
    """FNV-1a folds of arbitrary byte strings (scalar loop)."""
    return np.array([fnv1a64(i) for i in identifiers], dtype=np.uint64)


def fold_decimal_ids(values: np.ndarray, width: int) -> np.ndarray:
    """FNV-1a folds of zero-padded ``width``-digit decimal encodings.

    Equivalent to ``fnv1a64(str(v).zfill(width).encode())`` for each v, but
    folds a whole array with one vector pass per digit position.
    """
    v = values.astype(np.uint64)
    if width < 1 or (len(v) and int(v.max()) >= 10**width):
        raise ValueError("width too small for the given values")
    h = np.full(v.shape, _U(_FNV_OFFSET), dtype=np.uint64)
    for pos in range(width):
        div = _U(10 ** (width - 1 - pos))
        digit = (v // div) % _U(10) + _U(ord("0"))
        h ^= digit
        h *= _U(_FNV_PRIME)
    return h


def raw_array(folds: np.ndarray, seed: int) -> np.ndarray:
    """Raw hashes of pre-folded identifiers under one seed."""
    return mix64_array(folds ^ _U(seed_key(seed)))


def value_array(raws: np.ndarray) -> np.ndarray:
    """Unit-interval values of an array of raw hashes."""
    return (raws.astype(np.float64) + 0.5) * _SCALE


def derive_trial_seeds(base: int, start: int, count: int) -> np.ndarray:
    """Vectorized derive_trial_seed for trial indices start..start+count-1."""
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    return mix64_array(_U(base & MASK64) + idx * _U(_GOLDEN))


def seed_key_array(seeds: np.ndarray) -> np.ndarray:
    return mix64_array(seeds + _U(_GOLDEN))
