"""Shared helpers: deterministic seed derivation and norm evaluation."""

import numpy as np

_MASK64 = (1 << 64) - 1

NORMS = ("l1", "l2", "linf")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix a master seed with a tuple of indices into a stable 64-bit seed.

    Pure integer arithmetic, so the result is identical across platforms and
    library versions. Distinct index tuples give distinct seeds with
    overwhelming probability.
    """
    state = _splitmix64(master_seed & _MASK64)
    for v in indices:
        state = _splitmix64(state ^ _splitmix64(v & _MASK64))
    return state


def lp_norm(v: np.ndarray, p: str) -> float:
    if p == "l1":
        return float(np.sum(np.abs(v)))
    if p == "l2":
        return float(np.sqrt(np.sum(np.square(v))))
    if p == "linf":
        return float(np.max(np.abs(v))) if len(v) else 0.0
    raise ValueError(f"unknown norm selector {p!r}; expected one of {NORMS}")
