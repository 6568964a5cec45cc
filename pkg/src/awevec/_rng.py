"""Seedable counter-based random source shared by the Python and compiled paths.

Training must be bit-reproducible for a fixed seed and single worker, and the
streaming window generator has to agree exactly with the compiled training
kernels. Both therefore use the same splitmix64 sequence; the numba kernels
inline the identical integer mixing (see _kernels.py).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """One splitmix64 output step on a 64-bit state value."""
    z &= _MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit seed.

    Used to give every (seed, epoch, worker, purpose) combination its own
    independent stream.
    """
    state = 0x8E1FDE30F4A0C6B7
    for p in parts:
        state = mix64((state + _GOLDEN) ^ (int(p) & _MASK64))
    return state


class Splitmix64:
    """Tiny deterministic generator; one instance per stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return mix64(self.state)

    def next_f64(self) -> float:
        # 53 uniform bits in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def next_below(self, n: int) -> int:
        # Modulo bias is ~n/2**64, irrelevant for the ranges used here.
        return self.next_u64() % n

    def state_array(self) -> np.ndarray:
        """State as a 1-element uint64 array the kernels can advance in place."""
        return np.array([self.state], dtype=np.uint64)

    def set_state(self, arr: np.ndarray) -> None:
        self.state = int(arr[0])
