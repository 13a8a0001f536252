"""Pure-NumPy reference implementations of the hot loops."""

from __future__ import annotations

import numpy as np


def lattice_accumulate(target: np.ndarray, vals: np.ndarray, nodes: np.ndarray, patch: np.ndarray,
                       offset: np.ndarray) -> None:
    """Add ``vals[a] * patch[w + offset - nodes[a]]`` into ``target[w]`` wherever the index is valid.

    Args:
        target: complex ``(K, K)`` accumulator, modified in place.
        vals: complex ``(A,)`` active-node values.
        nodes: int64 ``(A, 2)`` active-node lattice indices.
        patch: complex ``(n1, n2)`` samples of the second operand.
        offset: int64 ``(2,)`` window origin minus patch origin.
    """
    K1, K2 = target.shape
    n1, n2 = patch.shape
    for a in range(len(vals)):
        s1 = int(nodes[a, 0] - offset[0])
        s2 = int(nodes[a, 1] - offset[1])
        lo1, hi1 = max(s1, 0), min(s1 + n1, K1)
        lo2, hi2 = max(s2, 0), min(s2 + n2, K2)
        if lo1 >= hi1 or lo2 >= hi2:
            continue
        target[lo1:hi1, lo2:hi2] += vals[a] * patch[lo1 - s1 : hi1 - s1, lo2 - s2 : hi2 - s2]


def power_sum(mod: np.ndarray, p: float) -> float:
    """``sum(mod ** p)`` over a nonnegative array."""
    mod = np.asarray(mod, dtype=float)
    if p == 2:
        return float(np.sum(mod * mod))
    if p == 1:
        return float(np.sum(mod))
    return float(np.sum(mod**p))
