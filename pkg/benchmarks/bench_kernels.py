"""Compare the compiled kernels with the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``. Both backends are imported
side by side, checked for agreement, and timed on the same inputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from nsbesov._kernels import _pykernels

try:
    from nsbesov._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def accumulate_case(active: int, K: int, n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(active) + 1j * rng.standard_normal(active)
    nodes = rng.integers(0, n, size=(active, 2)).astype(np.int64)
    patch = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    offset = np.array([n // 2 - K // 2, n // 2 - K // 2], dtype=np.int64)
    return vals, nodes, patch, offset


def bench_accumulate(mod, case, K: int, repeat: int) -> tuple[float, np.ndarray]:
    vals, nodes, patch, offset = case
    target = np.zeros((K, K), dtype=complex)
    mod.lattice_accumulate(target, vals, nodes, patch, offset)
    t = min(timeit.repeat(lambda: mod.lattice_accumulate(np.zeros((K, K), dtype=complex), vals, nodes, patch, offset),
                          number=1, repeat=repeat))
    return t, target


def bench_power(mod, mod_arr: np.ndarray, p: float, repeat: int) -> tuple[float, float]:
    val = float(mod.power_sum(mod_arr, p))
    t = min(timeit.repeat(lambda: mod.power_sum(mod_arr, p), number=1, repeat=repeat))
    return t, val


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels is not None else [])
    if _ckernels is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':<34}{'backend':<10}{'seconds':>12}{'speedup':>10}")
    for active, K, n in [(2_000, 160, 130), (20_000, 320, 130), (200_000, 64, 40)]:
        case = accumulate_case(active, K, n)
        results = {name: bench_accumulate(mod, case, K, args.repeat) for name, mod in backends}
        base = results["python"][0]
        if "cython" in results:
            diff = np.max(np.abs(results["cython"][1] - results["python"][1]))
            assert diff <= 1e-12 * max(1.0, np.max(np.abs(results["python"][1]))), diff
        for name, (t, _) in results.items():
            print(f"{f'lattice_accumulate A={active} K={K}':<34}{name:<10}{t:>12.5f}{base / t:>9.1f}x")
    rng = np.random.default_rng(1)
    arr = np.abs(rng.standard_normal((2048, 2048)))
    for p in (1.0, 2.0, 4.0, 1.5):
        results = {name: bench_power(mod, arr, p, args.repeat) for name, mod in backends}
        base = results["python"][0]
        if "cython" in results:
            a, b = results["cython"][1], results["python"][1]
            assert abs(a - b) <= 1e-10 * abs(b), (a, b)
        for name, (t, _) in results.items():
            print(f"{f'power_sum 2048^2 p={p:g}':<34}{name:<10}{t:>12.5f}{base / t:>9.1f}x")


if __name__ == "__main__":
    main()
