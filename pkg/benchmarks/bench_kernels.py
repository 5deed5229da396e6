"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat 50]
The first numba call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from vtamp import _kernels as K


def timeit(fn, *args, repeat=50):
    fn(*args)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def cases(rng):
    state = (rng.normal(size=1 << 14) + 1j * rng.normal(size=1 << 14)).astype(np.complex128)
    counts = rng.integers(0, 50, size=(10_000, 24)).astype(np.int64)
    yield "fejer_probs n=12", K.fejer_probs_numpy, K.fejer_probs_numba, (0.3137, 12)
    yield "fwht 64 x 2^10", K.fwht_numpy, K.fwht_numba, (rng.normal(size=(64, 1 << 10)) + 0j,)
    yield "apply_h 14 qubits", K.apply_h_numpy, K.apply_h_numba, (state.copy(), 5)
    yield "apply_cphase", K.apply_cphase_numpy, K.apply_cphase_numba, (state.copy(), 2, 9, 0.7)
    yield "apply_swap", K.apply_swap_numpy, K.apply_swap_numba, (state.copy(), 1, 12)
    yield "majority_tally 1e4x24", K.majority_tally_numpy, K.majority_tally_numba, (counts, 24)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba not installed; only the numpy path is available")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, f_np, f_nb, a in cases(rng):
        t_np = timeit(f_np, *a, repeat=args.repeat)
        t_nb = timeit(f_nb, *a, repeat=args.repeat)
        print(f"{name:24s} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
