"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from phiscore.kernels import _fallback, compiled


def cases():
    rng = np.random.default_rng(0)
    x = np.r_[rng.normal(0, 1, 300), rng.normal(6, 1.5, 200)]
    init = (np.full(3, 1 / 3), np.array([-1.0, 2.0, 6.0]), np.ones(3))
    names = [f"ASH OAK CATERING {i} LTD" for i in range(200)]
    flags = np.ascontiguousarray((rng.random(1100) < 0.3).astype(np.uint8))
    swaps = rng.integers(np.arange(150), 1100, size=(1000, 150), dtype=np.int64)

    def em(impl):
        w, mu, var = (a.copy() for a in init)
        impl.em_loop(x, w, mu, var, 1e-3, 100, 1e-6)

    def lloyd(impl):
        impl.lloyd_1d(x, np.array([-1.0, 2.0, 6.0]), 300)

    def indel(impl):
        for a, b in zip(names, names[1:]):
            impl.indel_distance(a, b)

    def perm(impl):
        impl.permutation_counts(flags.copy(), swaps)

    return {"em_loop (n=500, k=3)": em, "lloyd_1d (n=500, k=3)": lloyd,
            "indel_distance (199 pairs)": indel, "permutation_counts (1000 x 150)": perm}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    ext = compiled()
    if ext is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speed-up':>9s}")
    for name, fn in cases().items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat)) * 1e3
        if ext is None:
            print(f"{name:34s} {py:10.3f}")
            continue
        cy = min(timeit.repeat(lambda: fn(ext), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {py:10.3f} {cy:10.3f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
