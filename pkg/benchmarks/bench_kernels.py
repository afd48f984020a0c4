"""Time the compiled kernels against their numpy/Python twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best wall time of each backend and the
speed-up. Without a built extension only the Python column is shown.
"""
import argparse
import timeit

import numpy as np

from catseg import kernels
from catseg.ndtensor import svd_small


def _cases(rng):
    d = 64
    m = rng.normal(size=(d, d))

    def jacobi(impl):
        g, vt = m.T.copy(), np.eye(d)
        impl.jacobi_sweep(g, vt, 1e-12)

    n = 5000
    ref = np.cumsum(rng.random(n) < 0.1).astype(np.int64)
    hyp = np.cumsum(rng.random(n) < 0.1).astype(np.int64)

    def pk(impl):
        impl.pk_disagreements(ref, hyp, 10)

    K, length = 16, 2000
    starts = np.arange(length - K + 1, dtype=np.int64)
    lengths = np.full(len(starts), K, dtype=np.int64)
    probs = rng.random((len(starts), K))

    def window(impl):
        impl.window_average(probs, starts, lengths, length)

    return {"jacobi_sweep 64x64": jacobi, "pk_disagreements n=5000": pk, "window_average n=2000 K=16": window}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    cases = _cases(np.random.default_rng(0))
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':30s} {'python':>10s} {'cython':>10s} {'speed-up':>9s}")
    for name, fn in cases.items():
        times = {}
        for backend, impl in backends.items():
            times[backend] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        py = times["python"]
        cy = times.get("cython")
        cy_col = f"{cy * 1e3:8.2f}ms" if cy is not None else f"{'-':>10s}"
        ratio = f"{py / cy:8.1f}x" if cy else f"{'-':>9s}"
        print(f"{name:30s} {py * 1e3:8.2f}ms {cy_col} {ratio}")

    m = np.random.default_rng(1).normal(size=(100, 100))
    t = min(timeit.repeat(lambda: svd_small(m), number=1, repeat=args.repeat))
    print(f"svd_small 100x100 ({kernels.BACKEND}): {t * 1e3:.1f}ms")


if __name__ == "__main__":
    main()
