"""Compare the compiled and pure-Python Jacobi eigensolvers.

    python benchmarks/bench_kernels.py [--sizes 4 9 16 36] [--repeat 20]
"""

import argparse
import time

import numpy as np

from mapcones import _jacobi_py

try:
    from mapcones import _jacobi
except ImportError:
    _jacobi = None


def _time(fn, M, repeat):
    fn(M)  # warm-up
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(M)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 9, 16, 36, 64])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'size':>5} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>8} {'max |dw|':>10}")
    for n in args.sizes:
        G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M = 0.5 * (G + G.conj().T)
        t_py = _time(_jacobi_py.jacobi_eigh, M, max(1, args.repeat // 4))
        w_py = _jacobi_py.jacobi_eigh(M)[0]
        if _jacobi is None:
            print(f"{n:>5} {'n/a':>12} {t_py * 1e3:>12.3f} {'':>8}")
            continue
        t_c = _time(_jacobi.jacobi_eigh, M, args.repeat)
        dw = np.max(np.abs(_jacobi.jacobi_eigh(M)[0] - w_py))
        print(f"{n:>5} {t_c * 1e3:>12.3f} {t_py * 1e3:>12.3f} {t_py / t_c:>8.1f} {dw:>10.1e}")


if __name__ == "__main__":
    main()
