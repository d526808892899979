"""Compare the compiled and numpy kernels on grid-sized matrix stacks.

    python3 benchmarks/bench_kernels.py [--points 16384] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from sigmak.kernels import BACKENDS


def stack(points, n, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (points, n, n))
    return 0.5 * (X + np.swapaxes(X, 1, 2)) + 2.0 * np.eye(n)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=128 * 128)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "cython" not in BACKENDS:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'kernel':<8}{'n':>3}{'k':>3}" + "".join(f"{b:>12}" for b in BACKENDS)
          + ("     speedup" if len(BACKENDS) > 1 else ""))
    for n, k in ((2, 2), (3, 2), (3, 3), (6, 3)):
        A = stack(args.points, n)
        lam = np.linalg.eigvalsh(A)
        for name, call in (("newton", lambda m, A=A, k=k: m.newton_batch(A, k)),
                           ("esp", lambda m, lam=lam, k=k: m.esp_batch(lam, k))):
            times = {b: min(timeit.repeat(lambda m=m: call(m), number=1, repeat=args.repeat))
                     for b, m in BACKENDS.items()}
            row = f"{name:<8}{n:>3}{k:>3}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
            if len(times) > 1:
                row += f"{times['python'] / times['cython']:>11.1f}x"
            print(row)


if __name__ == "__main__":
    main()
