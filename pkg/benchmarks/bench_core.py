"""Time the compiled kernels against the numpy fallback.

Usage: ``python3 benchmarks/bench_core.py [--repeat N]``. Prints one line
per kernel and problem size with the best-of-N wall time of each backend
and the speed-up. Exits with an error if the extension is not built.
"""

import argparse
import sys
import timeit

import numpy as np

from pcasvm import _pure
from pcasvm.svm import KernelSpec, kernel_matrix

try:
    from pcasvm import _core
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")


def smo_case(p, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(p, 5))
    y = np.where(x[:, 0] + 0.5 * rng.normal(size=p) > 0, 1.0, -1.0)
    gram = kernel_matrix(KernelSpec("rbf").resolved(5), x, x)
    fast = lambda: _core.smo_solve(gram, y, 100.0, 1e-6, 10**7)  # noqa: E731
    slow = lambda: _pure.smo_solve(gram.__getitem__, gram.diagonal().copy(), y, 100.0, 1e-6, 10**7)  # noqa: E731
    return fast, slow


def jacobi_case(n, seed=0):
    b = np.random.default_rng(seed).normal(size=(2 * n, n))
    a = b.T @ b
    return (lambda: _core.jacobi_eigh(a, 1e-12, 100)), (lambda: _pure.jacobi_eigh(a, 1e-12, 100))


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    print(f"{'kernel':<8} {'size':>6} {'cython_s':>10} {'python_s':>10} {'speedup':>8}")
    cases = [("smo", p, smo_case) for p in (100, 250, 500)] + [("jacobi", n, jacobi_case) for n in (10, 26, 50)]
    for name, size, make in cases:
        fast, slow = make(size)
        t_fast, t_slow = best(fast, args.repeat), best(slow, args.repeat)
        print(f"{name:<8} {size:>6} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
