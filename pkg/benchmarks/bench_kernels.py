"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so this needs the extension built
(``pip install -e . --no-build-isolation``). Results are also checked for
bitwise agreement before timing.
"""

import argparse
import timeit

import numpy as np

from rankblend import _pykernels

try:
    from rankblend import _kernels
except ImportError:
    raise SystemExit("compiled extension not built; nothing to compare") from None


def cases(n, m, rng):
    y = rng.integers(0, 2, n).astype(np.uint8)
    y[:2] = (0, 1)
    scores = rng.random(n)
    tied = np.round(scores, 2)
    matrix = rng.random((m, n))
    w = rng.dirichlet(np.ones(m))
    return {
        "auroc": lambda k: k.auroc(scores, y),
        "auroc (ties)": lambda k: k.auroc(tied, y),
        "midranks": lambda k: k.midranks(tied),
        "mixture": lambda k: k.mixture(matrix, w, True),
        "mixture_auroc": lambda k: k.mixture_auroc(matrix, w, y, True),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 5000, 50000])
    parser.add_argument("--models", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<15}{'n':>8}{'python us':>12}{'cython us':>12}{'speedup':>9}")
    for n in args.sizes:
        for name, call in cases(n, args.models, rng).items():
            a, b = np.asarray(call(_pykernels)), np.asarray(call(_kernels))
            assert np.array_equal(a, b), f"{name} differs between backends at n={n}"
            number = max(1, 20000 // n)
            times = {}
            for label, mod in (("python", _pykernels), ("cython", _kernels)):
                best = min(timeit.repeat(lambda: call(mod), number=number, repeat=args.repeat))
                times[label] = best / number * 1e6
            print(f"{name:<15}{n:>8}{times['python']:>12.1f}{times['cython']:>12.1f}"
                  f"{times['python'] / times['cython']:>8.1f}x")


if __name__ == "__main__":
    main()
