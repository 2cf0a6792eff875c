"""Time the compiled ARMA kernels against the pure-Python fallback.

    python bench/bench_kernels.py [--n 20000] [--repeat 5]

Each kernel runs on the same seeded ARMA(2,1) series in both backends; the
table reports the best wall time of ``--repeat`` runs and the speed-up.
"""
import argparse
import timeit

import numpy as np

from windcast import _pykernels

try:
    from windcast import _ckernels
except ImportError:
    _ckernels = None

AR, MA = (0.6, 0.2), (0.3,)


def cases(n):
    rng = np.random.default_rng(0)
    eps = rng.standard_normal(n)
    x = _pykernels.arma_filter(eps, AR, MA)
    e = _pykernels.arma_residuals(x, AR, MA)
    return {
        "arma_filter": lambda k: k.arma_filter(eps, AR, MA),
        "arma_residuals": lambda k: k.arma_residuals(x, AR, MA),
        "recursive_filter": lambda k: k.recursive_filter(x, MA, len(AR)),
        "rolling_forecast(h=4)": lambda k: k.rolling_forecast(x, e, AR, MA, n // 2, n - 1, 4),
    }


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<24}{'python (ms)':>14}{'compiled (ms)':>16}{'speed-up':>10}")
    for name, call in cases(args.n).items():
        py = best_time(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<24}{py * 1e3:>14.2f}{'-':>16}{'-':>10}")
            continue
        np.testing.assert_allclose(call(_ckernels), call(_pykernels), rtol=1e-12, atol=1e-12)
        c = best_time(lambda: call(_ckernels), args.repeat)
        print(f"{name:<24}{py * 1e3:>14.2f}{c * 1e3:>16.3f}{py / c:>9.0f}x")


if __name__ == "__main__":
    main()
