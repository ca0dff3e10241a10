"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 7]

Times each kernel on both backends at sizes the Monte Carlo and the
extraction pipeline actually use, then times a full 12-report grid under
each backend in a subprocess (the backend is fixed at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from chansparse import _pykernels

try:
    from chansparse import _ckernels
except ImportError:
    _ckernels = None

GRID_SNIPPET = (
    "import time; from chansparse.experiment import run_grid; from chansparse.kernels import BACKEND;"
    "t=time.perf_counter(); run_grid(drops={drops}); print(BACKEND, time.perf_counter()-t)"
)


def cases(rng):
    sorted_60 = np.sort(rng.exponential(size=60))
    rows = rng.exponential(size=(2000, 60))
    pdp = rng.exponential(size=1024)
    return [
        ("gini_sorted R=60", "gini_sorted", (sorted_60,)),
        ("gini_rows 2000x60", "gini_rows", (rows,)),
        ("local_maxima 1024 taps", "local_maxima", (pdp, 0.5)),
    ]


def best(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--drops", type=int, default=10_000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)

    print(f"{'kernel':26} {'numpy':>12} {'cython':>12} {'speedup':>8}")
    for label, name, a in cases(rng):
        tp = best(getattr(_pykernels, name), a, args.repeat)
        if _ckernels is None:
            print(f"{label:26} {tp * 1e6:10.2f}us {'n/a':>12}")
            continue
        tc = best(getattr(_ckernels, name), a, args.repeat)
        np.testing.assert_allclose(getattr(_ckernels, name)(*a), getattr(_pykernels, name)(*a), rtol=1e-12)
        print(f"{label:26} {tp * 1e6:10.2f}us {tc * 1e6:10.2f}us {tp / tc:7.1f}x")

    print(f"\nfull grid, {args.drops} drops per cell:")
    for pure in ("1", ""):
        env = dict(os.environ, CHANSPARSE_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", GRID_SNIPPET.format(drops=args.drops)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  {out[0]:8} {float(out[1]):6.2f}s")


if __name__ == "__main__":
    main()
