"""Time the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--rows N] [--repeat R]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from capsapprox import backend as be
from capsapprox.analysis import SweepSpec, gen_vectors
from capsapprox.softmax import APPROX_SOFTMAX, SoftmaxImpl, softmax_rows
from capsapprox.squash import APPROX_SQUASH, SquashImpl, squash_rows


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if be.HAVE_NUMBA else [])

    cases = []
    for v in APPROX_SOFTMAX:
        for n in (10, 128):
            cases.append((f"softmax {v}", n, lambda x, b, v=v: softmax_rows(SoftmaxImpl(v), x, b)))
    for v in APPROX_SQUASH:
        for n in (8, 32):
            cases.append((f"squash {v}", n, lambda x, b, v=v: squash_rows(SquashImpl(v), x, b)))

    print(f"{'unit':<16}{'n':>5}" + "".join(f"{b + ' (s)':>14}" for b in backends) + f"{'speedup':>10}")
    for name, n, run in cases:
        x = gen_vectors(SweepSpec(n=n, count=args.rows, lo=-8.0, hi=8.0))
        for b in backends:
            run(x[:8], b)  # warm up and trigger jit compilation
        if len(backends) == 2:
            a, c = (run(x, b).raw for b in backends)
            assert np.array_equal(a, c), f"backends disagree on {name} n={n}"
        t = [best_of(lambda b=b: run(x, b), args.repeat) for b in backends]
        speed = f"{t[0] / t[1]:>9.1f}x" if len(t) == 2 else f"{'-':>10}"
        print(f"{name:<16}{n:>5}" + "".join(f"{s:>14.4f}" for s in t) + speed)


if __name__ == "__main__":
    main()
