"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on identical inputs under both backends; outputs are
checked for equality before timings are printed.
"""

import argparse
import time

import numpy as np

from cohortkit import _backend
from cohortkit.distribution import make_backward_posterior
from cohortkit.simulation import poisson_inversion_table


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    small = make_backward_posterior(8, 0.8)
    big = make_backward_posterior(400, 0.9)
    cdf = poisson_inversion_table(small.a)
    return [
        ("forward_counts N=100 x 1e5",
         lambda k: k.forward_counts(1, 100, 0.7, 0, 100_000)),
        ("backward_attempts a=10 x 2e5",
         lambda k: k.backward_attempts(1, small.n, small.p, small.a, cdf, 0, 200_000)),
        ("backward_attempts a=444 (PTRS) x 5e4",
         lambda k: k.backward_attempts(1, big.n, big.p, big.a, None, 0, 50_000)),
        ("oracle_log_series n=40 p=0.1",
         lambda k: k.oracle_log_series(40, 400.0, 0.1, 1e-15)),
    ]


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases():
        timings, outputs = [], []
        for name in names:
            t, out = _best(lambda: fn(_backend.get(name)), args.repeat)
            timings.append(t)
            outputs.append(out)
        line = f"{label:40s}" + "".join(f"{t * 1e3:10.1f}ms" for t in timings)
        if len(names) > 1:
            line += f"{timings[1] / timings[0]:11.1f}x"
            if not _same(outputs[0], outputs[1]):
                line += "  (outputs differ)"
        print(line)


if __name__ == "__main__":
    main()
