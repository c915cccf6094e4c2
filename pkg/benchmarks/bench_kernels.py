"""Compiled kernels against the numpy fallback on the hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-``repeat`` wall time per case and the speedup.
"""
import argparse
import math
import time

import numpy as np

from npsa import _backend, _fallback
from npsa.arrival import Constant, PiecewiseConstant, realization_rngs, simulate
from npsa.value_dist import Exponential

T = 2 * math.pi


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(mod):
    rng = np.random.default_rng(0)
    big = np.sort(rng.exponential(5.0, 1_000_000))
    phis = _fallback.shortage_table(big)
    mean = math.fsum(big) / big.size
    ys = rng.uniform(0, 60, 100_000)
    ys_list = ys[:20_000].tolist()
    small = np.sort(rng.exponential(5.0, 3000))
    small_phis = _fallback.shortage_table(small)
    small_mean = math.fsum(small) / small.size
    pc = PiecewiseConstant(T / 5, [1.1, 0.9, 1.2, 1.0, 0.95], T)
    streams = [simulate(Constant(50.0, T), Exponential(5.0), g) for g in realization_rngs(0, 200)]
    thr = [np.sort(rng.exponential(5.0, (len(s), 10)), axis=1)[:, ::-1].copy() for s in streams]

    def curves(n=10):
        prev = (np.empty(0), np.empty(0), np.empty((0, 4)))
        for _ in range(n):
            prev = mod.integrate_curve(T, pc.bin_width, pc.rates, _fallback.PHI_EMPIRICAL, 0.0, 0.0,
                                       small, small_phis, small_mean, *prev, 1e-6, 1e-8, 1e-14, 10**6)

    return {
        "shortage_table N=1e6": lambda: mod.shortage_table(big),
        "shortage_eval 1e5 (vector)": lambda: mod.shortage_eval(big, phis, mean, ys),
        "shortage_eval1 2e4 (scalar)": lambda: [mod.shortage_eval1(big, phis, mean, y) for y in ys_list],
        "replay 200 streams, n=10": lambda: [mod.replay(s.x, t) for s, t in zip(streams, thr)],
        "10 curves, empirical N=3000": curves,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _backend.COMPILED:
        raise SystemExit("extension not built; run `pip install -e . --no-build-isolation`")
    fast, slow = cases(_backend.kernels), cases(_fallback)
    print(f"{'case':32s} {'cython':>11s} {'python':>11s} {'speedup':>8s}")
    for name in fast:
        a, b = best_of(fast[name], args.repeat), best_of(slow[name], args.repeat)
        print(f"{name:32s} {a * 1e3:9.2f}ms {b * 1e3:9.2f}ms {b / a:7.1f}x")


if __name__ == "__main__":
    main()
