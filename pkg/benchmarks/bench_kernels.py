"""Time the compiled kernels against the pure-Python twins on identical streams.

Usage: python3 benchmarks/bench_kernels.py [--n 200] [--trials 50] [--repeat 3]
"""
import argparse
import time

import numpy as np

from dcmvoter import _backend
from dcmvoter.degseq import regular
from dcmvoter.dynamics import _cdf, biased_law, trial_bitgen
from dcmvoter.graph import sample_ergodic
from dcmvoter.stationary import stationary


def workloads(n: int):
    g = sample_ergodic(regular(3, n), 0)
    d = stationary(g)
    pi_cdf, mu_cdf = _cdf(d.pi), _cdf(d.mu_tilde)
    vals, w = biased_law(g.degree_seq)
    vals, bcdf = vals.astype(np.int64), _cdf(w)
    cap = 10**6 * n
    empty = np.zeros(0, dtype=np.uint8)
    return {
        "meeting": lambda k, bgs: k.meeting(bgs, g.offsets, g.targets, pi_cdf, cap),
        "coalescence": lambda k, bgs: k.coalescence(bgs, g.offsets, g.targets, cap),
        "voter": lambda k, bgs: k.voter(bgs, g.offsets, g.targets, 0.5, empty, False, cap),
        "collapsed_visits": lambda k, bgs: k.collapsed_visits(bgs, g.offsets, g.targets, mu_cdf, 200),
        "forest": lambda k, bgs: k.forest(bgs, vals, bcdf, vals, bcdf, 500),
    }


def best_time(fn, kernels, trials, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        bgs = [trial_bitgen(1, i) for i in range(trials)]
        t0 = time.perf_counter()
        out = fn(kernels, bgs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    print(f"regular(3), n={args.n}, {args.trials} trials, best of {args.repeat}")
    print(f"{'kernel':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  same")
    for name, fn in workloads(args.n).items():
        tp, a = best_time(fn, _backend.python_kernels, args.trials, args.repeat)
        tc, b = best_time(fn, _backend.compiled_kernels, args.trials, args.repeat)
        a, b = (a, b) if isinstance(a, tuple) else ((a,), (b,))
        same = all(np.array_equal(x, y) for x, y in zip(a, b))
        print(f"{name:<18}{tp:>12.4f}{tc:>14.5f}{tp / tc:>10.1f}  {same}")


if __name__ == "__main__":
    main()
