"""Compare the compiled and pure-Python relaxation kernels.

Times one Poisson sweep and one PB sweep per backend on the same random
state, checks that both backends produce bitwise-identical fields, and prints
the per-sweep cost and speed-up.

    python benchmarks/bench_kernels.py --n 8 12 16 --repeat 3
"""
import argparse
import time

import numpy as np

from fdelectro._backend import get_kernels


def _state(n, seed=0):
    rng = np.random.default_rng(seed)
    h = 2.0 / n
    D = [rng.standard_normal((n, n, n)) for _ in range(3)]
    inv = [1.0 / rng.uniform(2.0, 4.0, (n, n, n)) for _ in range(3)]
    c = rng.uniform(0.5, 1.5, (2, n, n, n))
    q = np.array([1.0, -1.0])
    return h, D, inv, c, q


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, repeat):
    h, D, inv, c, q = _state(n)
    results = {}
    fields = {}
    for name in ("cython", "python"):
        kern = get_kernels(name)
        Dp = [a.copy() for a in D]
        tp = _time(lambda: kern.poisson_sweep(*Dp, *inv), repeat)
        Dq = [a.copy() for a in D]
        cq = c.copy()
        tq = _time(lambda: kern.pb_sweep(cq, *Dq, *inv, q, h, True), repeat)
        results[name] = (tp, tq)
        fields[name] = (Dp, Dq, cq)
    same = all(
        np.array_equal(a, b)
        for fa, fb in zip(fields["cython"], fields["python"])
        for a, b in zip(fa, fb)
    )
    return results, same


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'N':>4} {'kernel':>8} {'cython_s':>11} {'python_s':>11} {'speedup':>8}  identical")
    for n in args.n:
        res, same = bench(n, args.repeat)
        for k, label in enumerate(("poisson", "pb")):
            tc, tp = res["cython"][k], res["python"][k]
            print(f"{n:>4} {label:>8} {tc:>11.3e} {tp:>11.3e} {tp / tc:>8.0f}  {same}")


if __name__ == "__main__":
    main()
