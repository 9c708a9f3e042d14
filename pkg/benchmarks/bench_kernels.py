"""Compare the compiled and pure-Python elimination kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--json]

Each workload runs under both backends and the outputs are checked equal.
"""

import argparse
import json
import time

import numpy as np

from pgcache import gf, kernels
from pgcache import linegraph as lg


def _stacked(q, k, n, s, seed=0):
    f = gf.make_field(q)
    rng = np.random.default_rng(seed)
    prefix = rng.integers(0, q, size=(k // 2, k)).tolist()
    blocks = rng.integers(0, q, size=(n, s, k))
    return lambda: kernels.stacked_ranks(f, prefix, blocks, k)


def _rref(q, k, rows, count, seed=0):
    f = gf.make_field(q)
    rng = np.random.default_rng(seed)
    mats = [rng.integers(0, q, size=(rows, k)).tolist() for _ in range(count)]
    return lambda: [kernels.rref(f, m, k) for m in mats]


def _build(q, k, m, t):
    def run():
        ctx = lg.build_geometry(q, k, m, t)
        L = lg.build_line_graph(ctx)
        return L.incidence.sum(), len(ctx.Z_set)

    return run


WORKLOADS = {
    "stacked_ranks q=2 k=8 n=20000": _stacked(2, 8, 20000, 3),
    "stacked_ranks q=9 k=6 n=5000": _stacked(9, 6, 5000, 2),
    "rref q=4 5x7 x2000": _rref(4, 7, 5, 2000),
    "line graph (2,5,1,1)": _build(2, 5, 1, 1),
    "line graph (3,4,1,1)": _build(3, 4, 1, 1),
}


def _same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, list):
        return all(_same(x, y) for x, y in zip(a, b)) and len(a) == len(b)
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return a == b


def timed(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    backends = kernels.available_backends()
    rows = []
    prev = kernels.get_backend()
    try:
        for name, fn in WORKLOADS.items():
            res = {}
            outs = {}
            for b in backends:
                kernels.set_backend(b)
                res[b], outs[b] = timed(fn, args.repeat)
            if len(outs) == 2:
                assert _same(outs["python"], outs["cython"]), f"backends disagree on {name}"
            row = {"workload": name, **{f"{b}_s": round(t, 4) for b, t in res.items()}}
            if "cython" in res:
                row["speedup"] = round(res["python"] / res["cython"], 1)
            rows.append(row)
    finally:
        kernels.set_backend(prev)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if "cython" not in backends:
        print("compiled backend not available; timings are pure Python only")
    print(f"{'workload':<34}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    for r in rows:
        print(f"{r['workload']:<34}{r['python_s']:>10.4f}{r.get('cython_s', float('nan')):>10.4f}{r.get('speedup', float('nan')):>9.1f}")


if __name__ == "__main__":
    main()
