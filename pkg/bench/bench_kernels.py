"""Time the compiled kernels against the pure-Python fallback.

    python3 bench/bench_kernels.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from egdkit import _purepy
from egdkit.characterize import f3
from egdkit.graph import complete, complete_bipartite, make_graph
from egdkit.minors import _images

try:
    from egdkit import _speedups
except ImportError:
    _speedups = None


def random_graph(n, p, rng):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return make_graph(n, edges)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    out = []
    for n in (10, 12, 14, 16):
        graphs = [random_graph(n, 0.4, rng) for _ in range(3)]
        out.append((f"treewidth n={n}", "treewidth_dp", graphs))
    for name, model in (("K4", complete(4)), ("K33", complete_bipartite(3, 3)), ("F3", f3())):
        hosts = [random_graph(9, 0.35, rng) for _ in range(5)]
        out.append((f"minor {name} in n=9", "partition_search", (hosts, model)))
    return out


def run_case(mod, kind, data):
    if kind == "treewidth_dp":
        for g in data:
            mod.treewidth_dp(list(g.masks), g.n)
    else:
        hosts, model = data
        masks, _ = _images(model)
        for h in hosts:
            mod.partition_search(list(h.masks), h.n, model.n, list(masks), True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _speedups is None:
        print("compiled kernels are not built; only the fallback is timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'case':<22}{'python (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for label, kind, data in cases(rng):
        tp = best_time(lambda: run_case(_purepy, kind, data), args.repeat)
        if _speedups is None:
            print(f"{label:<22}{tp:>12.4f}{'-':>14}{'-':>10}")
            continue
        tc = best_time(lambda: run_case(_speedups, kind, data), args.repeat)
        print(f"{label:<22}{tp:>12.4f}{tc:>14.4f}{tp / max(tc, 1e-9):>9.1f}x")


if __name__ == "__main__":
    main()
