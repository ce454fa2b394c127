"""Compare the compiled and pure-Python kernel backends.

Times three workloads under each backend and checks that both produce the
same results:

* ``solve``: exact split optimization over a generated order stream
* ``tree``: growing a CART tree (Gini split search)
* ``boost``: LogitBoost with regression stumps (weighted stump search)

Usage::

    python3 benchmarks/bench_kernels.py [--orders 400] [--examples 3000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from splitshort import kernels
from splitshort.generator import GeneratorConfig, generate_network, generate_orders
from splitshort.models import train_decision_tree, train_logitboost
from splitshort.optimizer import label_orders


def _best_of(fn, repeat):
    best, result = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def workloads(n_orders: int, n_examples: int):
    gen = GeneratorConfig(seed=5, n_orders=n_orders)
    net = generate_network(gen)
    orders = generate_orders(gen, net)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n_examples, 26))
    y = (X[:, 0] + 0.5 * X[:, 3] - X[:, 7] * X[:, 2] + rng.normal(scale=0.8, size=n_examples) > 0).astype(np.int64)
    return {
        "solve": lambda: [(l.y, l.nodes_used, l.objective) for l in label_orders(orders, net)],
        "tree": lambda: train_decision_tree(X, 5, y=y).predict_proba(X),
        "boost": lambda: train_logitboost(X, 50, y=y).predict_proba(X),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, default=400)
    ap.add_argument("--examples", type=int, default=3000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the Python backend is available")
    jobs = workloads(args.orders, args.examples)
    prev = kernels.backend()
    print(f"{'workload':<8} " + " ".join(f"{b + ' (s)':>12}" for b in backends) + f" {'speedup':>9}  identical")
    try:
        for name, fn in jobs.items():
            times, outs = {}, {}
            for b in backends:
                kernels.use_backend(b)
                times[b], outs[b] = _best_of(fn, args.repeat)
            same = all(np.array_equal(np.asarray(outs[b]), np.asarray(outs["python"])) for b in backends)
            speedup = times["python"] / times["cython"] if "cython" in times else 1.0
            print(f"{name:<8} " + " ".join(f"{times[b]:>12.3f}" for b in backends) + f" {speedup:>8.1f}x  {same}")
    finally:
        kernels.use_backend(prev)


if __name__ == "__main__":
    main()
