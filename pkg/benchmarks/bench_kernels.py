"""Throughput of the compiled kernels against the pure-Python fallback.

Measures pair draws per second (X uniform, Y from the alias tables) and
estimator steps per second (draw plus update) on a generated graph.

    python benchmarks/bench_kernels.py --nodes 1000000 --draws 20000000
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rlpagerank import kernels
from rlpagerank.estimator import StepSchedule
from rlpagerank.graph import GraphSpec, generate
from rlpagerank.sampling import Sampler

TARGET_DRAWS_PER_SEC = 1e7


def _rate(fn, count: int, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return count / best


def bench_backend(backend, sampler: Sampler, count: int, batch: int, repeats: int) -> dict:
    xs = np.empty(count, dtype=np.int64)
    ys = np.empty(count, dtype=np.int64)
    model = sampler.model
    args = (model.row_offsets, model.col_indices, sampler.alias_prob, sampler.alias_col)

    def draws():
        backend.sample_pairs(sampler.x_key, 0, sampler.y_key, 0, *args, xs, ys)

    steps = StepSchedule().steps(0, count // batch)
    z = np.ones(model.n_nodes)

    def updates():
        z.fill(1.0)
        backend.run_steps(z, steps, 0.85, batch, sampler.x_key, 0, sampler.y_key, 0, *args)

    return {"draws": _rate(draws, count, repeats), "steps": _rate(updates, count // batch, repeats)}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=100_000)
    p.add_argument("--draws", type=int, default=5_000_000, help="draws per timed pass (compiled)")
    p.add_argument("--python-draws", type=int, default=200_000, help="draws per pass (fallback)")
    p.add_argument("--batch", type=int, default=1, help="pairs per estimator step")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    t0 = time.perf_counter()
    model = generate(GraphSpec(args.nodes, "power-law-out-degree", exponent=2.1,
                               max_degree=min(args.nodes - 1, 1000), seed=args.seed))
    sampler = Sampler(model, args.seed)
    print(f"graph: N={model.n_nodes}, {model.col_indices.size} stored entries, "
          f"setup {time.perf_counter() - t0:.1f} s")

    rows = []
    if kernels.compiled_backend is not None:
        rows.append(("compiled", bench_backend(kernels.compiled_backend, sampler, args.draws,
                                               args.batch, args.repeats)))
    else:
        print("compiled extension not available; only the fallback is measured")
    rows.append(("python", bench_backend(kernels.python_backend, sampler, args.python_draws,
                                         args.batch, 1)))

    print(f"{'backend':<10}{'draws/s':>16}{'steps/s':>16}")
    for name, r in rows:
        print(f"{name:<10}{r['draws']:>16,.0f}{r['steps']:>16,.0f}")
    if len(rows) == 2:
        c, py = rows[0][1], rows[1][1]
        print(f"speedup: draws x{c['draws'] / py['draws']:.0f}, steps x{c['steps'] / py['steps']:.0f}")
        verdict = "meets" if c["draws"] >= TARGET_DRAWS_PER_SEC else "misses"
        print(f"compiled draw rate {verdict} the {TARGET_DRAWS_PER_SEC:.0e} draws/s target")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
