"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths on a training-shaped workload:
1. triple_scores over a large batch
2. candidate_distances (one ranking query per test triple)
3. pair_update_batch, a full sequential epoch of SGD pairs

and reports the speedup plus the worst numeric deviation between the two
backends. Run as: python3 benchmarks/bench_kernels.py [--pairs N] [--dim D]
"""

import argparse
import time

import numpy as np

from softkge import kernels_numba, kernels_numpy


def make_workload(n_pairs, n_ent, n_rel, dim, seed=0):
    rng = np.random.default_rng(seed)
    ent = rng.normal(0, 0.5, size=(n_ent, dim))
    rel = rng.normal(0, 0.5, size=(n_rel, dim))
    pos_h = rng.integers(0, n_ent, n_pairs)
    pos_r = rng.integers(0, n_rel, n_pairs)
    pos_t = rng.integers(0, n_ent, n_pairs)
    neg_h = rng.integers(0, n_ent, n_pairs)
    neg_t = pos_t.copy()
    idx = np.arange(n_pairs, dtype=np.int64)
    return ent, rel, pos_h, pos_r, pos_t, neg_h, neg_t, idx


def run_update(mod, workload, l1=False):
    ent, rel, pos_h, pos_r, pos_t, neg_h, neg_t, idx = workload
    e = ent.copy()
    r = rel.copy()
    state = (np.zeros_like(e), np.zeros_like(r), np.zeros(idx.size), np.zeros(idx.size))
    start = time.perf_counter()
    mod.pair_update_batch(
        e, r, *state, pos_h, pos_r, pos_t, neg_h, neg_t, idx,
        2, l1, 1.0, 0.5, 1.5, 1.0, 1.0, 1.0, 1.0, 0.05, 0.05, 1e-8, True,
    )
    return time.perf_counter() - start, e, state[2]


def bench(label, fn_numpy, fn_numba, repeats=3):
    t_np = min(fn_numpy() for _ in range(repeats))
    t_nb = min(fn_numba() for _ in range(repeats))
    print(f"{label:24s} numpy {t_np * 1e3:9.2f} ms   numba {t_nb * 1e3:9.2f} ms   "
          f"speedup {t_np / t_nb:6.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=20000)
    parser.add_argument("--entities", type=int, default=2000)
    parser.add_argument("--relations", type=int, default=20)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    workload = make_workload(args.pairs, args.entities, args.relations, args.dim)
    ent, rel, pos_h, pos_r, pos_t, *_ = workload
    query = ent[0] + rel[0]

    print(f"workload: {args.pairs} pairs, {args.entities} entities, "
          f"{args.relations} relations, dim {args.dim}")
    print("warming up the JIT compiler...")
    small = make_workload(8, 16, 2, args.dim)
    run_update(kernels_numba, small)
    kernels_numba.triple_scores(ent, rel, pos_h[:8], pos_r[:8], pos_t[:8], False)
    kernels_numba.candidate_distances(ent, query, False)
    print()

    bench(
        "triple_scores",
        lambda: timed(lambda: kernels_numpy.triple_scores(ent, rel, pos_h, pos_r, pos_t, False)),
        lambda: timed(lambda: kernels_numba.triple_scores(ent, rel, pos_h, pos_r, pos_t, False)),
        args.repeats,
    )
    bench(
        "candidate_distances",
        lambda: timed(lambda: kernels_numpy.candidate_distances(ent, query, False)),
        lambda: timed(lambda: kernels_numba.candidate_distances(ent, query, False)),
        args.repeats,
    )

    t_np, e_np, xi_np = run_update(kernels_numpy, workload)
    t_nb, e_nb, xi_nb = run_update(kernels_numba, workload)
    for _ in range(args.repeats - 1):
        t_np = min(t_np, run_update(kernels_numpy, workload)[0])
        t_nb = min(t_nb, run_update(kernels_numba, workload)[0])
    print(f"{'pair_update_batch':24s} numpy {t_np * 1e3:9.2f} ms   "
          f"numba {t_nb * 1e3:9.2f} ms   speedup {t_np / t_nb:6.1f}x")

    dev_scores = np.max(np.abs(
        kernels_numpy.triple_scores(ent, rel, pos_h, pos_r, pos_t, False)
        - kernels_numba.triple_scores(ent, rel, pos_h, pos_r, pos_t, False)
    ))
    dev_update = max(np.max(np.abs(e_np - e_nb)), np.max(np.abs(xi_np - xi_nb)))
    print()
    print(f"max deviation: scores {dev_scores:.2e}, one epoch of updates {dev_update:.2e}")
    agree = dev_scores < 1e-10 and dev_update < 1e-9
    print(f"backends {'agree' if agree else 'DISAGREE'}")


def timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


if __name__ == "__main__":
    main()
