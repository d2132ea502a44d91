"""Compiled vs pure-Python forced-measurement trials.

    python3 benchmarks/bench_forced.py [--trials N] [--terms K] [--repeat R]

Both backends consume the same Philox streams, so the run also checks that
they take identical branches.
"""
import argparse
import time

import numpy as np

from equiproj import simulate, synthesis


def workload(terms: int, seed: int):
    rng = np.random.default_rng(seed)
    prog = synthesis.GateProgram([t for _ in range(terms) for t in synthesis.random_program(rng, 1).terms])
    seq = synthesis.compile_program(prog)
    v = rng.standard_normal(8)
    return seq, np.concatenate([v / np.linalg.norm(v), np.zeros(8)])


def best_of(repeat, fn):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--terms", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    seq, psi = workload(args.terms, args.seed)
    print(f"{args.terms}-term program, {len(seq.chain()) - 1} chain steps, {args.trials} trials")
    results = {}
    for backend in ("python", "cython"):
        if backend == "cython" and simulate._forced_kernel is None:
            print("cython : compiled kernel not built, skipped")
            continue
        dt, stats = best_of(args.repeat, lambda: simulate.run_trials(psi, seq, args.trials, args.seed,
                                                                     backend=backend))
        results[backend] = (dt, stats)
        print(f"{backend:7s}: {dt:8.3f} s  ({1e6 * dt / args.trials:8.1f} us/trial), "
              f"mean measurements {stats.mean_measurements:.3f}")
    if len(results) == 2:
        (tp, sp), (tc, sc) = results["python"], results["cython"]
        same = sp.depth_hist == sc.depth_hist and sp.attempts == sc.attempts
        print(f"speedup: {tp / tc:.1f}x; identical branch statistics: {same}")


if __name__ == "__main__":
    main()
