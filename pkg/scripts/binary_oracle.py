"""Compare Go-Explore on SK or LABS with exhaustive enumeration (N <= 20 or so).

    python3 scripts/binary_oracle.py sk --N 16 --seeds 0 1 2 3 4
    python3 scripts/binary_oracle.py labs --N 16
"""
import argparse
import time

import numpy as np

from magexplore.engine import EngineConfig, run
from magexplore.problems import all_binary_states, hamming_figure_of_merit, labs_energies, make_problem, sk_energies


def brute_force(problem, N):
    states = all_binary_states(N)
    if problem.name == "sk":
        return sk_energies(problem.params["instance"], states)
    return labs_energies(states)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem", choices=["sk", "labs"])
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--instance-seed", type=int, default=0)
    ap.add_argument("--L", type=int, default=10)
    ap.add_argument("--M", type=int, nargs="+", default=[300, 3000])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = ap.parse_args()

    params = dict(N=args.N) if args.problem == "labs" else dict(N=args.N, instance_seed=args.instance_seed)
    problem = make_problem(args.problem, **params)
    energies = np.sort(brute_force(problem, args.N))
    lo, hi = energies[0], energies[-1]
    print(f"{args.problem} N={args.N}: min {lo:.4f}, max {hi:.4f}, 100th best {energies[99]:.4f}")
    print("seed      M  elites  r'_E     best     gap  rank  seconds")
    for seed in args.seeds:
        for M in args.M:
            t0 = time.perf_counter()
            result = run(problem, EngineConfig(L=args.L, M=M, seed=seed))
            elites = result.elites()
            best = min(e.objective for e in elites)
            rank = int(np.searchsorted(energies, best - 1e-9 * max(1.0, abs(best)))) + 1
            print(f"{seed:4d} {M:6d} {len(elites):7d} {hamming_figure_of_merit(len(elites), args.N):5d} "
                  f"{best:8.3f} {(best - lo) / (hi - lo):7.4f} {rank:5d} {time.perf_counter() - t0:8.1f}")
