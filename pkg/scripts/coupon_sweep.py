"""Tabulate partial coupon-collection bounds against the exact expectation.

Writes one CSV row per (distribution, m) with the cutoff/deviation bound
pair, the exact sum (n <= 16) and the uniform harmonic value.

    python3 scripts/coupon_sweep.py --n 12 --out runs/coupon_sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from magexplore.coupon import harmonic_lower_bound, partial_collection_bounds


def distributions(n, rng):
    k = np.arange(1, n + 1, dtype=float)
    yield "uniform", np.full(n, 1 / n)
    for gamma in (0.5, 1.0, 2.0):
        p = k ** -gamma
        yield f"zipf {gamma:g}", p / p.sum()
    for alpha in (0.3, 1.0, 10.0):
        yield f"dirichlet {alpha:g}", rng.dirichlet(np.full(n, alpha))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh)
    writer.writerow(["distribution", "n", "m", "lower", "exact", "upper", "harmonic"])
    for name, p in distributions(args.n, np.random.default_rng(args.seed)):
        for m in range(1, args.n + 1):
            b = partial_collection_bounds(p, m, args.n, use_exact=False)
            writer.writerow([name, args.n, m, repr(b.lower), repr(b.exact), repr(b.upper),
                             repr(harmonic_lower_bound(args.n, m))])
    if args.out:
        fh.close()
