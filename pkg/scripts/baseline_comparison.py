"""Full algorithm versus the fixed-bandwidth baseline on one problem.

QD scores share one normalization (min_f = 0, max_f over every run compared)
so the numbers are comparable across algorithms.

    python3 scripts/baseline_comparison.py scripts/configs/baseline_sweep.json
"""
import argparse
import csv
import json
import time
from pathlib import Path

import numpy as np

from magexplore.engine import EngineConfig, run
from magexplore.metrics import score_history
from magexplore.problems import make_problem


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    args = ap.parse_args()
    cfg = json.loads(Path(args.config).read_text())

    problem = make_problem(**cfg["problem"])
    engine = cfg["engine"]
    variants = [("full", dict(engine))]
    variants += [(f"baseline {b:g}", dict(engine, algorithm="baseline", baseline_bandwidth=b)) for b in cfg["bandwidths"]]

    results = {}
    for label, eng in variants:
        t0 = time.perf_counter()
        results[label] = [run(problem, EngineConfig(seed=s, **eng)) for s in cfg["seeds"]]
        print(f"{label}: {time.perf_counter() - t0:.1f} s")

    max_f = max(e.objective for rs in results.values() for r in rs for e in r.history)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    table = []
    with open(out / "scores.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "seed", "epoch", "num_evals", "qd", "wqd", "magnitude"])
        for label, rs in results.items():
            finals = []
            for seed, r in zip(cfg["seeds"], rs):
                scores = score_history(r.history, problem.pairwise_matrix, (0.0, max_f))
                for row in scores.rows():
                    writer.writerow([label, seed, *row])
                finals.append((scores.qd[-1], scores.wqd[-1], len(r.elites())))
            table.append((label, *np.mean(finals, axis=0), *np.std(finals, axis=0, ddof=1)))

    print(f"\n{'variant':<14} {'qd':>16} {'wqd':>16} {'elites':>8}")
    for label, qd, wqd, n, qd_sd, wqd_sd, _ in table:
        print(f"{label:<14} {qd:8.2f} ± {qd_sd:5.2f} {wqd:8.2f} ± {wqd_sd:5.2f} {n:8.1f}")
    print(f"\nper-epoch scores -> {out / 'scores.csv'}")
