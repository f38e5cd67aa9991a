"""Run one JSON config through the CLI, score it and print a short summary.

    python3 scripts/run_experiment.py scripts/configs/rastrigin.json [--seed 3]
"""
import argparse
import csv
import json
import sys
import time
from pathlib import Path

from magexplore.cli import ExperimentConfig, load_config, main


def summarize(outdir: Path) -> None:
    manifest = json.loads((outdir / "manifest.json").read_text())
    with open(outdir / "scores.csv") as fh:
        rows = list(csv.DictReader(fh))
    best = min(json.loads(line)["objective"] for line in open(outdir / "history.jsonl"))
    last = rows[-1]
    print(f"{manifest['problem']}: {manifest['evaluations']} evaluations over {manifest['epochs']} epochs, "
          f"{manifest['elites']} elites, best objective {best:.6g}")
    print(f"final qd {float(last['qd']):.3f}, wqd {float(last['wqd']):.3f}, magnitude {float(last['magnitude']):.3f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--output")
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict(load_config(args.config))
    outdir = Path(args.output or cfg.output)
    argv = ["run", args.config, "--output", str(outdir)]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    t0 = time.perf_counter()
    code = main(argv) or main(["score", str(outdir)])
    if code:
        sys.exit(code)
    print(f"took {time.perf_counter() - t0:.1f} s")
    summarize(outdir)
