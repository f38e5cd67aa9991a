"""Command line front end: ``run``, ``score`` and ``bounds``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .coupon import partial_collection_bounds
from .engine import EngineConfig, HistoryEntry, RunResult, run
from .metrics import score_history
from .problems import PROBLEMS, make_problem

log = logging.getLogger("magexplore")

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

ENGINE_KEYS = ("L", "T", "K", "M", "mu", "algorithm", "baseline_bandwidth", "baseline_effort",
               "metric_is_euclidean", "variance_normalization")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: dict
    engine: dict = field(default_factory=dict)
    seed: int = 0
    output: str = "run"
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "problem" not in raw:
            raise ConfigError("config needs a 'problem' section")
        problem = raw["problem"]
        if isinstance(problem, str):
            problem = {"name": problem}
        if not isinstance(problem, dict) or "name" not in problem:
            raise ConfigError("'problem' must name a problem")
        name = problem["name"]
        if name not in PROBLEMS:
            raise ConfigError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
        accepted = set(inspect.signature(PROBLEMS[name]).parameters)
        bad = set(problem) - accepted - {"name"}
        if bad:
            raise ConfigError(f"unknown parameters for {name}: {sorted(bad)}")
        engine = raw.get("engine", {})
        if not isinstance(engine, dict):
            raise ConfigError("'engine' must be an object")
        bad = set(engine) - set(ENGINE_KEYS)
        if bad:
            raise ConfigError(f"unknown engine keys: {sorted(bad)}")
        cfg = cls(problem=dict(problem), engine=dict(engine),
                  seed=raw.get("seed", 0), output=raw.get("output", "run"), workers=raw.get("workers", 1))
        if not isinstance(cfg.seed, int) or cfg.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        return cfg

    def engine_config(self) -> EngineConfig:
        try:
            ec = EngineConfig(seed=self.seed, workers=self.workers, **self.engine)
            ec.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return ec

    def make_problem(self):
        params = {k: v for k, v in self.problem.items() if k != "name"}
        try:
            return make_problem(self.problem["name"], **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def resolved(self) -> dict:
        out = asdict(self)
        out["engine"] = {k: v for k, v in asdict(self.engine_config()).items() if k in ENGINE_KEYS}
        return out


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


# serialization -----------------------------------------------------------------


def _encode(problem, state) -> list:
    return np.asarray(problem.encode(state)).tolist()


def history_records(problem, history: list[HistoryEntry]):
    for i, e in enumerate(history):
        yield {
            "index": i,
            "state": _encode(problem, e.state),
            "cell": list(e.cell),
            "birth": e.birth,
            "reign": e.reign,
            "objective": e.objective,
        }


def write_run(outdir: Path, cfg: ExperimentConfig, problem, result: RunResult) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "history.jsonl", "w") as fh:
        for rec in history_records(problem, result.history):
            fh.write(json.dumps(rec) + "\n")
    lm = result.landmarks
    with open(outdir / "landmarks.json", "w") as fh:
        json.dump({
            "scale": lm.scale,
            "landmark_indices": [int(i) for i in lm.landmark_indices],
            "landmarks": [_encode(problem, x) for x in lm.landmarks],
            "magnitude_trace": [float(v) for v in lm.magnitude_trace],
        }, fh, indent=1)
        fh.write("\n")
    with open(outdir / "config.echo.json", "w") as fh:
        json.dump(cfg.resolved(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(outdir / "manifest.json", "w") as fh:
        json.dump({
            "version": __version__,
            "seed": cfg.seed,
            "problem": cfg.problem["name"],
            "algorithm": cfg.engine_config().algorithm,
            "evaluations": len(result.history),
            "epochs": result.num_epochs,
            "elites": len(result.elites()),
            "files": ["history.jsonl", "landmarks.json", "config.echo.json"],
        }, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_history(path: Path, problem) -> list[HistoryEntry]:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            r = json.loads(line)
            out.append(HistoryEntry(problem.decode(r["state"]), tuple(r["cell"]), int(r["birth"]),
                                    int(r["reign"]), float(r["objective"])))
    return out


# commands ------------------------------------------------------------------------


def cmd_run(args) -> int:
    raw = load_config(args.config)
    for key in ENGINE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw.setdefault("engine", {})[key] = value
    for key in ("seed", "output", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    cfg = ExperimentConfig.from_dict(raw)
    problem = cfg.make_problem()
    ec = cfg.engine_config()
    try:
        result = run(problem, ec)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    outdir = Path(cfg.output)
    write_run(outdir, cfg, problem, result)
    print(f"{len(result.history)} evaluations, {len(result.elites())} elites -> {outdir}")
    return 0


def cmd_score(args) -> int:
    rundir = Path(args.rundir)
    cfg = ExperimentConfig.from_dict(load_config(rundir / "config.echo.json"))
    problem = cfg.make_problem()
    try:
        history = read_history(rundir / "history.jsonl", problem)
    except OSError as exc:
        raise ConfigError(f"cannot read history: {exc}") from exc
    norm = None
    if args.min_f is not None or args.max_f is not None:
        objective = [e.objective for e in history]
        norm = (min(objective) if args.min_f is None else args.min_f,
                max(objective) if args.max_f is None else args.max_f)
    try:
        scores = score_history(history, problem.pairwise_matrix, norm)
    except Exception as exc:  # noqa: BLE001
        print(f"scoring failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = rundir / "scores.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "num_evals", "qd", "wqd", "magnitude"])
        for row in scores.rows():
            writer.writerow([row[0], row[1]] + [repr(v) for v in row[2:]])
    print(f"{len(scores)} epochs -> {out}")
    return 0


def parse_distribution(text: str, n: int | None) -> np.ndarray:
    """``uniform``, ``zipf:GAMMA``, ``geometric:RATIO``, ``dirichlet:ALPHA[:SEED]`` or ``explicit:p1,p2,...``."""
    kind, _, rest = text.partition(":")
    if kind == "explicit":
        p = np.array([float(v) for v in rest.split(",")])
        if n is not None and len(p) != n:
            raise ConfigError("explicit distribution length does not match --n")
        return p / p.sum()
    if n is None:
        raise ConfigError("--n is required for parametric distributions")
    k = np.arange(1, n + 1, dtype=float)
    if kind == "uniform":
        p = np.ones(n)
    elif kind == "zipf":
        p = k ** -float(rest or 1)
    elif kind == "geometric":
        p = float(rest or 0.5) ** (k - 1)
    elif kind == "dirichlet":
        alpha, _, seed = rest.partition(":")
        p = np.random.default_rng(int(seed or 0)).dirichlet(np.full(n, float(alpha or 1)))
    else:
        raise ConfigError(f"unknown distribution {text!r}")
    return p / p.sum()


def cmd_bounds(args) -> int:
    p = parse_distribution(args.dist, args.n)
    n = len(p)
    c = args.c if args.c is not None else n
    ms = [args.m] if args.m is not None else list(range(1, n + 1))
    out = []
    for m in ms:
        try:
            b = partial_collection_bounds(p, m, c, use_exact=not args.separate)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rec = {"n": n, "m": m, "c": c, "lower": b.lower, "upper": b.upper}
        if b.exact is not None:
            rec["exact"] = b.exact
        rec["harmonic"] = n * sum(1.0 / k for k in range(n - m + 1, n + 1))
        out.append(rec)
    json.dump(out[0] if args.m is not None else out, sys.stdout, indent=1,
              default=lambda v: None if isinstance(v, float) and math.isinf(v) else v)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magexplore", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress lines to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.add_argument("--workers", type=int, help="threads for batched objective evaluation")
    for key, typ in (("L", int), ("T", int), ("K", int), ("M", int), ("mu", int), ("algorithm", str),
                     ("baseline_bandwidth", float), ("baseline_effort", int)):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="write scores.csv for a run directory")
    p.add_argument("rundir")
    p.add_argument("--min-f", type=float)
    p.add_argument("--max-f", type=float)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bounds", help="coupon-collection bounds as JSON")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, help="coupon count; omit to sweep m = 1..n")
    p.add_argument("--c", type=int, help="cutoff count (default n)")
    p.add_argument("--dist", default="uniform")
    p.add_argument("--separate", action="store_true",
                   help="report the cutoff/deviation/harmonic bounds instead of collapsing to the exact value")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
