"""Multi-trial experiment runner.

Two experiment kinds:

* ``run_pu_experiment``: per trial, draw an ordering, sort it and apply each
  optimization strategy; record the first-level partition score.
* ``run_validation_experiment``: per trial, split the data, grow a full tree
  with the layered builder, identify frontiers on the validation block and
  score both the unvalidated and the pruned tree on the test block.

Every random draw is seeded from the run seed, the trial index and a tag, so
trials are independent of each other and of how many workers run them.
Result tables hold no timings; those go to a separate file so equal configs
give byte-identical tables.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .construct import build, similarity_ordering
from .dataset import Dataset, load_dataset, random_ordering, split
from .evaluate import accuracies, structure_metrics, rounded_cost_row
from .frontier import Frontier, FrontierTable, accumulate, frontier_stats, prune, select_frontiers
from .objective import ObjectiveId, level_score
from .optimize import hierarchical_redistribution, layered_build, redistribute_single, reorder_resort
from .tree import Tree

STRATEGIES = ("sort", "reorder", "single", "hier")
CONDITIONS = ("random", "similarity")


@dataclass
class ExperimentConfig:
    data: str = "house"
    objective: str = "pu"
    strategies: tuple[str, ...] = STRATEGIES
    height: int = 2
    trials: int = 20
    seed: int = 0
    fractions: tuple[float, float, float] = (0.4, 0.4, 0.2)
    condition: str = "random"
    optimize: bool = True
    header: bool = False
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        self.strategies = tuple(self.strategies)
        self.fractions = tuple(self.fractions)
        ObjectiveId.parse(self.objective)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.height < 2:
            raise ValueError("height must be at least 2")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad or not self.strategies:
            raise ValueError(f"unknown strategy {bad}; choose from {list(STRATEGIES)}")
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown ordering condition {self.condition!r}; choose from {list(CONDITIONS)}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


def derive_seed(seed: int, trial: int, tag: str) -> int:
    """Named per-trial seed: a function of (run seed, trial, tag) only."""
    ss = np.random.SeedSequence([seed, trial, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1)[0])


def trial_ordering(cfg: ExperimentConfig, d: Dataset, trial: int) -> list[int]:
    """Random ordering, or a similarity ordering read off a sort of a random one."""
    ordering = random_ordering(d, derive_seed(cfg.seed, trial, "ordering"))
    if cfg.condition == "similarity":
        ordering = similarity_ordering(build(d, ordering, cfg.height, cfg.objective))
    return ordering


# -- score experiment -----------------------------------------------------------

def pu_trial(cfg: ExperimentConfig, d: Dataset, trial: int) -> tuple[list[dict], list[dict]]:
    obj = ObjectiveId.parse(cfg.objective)
    ordering = trial_ordering(cfg, d, trial)
    rows, timings = [], []

    def record(strategy, tree, passes, moves, seconds):
        rows.append({"trial": trial, "strategy": strategy, "score": level_score(tree, obj),
                     "passes": passes, "moves": moves})
        timings.append({"trial": trial, "strategy": strategy, "seconds": seconds})

    t0 = time.perf_counter()
    sorted_tree = build(d, ordering, cfg.height, obj)
    sort_time = time.perf_counter() - t0
    for strategy in cfg.strategies:
        if strategy == "sort":
            record("sort", sorted_tree, 1, 0, sort_time)
        elif strategy == "reorder":
            tree, rep = reorder_resort(d, ordering, cfg.height, obj)
            record("reorder", tree, rep.passes, rep.moves, rep.wall_time)
        elif strategy == "single":
            tree, rep = redistribute_single(sorted_tree, obj)
            record("single", tree, rep.passes, rep.moves, rep.wall_time + sort_time)
        else:
            tree, rep = hierarchical_redistribution(sorted_tree, obj)
            record("hier", tree, rep.passes, rep.moves, rep.wall_time + sort_time)
    return rows, timings


def summarize(values) -> tuple[float, float]:
    """Mean and sample standard deviation (nan for a single value)."""
    a = np.asarray(values, dtype=float)
    std = float(np.std(a, ddof=1)) if len(a) > 1 else math.nan
    return float(np.mean(a)), std


def aggregate_pu(rows: list[dict], strategies) -> list[dict]:
    out = []
    for stat in ("mean", "std"):
        for s in strategies:
            vals = [r for r in rows if r["strategy"] == s]
            rec = {"trial": stat, "strategy": s}
            for key in ("score", "passes", "moves"):
                rec[key] = summarize([r[key] for r in vals])[0 if stat == "mean" else 1]
            out.append(rec)
    return out


# -- validation experiment ------------------------------------------------------

VALIDATION_FIELDS = (
    "leaves_unvalidated", "leaves_validated",
    "accuracy_unvalidated", "accuracy_validated",
    "frontier_unvalidated", "frontier_validated",
    "epl_unvalidated", "epl_validated",
)


@dataclass
class ValidationRun:
    tree: Tree
    table: FrontierTable
    frontier: Frontier
    pruned: Tree
    accuracy_unvalidated: float
    accuracy_validated: float
    build_seconds: float
    total_seconds: float


def validation_run(cfg: ExperimentConfig, d: Dataset, trial: int) -> ValidationRun:
    """Split, grow, validate, prune and test once."""
    obj = ObjectiveId.parse(cfg.objective)
    t0 = time.perf_counter()
    parts = split(d, cfg.fractions, derive_seed(cfg.seed, trial, "split"))
    train = d.subset(parts.train)
    validation = [d.by_id(i) for i in parts.validation]
    test = [d.by_id(i) for i in parts.test]
    tree = layered_build(train, trial_ordering(cfg, train, trial), obj, optimize=cfg.optimize)
    built = time.perf_counter() - t0
    table = accumulate(tree, validation, obj)
    frontier = select_frontiers(table, tree)
    pruned = prune(tree, frontier)
    acc_unval, acc_val = accuracies(tree, test, [None, frontier], obj)
    return ValidationRun(tree, table, frontier, pruned, acc_unval, acc_val, built, time.perf_counter() - t0)


def validation_trial(cfg: ExperimentConfig, d: Dataset, trial: int) -> tuple[dict, list[int], dict]:
    run = validation_run(cfg, d, trial)
    full, small = structure_metrics(run.tree), structure_metrics(run.pruned)
    sizes, mean_size = frontier_stats(run.frontier)
    acc_unval, acc_val = run.accuracy_unvalidated, run.accuracy_validated
    row = {
        "trial": trial,
        "leaves_unvalidated": full.leaves, "leaves_validated": small.leaves,
        "accuracy_unvalidated": acc_unval, "accuracy_validated": acc_val,
        "frontier_unvalidated": full.leaves, "frontier_validated": mean_size,
        "epl_unvalidated": full.epl, "epl_validated": small.epl,
    }
    timing = {"trial": trial, "build_seconds": run.build_seconds, "total_seconds": run.total_seconds}
    return row, sizes, timing


def aggregate_validation(rows: list[dict], frontier_sizes: list[list[int]]) -> list[dict]:
    mean = {"trial": "mean"}
    std = {"trial": "std"}
    for key in VALIDATION_FIELDS:
        mean[key], std[key] = summarize([r[key] for r in rows])
    # deviation of frontier size: per-variable deviation over trials, averaged over variables
    per_var = np.asarray(frontier_sizes, dtype=float)
    std["frontier_validated"] = float(np.mean(np.std(per_var, axis=0, ddof=1))) if len(rows) > 1 else math.nan
    std["frontier_unvalidated"] = std["leaves_unvalidated"]
    derived = {"trial": "cost"}
    for cond in ("unvalidated", "validated"):
        dd, bb, cc = rounded_cost_row(mean[f"leaves_{cond}"], mean[f"epl_{cond}"])
        derived[f"depth_{cond}"], derived[f"breadth_{cond}"], derived[f"cost_{cond}"] = dd, bb, cc
    return [mean, std, derived]


# -- drivers ---------------------------------------------------------------------

def _run_trials(fn, cfg: ExperimentConfig, d: Dataset) -> list:
    trials = range(cfg.trials)
    if cfg.workers == 1 or cfg.trials == 1:
        return [fn(cfg, d, t) for t in trials]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        # map keeps results in trial order whatever the completion order
        return list(pool.map(fn, [cfg] * cfg.trials, [d] * cfg.trials, trials))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def write_csv(path, rows: list[dict], fields=None):
    fields = fields or list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r.get(k, "")) for k in fields])


def manifest(cfg: ExperimentConfig, kind: str, d: Dataset) -> dict:
    from . import __version__

    return {
        "kind": kind,
        "config": asdict(cfg) | {"out": None, "workers": None},
        "dataset": {"name": d.name, "observations": len(d), "variables": d.n_vars},
        "seeds": {str(t): {tag: derive_seed(cfg.seed, t, tag) for tag in ("ordering", "split")}
                  for t in range(cfg.trials)},
        "versions": {"pctree": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }


def _emit(cfg: ExperimentConfig, kind: str, d: Dataset, rows, timings):
    if cfg.out is None:
        return
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, rows)
    out.with_suffix(".manifest.json").write_text(json.dumps(manifest(cfg, kind, d), indent=2, sort_keys=True) + "\n")
    write_csv(out.with_suffix(".timings.csv"), timings)


@dataclass
class ExperimentResult:
    rows: list[dict] = field(default_factory=list)
    aggregate: list[dict] = field(default_factory=list)
    timings: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def table(self) -> list[dict]:
        return self.rows + self.aggregate


def run_pu_experiment(cfg: ExperimentConfig, d: Dataset | None = None) -> ExperimentResult:
    d = d if d is not None else load_dataset(cfg.data, cfg.header)
    res = ExperimentResult()
    for rows, timings in _run_trials(pu_trial, cfg, d):
        res.rows += rows
        res.timings += timings
    res.aggregate = aggregate_pu(res.rows, cfg.strategies)
    _emit(cfg, "score", d, res.table(), res.timings)
    return res


def run_validation_experiment(cfg: ExperimentConfig, d: Dataset | None = None) -> ExperimentResult:
    d = d if d is not None else load_dataset(cfg.data, cfg.header)
    res = ExperimentResult()
    sizes = []
    for row, fsizes, timing in _run_trials(validation_trial, cfg, d):
        res.rows.append(row)
        res.timings.append(timing)
        sizes.append(fsizes)
    res.aggregate = aggregate_validation(res.rows, sizes)
    res.extra["frontier_sizes"] = sizes
    _emit(cfg, "validation", d, res.table(), res.timings)
    return res
