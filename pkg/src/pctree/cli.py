"""Command-line interface.

    pctree build      sort a dataset into a tree and dump it as JSON
    pctree order      print an ordering, one observation id per line
    pctree optimize   run one optimization strategy and report on it
    pctree validate   holdout frontiers and pruning (one split, or many trials)
    pctree evaluate   structural metrics of a tree dump or of (leaves, EPL)
    pctree experiment multi-trial score comparison of strategies
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import construct, dataset
from .dataset import DataFormatError
from .evaluate import metrics_from, structure_metrics, rounded_cost_row
from .experiment import (CONDITIONS, STRATEGIES, ExperimentConfig, run_pu_experiment,
                         run_validation_experiment, trial_ordering, validation_run)
from .frontier import frontier_report, frontier_stats
from .objective import ObjectiveId, level_score
from .optimize import hierarchical_redistribution, redistribute_single, reorder_resort
from .tree import Tree, TreeStructureError


def _common(p: argparse.ArgumentParser, trials: bool = False):
    p.add_argument("--data", default="house",
                   help="builtin key (house, mushroom, mushroom1000[:seed]) or a CSV path")
    p.add_argument("--header", action="store_true", help="the CSV file has a header row")
    p.add_argument("--objective", default="pu", choices=[o.value for o in ObjectiveId])
    p.add_argument("--height", type=int, default=2, help="height bound of sorted trees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file")
    if trials:
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--workers", type=int, default=1, help="parallel trial workers")


def _config(args, **kw) -> ExperimentConfig:
    return ExperimentConfig(data=args.data, objective=args.objective, height=args.height,
                            trials=getattr(args, "trials", 1), seed=args.seed, header=args.header,
                            workers=getattr(args, "workers", 1), out=args.out, **kw)


def _write(text: str, out: str | None):
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def cmd_build(args) -> int:
    cfg = _config(args, condition=args.condition)
    d = dataset.load_dataset(args.data, args.header)
    tree = construct.build(d, trial_ordering(cfg, d, 0), args.height, args.objective)
    print(f"{d.name}: {len(d)} observations, first-level score {level_score(tree, args.objective):.6f}",
          file=sys.stderr)
    _write(tree.dumps() + "\n", args.out)
    return 0


def cmd_order(args) -> int:
    d = dataset.load_dataset(args.data, args.header)
    ordering = dataset.random_ordering(d, args.seed)
    if args.kind != "random":
        tree = construct.build(d, ordering, args.height, args.objective)
        extract = construct.dissimilarity_ordering if args.kind == "dissimilarity" else construct.similarity_ordering
        ordering = extract(tree)
    _write("".join(f"{i}\n" for i in ordering), args.out)
    return 0


def cmd_optimize(args) -> int:
    cfg = _config(args, condition=args.condition)
    d = dataset.load_dataset(args.data, args.header)
    ordering = trial_ordering(cfg, d, 0)
    start = construct.build(d, ordering, args.height, args.objective)
    if args.strategy == "reorder":
        tree, rep = reorder_resort(d, ordering, args.height, args.objective)
    elif args.strategy == "single":
        tree, rep = redistribute_single(start, args.objective)
    else:
        tree, rep = hierarchical_redistribution(start, args.objective)
    record = {"strategy": args.strategy, "initial_score": level_score(start, args.objective),
              "final_score": level_score(tree, args.objective)} | rep.as_dict()
    print(json.dumps(record, indent=2))
    if args.out:
        _write(tree.dumps() + "\n", args.out)
    return 0


def cmd_validate(args) -> int:
    optimize = args.condition == "optimized"
    condition = "random" if optimize else "similarity"
    cfg = _config(args, condition=condition, optimize=optimize)
    if args.trials > 1:
        res = run_validation_experiment(cfg)
        if args.out is None:
            _print_table(res.table())
        return 0
    d = dataset.load_dataset(args.data, args.header)
    run = validation_run(cfg, d, 0)
    sizes, mean_size = frontier_stats(run.frontier)
    names = [v.name for v in d.schema]

    def metrics(tree):
        return {k: _jsonable(v) for k, v in structure_metrics(tree).as_dict().items() if k != "accuracy"}

    report = {
        "accuracy": {"unvalidated": run.accuracy_unvalidated, "validated": run.accuracy_validated},
        "unvalidated": metrics(run.tree),
        "validated": metrics(run.pruned),
        "frontier_sizes": dict(zip(names, sizes)),
        "mean_frontier_size": mean_size,
        "frontiers": {names[v]: [{"node": i, "depth": dep, "size": s, "correct": c} for i, dep, s, c in entries]
                      for v, entries in enumerate(frontier_report(run.tree, run.table, run.frontier))},
    }
    _write(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def _print_table(rows):
    fields = list(dict.fromkeys(k for r in rows for k in r))
    print(",".join(fields))
    for r in rows:
        print(",".join(f"{r[k]:.4f}" if isinstance(r.get(k), float) else str(r.get(k, "")) for k in fields))


def cmd_evaluate(args) -> int:
    if args.tree:
        with open(args.tree) as f:
            tree = Tree.from_dict(json.load(f))
        m = structure_metrics(tree)
    elif args.leaves is not None and args.epl is not None:
        m = metrics_from(args.leaves, args.epl)
    else:
        raise ValueError("give --tree FILE, or both --leaves and --epl")
    d, b, c = rounded_cost_row(m.leaves, m.epl)
    rec = {k: _jsonable(v) for k, v in m.as_dict().items() if k != "accuracy"}
    rec["table"] = {"depth": _jsonable(d), "breadth": _jsonable(b), "cost": _jsonable(c)}
    _write(json.dumps(rec, indent=2) + "\n", args.out)
    return 0


def cmd_experiment(args) -> int:
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    cfg = _config(args, strategies=strategies, condition=args.condition)
    res = run_pu_experiment(cfg)
    if args.out is None:
        _print_table(res.table())
    return 0


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pctree", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="sort a dataset into a tree (JSON dump)")
    _common(p)
    p.add_argument("--condition", choices=CONDITIONS, default="random", help="ordering to sort")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("order", help="print an ordering")
    _common(p)
    p.add_argument("--kind", choices=["random", "dissimilarity", "similarity"], default="random",
                   help="random, or extracted from a sort of a random ordering")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("optimize", help="optimize a sorted tree")
    _common(p)
    p.add_argument("--strategy", choices=["reorder", "single", "hier"], default="hier")
    p.add_argument("--condition", choices=CONDITIONS, default="random")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="frontiers, pruning and test accuracy")
    _common(p, trials=True)
    p.set_defaults(trials=1)
    p.add_argument("--condition", choices=["optimized", "unoptimized"], default="optimized",
                   help="optimized: random ordering + redistribution; unoptimized: similarity ordering, no optimization")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="depth, breadth and cost")
    p.add_argument("--tree", help="tree dump written by build/optimize")
    p.add_argument("--leaves", type=float)
    p.add_argument("--epl", type=float)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="multi-trial comparison of strategies")
    _common(p, trials=True)
    p.add_argument("--strategies", default=",".join(STRATEGIES))
    p.add_argument("--condition", choices=CONDITIONS, default="random")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, DataFormatError, TreeStructureError, KeyError) as exc:
        print(f"pctree {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
