"""Per-variable prediction frontiers identified on held-out data, and pruning.

Validation observations are classified with one variable masked at a time.
Each node on the path that would predict the hidden value correctly (by its
most frequent value) gets a point for that variable. The frontier of a
variable is the cut of the tree with the largest total of points; nodes below
every variable's frontier are pruned away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .construct import classify
from .dataset import Observation
from .objective import ObjectiveId, Scorer
from .tree import ClusterNode, Tree


@dataclass
class FrontierTable:
    """correct[v][node id] = validation observations predicted right at that node for variable v."""

    correct: list[dict[int, int]]
    n_validation: int = 0

    def get(self, var: int, node_id: int) -> int:
        return self.correct[var].get(node_id, 0)


@dataclass
class Frontier:
    nodes: list[set[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def sizes(self) -> list[int]:
        return [len(s) for s in self.nodes]

    def union(self) -> set[int]:
        out: set[int] = set()
        for s in self.nodes:
            out |= s
        return out


def classify_readonly(tree: Tree, obs: Observation, masked: int | None,
                      objective=ObjectiveId.PU_GINI, scorer: Scorer | None = None) -> list[ClusterNode]:
    """Root-to-leaf path ``obs`` would follow when sorted, without touching the tree."""
    if tree.root is None:
        raise ValueError("empty tree")
    scorer = scorer or Scorer(objective, tree.layout)
    return classify(tree, obs.values, masked, scorer)


def accumulate(tree: Tree, validation: list[Observation], objective=ObjectiveId.PU_GINI) -> FrontierTable:
    if not validation:
        raise ValueError("empty validation set")
    layout = tree.layout
    scorer = Scorer(objective, layout)
    nodes = list(tree.nodes())
    # majority value of every variable at every node, computed once
    majority = {n.id: [n.majority(layout, v) for v in range(layout.n_vars)] for n in nodes}
    correct: list[dict[int, int]] = [{} for _ in range(layout.n_vars)]
    for obs in validation:
        for v in range(layout.n_vars):
            truth = obs.values[v]
            table = correct[v]
            for node in classify(tree, obs.values, v, scorer):
                if majority[node.id][v] == truth:
                    table[node.id] = table.get(node.id, 0) + 1
    return FrontierTable(correct, len(validation))


def select_frontiers(table: FrontierTable, tree: Tree) -> Frontier:
    """Per variable, the cut maximizing correct counts; an ancestor wins ties with its descendants."""
    out = Frontier()
    for v in range(len(table.correct)):
        best: dict[int, int] = {}
        keep: dict[int, bool] = {}
        # children before parents: reverse of a pre-order walk
        for node in reversed(list(tree.nodes())):
            here = table.get(v, node.id)
            if node.is_leaf:
                best[node.id], keep[node.id] = here, True
                continue
            below = sum(best[c.id] for c in node.children)
            keep[node.id] = here >= below
            best[node.id] = max(here, below)
        chosen: set[int] = set()
        stack = [tree.root]
        while stack:
            node = stack.pop()
            if keep[node.id]:
                chosen.add(node.id)
            else:
                stack.extend(node.children)
        out.nodes.append(chosen)
    return out


def leaf_frontier(tree: Tree) -> Frontier:
    """The implicit frontier of an unvalidated tree: every variable stops at the leaves."""
    ids = {n.id for n in tree.leaves()}
    return Frontier([set(ids) for _ in range(tree.layout.n_vars)])


def prune(tree: Tree, frontier: Frontier) -> Tree:
    """Copy of ``tree`` without the nodes that lie below every variable's frontier."""
    out = tree.copy()
    on_frontier = frontier.union()
    below: dict[int, bool] = {}  # does any strict descendant sit on a frontier?
    for node in reversed(list(out.nodes())):
        below[node.id] = any(c.id in on_frontier or below[c.id] for c in node.children)
    for node in list(out.nodes()):
        if node.id in on_frontier and not below[node.id]:
            for c in node.children:
                c.parent = None
            node.children = []
    return out


def frontier_stats(frontier: Frontier) -> tuple[list[int], float]:
    sizes = frontier.sizes()
    return sizes, float(np.mean(sizes)) if sizes else 0.0


def frontier_report(tree: Tree, table: FrontierTable | None, frontier: Frontier) -> list[list[tuple[int, int, int, int]]]:
    """Per variable: (node id, depth, size, correct count) for each frontier node."""
    by_id = {n.id: n for n in tree.nodes()}
    rows = []
    for v, ids in enumerate(frontier.nodes):
        entries = []
        for i in sorted(ids):
            n = by_id[i]
            entries.append((i, n.depth(), int(n.size), table.get(v, i) if table is not None else 0))
        rows.append(entries)
    return rows
