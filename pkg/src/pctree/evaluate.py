"""Pattern-completion accuracy and structural cost metrics.

Accuracy masks each variable of each test observation in turn, classifies the
observation, and predicts the most frequent value of the masked variable at
the node where classification stops (the leaf, or the first node on the
variable's frontier when one is given).

Structure: L leaves, EPL = sum of leaf depth times leaf size, D = EPL / L,
B = L ** (1 / D) and C = B * D.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .construct import classify
from .dataset import Observation
from .frontier import Frontier
from .objective import ObjectiveId, Scorer
from .tree import Tree


@dataclass
class MetricsReport:
    accuracy: float = math.nan
    leaves: float = 0
    epl: float = 0
    depth: float = 0.0
    breadth: float = math.nan
    cost: float = math.nan
    degenerate: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _stop_node(path, frontier: Frontier | None, masked: int):
    if frontier is None:
        return path[-1]
    cut = frontier.nodes[masked]
    for node in path:
        if node.id in cut:
            return node
    return path[-1]


def predict(tree: Tree, obs: Observation, masked: int, frontier: Frontier | None = None,
            objective=ObjectiveId.PU_GINI, scorer: Scorer | None = None) -> int:
    """Predicted ordinal of variable ``masked`` for ``obs``."""
    if tree.root is None:
        raise ValueError("empty tree")
    scorer = scorer or Scorer(objective, tree.layout)
    path = classify(tree, obs.values, masked, scorer)
    return _stop_node(path, frontier, masked).majority(tree.layout, masked)


def accuracy(tree: Tree, test: list[Observation], frontier: Frontier | None = None,
             objective=ObjectiveId.PU_GINI) -> float:
    """Fraction of correct predictions over every (test observation, masked variable) pair."""
    return accuracies(tree, test, [frontier], objective)[0]


def accuracies(tree: Tree, test: list[Observation], frontiers: list[Frontier | None],
               objective=ObjectiveId.PU_GINI) -> list[float]:
    """Accuracy under several frontiers, classifying each (observation, variable) pair once."""
    if not test:
        raise ValueError("empty test set")
    layout = tree.layout
    scorer = Scorer(objective, layout)
    hits = [0] * len(frontiers)
    for obs in test:
        for v in range(layout.n_vars):
            path = classify(tree, obs.values, v, scorer)
            for k, f in enumerate(frontiers):
                hits[k] += _stop_node(path, f, v).majority(layout, v) == obs.values[v]
    total = len(test) * layout.n_vars
    return [h / total for h in hits]


def metrics_from(leaves: float, epl: float) -> MetricsReport:
    """Depth, breadth and cost from a leaf count and total path length."""
    if leaves <= 0:
        raise ValueError("leaf count must be positive")
    depth = epl / leaves
    if depth <= 0:
        return MetricsReport(leaves=leaves, epl=epl, depth=0.0, degenerate=True)
    breadth = leaves ** (1.0 / depth)
    return MetricsReport(leaves=leaves, epl=epl, depth=depth, breadth=breadth, cost=breadth * depth)


def rounded_cost_row(leaves: float, epl: float) -> tuple[float, float, float]:
    """(D, B, C) as a two-decimal table row.

    Each quantity is built from the already rounded one before it: B from
    the rounded D, C from the rounded D and B.
    """
    m = metrics_from(leaves, epl)
    if m.degenerate:
        return 0.0, math.nan, math.nan
    d = round(m.depth, 2)
    b = round(leaves ** (1.0 / d), 2)
    return d, b, round(d * b, 2)


def structure_metrics(tree: Tree) -> MetricsReport:
    if tree.root is None:
        raise ValueError("empty tree")
    leaves, epl = 0, 0
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        if node.is_leaf:
            leaves += 1
            epl += d * int(node.size)
        else:
            stack.extend((c, d + 1) for c in node.children)
    return metrics_from(leaves, epl)
