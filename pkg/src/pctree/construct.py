"""Hierarchical sorting and ordering extraction.

Sorting routes an item (a single observation or a whole detached cluster)
from the root downward. At each internal node it scores adding the item to
every child and making it a new child, and takes the best option; choosing a
child recurses into it. A leaf that is reached is extended downward. With a
height bound, an item reaching depth ``bound - 1`` is hung under the chosen
cluster as leaves without further scoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, Observation, is_permutation
from .objective import TIE_TOL, ObjectiveId, Scorer
from .tree import ClusterNode, Layout, Tree, TreeStructureError, flatten


@dataclass
class Placement:
    """Where an item went: the nodes visited and the node it was finally hung under."""

    path: list[ClusterNode] = field(default_factory=list)
    parent: ClusterNode | None = None
    how: str = ""  # "root", "new-child", "extend", "bound"
    scores: list[np.ndarray] = field(default_factory=list)
    picks: list[int] = field(default_factory=list)  # option taken at each scored level


def layout_for(d: Dataset) -> Layout:
    return Layout(tuple(d.arities))


def _pick(scores: np.ndarray, preferred: int | None) -> int:
    """First maximum, unless ``preferred`` is tied with it."""
    best = float(np.max(scores))
    tol = TIE_TOL * max(1.0, abs(best)) if np.isfinite(best) else 0.0
    if preferred is not None and scores[preferred] >= best - tol:
        return preferred
    return int(np.flatnonzero(scores >= best - tol)[0])


def _hang_below(tree: Tree, host: ClusterNode, item: ClusterNode, place: Placement) -> Placement:
    """Attach ``item`` under ``host`` at the depth bound: its observations become leaves of ``host``."""
    flatten(item, 1)
    leaves = item.leaves()
    if item.is_leaf:
        leaves = [item]
    else:
        item.children = []
        for leaf in leaves:
            leaf.parent = None
    if host.is_leaf:
        host = tree.extend(host, leaves[0])
        leaves = leaves[1:]
    for leaf in leaves:
        tree.attach(host, leaf)
    place.parent, place.how = host, "bound"
    return place


def sort_node(tree: Tree, item: ClusterNode, scorer: Scorer, home: ClusterNode | None = None) -> Placement:
    """Sort a detached node (singleton or subtree) into ``tree``.

    ``home`` is the node the item was detached from (or the node now
    standing in its place). Ties between the best option and the route back
    to ``home`` are resolved in favour of going home.
    """
    if item.parent is not None:
        raise TreeStructureError("item is still attached")
    place = Placement()
    if tree.root is None:
        tree.root = item
        place.how = "root"
        return place

    home_path = set(id(n) for n in home.ancestors()) if home is not None else set()
    bound = tree.height_bound
    vec, size = item.counts, item.size
    if tree.root.is_leaf:
        # a lone root is itself the one cluster of the top-level partition:
        # joining it opens a level above; otherwise it is extended below
        scores = scorer.options(tree.root, [tree.root], vec, size)
        place.scores.append(scores)
        place.picks.append(_pick(scores, None))
        if place.picks[-1] == 0:
            tree.root = tree.internal([tree.root])
    node, depth = tree.root, 0
    while True:
        place.path.append(node)
        if node.is_leaf:
            room = None if bound is None else bound - depth - 1
            if room is not None and item.height() > room:
                if room == 0:
                    return _hang_below(tree, node, item, place)
                flatten(item, room)
            new = tree.extend(node, item)
            place.parent, place.how = new, "extend"
            return place
        if bound is not None and depth >= bound - 1:
            return _hang_below(tree, node, item, place)
        scores = scorer.options(node, node.children, vec, size)
        place.scores.append(scores)
        preferred = None
        if home is not None:
            if node is home:
                preferred = len(node.children)
            else:
                for k, c in enumerate(node.children):
                    if id(c) in home_path:
                        preferred = k
                        break
        k = _pick(scores, preferred)
        place.picks.append(k)
        if k == len(node.children):
            if bound is not None:
                flatten(item, bound - depth - 1)
            tree.attach(node, item)
            place.parent, place.how = node, "new-child"
            return place
        node = node.children[k]
        depth += 1


def sort_observation(tree: Tree, obs: Observation, objective: ObjectiveId | Scorer, masked: int | None = None) -> Placement:
    scorer = objective if isinstance(objective, Scorer) else Scorer(objective, tree.layout)
    if len(obs.values) != tree.layout.n_vars:
        raise ValueError(f"observation has {len(obs.values)} values, tree expects {tree.layout.n_vars}")
    return sort_node(tree, tree.singleton(obs.id, obs.values, masked), scorer)


def sort_cluster(tree: Tree, subtree: ClusterNode, objective: ObjectiveId | Scorer, home: ClusterNode | None = None) -> Placement:
    scorer = objective if isinstance(objective, Scorer) else Scorer(objective, tree.layout)
    return sort_node(tree, subtree, scorer, home)


def build(d: Dataset, ordering, height_bound: int | None = 2, objective: ObjectiveId = ObjectiveId.PU_GINI) -> Tree:
    """Sort the observations of ``d`` one by one in ``ordering``."""
    ordering = list(ordering)
    if not is_permutation(ordering, d.ids):
        raise ValueError("ordering is not a permutation of the dataset ids")
    if height_bound is not None and height_bound < 2:
        raise ValueError("height bound must be at least 2")
    tree = Tree(layout_for(d), height_bound)
    scorer = Scorer(objective, tree.layout)
    for i in ordering:
        sort_observation(tree, d.by_id(i), scorer)
    return tree


def classify(tree: Tree, values, masked: int | None, scorer: Scorer) -> list[ClusterNode]:
    """Read-only descent: the root-to-leaf path an observation would follow.

    Scores are computed as in sorting (new-child option included) but if the
    new-child option wins, the walk goes to the best existing child.
    """
    vec = tree.layout.encode(values, masked)
    node = tree.root
    path = [node]
    while not node.is_leaf:
        scores = scorer.options(node, node.children, vec, 1)[:-1]
        node = node.children[_pick(scores, None)]
        path.append(node)
    return path


def _ordered_children(node: ClusterNode, descending: bool) -> list[ClusterNode]:
    # sorted() is stable: equal sizes keep stored child order
    return sorted(node.children, key=lambda c: -c.size if descending else c.size)


def dissimilarity_ordering(tree: Tree) -> list[int]:
    """Interleave observation lists of sibling clusters, largest cluster first."""

    def order(node):
        if node.is_leaf:
            return [node.leaf_obs]
        lists = [order(c) for c in _ordered_children(node, descending=True)]
        merged = []
        for k in range(max(len(l) for l in lists)):
            merged.extend(l[k] for l in lists if k < len(l))
        return merged

    return order(tree.root)


def similarity_ordering(tree: Tree) -> list[int]:
    """Concatenate observation lists of sibling clusters, smallest cluster first."""

    def order(node):
        if node.is_leaf:
            return [node.leaf_obs]
        out = []
        for c in _ordered_children(node, descending=False):
            out.extend(order(c))
        return out

    return order(tree.root)
