"""Iterative optimization of categorization trees.

Three strategies: reorder/resort (re-sort a dissimilarity ordering extracted
from the best tree so far), sequential redistribution of single observations
over a flat partition, and hierarchical redistribution (every cluster, with
its subtree, is removed and re-sorted from the root). ``layered_build`` grows
a full-depth tree a few levels at a time, optimizing each block.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .construct import build, dissimilarity_ordering, layout_for, sort_node
from .dataset import Dataset, Observation
from .objective import TIE_TOL, ObjectiveId, Scorer, level_score
from .tree import ClusterNode, Tree

MAX_PASSES = 50
MAX_SWEEPS = 50


@dataclass
class OptimizerReport:
    passes: int = 0
    moves: int = 0
    score_trace: list[tuple[int, float]] = field(default_factory=list)
    wall_time: float = 0.0
    # (level-1 score before, after) for every accepted move when tracing
    move_log: list[tuple[float, float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "passes": self.passes,
            "moves": self.moves,
            "score_trace": [[p, s] for p, s in self.score_trace],
            "wall_time": self.wall_time,
        }


def reorder_resort(d: Dataset, ordering, height: int = 2, objective=ObjectiveId.PU_GINI,
                   max_builds: int = MAX_PASSES) -> tuple[Tree, OptimizerReport]:
    """Sort, extract a dissimilarity ordering from the best tree, sort again; stop when no better."""
    t0 = time.perf_counter()
    report = OptimizerReport()
    best_tree, best = None, float("-inf")
    ordering = list(ordering)
    for k in range(1, max_builds + 1):
        tree = build(d, ordering, height, objective)
        s = level_score(tree, objective)
        report.score_trace.append((k, s))
        report.passes = k
        if best_tree is not None and s <= best + TIE_TOL * max(1.0, abs(best)):
            break
        best_tree, best = tree, s
        ordering = dissimilarity_ordering(tree)
    report.wall_time = time.perf_counter() - t0
    return best_tree, report


class _Mover:
    """Shared move bookkeeping: detach, re-sort, decide whether anything changed."""

    def __init__(self, tree: Tree, objective, trace: bool):
        self.tree = tree
        self.objective = ObjectiveId.parse(objective)
        self.scorer = Scorer(self.objective, tree.layout)
        self.trace = trace
        self.touched: set[int] = set()
        self.report = OptimizerReport()

    def resort(self, item: ClusterNode) -> bool:
        tree = self.tree
        old_parent = item.parent
        old_index = old_parent.children.index(item)
        old_size = old_parent.size
        old_cover = None if old_parent is tree.root else frozenset(old_parent.observations())
        before = level_score(tree, self.objective) if self.trace else None

        home = tree.detach(item)
        place = sort_node(tree, item, self.scorer, home)

        new_parent = place.parent
        if new_parent.size != old_size:
            moved = True
        elif old_cover is None:
            moved = new_parent is not tree.root
        else:
            moved = frozenset(new_parent.observations()) != old_cover
        if not moved and place.how == "new-child" and new_parent is old_parent:
            # put it back in its old slot so an unchanged tree is really unchanged
            new_parent.children.remove(item)
            new_parent.children.insert(old_index, item)
        if moved:
            self.report.moves += 1
            for start in (home, new_parent):
                for n in start.ancestors():
                    self.touched.add(n.id)
                    n.stable = False
            if self.trace:
                self.report.move_log.append((before, level_score(tree, self.objective)))
        return moved


def flat_partition(tree: Tree) -> Tree:
    """Height-2 copy of ``tree`` whose blocks are the deepest clusters above the leaves."""
    height = tree.height_bound if tree.height_bound is not None else tree.root.height()
    src = tree.copy()
    out = Tree(tree.layout, 2)
    out._ids = src._ids
    if src.root.is_leaf:
        out.root = src.root
        return out
    blocks = src.level(height - 1)
    for b in blocks:
        if not b.is_leaf:
            leaves = b.leaves()
            b.children = leaves
            for leaf in leaves:
                leaf.parent = b
        b.parent = None
    out.root = out.internal(blocks)
    return out


def redistribute_single(tree: Tree, objective=ObjectiveId.PU_GINI, trace: bool = False,
                        max_sweeps: int = 100) -> tuple[Tree, OptimizerReport]:
    """Sequentially move single observations between the clusters of a flat partition.

    Works on a height-2 copy; sweeps observations in id order until a whole
    sweep moves nothing.
    """
    t0 = time.perf_counter()
    work = tree.copy() if tree.height_bound == 2 else flat_partition(tree)
    mover = _Mover(work, objective, trace)
    report = mover.report
    report.score_trace.append((0, level_score(work, objective)))
    if work.root.is_leaf:
        report.wall_time = time.perf_counter() - t0
        return work, report
    leaves = {leaf.leaf_obs: leaf for leaf in work.leaves()}
    for sweep in range(1, max_sweeps + 1):
        moved = 0
        for obs_id in sorted(leaves):
            moved += mover.resort(leaves[obs_id])
        report.passes = sweep
        report.score_trace.append((sweep, level_score(work, objective)))
        if not moved:
            break
    report.wall_time = time.perf_counter() - t0
    return work, report


def _shape(node: ClusterNode):
    """Structure of a subtree as nested sets of observation ids; ignores node ids and child order."""
    if node.is_leaf:
        return node.leaf_obs if node.size == 1 else frozenset(node.observations())
    return frozenset(_shape(c) for c in node.children)


def _siblings(node: ClusterNode) -> frozenset:
    return frozenset(frozenset(c.observations()) for c in node.children)


def hierarchical_redistribution(tree: Tree, objective=ObjectiveId.PU_GINI, trace: bool = False,
                                max_passes: int = MAX_PASSES, inplace: bool = False) -> tuple[Tree, OptimizerReport]:
    """Re-sort every cluster (with its subtree) from the root, depth first, until a pass changes nothing."""
    t0 = time.perf_counter()
    work = tree if inplace else tree.copy()
    mover = _Mover(work, objective, trace)
    report = mover.report
    report.score_trace.append((0, level_score(work, objective)))
    for node in work.nodes():
        node.stable = False

    def alive(node):
        return node is work.root or node.parent is not None

    def process(node: ClusterNode):
        if node.stable and node is not work.root:
            return
        # a lone child under the root has nowhere else to go
        for _ in range(MAX_SWEEPS if len(node.children) > 1 else 0):
            before = _siblings(node)
            changed = False
            for member in sorted(node.children, key=lambda c: -c.size):
                if member.parent is node:
                    changed |= mover.resort(member)
                if not alive(node):
                    return
            # moves can cancel out; the sibling sets are what must settle
            if not changed or _siblings(node) == before:
                break
        for child in list(node.children):
            if child.parent is node and not child.is_leaf:
                process(child)

    for p in range(1, max_passes + 1):
        mover.touched.clear()
        moves_before = report.moves
        shape = _shape(work.root)
        if not work.root.is_leaf:
            process(work.root)
        for node in work.nodes():
            node.stable = node.id not in mover.touched
        report.passes = p
        report.score_trace.append((p, level_score(work, objective)))
        # a pass whose moves cancel out (same nested sets) counts as no change
        if report.moves == moves_before or _shape(work.root) == shape:
            break
    report.wall_time = time.perf_counter() - t0
    return work, report


def _sort_block(tree: Tree, observations: list[Observation], scorer: Scorer, height: int) -> Tree:
    sub = Tree(tree.layout, height)
    sub._ids = tree._ids
    for obs in observations:
        sort_node(sub, sub.singleton(obs.id, obs.values), scorer)
    return sub


def layered_build(d: Dataset, ordering, objective=ObjectiveId.PU_GINI, block_height: int = 4,
                  optimize: bool = True) -> Tree:
    """Full-depth tree grown ``block_height`` levels at a time.

    A height-limited tree is sorted (and optimized); then every cluster at
    depth ``block_height - 1`` is rebuilt the same way over its own
    observations and substituted in place, until clusters bottom out in
    singletons. Observations keep their relative order from ``ordering``.
    """
    objective = ObjectiveId.parse(objective)
    rank = {obs_id: k for k, obs_id in enumerate(ordering)}
    tree = Tree(layout_for(d), block_height)
    scorer = Scorer(objective, tree.layout)
    for obs_id in ordering:
        sort_node(tree, tree.singleton(obs_id, d.by_id(obs_id).values), scorer)

    def finish(t: Tree) -> Tree:
        if optimize:
            hierarchical_redistribution(t, objective, inplace=True)
        t.height_bound = None
        return t

    finish(tree)
    pending = [n for n in tree.level(block_height - 1) if not n.is_leaf]
    while pending:
        node = pending.pop()
        obs = sorted(node.observations(), key=rank.__getitem__)
        sub = finish(_sort_block(tree, [d.by_id(i) for i in obs], scorer, block_height))
        while len(sub.root.children) == 1:
            # only the overall root may keep a lone child
            sub.root = sub.root.children[0]
            sub.root.parent = None
        deeper = [n for n in sub.level(block_height - 1) if not n.is_leaf]
        tree._replace(node, sub.root)
        pending.extend(deeper)
    return tree
