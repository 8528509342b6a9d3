"""Partition quality measures.

Four objectives share one contract: a partition of a parent cluster into
sibling clusters is scored from count tables alone.

``PU_GINI``
    partition utility, the average category utility of the clusters.
``PU_INFO``
    the same average over the entropy analogue of category utility.
``NORM_GAIN_RATIO`` / ``NORM_DE_MANTARAS``
    information gain summed over variables, normalised by the entropy of
    the partition or by the joint entropy of variable and cluster.

Besides the readable node-level functions, each objective is split into
per-cluster statistics that add up across clusters plus a ``combine`` step
using the parent's counts. The sorting code relies on that decomposition to
score every placement option of a level with a handful of array operations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .tree import ClusterNode, Layout

# two scores closer than this are treated as tied
TIE_TOL = 1e-10


class UndefinedScoreError(ArithmeticError):
    """A normalised objective has a zero denominator for this partition."""


class ObjectiveId(enum.Enum):
    PU_GINI = "pu"
    PU_INFO = "pu-info"
    NORM_GAIN_RATIO = "norm-gr"
    NORM_DE_MANTARAS = "norm-dm"

    @classmethod
    def parse(cls, name) -> "ObjectiveId":
        if isinstance(name, cls):
            return name
        for member in cls:
            if name in (member.value, member.name):
                return member
        raise ValueError(f"unknown objective {name!r}; choose from {[m.value for m in cls]}")


@dataclass
class PartitionView:
    parent: ClusterNode
    siblings: list[ClusterNode]

    def __post_init__(self):
        if not self.siblings:
            raise ValueError("empty partition")


def _xlog2x(x: np.ndarray) -> np.ndarray:
    """x * log2(x) with 0 log 0 = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _check_sizes(c: ClusterNode, parent: ClusterNode):
    if c.size <= 0 or parent.size <= 0:
        raise ValueError("category utility of an empty cluster")


# -- node-level formulas ------------------------------------------------------

def category_utility(c: ClusterNode, parent: ClusterNode) -> float:
    _check_sizes(c, parent)
    p_cond = c.counts / c.size
    p_marg = parent.counts / parent.size
    return c.size / parent.size * float(np.sum(p_cond**2 - p_marg**2))


def info_category_utility(c: ClusterNode, parent: ClusterNode) -> float:
    _check_sizes(c, parent)
    p_cond = c.counts / c.size
    p_marg = parent.counts / parent.size
    return c.size / parent.size * float(np.sum(_xlog2x(p_cond) - _xlog2x(p_marg)))


def partition_utility(p: PartitionView) -> float:
    return sum(category_utility(c, p.parent) for c in p.siblings) / len(p.siblings)


def info_partition_utility(p: PartitionView) -> float:
    return sum(info_category_utility(c, p.parent) for c in p.siblings) / len(p.siblings)


def _info_gain_per_var(p: PartitionView, layout: Layout) -> np.ndarray:
    M = p.parent.size
    gain = np.zeros(layout.n_vars)
    for c in p.siblings:
        gain += c.size / M * layout.per_var(_xlog2x(c.counts / c.size))
    gain -= layout.per_var(_xlog2x(p.parent.counts / M))
    return gain


def norm_gain_ratio_score(p: PartitionView, layout: Layout) -> float:
    M = p.parent.size
    denom = -float(sum(_xlog2x(np.array([c.size / M for c in p.siblings]))))
    if denom <= TIE_TOL:
        raise UndefinedScoreError("single-cluster partition has zero split entropy")
    return float(np.sum(_info_gain_per_var(p, layout) / denom))


def norm_de_mantaras_score(p: PartitionView, layout: Layout) -> float:
    M = p.parent.size
    denom = np.zeros(layout.n_vars)
    for c in p.siblings:
        denom -= layout.per_var(_xlog2x(c.counts / M))
    if (denom <= TIE_TOL).any():
        raise UndefinedScoreError("zero joint entropy of variable and cluster")
    return float(np.sum(_info_gain_per_var(p, layout) / denom))


def expected_correct(p: PartitionView) -> float:
    """Expected number of correctly predicted values under probability matching."""
    M = p.parent.size
    return sum(c.size / M * float(np.sum((c.counts / c.size) ** 2)) for c in p.siblings)


def score(objective: ObjectiveId, p: PartitionView, layout: Layout) -> float:
    objective = ObjectiveId.parse(objective)
    if objective is ObjectiveId.PU_GINI:
        return partition_utility(p)
    if objective is ObjectiveId.PU_INFO:
        return info_partition_utility(p)
    if objective is ObjectiveId.NORM_GAIN_RATIO:
        return norm_gain_ratio_score(p, layout)
    return norm_de_mantaras_score(p, layout)


def score_children(objective: ObjectiveId, node: ClusterNode, layout: Layout) -> float:
    """Score of the partition formed by ``node``'s children (``node`` alone if it is a leaf)."""
    siblings = node.children or [node]
    return score(objective, PartitionView(node, siblings), layout)


# -- additive decomposition used by the sorting code -------------------------

class Scorer:
    """Objective split into additive per-cluster statistics and a combine step.

    ``stats(counts, sizes)`` maps an (N, T) count matrix and N sizes to an
    (N, S) statistics matrix. ``combine(totals, n_clusters, parent_counts,
    parent_size)`` turns K rows of summed statistics into K scores; undefined
    scores come back as ``-inf`` so they never win an argmax.

    Probabilities of a variable are taken over that variable's own count
    total. For ordinary nodes every total equals the node size; for an item
    with a masked variable the masked block stays at the pre-insertion
    totals, so the hidden value has no influence on the scores.
    """

    def __init__(self, objective: ObjectiveId, layout: Layout):
        self.objective = ObjectiveId.parse(objective)
        self.layout = layout

    def stats(self, counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        lay = self.layout
        counts = np.asarray(counts, dtype=float)
        n = lay.per_var(counts)  # (N, V) per-variable totals
        obj = self.objective
        if obj is ObjectiveId.PU_GINI:
            sq = lay.per_var(counts**2)
            return np.divide(sq, n, out=np.zeros_like(sq), where=n > 0)
        xlx = lay.per_var(_xlog2x(counts))
        ent = xlx - _xlog2x(n)  # sum_j c log2(c/n) per variable
        if obj is ObjectiveId.PU_INFO:
            return ent
        if obj is ObjectiveId.NORM_GAIN_RATIO:
            sizes = np.asarray(sizes, dtype=float)[:, None]
            return np.hstack([ent, _xlog2x(sizes)])
        return np.hstack([ent, xlx, n])

    def combine(self, totals: np.ndarray, n_clusters, parent_counts: np.ndarray, parent_size: int) -> np.ndarray:
        lay = self.layout
        V = lay.n_vars
        p = np.asarray(parent_counts, dtype=float)
        Mv = lay.per_var(p)  # per-variable parent totals
        n_clusters = np.asarray(n_clusters, dtype=float)
        obj = self.objective
        if obj is ObjectiveId.PU_GINI:
            base = np.sum(lay.per_var(p**2) / Mv**2)
            return (np.sum(totals / Mv, axis=1) - base) / n_clusters
        marg = lay.per_var(_xlog2x(p / Mv[lay.var_of]))
        gain = totals[:, :V] / Mv - marg  # information gain per variable
        if obj is ObjectiveId.PU_INFO:
            return gain.sum(axis=1) / n_clusters
        with np.errstate(divide="ignore", invalid="ignore"):
            if obj is ObjectiveId.NORM_GAIN_RATIO:
                M = float(parent_size)
                den = np.log2(M) - totals[:, V] / M
                out = gain.sum(axis=1) / den
                out[den <= TIE_TOL] = -np.inf
                return out
            xlx, tot = totals[:, V:2 * V], totals[:, 2 * V:]
            den = -xlx / Mv + tot / Mv * np.log2(Mv)
            out = (gain / den).sum(axis=1)
            out[(den <= TIE_TOL).any(axis=1)] = -np.inf
            return out

    def partition(self, parent: ClusterNode, siblings: list[ClusterNode]) -> float:
        """Score one existing partition through the additive route."""
        counts = np.stack([c.counts for c in siblings])
        sizes = np.array([c.size for c in siblings])
        tot = self.stats(counts, sizes).sum(axis=0, keepdims=True)
        return float(self.combine(tot, [len(siblings)], parent.counts, parent.size)[0])

    def options(self, parent: ClusterNode, children: list[ClusterNode], vec: np.ndarray, size: int) -> np.ndarray:
        """Scores for adding (vec, size) to each child in turn, then as a new child.

        Returns N + 1 scores; the parent is scored as if it already held the
        added counts.
        """
        counts = np.stack([c.counts for c in children])
        sizes = np.array([c.size for c in children])
        old = self.stats(counts, sizes)
        new = self.stats(counts + vec, sizes + size)
        alone = self.stats(vec[None, :], np.array([size]))
        base = old.sum(axis=0)
        totals = np.vstack([base - old + new, base + alone])
        n = len(children)
        n_clusters = np.full(n + 1, n)
        n_clusters[-1] = n + 1
        return self.combine(totals, n_clusters, parent.counts + vec, parent.size + size)


def level_score(tree, objective: ObjectiveId) -> float:
    """Objective score of the first-level partition (the root's children)."""
    root = tree.root
    siblings = root.children or [root]
    return Scorer(objective, tree.layout).partition(root, siblings)
