"""Test helpers: tiny dataset builders and exact (Fraction) reference implementations."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from pctree.construct import layout_for
from pctree.dataset import encode_rows
from pctree.frontier import FrontierTable
from pctree.tree import Tree

# criterion number -> (passed, detail); filled by test_acceptance, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def dataset_from(rows):
    return encode_rows([[str(v) for v in r] for r in rows])


def random_rows(rng: np.random.Generator, n: int, n_vars: int, arity: int = 2):
    return [tuple(int(v) for v in rng.integers(0, arity, n_vars)) for _ in range(n)]


def tree_from_blocks(d, blocks, height_bound=2) -> Tree:
    """Height-2 tree whose first level is the given blocks of observation ids."""
    tree = Tree(layout_for(d), height_bound)
    clusters = []
    for block in blocks:
        leaves = [tree.singleton(i, d.by_id(i).values) for i in block]
        clusters.append(leaves[0] if len(leaves) == 1 else tree.internal(leaves))
    tree.root = tree.internal(clusters)
    return tree


def top_blocks(tree) -> list[list[int]]:
    return sorted(sorted(c.observations()) for c in tree.root.children)


def random_mutations(tree: Tree, rng: np.random.Generator, steps: int):
    for _ in range(steps):
        nodes = [n for n in tree.nodes() if n is not tree.root
                 and not (n.parent is tree.root and len(tree.root.children) == 1)]
        item = nodes[rng.integers(len(nodes))]
        tree.detach(item)
        hosts = list(tree.nodes())
        host = hosts[rng.integers(len(hosts))]
        if host.is_leaf:
            tree.extend(host, item)
        else:
            tree.attach(host, item, index=int(rng.integers(len(host.children) + 1)))
        yield


def f4_tree():
    """R -> {A, B, C}; A -> {A1, A2}; B -> {B1, B2, B3}; C -> {C1, C2}; two singleton leaves under each."""
    rows = [(i % 2, i % 3, i % 5) for i in range(14)]
    d = dataset_from(rows)
    t = Tree(layout_for(d))
    obs = iter(range(14))
    named = {}

    def pair(name):
        leaves = [t.singleton(i, d.by_id(i).values) for i in (next(obs), next(obs))]
        named[name] = t.internal(leaves)
        return named[name]

    for top, subs in (("A", ["A1", "A2"]), ("B", ["B1", "B2", "B3"]), ("C", ["C1", "C2"])):
        named[top] = t.internal([pair(s) for s in subs])
    t.root = named["R"] = t.internal([named["A"], named["B"], named["C"]])
    return t, named


def f4_table(named):
    counts = [
        {"R": 10, "A": 2, "B": 2, "C": 2},
        {"R": 5, "A": 3, "B": 3, "C": 1, "C1": 2, "C2": 2, "A1": 1, "A2": 1, "B1": 1, "B2": 1, "B3": 1},
        {"R": 3, "A": 3, "B": 5, "C": 4, "A1": 2, "A2": 2, "B1": 2, "B2": 2, "B3": 2, "C1": 1, "C2": 1},
    ]
    return FrontierTable([{named[k].id: v for k, v in c.items()} for c in counts], n_validation=10)


# -- exact oracle -------------------------------------------------------------------

def _dist(rows):
    """Per variable: value -> exact relative frequency."""
    n = len(rows)
    out = []
    for i in range(len(rows[0])):
        counts: dict = {}
        for r in rows:
            counts[r[i]] = counts.get(r[i], 0) + 1
        out.append({v: Fraction(c, n) for v, c in counts.items()})
    return out


def cu_exact(cluster, parent) -> Fraction:
    pc, pp = _dist(cluster), _dist(parent)
    inner = sum(sum(p * p for p in d.values()) for d in pc)
    outer = sum(sum(p * p for p in d.values()) for d in pp)
    return Fraction(len(cluster), len(parent)) * (inner - outer)


def pu_exact(blocks) -> Fraction:
    parent = [r for b in blocks for r in b]
    return sum(cu_exact(b, parent) for b in blocks) / len(blocks)


def expected_correct_exact(blocks) -> Fraction:
    parent = [r for b in blocks for r in b]
    return sum(Fraction(len(b), len(parent)) * sum(sum(p * p for p in d.values()) for d in _dist(b))
               for b in blocks)


def info_pu_exact(blocks) -> float:
    parent = [r for b in blocks for r in b]

    def xlx(p):
        return float(p) * math.log2(p) if p > 0 else 0.0

    total = 0.0
    pp = _dist(parent)
    for b in blocks:
        pc = _dist(b)
        inner = sum(xlx(p) for d in pc for p in d.values())
        outer = sum(xlx(p) for d in pp for p in d.values())
        total += len(b) / len(parent) * (inner - outer)
    return total / len(blocks)


def set_partitions(items):
    """Every partition of ``items`` into non-empty blocks (Bell(n) of them)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def bell(n: int) -> int:
    return sum(1 for _ in set_partitions(range(n)))


def all_option_blocks(blocks, item):
    """Candidate partitions when ``item`` joins each block in turn, then as a new block."""
    for k in range(len(blocks)):
        yield [b + [item] if j == k else b for j, b in enumerate(blocks)]
    yield [*blocks, [item]]

