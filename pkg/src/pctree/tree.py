"""Probabilistic categorization trees.

Each node stores how many observations it covers and, per variable, how many
of them take each value. Probabilities are derived from the counts on demand.
All count tables are flat integer vectors laid out variable by variable (see
:class:`Layout`).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np


class TreeStructureError(RuntimeError):
    pass


class HeightBoundError(TreeStructureError):
    pass


class UndefinedNodeError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Column layout of a flattened count table: one block of columns per variable."""

    arities: tuple[int, ...]

    def __post_init__(self):
        offsets = np.concatenate([[0], np.cumsum(self.arities)]).astype(np.int64)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "var_of", np.repeat(np.arange(len(self.arities)), self.arities))

    @property
    def n_vars(self) -> int:
        return len(self.arities)

    @property
    def width(self) -> int:
        return int(self.offsets[-1])

    def column(self, var: int, value: int) -> int:
        return int(self.offsets[var]) + value

    def encode(self, values, masked: int | None = None) -> np.ndarray:
        """Count vector of a single observation; a masked variable contributes nothing."""
        vec = np.zeros(self.width, dtype=np.int64)
        for i, v in enumerate(values):
            if i != masked:
                vec[self.offsets[i] + v] = 1
        return vec

    def per_var(self, x: np.ndarray) -> np.ndarray:
        """Sum the last axis of ``x`` within each variable's block."""
        return np.add.reduceat(x, self.offsets[:-1], axis=-1)

    def block(self, x: np.ndarray, var: int) -> np.ndarray:
        return x[..., self.offsets[var]:self.offsets[var + 1]]


class ClusterNode:
    __slots__ = ("id", "size", "counts", "children", "parent", "leaf_obs", "stable")

    def __init__(self, node_id: int, size: int, counts: np.ndarray, leaf_obs: int | None = None):
        self.id = node_id
        self.size = size
        self.counts = counts
        self.children: list[ClusterNode] = []
        self.parent: ClusterNode | None = None
        self.leaf_obs = leaf_obs
        self.stable = False

    def __repr__(self):
        kind = f"obs={self.leaf_obs}" if self.leaf_obs is not None else f"{len(self.children)} children"
        return f"<ClusterNode {self.id} size={self.size} {kind}>"

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def iter_subtree(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list["ClusterNode"]:
        return [n for n in self.iter_subtree() if n.is_leaf]

    def observations(self) -> list[int]:
        return [n.leaf_obs for n in self.leaves()]

    def height(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.height() for c in self.children)

    def depth(self) -> int:
        d, node = 0, self
        while node.parent is not None:
            node = node.parent
            d += 1
        return d

    def ancestors(self):
        """Yield the node itself, then its parent, and so on up to the root."""
        node = self
        while node is not None:
            yield node
            node = node.parent

    def majority(self, layout: Layout, var: int) -> int:
        """Most frequent value of ``var`` here; ties go to the lowest ordinal."""
        return int(np.argmax(layout.block(self.counts, var)))


def prob(node: ClusterNode, layout: Layout, var: int, value: int) -> float:
    if node.size <= 0:
        raise UndefinedNodeError("probability of an empty node")
    return float(node.counts[layout.column(var, value)]) / node.size


class Tree:
    """A probabilistic categorization tree with an optional leaf-depth bound."""

    def __init__(self, layout: Layout, height_bound: int | None = None):
        self.layout = layout
        self.height_bound = height_bound
        self.root: ClusterNode | None = None
        self._ids = itertools.count()

    # -- construction -------------------------------------------------------

    def new_node(self, size: int, counts: np.ndarray, leaf_obs: int | None = None) -> ClusterNode:
        return ClusterNode(next(self._ids), size, counts, leaf_obs)

    def singleton(self, obs_id: int, values, masked: int | None = None) -> ClusterNode:
        return self.new_node(1, self.layout.encode(values, masked), leaf_obs=obs_id)

    def internal(self, children: list[ClusterNode]) -> ClusterNode:
        node = self.new_node(sum(c.size for c in children), sum(c.counts for c in children))
        for c in children:
            c.parent = node
        node.children = list(children)
        return node

    def copy(self) -> "Tree":
        """Deep copy that keeps node ids (and continues the id counter)."""
        out = Tree(self.layout, self.height_bound)
        top = max((n.id for n in self.nodes()), default=-1)
        out._ids = itertools.count(top + 1)

        def clone(node, parent):
            c = ClusterNode(node.id, node.size, node.counts.copy(), node.leaf_obs)
            c.parent = parent
            c.stable = node.stable
            c.children = [clone(ch, c) for ch in node.children]
            return c

        out.root = clone(self.root, None) if self.root is not None else None
        return out

    # -- queries -------------------------------------------------------------

    def nodes(self):
        return self.root.iter_subtree() if self.root is not None else iter(())

    def leaves(self) -> list[ClusterNode]:
        return self.root.leaves() if self.root is not None else []

    def level(self, depth: int) -> list[ClusterNode]:
        """Nodes at exactly ``depth``; leaves above it stand in for themselves."""
        out, frontier = [], [(self.root, 0)]
        while frontier:
            node, d = frontier.pop()
            if d == depth or node.is_leaf:
                out.append(node)
            else:
                frontier.extend((c, d + 1) for c in reversed(node.children))
        return out

    def find(self, node_id: int) -> ClusterNode:
        for n in self.nodes():
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def contains(self, node: ClusterNode) -> bool:
        return self.root is not None and any(a is self.root for a in node.ancestors())

    # -- mutation ------------------------------------------------------------

    def _bump(self, start: ClusterNode | None, size: int, counts: np.ndarray, sign: int):
        node = start
        while node is not None:
            node.size += sign * size
            node.counts += sign * counts
            node = node.parent

    def _replace(self, old: ClusterNode, new: ClusterNode):
        """Put ``new`` where ``old`` sits (same parent slot, or as root)."""
        parent = old.parent
        new.parent = parent
        if parent is None:
            self.root = new
        else:
            parent.children[parent.children.index(old)] = new
        old.parent = None

    def detach(self, node: ClusterNode) -> ClusterNode:
        """Remove ``node`` with its subtree; return the node now standing where its parent stood.

        A parent left with a single child is replaced by that child. The root
        is exempt: it may keep a lone child (a one-cluster top level), but
        that child cannot be detached.
        """
        parent = node.parent
        if parent is None:
            raise TreeStructureError("cannot detach the root")
        if parent is self.root and len(parent.children) == 1:
            raise TreeStructureError("cannot detach the only child of the root")
        parent.children.remove(node)
        node.parent = None
        self._bump(parent, node.size, node.counts, -1)
        if len(parent.children) == 1 and parent.parent is not None:
            lone = parent.children[0]
            parent.children = []
            self._replace(parent, lone)
            return lone
        return parent

    def attach(self, host: ClusterNode, subtree: ClusterNode, as_new_child: bool = True, index: int | None = None):
        """Add ``subtree`` under ``host`` (or merge it with a leaf host when ``as_new_child`` is false)."""
        if subtree.parent is not None or subtree is self.root:
            raise TreeStructureError("subtree is still attached")
        if not self.contains(host):
            raise TreeStructureError("host is not in this tree")
        if not as_new_child:
            if not host.is_leaf:
                raise TreeStructureError("merging requires a leaf host; attach as a new child instead")
            return self.extend(host, subtree)
        self._check_fits(host.depth() + 1, subtree)
        subtree.parent = host
        if index is None:
            host.children.append(subtree)
        else:
            host.children.insert(index, subtree)
        self._bump(host, subtree.size, subtree.counts, +1)
        return host

    def extend(self, leaf: ClusterNode, subtree: ClusterNode) -> ClusterNode:
        """Replace ``leaf`` by a new internal node whose children are ``leaf`` and ``subtree``."""
        if not leaf.is_leaf:
            raise TreeStructureError("extend needs a leaf")
        if subtree.parent is not None:
            raise TreeStructureError("subtree is still attached")
        depth = leaf.depth()
        self._check_fits(depth + 1, subtree)
        parent = leaf.parent
        node = self.new_node(leaf.size + subtree.size, leaf.counts + subtree.counts)
        self._replace(leaf, node)
        node.children = [leaf, subtree]
        leaf.parent = node
        subtree.parent = node
        self._bump(parent, subtree.size, subtree.counts, +1)
        return node

    def extend_leaf(self, leaf: ClusterNode, obs_id: int, values) -> ClusterNode:
        return self.extend(leaf, self.singleton(obs_id, values))

    def _check_fits(self, depth: int, subtree: ClusterNode):
        if self.height_bound is not None and depth + subtree.height() > self.height_bound:
            raise HeightBoundError(
                f"placing a height-{subtree.height()} subtree at depth {depth} exceeds bound {self.height_bound}"
            )

    # -- checks & output -----------------------------------------------------

    def check(self, singleton_leaves: bool = True):
        """Assert every count and structure invariant; raise AssertionError on failure.

        Pruned trees have leaves covering several observations; pass
        ``singleton_leaves=False`` for those.
        """
        if self.root is None:
            return
        assert self.root.parent is None
        seen = set()
        width = self.layout.width
        for node in self.nodes():
            assert node.counts.shape == (width,)
            assert (node.counts >= 0).all(), f"negative count at {node}"
            assert (self.layout.per_var(node.counts) == node.size).all(), f"row sums != size at {node}"
            if node.is_leaf and singleton_leaves:
                assert node.size == 1 and node.leaf_obs is not None, f"bad leaf {node}"
                assert node.leaf_obs not in seen, f"observation {node.leaf_obs} at two leaves"
                seen.add(node.leaf_obs)
            if node.is_leaf:
                if self.height_bound is not None:
                    assert node.depth() <= self.height_bound, f"{node} deeper than bound"
            else:
                assert node.leaf_obs is None
                assert len(node.children) >= 2 or node is self.root, f"{node} has a single child"
                assert node.size == sum(c.size for c in node.children)
                assert (node.counts == sum(c.counts for c in node.children)).all()
                for c in node.children:
                    assert c.parent is node
        if singleton_leaves:
            assert len(seen) == self.root.size

    def to_dict(self, node: ClusterNode | None = None) -> dict:
        node = node if node is not None else self.root
        rec = {
            "id": node.id,
            "size": int(node.size),
            "counts": [self.layout.block(node.counts, i).tolist() for i in range(self.layout.n_vars)],
            "children": [self.to_dict(c) for c in node.children],
        }
        if node.leaf_obs is not None:
            rec["obs"] = int(node.leaf_obs)
        return rec

    def dumps(self) -> str:
        return json.dumps(self.to_dict() if self.root is not None else None, indent=1)

    @classmethod
    def from_dict(cls, rec: dict, height_bound: int | None = None) -> "Tree":
        """Rebuild a tree from :meth:`to_dict` output (ids and counts kept)."""
        layout = Layout(tuple(len(block) for block in rec["counts"]))
        tree = cls(layout, height_bound)

        def load(r, parent):
            counts = np.concatenate([np.asarray(b, dtype=np.int64) for b in r["counts"]])
            node = ClusterNode(r["id"], r["size"], counts, r.get("obs"))
            node.parent = parent
            node.children = [load(c, node) for c in r["children"]]
            return node

        tree.root = load(rec, None)
        top = max(n.id for n in tree.nodes())
        tree._ids = itertools.count(top + 1)
        return tree


def flatten(node: ClusterNode, max_height: int):
    """Collapse structure so ``node`` has height at most ``max_height`` (counts unchanged)."""
    if node.is_leaf:
        return
    if max_height <= 0:
        raise HeightBoundError("an internal node cannot sit at the depth bound")
    if max_height == 1:
        leaves = node.leaves()
        node.children = leaves
        for leaf in leaves:
            leaf.parent = node
        return
    for c in node.children:
        flatten(c, max_height - 1)
