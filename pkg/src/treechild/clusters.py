"""Decomposition of an instance along clusters shared by all trees.

Each common cluster is solved on its own, with nested clusters collapsed to
composite taxa.  The sub-sequences are spliced innermost first; a composite
taxon in an outer sequence stands for the terminal leaf of its cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .forest import CherryPickingSequence
from .newick import Instance, TaxonTable, Tree

COMPOSITE_PREFIX = "_cluster_"


@dataclass
class ClusterNode:
    taxa: frozenset
    children: list = field(default_factory=list)
    subinstance: Instance | None = None
    composite_label: str | None = None
    # subinstance taxon id -> original taxon id, or the child ClusterNode it stands for
    origin: dict = field(default_factory=dict)

    def walk(self):
        """Clusters in post-order (children before parents)."""
        out, stack = [], [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                out.append(node)
            else:
                stack.append((node, True))
                stack.extend((c, False) for c in reversed(node.children))
        return out

    def sizes(self) -> list[int]:
        return [len(node.taxa) for node in self.walk()]


def _subtree_masks(tree: Tree) -> dict[int, int]:
    """Leaf-set bitmask of every node."""
    mask = {}
    for v in tree.postorder():
        if tree.leaf[v] is not None:
            mask[v] = 1 << tree.leaf[v]
        else:
            m = 0
            for c in tree.children[v]:
                m |= mask[c]
            mask[v] = m
    return mask


def common_cluster_masks(instance: Instance) -> set[int]:
    """Bitmasks of the non-trivial clusters present in every tree."""
    full = (1 << instance.n) - 1
    common = None
    for tree in instance.trees:
        masks = {m for m in _subtree_masks(tree).values() if m != full and m & (m - 1)}
        common = masks if common is None else common & masks
    return common or set()


def _bits(mask: int) -> frozenset:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def find_common_clusters(instance: Instance) -> ClusterNode:
    """Nested family of common clusters, rooted at the full taxon set."""
    full = (1 << instance.n) - 1
    masks = sorted(common_cluster_masks(instance), key=lambda m: (bin(m).count("1"), m))
    nodes = {m: ClusterNode(taxa=_bits(m)) for m in masks}
    root = ClusterNode(taxa=frozenset(range(instance.n)))
    nodes[full] = root
    ordered = masks + [full]
    for i, m in enumerate(ordered[:-1]):
        # smallest strict superset; masks of one tree are laminar
        parent = next(p for p in ordered[i + 1:] if p & m == m and p != m)
        nodes[parent].children.append(nodes[m])
    for node in nodes.values():
        node.children.sort(key=lambda c: min(c.taxa))
    _build_subinstances(instance, root, nodes)
    return root


def _build_subinstances(instance: Instance, root: ClusterNode, nodes: dict):
    taken = set(instance.taxa.labels)
    counter = 0
    for node in root.walk():
        if node is root:
            continue
        counter += 1
        label = f"{COMPOSITE_PREFIX}{counter}"
        while label in taken:
            label = "_" + label
        taken.add(label)
        node.composite_label = label

    masks = [_subtree_masks(tree) for tree in instance.trees]
    for node in root.walk():
        child_of = {}
        for c in node.children:
            for x in c.taxa:
                child_of[x] = c
        direct = sorted(node.taxa - set(child_of))
        names = [instance.taxa[x] for x in direct] + [c.composite_label for c in node.children]
        table = TaxonTable(sorted(names))
        origin = {table.index[instance.taxa[x]]: x for x in direct}
        for c in node.children:
            origin[table.index[c.composite_label]] = c
        node.origin = origin
        want = sum(1 << x for x in node.taxa)
        child_masks = {sum(1 << x for x in c.taxa): c for c in node.children}
        trees = []
        for tree, mask in zip(instance.trees, masks):
            top = next(v for v, m in mask.items() if m == want)
            trees.append(_restrict(tree, top, mask, child_masks, table, instance.taxa))
        node.subinstance = Instance(taxa=table, trees=trees)


def _restrict(tree, top, mask, child_masks, table, taxa) -> Tree:
    parent, children, leaf = [], [], []
    stack = [(top, None)]
    while stack:
        v, p = stack.pop()
        u = len(parent)
        parent.append(p)
        children.append([])
        if p is not None:
            children[p].append(u)
        comp = child_masks.get(mask[v])
        if comp is not None:
            leaf.append(table.index[comp.composite_label])
        elif tree.leaf[v] is not None:
            leaf.append(table.index[taxa[tree.leaf[v]]])
        else:
            leaf.append(None)
            for c in reversed(tree.children[v]):
                stack.append((c, u))
    return Tree(parent=parent, children=children, leaf=leaf, root=0)


def solve_clustered(instance: Instance, solver: Callable, max_k: int | None = None,
                    root: ClusterNode | None = None) -> CherryPickingSequence:
    """Solve every cluster with ``solver(subinstance, budget)`` and splice the results.

    ``budget`` is what remains of ``max_k`` after the clusters already solved
    (None when unbounded).  Solver exceptions propagate.
    """
    root = root or find_common_clusters(instance)
    rep: dict[int, int] = {}  # id(ClusterNode) -> original taxon standing for it
    entries = []
    used = 0
    for node in root.walk():
        budget = None if max_k is None else max_k - used
        sub_seq = solver(node.subinstance, budget)
        used += sub_seq.weight

        def orig(v, node=node):
            o = node.origin[v]
            return o if isinstance(o, int) else rep[id(o)]

        mapped = [(orig(x), None if y is None else orig(y)) for x, y in sub_seq]
        if node is root:
            entries.extend(mapped)
        else:
            rep[id(node)] = mapped[-1][0]
            entries.extend(mapped[:-1])
    return CherryPickingSequence(entries, instance.n)
