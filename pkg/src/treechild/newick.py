"""Newick input and (extended) Newick output.

Trees are stored as small node arenas indexed by integers.  Taxa are dense
integer ids assigned in sorted label order, so canonical output is stable
regardless of the order in which trees list their leaves.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .network import Network

LABEL_RE = re.compile(r"[A-Za-z0-9_.\-]+")
NUMBER_RE = re.compile(r"[-+]?[0-9]*\.?[0-9]+([eE][-+]?[0-9]+)?")
HYBRID_RE = re.compile(r"#H([0-9]+)")


class NewickError(ValueError):
    """Base class for malformed or unsupported input."""


class NewickSyntaxError(NewickError):
    pass


class UnbalancedParenthesesError(NewickSyntaxError):
    pass


class LabelError(NewickError):
    """Empty or duplicate leaf label."""


class NonBinaryError(NewickError):
    pass


class MultifurcationError(NonBinaryError):
    pass


class UnaryNodeError(NonBinaryError):
    pass


class LeafSetMismatchError(NewickError):
    pass


class NewickWarning(UserWarning):
    pass


class TaxonTable:
    """Bijection between taxon labels and ids ``0..n-1``."""

    def __init__(self, labels: Iterable[str]):
        self.labels = list(labels)
        self.index = {name: i for i, name in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise LabelError("duplicate taxon label")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, taxon: int) -> str:
        return self.labels[taxon]

    def __eq__(self, other):
        return isinstance(other, TaxonTable) and self.labels == other.labels

    def __repr__(self):
        return f"TaxonTable({self.labels!r})"

    def id(self, name: str) -> int:
        return self.index[name]


@dataclass
class Tree:
    """Rooted binary tree; node ``i`` has ``parent[i]``, ``children[i]``, ``leaf[i]``."""

    parent: list
    children: list
    leaf: list
    root: int

    def __len__(self):
        return len(self.parent)

    def leaves(self) -> list[int]:
        return [t for t in self.leaf if t is not None]

    def leaf_set(self) -> frozenset:
        return frozenset(self.leaves())

    def postorder(self) -> list[int]:
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(self.children[v])
        order.reverse()
        return order

    def clusters(self) -> set:
        """Leaf sets below every node, as frozensets of taxon ids."""
        below: dict[int, frozenset] = {}
        for v in self.postorder():
            if self.leaf[v] is not None:
                below[v] = frozenset((self.leaf[v],))
            else:
                below[v] = frozenset().union(*(below[c] for c in self.children[v]))
        return set(below.values())

    def cherries(self) -> set:
        out = set()
        for v, kids in enumerate(self.children):
            if len(kids) == 2 and all(self.leaf[c] is not None for c in kids):
                a, b = (self.leaf[c] for c in kids)
                out.add((min(a, b), max(a, b)))
        return out

    @classmethod
    def single(cls, taxon: int) -> "Tree":
        return cls(parent=[None], children=[[]], leaf=[taxon], root=0)


@dataclass
class Instance:
    taxa: TaxonTable
    trees: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.taxa)

    @property
    def t(self) -> int:
        return len(self.trees)


# --------------------------------------------------------------------------
# low-level parsing

@dataclass
class _RawNode:
    children: list = field(default_factory=list)
    label: str | None = None
    hybrid: int | None = None


def _parse_statement(text: str, allow_hybrid: bool = False) -> tuple[list, int]:
    """Parse one statement (without ';') into a list of raw nodes and the root index."""
    nodes: list[_RawNode] = []
    stack: list[int] = []
    root = None
    pos = 0
    n = len(text)
    expect_node = True  # at a position where a new node may begin

    def skip_ws(p):
        while p < n and text[p].isspace():
            p += 1
        return p

    def read_suffix(p, node_id, internal):
        # label, hybrid tag, branch length, in that order
        p = skip_ws(p)
        m = LABEL_RE.match(text, p)
        if m:
            if internal:
                warnings.warn(f"ignoring internal node label {m.group()!r}", NewickWarning, stacklevel=4)
            else:
                nodes[node_id].label = m.group()
            p = m.end()
        if p < n and text[p] == "#":
            m = HYBRID_RE.match(text, p)
            if not m or not allow_hybrid:
                raise NewickSyntaxError(f"unexpected '#' at offset {p}")
            nodes[node_id].hybrid = int(m.group(1))
            p = m.end()
        p = skip_ws(p)
        if p < n and text[p] == ":":
            m = NUMBER_RE.match(text, p + 1)
            if not m:
                raise NewickSyntaxError(f"bad branch length at offset {p}")
            warnings.warn("ignoring branch lengths", NewickWarning, stacklevel=4)
            p = m.end()
        return p

    pos = skip_ws(pos)
    while pos < n:
        ch = text[pos]
        if ch == "(":
            if not expect_node:
                raise NewickSyntaxError(f"unexpected '(' at offset {pos}")
            nodes.append(_RawNode())
            v = len(nodes) - 1
            if stack:
                nodes[stack[-1]].children.append(v)
            elif root is not None:
                raise NewickSyntaxError("more than one tree in a statement")
            else:
                root = v
            stack.append(v)
            pos += 1
            expect_node = True
        elif ch == ",":
            if not stack:
                raise UnbalancedParenthesesError(f"',' outside parentheses at offset {pos}")
            if expect_node:
                raise LabelError(f"empty label at offset {pos}")
            pos += 1
            expect_node = True
        elif ch == ")":
            if not stack:
                raise UnbalancedParenthesesError(f"unmatched ')' at offset {pos}")
            if expect_node:
                raise LabelError(f"empty label at offset {pos}")
            v = stack.pop()
            pos = read_suffix(pos + 1, v, internal=True)
            expect_node = False
        elif ch.isspace():
            pos += 1
        else:
            if not expect_node:
                raise NewickSyntaxError(f"unexpected {ch!r} at offset {pos}")
            nodes.append(_RawNode())
            v = len(nodes) - 1
            if stack:
                nodes[stack[-1]].children.append(v)
            elif root is not None:
                raise NewickSyntaxError("more than one tree in a statement")
            else:
                root = v
            before = pos
            pos = read_suffix(pos, v, internal=False)
            if pos == before or (nodes[v].label is None and nodes[v].hybrid is None):
                raise NewickSyntaxError(f"unexpected {ch!r} at offset {before}")
            expect_node = False
    if stack:
        raise UnbalancedParenthesesError("unmatched '('")
    if root is None:
        raise NewickSyntaxError("empty statement")
    return nodes, root


def split_statements(text: str) -> list[str]:
    """Split text into ';'-terminated statements, dropping '#' comment lines."""
    body = "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))
    parts = body.split(";")
    tail = parts.pop()
    if tail.strip():
        raise NewickSyntaxError("statement not terminated by ';'")
    return [p.strip() for p in parts if p.strip()]


def _raw_labels(nodes, root):
    labels = [nd.label for nd in nodes if not nd.children]
    if any(lab is None for lab in labels):
        raise LabelError("leaf without label")
    seen = set()
    for lab in labels:
        if lab in seen:
            raise LabelError(f"duplicate label {lab!r}")
        seen.add(lab)
    return labels


def _build_tree(nodes, root, taxa: TaxonTable) -> Tree:
    parent = [None] * len(nodes)
    children = [[] for _ in nodes]
    leaf = [None] * len(nodes)
    for v, nd in enumerate(nodes):
        if len(nd.children) > 2:
            raise MultifurcationError(f"node with {len(nd.children)} children; only binary trees are supported")
        if len(nd.children) == 1:
            raise UnaryNodeError("node with a single child")
        children[v] = list(nd.children)
        for c in nd.children:
            parent[c] = v
        if not nd.children:
            leaf[v] = taxa.index[nd.label]
    return Tree(parent=parent, children=children, leaf=leaf, root=root)


def parse_instance(text: str) -> Instance:
    """Parse one binary Newick tree per ';'-terminated statement.

    All trees must share one leaf set.  Taxon ids follow sorted label order.
    """
    if not text or not text.strip():
        raise NewickSyntaxError("empty input")
    raw = []
    for stmt in split_statements(text):
        nodes, root = _parse_statement(stmt)
        raw.append((nodes, root, _raw_labels(nodes, root)))
    if not raw:
        raise NewickSyntaxError("no trees in input")
    leafset = set(raw[0][2])
    for i, (_, _, labels) in enumerate(raw[1:], start=2):
        if set(labels) != leafset:
            diff = sorted(set(labels) ^ leafset)
            raise LeafSetMismatchError(f"tree {i} leaf set differs from tree 1 (symmetric difference: {diff})")
    taxa = TaxonTable(sorted(leafset))
    return Instance(taxa=taxa, trees=[_build_tree(nodes, root, taxa) for nodes, root, _ in raw])


def parse_tree(text: str, taxa: TaxonTable) -> Tree:
    """Parse a single tree over an existing taxon table (its leaves may be a subset)."""
    stmts = split_statements(text if text.rstrip().endswith(";") else text + ";")
    if len(stmts) != 1:
        raise NewickSyntaxError("expected exactly one tree")
    nodes, root = _parse_statement(stmts[0])
    for lab in _raw_labels(nodes, root):
        if lab not in taxa.index:
            raise LeafSetMismatchError(f"unknown taxon {lab!r}")
    return _build_tree(nodes, root, taxa)


# --------------------------------------------------------------------------
# writing

def _min_leaf(children, leaf, root) -> dict:
    """Smallest taxon id reachable from each node (works for trees and DAGs)."""
    low: dict[int, int] = {}
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if v in low:
            continue
        if done:
            vals = [low[c] for c in children[v]]
            if leaf[v] is not None:
                vals.append(leaf[v])
            low[v] = min(vals)
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in children[v] if c not in low)
    return low


def write_tree(tree: Tree, taxa: TaxonTable) -> str:
    """Canonical Newick: children ordered by the smallest taxon id below them."""
    low = _min_leaf(tree.children, tree.leaf, tree.root)
    out: list[str] = []
    stack: list = [tree.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        if tree.leaf[item] is not None:
            out.append(taxa[tree.leaf[item]])
            continue
        kids = sorted(tree.children[item], key=low.__getitem__)
        out.append("(")
        stack.append(")")
        for i, c in enumerate(reversed(kids)):
            stack.append(c)
            if i < len(kids) - 1:
                stack.append(",")
    return "".join(out) + ";"


def write_network(net: "Network", taxa: TaxonTable) -> str:
    """Extended Newick; reticulations are tagged ``#H1..#Hk`` in depth-first discovery order."""
    low = _min_leaf(net.children, net.leaf, net.root)
    tags: dict[int, int] = {}
    printed: set = set()
    out: list[str] = []
    stack: list = [net.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        v = item
        is_ret = len(net.parents[v]) >= 2
        if is_ret:
            if v not in tags:
                tags[v] = len(tags) + 1
            tag = f"#H{tags[v]}"
            if v in printed:
                out.append(tag)
                continue
            printed.add(v)
        else:
            tag = ""
        if not net.children[v]:
            out.append(taxa[net.leaf[v]] + tag)
            continue
        kids = sorted(net.children[v], key=low.__getitem__)
        out.append("(")
        stack.append(")" + tag)
        for i, c in enumerate(reversed(kids)):
            stack.append(c)
            if i < len(kids) - 1:
                stack.append(",")
    return "".join(out) + ";"


def parse_network(text: str, taxa: TaxonTable | None = None) -> tuple["Network", TaxonTable]:
    """Read an extended Newick network; nodes sharing a ``#Hi`` tag are merged.

    When ``taxa`` is omitted a table is built from the leaf labels in sorted order.
    """
    from .network import Network

    stmts = split_statements(text if text.rstrip().endswith(";") else text + ";")
    if len(stmts) != 1:
        raise NewickSyntaxError("expected exactly one network")
    nodes, root = _parse_statement(stmts[0], allow_hybrid=True)

    # the occurrence carrying children (or the only one, for a leaf) is the real node
    canon: dict[int, int] = {}
    for v, nd in enumerate(nodes):
        if nd.hybrid is not None and (nd.children or nd.label is not None):
            if nd.hybrid in canon:
                raise NewickSyntaxError(f"hybrid #H{nd.hybrid} defined twice")
            canon[nd.hybrid] = v
    for v, nd in enumerate(nodes):
        if nd.hybrid is not None and nd.hybrid not in canon:
            raise NewickSyntaxError(f"hybrid #H{nd.hybrid} has no definition")

    labels = [nd.label for nd in nodes if nd.label is not None]
    if len(set(labels)) != len(labels):
        raise LabelError("duplicate leaf label")
    if taxa is None:
        taxa = TaxonTable(sorted(labels))

    net = Network()
    ids: dict[int, int] = {}

    def real(v):
        nd = nodes[v]
        return canon[nd.hybrid] if nd.hybrid is not None else v

    for v, nd in enumerate(nodes):
        if real(v) == v:
            leaf = None
            if not nd.children:
                if nd.label is None:
                    raise LabelError("leaf without label")
                if nd.label not in taxa.index:
                    raise LeafSetMismatchError(f"unknown taxon {nd.label!r}")
                leaf = taxa.index[nd.label]
            ids[v] = net.add_node(leaf)
    # hybrid leaves written as "(x)#H1" have a unary tagged node above the leaf
    for v, nd in enumerate(nodes):
        for c in nd.children:
            net.add_edge(ids[real(v)], ids[real(c)])
    net.root = ids[real(root)]
    return net, taxa
