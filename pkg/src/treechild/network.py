"""Rooted phylogenetic networks: construction from tree-child sequences and checks."""

from __future__ import annotations

import itertools
import math
from typing import Iterable

from .newick import Tree

DEFAULT_DISPLAY_BUDGET = 2 ** 20


class NetworkError(ValueError):
    pass


class InvalidSequenceError(NetworkError):
    pass


class DisplayUnverifiable(Exception):
    """The number of reticulation edge choices exceeds the display budget."""

    def __init__(self, combinations: int, budget: int):
        super().__init__(f"{combinations} switchings exceed the budget of {budget}")
        self.combinations = combinations
        self.budget = budget


class Network:
    """Directed acyclic graph with adjacency lists in both directions.

    ``leaf[v]`` is the taxon id for leaves and ``None`` otherwise.
    """

    def __init__(self):
        self.parents: list[list[int]] = []
        self.children: list[list[int]] = []
        self.leaf: list = []
        self.root = None

    def __len__(self):
        return len(self.parents)

    def add_node(self, leaf=None) -> int:
        self.parents.append([])
        self.children.append([])
        self.leaf.append(leaf)
        return len(self.parents) - 1

    def add_edge(self, u: int, v: int):
        self.children[u].append(v)
        self.parents[v].append(u)

    def remove_edge(self, u: int, v: int):
        self.children[u].remove(v)
        self.parents[v].remove(u)

    def split_edge(self, u: int, v: int) -> int:
        """Insert a new node on edge ``uv``, keeping the slot order of both endpoints."""
        w = self.add_node()
        self.children[u][self.children[u].index(v)] = w
        self.parents[v][self.parents[v].index(u)] = w
        self.parents[w].append(u)
        self.children[w].append(v)
        return w

    def reticulations(self) -> list[int]:
        return [v for v, ps in enumerate(self.parents) if len(ps) >= 2]

    def leaves(self) -> list[int]:
        return [v for v, t in enumerate(self.leaf) if t is not None]

    def leaf_node(self) -> dict:
        return {t: v for v, t in enumerate(self.leaf) if t is not None}

    def edges(self) -> Iterable[tuple[int, int]]:
        for u, kids in enumerate(self.children):
            for v in kids:
                yield u, v

    def topological_order(self) -> list[int]:
        """Nodes reachable from the root, parents before children; raises on a cycle."""
        reach = self.reachable()
        indeg = {v: sum(1 for p in self.parents[v] if p in reach) for v in reach}
        order = []
        ready = [self.root]
        while ready:
            v = ready.pop()
            order.append(v)
            for c in self.children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(reach):
            raise NetworkError("network contains a cycle")
        return order

    def reachable(self) -> set:
        seen = {self.root}
        stack = [self.root]
        while stack:
            for c in self.children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def compact(self) -> "Network":
        """Copy keeping only nodes reachable from the root, renumbered in DFS order."""
        order = []
        seen = set()
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            order.append(v)
            stack.extend(reversed(self.children[v]))
        new_id = {v: i for i, v in enumerate(order)}
        out = Network()
        for v in order:
            out.add_node(self.leaf[v])
        for v in order:
            for c in self.children[v]:
                out.add_edge(new_id[v], new_id[c])
        out.root = new_id[self.root]
        return out

    def copy(self) -> "Network":
        out = Network()
        out.parents = [list(p) for p in self.parents]
        out.children = [list(c) for c in self.children]
        out.leaf = list(self.leaf)
        out.root = self.root
        return out

    @classmethod
    def from_tree(cls, tree: Tree) -> "Network":
        net = cls()
        for t in tree.leaf:
            net.add_node(t)
        for v, kids in enumerate(tree.children):
            for c in kids:
                net.add_edge(v, c)
        net.root = tree.root
        return net


def network_from_sequence(n_taxa: int, sequence) -> Network:
    """Build a tree-child network from a tree-child cherry-picking sequence.

    Pairs are processed from last to first: ``y``'s parent edge is split by a
    new node ``p``, and ``p`` gets an edge to ``x``: to a fresh leaf,
    to ``x``'s existing reticulation parent, or to a new node splitting ``x``'s
    parent edge.  The construction root is suppressed at the end.
    """
    entries = list(sequence)
    if not entries or entries[-1][1] is not None:
        raise InvalidSequenceError("sequence must end with a terminal entry (x, -)")
    if any(y is None for _, y in entries[:-1]):
        raise InvalidSequenceError("only the last entry may be terminal")
    last = entries[-1][0]
    net = Network()
    if n_taxa == 1:
        net.root = net.add_node(last)
        return net

    rho = net.add_node()
    net.root = rho
    where = {last: net.add_node(last)}
    net.add_edge(rho, where[last])
    for x, y in reversed(entries[:-1]):
        if x == y:
            raise InvalidSequenceError(f"pair ({x}, {y}) repeats a taxon")
        if y not in where:
            raise InvalidSequenceError(f"taxon {y} is used as a second element before it exists")
        yl = where[y]
        p = net.split_edge(net.parents[yl][0], yl)
        if x in where:
            xl = where[x]
            par = net.parents[xl][0]
            if len(net.parents[par]) >= 2:
                q = par
            else:
                q = net.split_edge(par, xl)
        else:
            q = net.add_node(x)
            where[x] = q
        net.add_edge(p, q)

    while net.leaf[net.root] is None and len(net.children[net.root]) == 1:
        child = net.children[net.root][0]
        net.remove_edge(net.root, child)
        net.root = child
    if len(where) != n_taxa:
        raise InvalidSequenceError(f"sequence mentions {len(where)} of {n_taxa} taxa")
    return net.compact()


def reticulation_number(net: Network) -> int:
    return sum(len(ps) - 1 for ps in net.parents if len(ps) >= 2)


def is_tree_child(net: Network) -> bool:
    """Every non-leaf node has a child that is not a reticulation."""
    for v in net.reachable():
        kids = net.children[v]
        if kids and all(len(net.parents[c]) >= 2 for c in kids):
            return False
    return True


def has_parallel_edges(net: Network) -> bool:
    return any(len(set(kids)) != len(kids) for kids in net.children)


def validate_network(net: Network, n_taxa: int | None = None):
    """Raise NetworkError unless ``net`` meets the degree constraints of a phylogenetic network."""
    order = net.topological_order()
    if len(order) == 1:
        if net.leaf[net.root] is None:
            raise NetworkError("single-node network must be a leaf")
        return
    labels = []
    for v in order:
        indeg, outdeg = len(net.parents[v]), len(net.children[v])
        if v == net.root:
            ok = indeg == 0 and outdeg == 2
        elif outdeg == 0:
            ok = indeg == 1 and net.leaf[v] is not None
            labels.append(net.leaf[v])
        elif indeg == 1:
            ok = outdeg == 2
        else:
            ok = outdeg == 1
        if not ok or (outdeg and net.leaf[v] is not None):
            raise NetworkError(f"node {v} has in-degree {indeg} and out-degree {outdeg}")
    if len(set(labels)) != len(labels):
        raise NetworkError("leaf labels are not distinct")
    if n_taxa is not None and sorted(labels) != list(range(n_taxa)):
        raise NetworkError("leaf labels do not match the taxon set")


def switching_count(net: Network) -> int:
    return math.prod(len(net.parents[r]) for r in net.reticulations())


def _switching_clusters(net, order, chosen, keep):
    below = {}
    clusters = set()
    for v in reversed(order):
        t = net.leaf[v]
        s = frozenset((t,)) if t is not None and t in keep else frozenset()
        for c in net.children[v]:
            if chosen.get(c, v) == v:
                s = s | below[c]
        below[v] = s
        if s:
            clusters.add(s)
    return clusters


def displays(net: Network, tree: Tree, budget: int = DEFAULT_DISPLAY_BUDGET) -> bool:
    """Exhaustive display test over all choices of one parent per reticulation.

    Raises DisplayUnverifiable when the number of choices exceeds ``budget``.
    """
    rets = net.reticulations()
    total = math.prod(len(net.parents[r]) for r in rets)
    if total > budget:
        raise DisplayUnverifiable(total, budget)
    keep = tree.leaf_set()
    if not keep <= {net.leaf[v] for v in net.leaves()}:
        return False
    target = tree.clusters()
    order = net.topological_order()
    for choice in itertools.product(*(net.parents[r] for r in rets)):
        if _switching_clusters(net, order, dict(zip(rets, choice)), keep) == target:
            return True
    return False


def switching_tree(net: Network, chosen: dict) -> Tree:
    """Tree left after keeping only parent ``chosen[r]`` of each reticulation ``r``.

    Leafless branches are dropped and unary nodes suppressed.
    """
    order = net.topological_order()
    has_leaf = {}
    for v in reversed(order):
        has_leaf[v] = net.leaf[v] is not None or any(
            has_leaf[c] for c in net.children[v] if chosen.get(c, v) == v
        )
    parent, children, leaf = [], [], []

    def kept(v):
        return [c for c in net.children[v] if chosen.get(c, v) == v and has_leaf[c]]

    # (network node, parent in new tree)
    stack = [(net.root, None)]
    root = None
    while stack:
        v, par = stack.pop()
        kids = kept(v)
        while len(kids) == 1 and net.leaf[v] is None:
            v = kids[0]
            kids = kept(v)
        if len(kids) > 2:
            raise NetworkError("switching has a node of out-degree > 2")
        u = len(parent)
        parent.append(par)
        children.append([])
        leaf.append(net.leaf[v] if not kids else None)
        if par is None:
            root = u
        else:
            children[par].append(u)
        for c in reversed(kids):
            stack.append((c, u))
    return Tree(parent=parent, children=children, leaf=leaf, root=root)
