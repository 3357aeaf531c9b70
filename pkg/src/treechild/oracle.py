"""Exhaustive reference solver for small instances.

Trees are immutable nested tuples and every tree-child sequence is
enumerated by depth-first search with iterative deepening on the weight.
The only pruning is the tree-child rule and the weight bound; failed states
are memoised by (trees, forbidden set) together with the budget they failed
under.  Nothing here is shared with the main solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .forest import CherryPickingSequence
from .newick import Instance, Tree

SOFT_LIMIT = 8


@dataclass
class OracleResult:
    min_weight: int | None
    witness: CherryPickingSequence | None
    explored: int


def _nested(tree: Tree):
    def build(v):
        if tree.leaf[v] is not None:
            return tree.leaf[v]
        a, b = (build(c) for c in tree.children[v])
        return _pair(a, b)
    return build(tree.root)


def _pair(a, b):
    return (a, b) if _low(a) < _low(b) else (b, a)


def _low(t):
    while isinstance(t, tuple):
        t = t[0]
    return t


def _cherries(t, out):
    if isinstance(t, tuple):
        a, b = t
        if not isinstance(a, tuple) and not isinstance(b, tuple):
            out.add((a, b))
        else:
            _cherries(a, out)
            _cherries(b, out)
    return out


def _pick(t, x, y):
    """Remove leaf x from t if {x, y} is a cherry of t."""
    if not isinstance(t, tuple):
        return t
    a, b = t
    if (a == x and b == y) or (a == y and b == x):
        return y
    na, nb = _pick(a, x, y), _pick(b, x, y)
    if na is a and nb is b:
        return t
    return _pair(na, nb)


def _leaves(t, out):
    if isinstance(t, tuple):
        _leaves(t[0], out)
        _leaves(t[1], out)
    else:
        out.add(t)
    return out


def brute_force_htc(instance: Instance, k_max: int) -> OracleResult:
    """Minimum weight of a tree-child sequence for ``instance``, if it is at most ``k_max``."""
    n = instance.n
    if n > SOFT_LIMIT:
        warnings.warn(f"brute force on {n} taxa may take very long", RuntimeWarning, stacklevel=2)
    start = tuple(sorted((_nested(t) for t in instance.trees), key=repr))
    explored = 0
    failed: dict = {}

    def dfs(trees, forbidden, seq, budget):
        # budget: pairs still allowed before the terminal entry
        nonlocal explored
        explored += 1
        live = set()
        for t in trees:
            _leaves(t, live)
        if all(not isinstance(t, tuple) for t in trees):
            if len(live) == 1:
                return seq + [(live.pop(), None)]
            return None
        if budget < len(live) - 1:
            return None
        key = (trees, forbidden)
        if failed.get(key, -1) >= budget:
            return None
        pairs = set()
        for t in trees:
            for a, b in _cherries(t, set()):
                pairs.add((a, b))
                pairs.add((b, a))
        for x, y in sorted(pairs):
            if y in forbidden:
                continue
            nxt = tuple(sorted((_pick(t, x, y) for t in trees), key=repr))
            found = dfs(nxt, forbidden | {x}, seq + [(x, y)], budget - 1)
            if found is not None:
                return found
        failed[key] = max(failed.get(key, -1), budget)
        return None

    for weight in range(k_max + 1):
        # total length is n + weight, one entry of which is terminal
        found = dfs(start, frozenset(), [], n + weight - 1)
        if found is not None:
            return OracleResult(weight, CherryPickingSequence(found, n), explored)
    return OracleResult(None, None, explored)
