"""Reduced tree collections under a partial cherry-picking sequence.

``SearchState`` applies pairs in place and records every edit in an undo
log, so a search can descend and backtrack without copying trees.  Alongside
the trees it keeps the cherry occurrence counts, the set of trivial cherries,
forbidden leaves, the number of live taxa, and the redundancy records used to
skip dominated branches.

In each reduced tree, node ``x < n`` is the leaf of taxon ``x``; internal
nodes are numbered from ``n``.  Removing a leaf suppresses its parent right
away, so a cherry is always a pair of sibling leaves.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple

from .newick import Instance, TaxonTable, Tree

TERMINAL = None


class CherryPickingSequence:
    """Ordered pairs ``(x, y)``; the last entry may be terminal, ``(x, None)``."""

    def __init__(self, entries, n_taxa: int):
        self.entries = [tuple(e) for e in entries]
        self.n_taxa = n_taxa

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other):
        return (
            isinstance(other, CherryPickingSequence)
            and self.entries == other.entries
            and self.n_taxa == other.n_taxa
        )

    def __repr__(self):
        return f"CherryPickingSequence({self.entries!r}, n_taxa={self.n_taxa})"

    @property
    def weight(self) -> int:
        return len(self.entries) - self.n_taxa

    def is_tree_child(self) -> bool:
        terminals = [i for i, (_, y) in enumerate(self.entries) if y is None]
        if len(terminals) > 1 or (terminals and terminals[0] != len(self.entries) - 1):
            return False
        used = set()
        for x, y in self.entries:
            if y is not None and y in used:
                return False
            used.add(x)
        return True

    def format(self, taxa: TaxonTable) -> list[str]:
        return [f"({taxa[x]},{'-' if y is None else taxa[y]})" for x, y in self.entries]

    @classmethod
    def parse(cls, text: str, taxa: TaxonTable) -> "CherryPickingSequence":
        """Read pairs like ``(a,b)`` and ``(d,-)``, one or more per line."""
        entries = []
        for token in text.replace(")", ")\n").split("\n"):
            token = token.strip().strip(",").strip()
            if not token or token.startswith("#"):
                continue
            if not (token.startswith("(") and token.endswith(")")):
                raise ValueError(f"malformed pair {token!r}")
            a, _, b = token[1:-1].partition(",")
            a, b = a.strip(), b.strip()
            try:
                x = taxa.index[a]
                y = None if b == "-" else taxa.index[b]
            except KeyError as exc:
                raise ValueError(f"unknown taxon in {token!r}") from exc
            entries.append((x, y))
        return cls(entries, len(taxa))


class Checkpoint(NamedTuple):
    log_position: int
    seq_len: int
    n_prime: int
    dead: int


class StaleCheckpointError(RuntimeError):
    pass


def cherry_key(x: int, y: int) -> tuple[int, int]:
    return (x, y) if x < y else (y, x)


class SearchState:
    """Mutable reduced instance; see the module docstring."""

    def __init__(self, instance: Instance, debug: bool = False):
        self.instance = instance
        self.n = n = instance.n
        self.t = len(instance.trees)
        self.debug = debug
        self.par: list[list[int]] = []
        self.kid: list[list] = []
        self.root: list[int] = []
        for tree in instance.trees:
            self._load_tree(tree)
        self.trees_with = [set(range(self.t)) for _ in range(n)]
        self.n_prime = n if self.t else 0
        self.cherry_trees: dict[tuple, set] = {}
        for ti in range(self.t):
            for key in self._tree_cherries(ti):
                self.cherry_trees.setdefault(key, set()).add(ti)
        self.trivial = {k for k in self.cherry_trees if self._is_trivial(k)}
        self.forbidden: set[int] = set()
        self.records: dict[tuple, int] = {}
        self.seq: list[tuple] = []
        self.dead = 0
        self.log: list[tuple] = []

    def _load_tree(self, tree: Tree):
        n = self.n
        ids = {}
        nxt = n
        for v, t in enumerate(tree.leaf):
            if t is not None:
                ids[v] = t
            else:
                ids[v] = nxt
                nxt += 1
        size = max(nxt, n)
        par = [-1] * size
        kid: list = [None] * size
        for v, kids in enumerate(tree.children):
            if kids:
                kid[ids[v]] = [ids[c] for c in kids]
                for c in kids:
                    par[ids[c]] = ids[v]
        self.par.append(par)
        self.kid.append(kid)
        self.root.append(ids[tree.root])

    def _tree_cherries(self, ti):
        kid, n = self.kid[ti], self.n
        out = []
        stack = [self.root[ti]]
        while stack:
            v = stack.pop()
            ks = kid[v] if v >= n else None
            if ks:
                a, b = ks
                if a < n and b < n:
                    out.append(cherry_key(a, b))
                stack.extend(ks)
        return out

    # ------------------------------------------------------------------
    # queries

    @property
    def seq_len(self) -> int:
        return len(self.seq)

    def k_prime(self) -> int:
        return len(self.seq) - self.n + self.n_prime

    def cc(self, x: int, y: int) -> int:
        trees = self.cherry_trees.get(cherry_key(x, y))
        return len(trees) if trees else 0

    def unique_cherries(self) -> list[tuple]:
        return sorted(self.cherry_trees)

    def branch_candidates(self) -> list[tuple]:
        """All ordered pairs whose unordered cherry occurs in some reduced tree."""
        out = []
        for a, b in self.cherry_trees:
            out.append((a, b))
            out.append((b, a))
        out.sort()
        return out

    def _both(self, a, b):
        ta, tb = self.trees_with[a], self.trees_with[b]
        if len(ta) == self.t:
            return len(tb)
        if len(tb) == self.t:
            return len(ta)
        return len(ta & tb)

    def _is_trivial(self, key) -> bool:
        trees = self.cherry_trees.get(key)
        return bool(trees) and len(trees) == self._both(*key)

    def next_trivial(self):
        """Next trivial pair to apply, ``("dead", None)`` if the search must fail, or None.

        A trivial cherry ``{a, b}`` (``a < b``) is oriented as ``(a, b)`` when
        ``b`` is not forbidden, otherwise as ``(b, a)``.
        """
        if self.dead:
            return ("dead", None)
        if not self.trivial:
            return None
        a, b = min(self.trivial)
        if b not in self.forbidden:
            return ("trivial", (a, b))
        if a not in self.forbidden:
            return ("trivial", (b, a))
        return ("dead", None)

    def has_dead_cherry(self) -> bool:
        return self.dead > 0

    def is_redundant(self, pair) -> bool:
        recorded = self.records.get(pair)
        return recorded is not None and recorded == self.cc(*pair)

    def live_taxa(self) -> set:
        return {x for x in range(self.n) if self.trees_with[x]}

    def reduced_tree(self, ti: int) -> Tree:
        """The reduced tree ``ti`` as a standalone Tree."""
        kid, n = self.kid[ti], self.n
        parent, children, leaf = [], [], []
        stack = [(self.root[ti], None)]
        while stack:
            v, p = stack.pop()
            u = len(parent)
            parent.append(p)
            children.append([])
            leaf.append(v if v < n else None)
            if p is not None:
                children[p].append(u)
            if v >= n:
                for c in reversed(kid[v]):
                    stack.append((c, u))
        return Tree(parent=parent, children=children, leaf=leaf, root=0)

    def reduced_trees(self) -> list[Tree]:
        return [self.reduced_tree(ti) for ti in range(self.t)]

    def tree_signature(self, ti: int):
        """Canonical nested tuple for reduced tree ``ti``."""
        kid, n = self.kid[ti], self.n
        memo = {}
        stack = [(self.root[ti], False)]
        while stack:
            v, done = stack.pop()
            if v < n:
                memo[v] = v
            elif done:
                a, b = (memo[c] for c in kid[v])
                memo[v] = (a, b) if _order_key(a) <= _order_key(b) else (b, a)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in kid[v])
        return memo[self.root[ti]]

    def snapshot(self) -> dict:
        """Everything observable about the state, for equality checks."""
        return {
            "trees": [self.tree_signature(ti) for ti in range(self.t)],
            "cc": {k: len(v) for k, v in self.cherry_trees.items()},
            "trivial": set(self.trivial),
            "forbidden": set(self.forbidden),
            "records": dict(self.records),
            "seq": list(self.seq),
            "n_prime": self.n_prime,
            "dead": self.dead,
            "trees_with": [set(s) for s in self.trees_with],
        }

    def digest(self) -> str:
        """Short hash of cherry counts, live taxa count and forbidden set."""
        payload = repr((
            sorted((k, len(v)) for k, v in self.cherry_trees.items()),
            self.n_prime,
            sorted(self.forbidden),
            len(self.seq),
        ))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def recount(self) -> dict:
        """Bookkeeping recomputed from the reduced trees alone."""
        cc: dict = {}
        members = [set() for _ in range(self.n)]
        for ti in range(self.t):
            for key in self._tree_cherries(ti):
                cc[key] = cc.get(key, 0) + 1
            stack = [self.root[ti]]
            while stack:
                v = stack.pop()
                if v < self.n:
                    members[v].add(ti)
                else:
                    stack.extend(self.kid[ti][v])
        trivial = {k for k, c in cc.items() if c == len(members[k[0]] & members[k[1]])}
        dead = sum(1 for a, b in cc if a in self.forbidden and b in self.forbidden)
        return {
            "cc": cc,
            "trivial": trivial,
            "n_prime": sum(1 for m in members if m),
            "dead": dead,
            "trees_with": members,
        }

    def check(self):
        """Assert that incremental bookkeeping matches a from-scratch recount."""
        fresh = self.recount()
        assert fresh["cc"] == {k: len(v) for k, v in self.cherry_trees.items()}, "cherry counts drifted"
        assert fresh["trivial"] == self.trivial, "trivial cherries drifted"
        assert fresh["n_prime"] == self.n_prime, "n' drifted"
        assert fresh["dead"] == self.dead, "dead cherry count drifted"
        assert fresh["trees_with"] == self.trees_with, "leaf membership drifted"

    # ------------------------------------------------------------------
    # mutation

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(len(self.log), len(self.seq), self.n_prime, self.dead)

    def _cc_add(self, key, ti, touched):
        trees = self.cherry_trees.get(key)
        if trees is None:
            trees = self.cherry_trees[key] = set()
            if key[0] in self.forbidden and key[1] in self.forbidden:
                self.dead += 1
        trees.add(ti)
        self.log.append(("cc+", key, ti))
        touched.add(key)

    def _cc_remove(self, key, ti, touched):
        trees = self.cherry_trees[key]
        trees.discard(ti)
        if not trees:
            del self.cherry_trees[key]
            if key[0] in self.forbidden and key[1] in self.forbidden:
                self.dead -= 1
        self.log.append(("cc-", key, ti))
        touched.add(key)

    def _cut(self, ti, x, y, touched):
        par, kid = self.par[ti], self.kid[ti]
        p = par[x]
        g = par[p]
        self._cc_remove(cherry_key(x, y), ti, touched)
        if g < 0:
            self.root[ti] = y
            par[y] = -1
            gi = -1
        else:
            gk = kid[g]
            gi = 0 if gk[0] == p else 1
            gk[gi] = y
            par[y] = g
            s = gk[1 - gi]
            if s < self.n:
                self._cc_add(cherry_key(y, s), ti, touched)
        members = self.trees_with[x]
        members.discard(ti)
        if not members:
            self.n_prime -= 1
        self.log.append(("cut", ti, x, y, p, g, gi))

    def _partners(self, x):
        """Taxa forming a cherry with ``x`` in some reduced tree."""
        out = set()
        n = self.n
        for ti in self.trees_with[x]:
            p = self.par[ti][x]
            if p >= 0:
                a, b = self.kid[ti][p]
                s = b if a == x else a
                if s < n:
                    out.add(s)
        return out

    def apply_pair(self, pair) -> Checkpoint:
        """Append ``(x, y)``; remove ``x`` from every reduced tree where ``{x, y}`` is a cherry."""
        x, y = pair
        if y is None or x == y:
            raise ValueError(f"apply_pair needs two distinct taxa, got {pair!r}")
        cp = self.checkpoint()
        touched: set = set()
        trees = self.cherry_trees.get(cherry_key(x, y))
        if trees:
            for ti in sorted(trees):
                self._cut(ti, x, y, touched)
        if x not in self.forbidden:
            self.forbidden.add(x)
            self.log.append(("forbid", x))
            for z in self._partners(x):
                if z in self.forbidden:
                    self.dead += 1
        self.seq.append((x, y))

        # a redundant pair survives only if x' != y and its count is unchanged
        if self.records:
            for rec in [r for r in self.records if r[0] == y or cherry_key(*r) in touched]:
                self.log.append(("rec", rec, self.records.pop(rec)))

        # triviality depends on the count and on which trees hold both taxa
        recheck = touched | {cherry_key(x, z) for z in self._partners(x)}
        for key in recheck:
            now = self._is_trivial(key)
            if now and key not in self.trivial:
                self.trivial.add(key)
                self.log.append(("triv+", key))
            elif not now and key in self.trivial:
                self.trivial.discard(key)
                self.log.append(("triv-", key))
        if self.debug:
            self.check()
        return cp

    def record_branch(self, pair):
        """Remember the current count of ``pair``'s cherry as a redundancy record."""
        self.log.append(("rec", pair, self.records.get(pair)))
        self.records[pair] = self.cc(*pair)

    def install_records(self, records: dict):
        for pair, value in records.items():
            self.log.append(("rec", pair, self.records.get(pair)))
            self.records[pair] = value

    def undo_to(self, cp: Checkpoint):
        if cp.log_position > len(self.log) or cp.seq_len > len(self.seq):
            raise StaleCheckpointError("checkpoint lies beyond the current log")
        log = self.log
        while len(log) > cp.log_position:
            entry = log.pop()
            op = entry[0]
            if op == "cut":
                _, ti, x, y, p, g, gi = entry
                if g < 0:
                    self.root[ti] = p
                else:
                    self.kid[ti][g][gi] = p
                self.par[ti][y] = p
                self.trees_with[x].add(ti)
            elif op == "cc+":
                _, key, ti = entry
                trees = self.cherry_trees[key]
                trees.discard(ti)
                if not trees:
                    del self.cherry_trees[key]
            elif op == "cc-":
                _, key, ti = entry
                self.cherry_trees.setdefault(key, set()).add(ti)
            elif op == "triv+":
                self.trivial.discard(entry[1])
            elif op == "triv-":
                self.trivial.add(entry[1])
            elif op == "forbid":
                self.forbidden.discard(entry[1])
            elif op == "rec":
                _, pair, old = entry
                if old is None:
                    self.records.pop(pair, None)
                else:
                    self.records[pair] = old
        del self.seq[cp.seq_len:]
        self.n_prime = cp.n_prime
        self.dead = cp.dead
        if self.debug:
            self.check()


def _order_key(sig):
    while isinstance(sig, tuple):
        sig = sig[0]
    return sig


def new_state(instance: Instance, debug: bool = False) -> SearchState:
    return SearchState(instance, debug=debug)


def k_prime(state: SearchState) -> int:
    return state.k_prime()


@dataclass
class ValidationReport:
    tree_child: bool
    valid: bool
    weight: int
    reason: str = ""

    def __bool__(self):
        return self.tree_child and self.valid


def apply_sequence(instance: Instance, sequence: CherryPickingSequence) -> ValidationReport:
    """Replay ``sequence`` on fresh trees and report whether it is a tree-child CPS."""
    entries = list(sequence)
    weight = len(entries) - instance.n
    tc = CherryPickingSequence(entries, instance.n).is_tree_child()
    if not entries:
        return ValidationReport(tc, False, weight, "empty sequence")
    for x, y in entries:
        if not 0 <= x < instance.n or (y is not None and not 0 <= y < instance.n):
            return ValidationReport(tc, False, weight, "taxon out of range")
    terminals = [i for i, (_, y) in enumerate(entries) if y is None]
    if not terminals:
        return ValidationReport(tc, False, weight, "no terminal entry")
    if terminals != [len(entries) - 1]:
        return ValidationReport(tc, False, weight, "terminal entry must be last and unique")
    state = SearchState(instance)
    for x, y in entries[:-1]:
        if x == y:
            return ValidationReport(tc, False, weight, f"pair repeats taxon {x}")
        state.apply_pair((x, y))
    last = entries[-1][0]
    for ti in range(state.t):
        if state.root[ti] != last:
            return ValidationReport(tc, False, weight, f"tree {ti + 1} is not reduced to the terminal leaf")
    return ValidationReport(tc, True, weight)
