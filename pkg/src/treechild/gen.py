"""Random tree-child networks and samples of the trees they display.

Randomness comes from SplitMix64 so that a seed gives the same instance on
every platform and Python version.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import Network, switching_tree
from .newick import Instance, TaxonTable, write_tree

MASK64 = (1 << 64) - 1
RESAMPLE_CAP = 10 ** 6
ATTEMPTS_PER_K = 100
DUPLICATE_LIMIT = 100


class SplitMix64:
    """Steele, Lea and Flood's SplitMix64 generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (MASK64 + 1) - (MASK64 + 1) % bound
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list):
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class GenParams:
    n: int
    k: int
    t: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.t < 1:
            raise ValueError("t must be >= 1")


def default_taxa(n: int) -> TaxonTable:
    width = len(str(n))
    return TaxonTable(f"t{i:0{width}d}" for i in range(1, n + 1))


class _Builder:
    def __init__(self, rng: SplitMix64):
        self.rng = rng
        self.net = Network()
        self.net.root = self.net.add_node()
        self.leaves = []
        for _ in range(2):
            self.leaves.append(self._new_leaf(self.net.root))

    def _new_leaf(self, parent):
        v = self.net.add_node()
        self.net.add_edge(parent, v)
        return v

    def _is_ret(self, v):
        return len(self.net.parents[v]) >= 2

    def mergeable(self) -> list[int]:
        """Leaves whose parent and sibling are not reticulations."""
        net = self.net
        out = []
        for v in self.leaves:
            p = net.parents[v][0]
            if self._is_ret(p):
                continue
            sib = [c for c in net.children[p] if c != v]
            if sib and not self._is_ret(sib[0]):
                out.append(v)
        return out

    def can_merge(self, m) -> bool:
        if len(m) <= 1:
            return False
        if len(m) == 2 and self.net.parents[m[0]][0] == self.net.parents[m[1]][0]:
            return False
        return True

    def add_tree_node(self):
        u = self.rng.choice(self.leaves)
        self.leaves.remove(u)
        self.leaves.append(self._new_leaf(u))
        self.leaves.append(self._new_leaf(u))

    def add_reticulation(self, m):
        net = self.net
        for _ in range(RESAMPLE_CAP):
            u = self.rng.choice(m)
            v = self.rng.choice(m)
            if net.parents[u][0] != net.parents[v][0]:
                break
        else:
            raise RuntimeError("no mergeable pair with distinct parents")
        pv = net.parents[v][0]
        net.remove_edge(pv, v)
        net.add_edge(pv, u)
        self.leaves.remove(u)
        self.leaves.remove(v)
        self.leaves.append(self._new_leaf(u))


def _grow(params_n: int, k: int, rng: SplitMix64):
    b = _Builder(rng)
    trees_left = params_n + k - 2
    rets_left = k
    while trees_left > 0 and rets_left > 0:
        m = b.mergeable()
        if not b.can_merge(m) or rng.random() < trees_left / (trees_left + rets_left):
            b.add_tree_node()
            trees_left -= 1
        else:
            b.add_reticulation(m)
            rets_left -= 1
    while trees_left > 0:
        b.add_tree_node()
        trees_left -= 1
    while rets_left > 0:
        m = b.mergeable()
        if not b.can_merge(m):
            break
        b.add_reticulation(m)
        rets_left -= 1
    return b, rets_left


def random_network(params: GenParams) -> Network:
    """Random tree-child network with ``params.n`` leaves and at most ``params.k`` reticulations.

    Leaves carry taxon ids ``0..n-1`` in random order.  A run that gets stuck
    with reticulations still to place would have too many leaves; it is
    redrawn, and after ``ATTEMPTS_PER_K`` stuck runs the target drops by one.
    """
    rng = SplitMix64(params.seed)
    k = params.k
    while True:
        for _ in range(ATTEMPTS_PER_K):
            b, left = _grow(params.n, k, rng)
            if left == 0:
                break
        else:
            k -= 1
            continue
        break
    net = b.net
    labels = list(range(params.n))
    rng.shuffle(labels)
    for v, t in zip(sorted(b.leaves), labels):
        net.leaf[v] = t
    return net.compact()


def sample_trees(net: Network, t: int, seed: int, taxa: TaxonTable | None = None) -> Instance:
    """Up to ``t`` distinct trees displayed by ``net``.

    Each draw keeps one uniformly chosen parent edge per reticulation.
    Sampling stops at ``t`` distinct trees or after 100 duplicate draws.
    """
    rng = SplitMix64(seed)
    if taxa is None:
        taxa = default_taxa(len(net.leaves()))
    rets = net.reticulations()
    seen: dict[str, object] = {}
    duplicates = 0
    while len(seen) < t and duplicates < DUPLICATE_LIMIT:
        chosen = {r: rng.choice(net.parents[r]) for r in rets}
        tree = switching_tree(net, chosen)
        key = write_tree(tree, taxa)
        if key in seen:
            duplicates += 1
        else:
            seen[key] = tree
    return Instance(taxa=taxa, trees=list(seen.values()))


def generate(params: GenParams) -> tuple[Instance, Network]:
    """Network from ``params`` and a sample of ``params.t`` trees it displays."""
    net = random_network(params)
    # a separate stream for sampling, derived from the same seed
    sample_seed = SplitMix64(params.seed ^ 0x5DEECE66D).next_u64()
    return sample_trees(net, params.t, sample_seed, default_taxa(params.n)), net
