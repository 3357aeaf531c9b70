"""Bounded search for a shortest tree-child cherry-picking sequence.

The recursion of the branch-and-bound is unrolled into an explicit stack of
frames over a single ``SearchState``; returning from a branch is an
``undo_to`` on the frame's checkpoint.  Redundant-branch elimination keeps,
for each ordered pair already branched on by an ancestor or an earlier
sibling, the cherry count seen at that time; a pair whose record is still
live and whose count is unchanged is skipped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .forest import CherryPickingSequence, SearchState
from .network import Network, network_from_sequence
from .newick import Instance


class SearchAborted(Exception):
    """The search stopped without an answer; ``reason`` says why."""

    reason = "aborted"


class KLimitReached(SearchAborted):
    reason = "max_k"

    def __init__(self, max_k: int):
        super().__init__(f"no tree-child solution with k <= {max_k}")
        self.max_k = max_k


class TimeLimitExceeded(SearchAborted):
    reason = "time_limit"

    def __init__(self, limit: float | None = None):
        super().__init__(f"time limit of {limit} s exceeded" if limit is not None else "time limit exceeded")
        self.limit = limit


@dataclass
class SolveOptions:
    max_k: int | None = None
    use_rbe: bool = True
    use_clusters: bool = True
    workers: int = 1
    poll_interval: int = 100
    time_limit: float | None = None
    debug: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.poll_interval < 1:
            raise ValueError("poll_interval must be >= 1")
        if self.max_k is not None and self.max_k < 0:
            raise ValueError("max_k must be >= 0")


@dataclass
class SearchStats:
    recursive_calls: int = 0
    branches_pruned_rbe: int = 0
    max_depth: int = 0
    wall_time: float = 0.0
    # (k, recursive calls) for every bounded search run, in order
    calls_per_k: list = field(default_factory=list)

    def absorb(self, other: "SearchStats"):
        self.recursive_calls += other.recursive_calls
        self.branches_pruned_rbe += other.branches_pruned_rbe
        self.max_depth = max(self.max_depth, other.max_depth)
        self.calls_per_k.extend(other.calls_per_k)


@dataclass
class Solution:
    sequence: CherryPickingSequence
    weight: int
    network: Network
    stats: SearchStats


@dataclass(frozen=True)
class WorkItem:
    """An unexplored branch: replay ``prefix``, install ``records``, then take ``branch``."""

    prefix: tuple
    branch: tuple
    records: tuple
    k: int
    digest: str | None = None


class _Frame:
    __slots__ = ("cp", "remaining", "next", "ccs", "consumed", "installed", "base_records", "prefix_len", "digest")

    def __init__(self, cp, remaining, ccs, base_records, prefix_len, digest=None):
        self.cp = cp
        self.remaining = remaining
        self.next = 0
        self.ccs = ccs
        self.consumed = []
        self.installed = 0
        self.base_records = base_records
        self.prefix_len = prefix_len
        self.digest = digest


class Engine:
    """One worker's bounded search at parameter ``k``.

    ``exhaustive`` keeps searching after the first solution and returns the
    lightest one found.  ``trace``, when a list, receives the sequence at
    every recursive entry.  ``on_poll`` is called every ``poll_interval``
    loop iterations.
    """

    def __init__(self, state: SearchState, k: int, *, use_rbe=True, exhaustive=False, trace=None,
                 deadline=None, time_limit=None, poll_interval=100, on_poll=None, check_digests=False,
                 debug=False):
        self.state = state
        self.k = k
        self.use_rbe = use_rbe
        self.exhaustive = exhaustive
        self.trace = trace
        self.deadline = deadline
        self.time_limit = time_limit
        self.poll_interval = poll_interval
        self.on_poll = on_poll
        self.check_digests = check_digests
        self.debug = debug
        self.stack: list[_Frame] = []
        self.stats = SearchStats()
        self.iterations = 0
        self.best: CherryPickingSequence | None = None
        self.digest_checks = 0

    # -- node entry ---------------------------------------------------------

    def _enter(self):
        """Run one invocation up to its branching step.

        Returns a sequence on success, otherwise None; pushes a frame when
        the invocation branches.
        """
        st = self.state
        k = self.k
        self.stats.recursive_calls += 1
        if len(self.stack) + 1 > self.stats.max_depth:
            self.stats.max_depth = len(self.stack) + 1
        if self.trace is not None:
            self.trace.append(tuple(st.seq))
        if self.debug:
            kp = st.k_prime()
            assert 0 <= kp <= max(k, 0), f"k' = {kp} outside [0, {k}] on entry"

        while True:
            nxt = st.next_trivial()
            if nxt is None:
                break
            kind, pair = nxt
            if kind == "dead":
                return None
            if self.use_rbe and st.is_redundant(pair):
                self.stats.branches_pruned_rbe += 1
                return None
            st.apply_pair(pair)

        unique = len(st.cherry_trees)
        if unique == 0:
            roots = set(st.root)
            if len(roots) != 1:
                return None
            return CherryPickingSequence(st.seq + [(roots.pop(), None)], st.n)
        if 2 * unique > 8 * k or st.k_prime() >= k:
            return None
        if self.debug:
            assert unique <= 4 * k

        forbidden = st.forbidden
        candidates = [p for p in st.branch_candidates() if p[1] not in forbidden]
        if self.use_rbe:
            kept = [p for p in candidates if not st.is_redundant(p)]
            self.stats.branches_pruned_rbe += len(candidates) - len(kept)
            candidates = kept
        if not candidates:
            return None
        ccs = {p: st.cc(*p) for p in candidates}
        self.stack.append(_Frame(
            st.checkpoint(), candidates, ccs,
            dict(st.records) if self.use_rbe else {},
            len(st.seq),
            st.digest() if self.check_digests else None,
        ))
        return None

    # -- driving ------------------------------------------------------------

    def start_root(self):
        return self._found(self._enter())

    def start_item(self, item: WorkItem):
        st = self.state
        for pair in item.prefix:
            st.apply_pair(pair)
        if self.check_digests and item.digest is not None:
            self.digest_checks += 1
            if st.digest() != item.digest:
                raise AssertionError(f"work item replay digest mismatch at prefix {item.prefix}")
        records = dict(item.records)
        st.install_records(records)
        self.stack.append(_Frame(
            st.checkpoint(), [item.branch], {item.branch: st.cc(*item.branch)},
            records, len(st.seq), item.digest,
        ))

    def _found(self, seq):
        if seq is None:
            return False
        if self.best is None or seq.weight < self.best.weight:
            self.best = seq
        return not self.exhaustive

    def run(self) -> CherryPickingSequence | None:
        st = self.state
        stack = self.stack
        use_rbe = self.use_rbe
        poll = self.poll_interval
        while stack:
            f = stack[-1]
            if f.next >= len(f.remaining):
                stack.pop()
                continue
            pair = f.remaining[f.next]
            f.next += 1
            st.undo_to(f.cp)
            if use_rbe and f.installed < len(f.consumed):
                st.install_records({p: f.ccs[p] for p in f.consumed[f.installed:]})
                f.installed = len(f.consumed)
                f.cp = st.checkpoint()
            f.consumed.append(pair)
            # poll only once the branch is claimed, so it cannot be handed away
            self.iterations += 1
            if self.iterations % poll == 0:
                self.poll()
            st.apply_pair(pair)
            if self._found(self._enter()):
                stack.clear()
                break
        return self.best

    def poll(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeLimitExceeded(self.time_limit)
        if self.on_poll is not None:
            self.on_poll(self)

    def donate(self) -> WorkItem | None:
        """Hand off the next unexplored branch nearest the bottom of the stack."""
        for f in self.stack:
            if f.next < len(f.remaining):
                pair = f.remaining[f.next]
                f.next += 1
                records = dict(f.base_records)
                if self.use_rbe:
                    for p in f.consumed:
                        records[p] = f.ccs[p]
                f.consumed.append(pair)
                return WorkItem(
                    prefix=tuple(self.state.seq[:f.prefix_len]),
                    branch=pair,
                    records=tuple(sorted(records.items())),
                    k=self.k,
                    digest=f.digest,
                )
        return None


def tcs2(state: SearchState, k: int, *, use_rbe: bool = True, exhaustive: bool = False, stats=None,
         trace=None, deadline=None, poll_interval: int = 100, debug: bool = False):
    """Search for a tree-child sequence of weight at most ``k`` extending ``state``.

    Returns the first solution found (or, with ``exhaustive``, the lightest);
    None when there is none within ``k``.  ``state`` is restored on return.
    """
    if k < 0:
        return None
    cp = state.checkpoint()
    eng = Engine(state, k, use_rbe=use_rbe, exhaustive=exhaustive, trace=trace, deadline=deadline,
                 poll_interval=poll_interval, debug=debug)
    try:
        if not eng.start_root():
            eng.run()
    finally:
        state.undo_to(cp)
        if stats is not None:
            eng.stats.calls_per_k.append((k, eng.stats.recursive_calls))
            stats.absorb(eng.stats)
    return eng.best


def solve_incremental(instance: Instance, opts: SolveOptions, *, max_k=None, stats=None, deadline=None):
    """Call the bounded search with k = 0, 1, 2, ... until it succeeds."""
    from .scheduler import run_parallel

    stats = stats if stats is not None else SearchStats()
    k = 0
    while True:
        if max_k is not None and k > max_k:
            raise KLimitReached(max_k)
        if deadline is not None and time.monotonic() > deadline:
            raise TimeLimitExceeded(opts.time_limit)
        if opts.workers > 1:
            found, run_stats = run_parallel(instance, k, opts.workers, opts.poll_interval,
                                            use_rbe=opts.use_rbe, deadline=deadline, time_limit=opts.time_limit)
            stats.absorb(run_stats)
        else:
            state = SearchState(instance, debug=opts.debug)
            eng = Engine(state, k, use_rbe=opts.use_rbe, deadline=deadline, time_limit=opts.time_limit,
                         poll_interval=opts.poll_interval, debug=opts.debug)
            try:
                if not eng.start_root():
                    eng.run()
            finally:
                eng.stats.calls_per_k.append((k, eng.stats.recursive_calls))
                stats.absorb(eng.stats)
            found = eng.best
        if found is not None:
            return found
        k += 1


def solve(instance: Instance, opts: SolveOptions | None = None) -> Solution:
    """Minimum-weight tree-child sequence and the matching network.

    Raises KLimitReached when ``opts.max_k`` is binding and
    TimeLimitExceeded when ``opts.time_limit`` runs out.
    """
    from .clusters import solve_clustered

    opts = opts or SolveOptions()
    start = time.monotonic()
    deadline = start + opts.time_limit if opts.time_limit is not None else None
    stats = SearchStats()

    def sub_solver(sub: Instance, budget):
        return solve_incremental(sub, opts, max_k=budget, stats=stats, deadline=deadline)

    if opts.use_clusters:
        seq = solve_clustered(instance, sub_solver, max_k=opts.max_k)
    else:
        seq = sub_solver(instance, opts.max_k)
    stats.wall_time = time.monotonic() - start
    return Solution(
        sequence=seq,
        weight=seq.weight,
        network=network_from_sequence(instance.n, seq),
        stats=stats,
    )
