"""Work sharing between search threads.

Idle workers post a request into a busy worker's inbox.  Busy workers look
at their inbox every ``poll_interval`` loop iterations and answer with the
unexplored branch nearest the bottom of their stack, or with a denial.  A
branch travels as a ``WorkItem``: the receiver rebuilds the donor's state by
replaying the prefix on fresh trees and installing the donor's redundancy
records.

Threads share the interpreter lock, so this buys no speed-up for pure
Python search; it preserves the protocol and its outcome guarantees.
"""

from __future__ import annotations

import queue
import threading

from .forest import SearchState
from .newick import Instance
from .search import Engine, SearchStats

_WAIT = 0.001


class _Cancelled(Exception):
    pass


class _Pool:
    def __init__(self, instance, k, workers, poll_interval, use_rbe, exhaustive, trace, check_digests,
                 deadline, time_limit):
        self.instance = instance
        self.k = k
        self.workers = workers
        self.poll_interval = poll_interval
        self.use_rbe = use_rbe
        self.exhaustive = exhaustive
        self.check_digests = check_digests
        self.deadline = deadline
        self.time_limit = time_limit
        self.lock = threading.Lock()
        self.busy = 1  # worker 0 starts with the root
        self.done = threading.Event()
        self.cancel = threading.Event()
        self.inbox = [queue.Queue(maxsize=workers) for _ in range(workers)]
        self.reply = [queue.Queue(maxsize=1) for _ in range(workers)]
        self.best = None
        self.error = None
        self.stats = SearchStats()
        self.traces = [[] if trace else None for _ in range(workers)]
        self.items_sent = 0
        self.denials = 0
        self.digest_checks = 0

    # -- worker side ----------------------------------------------------------

    def worker(self, wid):
        try:
            if wid == 0:
                self.execute(wid, None)
            while not self.done.is_set():
                item = self.acquire(wid)
                if item is None:
                    break
                self.execute(wid, item)
        except BaseException as exc:  # surfaced by run_parallel
            with self.lock:
                if self.error is None:
                    self.error = exc
            self.cancel.set()
            self.done.set()

    def execute(self, wid, item):
        eng = Engine(
            SearchState(self.instance), self.k,
            use_rbe=self.use_rbe, exhaustive=self.exhaustive, trace=self.traces[wid],
            deadline=self.deadline, time_limit=self.time_limit, poll_interval=self.poll_interval,
            on_poll=lambda e: self.serve(wid, e), check_digests=self.check_digests,
        )
        try:
            if item is None:
                stop = eng.start_root()
            else:
                eng.start_item(item)
                stop = False
            if not stop:
                eng.run()
        except _Cancelled:
            pass
        finally:
            with self.lock:
                self.stats.absorb(eng.stats)
                self.digest_checks += eng.digest_checks
                found = eng.best
                if found is not None and (self.best is None or found.weight < self.best.weight):
                    self.best = found
                self.busy -= 1
        if found is not None and not self.exhaustive:
            self.cancel.set()
            self.done.set()
        # answer anything that arrived after the last poll
        self.deny_all(wid)

    def serve(self, wid, eng):
        if self.cancel.is_set():
            raise _Cancelled
        inbox = self.inbox[wid]
        while True:
            try:
                requester = inbox.get_nowait()
            except queue.Empty:
                return
            item = eng.donate()
            if item is not None:
                with self.lock:
                    self.busy += 1
                    self.items_sent += 1
            else:
                with self.lock:
                    self.denials += 1
            self.reply[requester].put(item)

    def deny_all(self, wid):
        inbox = self.inbox[wid]
        while True:
            try:
                requester = inbox.get_nowait()
            except queue.Empty:
                return
            with self.lock:
                self.denials += 1
            self.reply[requester].put(None)

    def acquire(self, wid):
        """Ask busy workers for a branch, in turn, until one arrives or all work is done."""
        victim = wid
        while True:
            self.deny_all(wid)
            if self.done.is_set():
                return None
            with self.lock:
                if self.busy == 0:
                    self.done.set()
                    return None
            victim = (victim + 1) % self.workers
            if victim == wid:
                continue
            self.inbox[victim].put(wid)
            while True:
                try:
                    item = self.reply[wid].get(timeout=_WAIT)
                    break
                except queue.Empty:
                    self.deny_all(wid)
                    if self.done.is_set():
                        return None
            if item is not None:
                return item


def run_parallel(instance: Instance, k: int, workers: int, poll_interval: int = 100, *, use_rbe: bool = True,
                 exhaustive: bool = False, trace: bool = False, check_digests: bool = False, deadline=None,
                 time_limit=None, report: dict | None = None):
    """Bounded search at parameter ``k`` spread over ``workers`` threads.

    Returns ``(sequence or None, stats)``.  With ``trace`` the explored
    prefixes are returned in ``report["traces"]`` (one list per worker).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if k < 0:
        if report is not None:
            report.update(traces=[[] if trace else None for _ in range(workers)], items_sent=0, denials=0,
                          digest_checks=0)
        return None, SearchStats()
    pool = _Pool(instance, k, workers, poll_interval, use_rbe, exhaustive, trace, check_digests,
                 deadline, time_limit)
    if workers == 1:
        pool.worker(0)
    else:
        threads = [threading.Thread(target=pool.worker, args=(w,), daemon=True) for w in range(workers)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    if pool.error is not None:
        raise pool.error
    if report is not None:
        report.update(
            traces=pool.traces,
            items_sent=pool.items_sent,
            denials=pool.denials,
            digest_checks=pool.digest_checks,
        )
    pool.stats.calls_per_k.append((k, pool.stats.recursive_calls))
    return pool.best, pool.stats
