"""Command-line front end.

Exit codes: 0 success, 1 no solution within ``--max-k``, 2 bad input,
3 time limit reached.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from .clusters import find_common_clusters
from .forest import CherryPickingSequence, SearchState, apply_sequence
from .gen import GenParams, generate
from .network import DisplayUnverifiable, NetworkError, displays, is_tree_child, reticulation_number
from .newick import NewickError, parse_instance, parse_network, write_network, write_tree
from .oracle import brute_force_htc
from .search import KLimitReached, SolveOptions, TimeLimitExceeded, solve

EXIT_OK = 0
EXIT_NO_SOLUTION = 1
EXIT_INPUT = 2
EXIT_TIME = 3


class InputError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _load_instance(path: str):
    text = _read(path)
    if not text.strip():
        raise InputError(f"{path}: no trees")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        inst = parse_instance(text)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return inst


class _Output:
    def __init__(self, path):
        self.path = path
        self.lines = []

    def __call__(self, line=""):
        self.lines.append(line)

    def flush(self):
        text = "".join(line + "\n" for line in self.lines)
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(text)


def _non_negative(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seconds(value: str) -> float:
    v = float(value)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treechild", description="Exact tree-child hybridization solver.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="minimum tree-child sequence and network")
    s.add_argument("input", help="Newick file, one tree per line ('-' for stdin)")
    s.add_argument("-p", "--workers", type=_positive, default=1)
    s.add_argument("-w", "--poll-interval", type=_positive, default=100)
    s.add_argument("--no-rbe", action="store_true", help="disable redundant-branch elimination")
    s.add_argument("--no-clusters", action="store_true", help="disable cluster reduction")
    s.add_argument("--max-k", type=_non_negative)
    s.add_argument("--time-limit", type=_seconds, metavar="SECS")
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry; the search is deterministic")
    s.add_argument("-o", "--output")

    g = sub.add_parser("generate", help="random instance from a random tree-child network")
    g.add_argument("-n", type=_positive, required=True, help="number of taxa (>= 2)")
    g.add_argument("-k", type=_non_negative, required=True, help="target reticulations")
    g.add_argument("-t", type=_positive, default=1, help="target number of trees")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")

    v = sub.add_parser("verify", help="check a sequence or a network against an instance")
    v.add_argument("input")
    what = v.add_mutually_exclusive_group(required=True)
    what.add_argument("--sequence", metavar="FILE", help="pairs like (a,b), last one (x,-)")
    what.add_argument("--network", metavar="FILE", help="extended Newick network")
    v.add_argument("-o", "--output")

    o = sub.add_parser("oracle", help="brute-force minimum for small instances")
    o.add_argument("input")
    o.add_argument("--max-k", type=_non_negative, default=6)
    o.add_argument("-o", "--output")

    st = sub.add_parser("stats", help="instance summary")
    st.add_argument("input")
    st.add_argument("-o", "--output")
    return p


def _cmd_solve(args, out):
    inst = _load_instance(args.input)
    opts = SolveOptions(
        max_k=args.max_k,
        use_rbe=not args.no_rbe,
        use_clusters=not args.no_clusters,
        workers=args.workers,
        poll_interval=args.poll_interval,
        time_limit=args.time_limit,
    )
    sol = solve(inst, opts)
    out(f"h_tc: {sol.weight}")
    for line in sol.sequence.format(inst.taxa):
        out(line)
    out(f"network: {write_network(sol.network, inst.taxa)}")
    return EXIT_OK


def _cmd_generate(args, out):
    if args.n < 2:
        raise InputError("-n must be at least 2")
    inst, net = generate(GenParams(n=args.n, k=args.k, t=args.t, seed=args.seed))
    for tree in inst.trees:
        out(write_tree(tree, inst.taxa))
    out(f"# generator_reticulations: {reticulation_number(net)}")
    return EXIT_OK


def _sequence_lines(text: str) -> str:
    # accept the output of `solve` as is
    return "\n".join(line for line in text.splitlines() if line.strip().startswith("("))


def _cmd_verify(args, out):
    inst = _load_instance(args.input)
    if args.sequence is not None:
        try:
            seq = CherryPickingSequence.parse(_sequence_lines(_read(args.sequence)), inst.taxa)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        report = apply_sequence(inst, seq)
        out(f"valid: {'yes' if report.valid else 'no'}")
        out(f"tree_child: {'yes' if report.tree_child else 'no'}")
        out(f"weight: {report.weight}")
        if report.reason:
            out(f"reason: {report.reason}")
        return EXIT_OK if report else EXIT_NO_SOLUTION

    text = _read(args.network)
    lines = [ln.strip() for ln in text.splitlines()]
    tagged = [ln[len("network:"):] for ln in lines if ln.startswith("network:")]
    # solve output carries the network on its "network:" line
    body = "\n".join(tagged) if tagged else "\n".join(ln for ln in lines if ln and not ln.startswith("#"))
    net, _ = parse_network(body, inst.taxa)
    ok = True
    out(f"reticulations: {reticulation_number(net)}")
    out(f"tree_child: {'yes' if is_tree_child(net) else 'no'}")
    for i, tree in enumerate(inst.trees, 1):
        try:
            shown = displays(net, tree)
        except DisplayUnverifiable as exc:
            out(f"tree {i}: unverifiable ({exc})")
            ok = False
            continue
        ok &= shown
        out(f"tree {i}: {'displayed' if shown else 'not displayed'}")
    return EXIT_OK if ok else EXIT_NO_SOLUTION


def _cmd_oracle(args, out):
    inst = _load_instance(args.input)
    res = brute_force_htc(inst, args.max_k)
    if res.min_weight is None:
        print(f"no tree-child solution with k <= {args.max_k}", file=sys.stderr)
        out(f"explored: {res.explored}")
        return EXIT_NO_SOLUTION
    out(f"h_tc: {res.min_weight}")
    for line in res.witness.format(inst.taxa):
        out(line)
    out(f"explored: {res.explored}")
    return EXIT_OK


def _cmd_stats(args, out):
    inst = _load_instance(args.input)
    st = SearchState(inst)
    out(f"n: {inst.n}")
    out(f"t: {inst.t}")
    out(f"unique_cherries: {len(st.cherry_trees)}")
    out(f"trivial_cherries: {len(st.trivial)}")
    sizes = find_common_clusters(inst).sizes()
    out(f"clusters: {' '.join(map(str, sizes))}")
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "generate": _cmd_generate,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
    "stats": _cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out = _Output(getattr(args, "output", None))
    try:
        code = _COMMANDS[args.command](args, out)
    except (InputError, NewickError, NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KLimitReached as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NO_SOLUTION
    except TimeLimitExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TIME
    try:
        out.flush()
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
