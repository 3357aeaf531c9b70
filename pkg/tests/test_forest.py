import random

import pytest

from conftest import WEIGHT3_SEQUENCE, corpus_entry, four_tree_instance
from treechild.forest import (
    CherryPickingSequence,
    SearchState,
    StaleCheckpointError,
    apply_sequence,
    cherry_key,
)
from treechild.gen import GenParams, generate
from treechild.newick import parse_instance


def test_initial_counts_four_trees():
    st = SearchState(four_tree_instance())
    # a=0 b=1 c=2 d=3 e=4
    assert st.cc(0, 1) == 2
    assert st.cc(2, 3) == 2
    assert st.cc(1, 4) == 1
    assert st.cc(1, 2) == 1
    assert st.cc(2, 4) == 1
    assert len(st.unique_cherries()) == 5
    assert st.trivial == set()
    assert st.k_prime() == 0


def test_trivial_cherry_found():
    st = SearchState(parse_instance("((a,b),(c,d));\n((a,b),(c,d));"))
    assert st.trivial == {(0, 1), (2, 3)}
    assert st.next_trivial() == ("trivial", (0, 1))


def test_apply_and_undo_restore_exact_state():
    st = SearchState(four_tree_instance(), debug=True)
    before = st.snapshot()
    cp = st.apply_pair((0, 1))
    assert st.cc(0, 1) == 0
    assert 0 in st.forbidden
    st.apply_pair((2, 3))
    st.undo_to(cp)
    assert st.snapshot() == before


def test_stale_checkpoint():
    st = SearchState(four_tree_instance())
    st.apply_pair((0, 1))
    cp = st.checkpoint()
    st.undo_to(st.checkpoint().__class__(0, 0, st.n, 0))
    with pytest.raises(StaleCheckpointError):
        st.undo_to(cp)


def test_weight3_sequence_validates():
    inst = four_tree_instance()
    seq = CherryPickingSequence.parse(WEIGHT3_SEQUENCE, inst.taxa)
    rep = apply_sequence(inst, seq)
    assert rep and rep.weight == 3
    assert seq.format(inst.taxa)[-1] == "(d,-)"


def test_non_tree_child_sequence_reported():
    inst = parse_instance("((a,b),c);")
    # b is picked first, then used as the surviving leaf
    seq = CherryPickingSequence.parse("(b,a)(a,c)(c,b)(b,-)", inst.taxa)
    rep = apply_sequence(inst, seq)
    assert not rep.tree_child


def test_incomplete_sequence_reported():
    inst = parse_instance("((a,b),c);")
    rep = apply_sequence(inst, CherryPickingSequence.parse("(a,b)(c,-)", inst.taxa))
    assert not rep.valid and "not reduced" in rep.reason


def test_parse_rejects_unknown_taxon():
    inst = parse_instance("((a,b),c);")
    with pytest.raises(ValueError):
        CherryPickingSequence.parse("(a,z)", inst.taxa)


def _rebuilt(instance, seq):
    st = SearchState(instance)
    for pair in seq:
        st.apply_pair(pair)
    return st


def _comparable(snap):
    snap = dict(snap)
    snap.pop("records")
    return snap


def _trajectory(instance, rng, steps):
    """Random walk of applies and undos; checks the k' rules and bookkeeping after every move."""
    st = SearchState(instance)
    stack = []
    for _ in range(steps):
        cands = [p for p in st.branch_candidates() if p[1] not in st.forbidden]
        if stack and (not cands or rng.random() < 0.3):
            cp, snap = stack.pop()
            st.undo_to(cp)
            assert st.snapshot() == snap
            continue
        if not cands:
            break
        pair = rng.choice(cands)
        if rng.random() < 0.2:
            st.record_branch(rng.choice(cands))
        trivial = cherry_key(*pair) in st.trivial
        k_before = st.k_prime()
        snap = st.snapshot()
        cp = st.apply_pair(pair)
        stack.append((cp, snap))
        assert st.k_prime() == len(st.seq) - st.n + st.n_prime
        assert st.k_prime() == k_before + (0 if trivial else 1)
        st.check()
        assert _comparable(st.snapshot()) == _comparable(_rebuilt(instance, st.seq).snapshot())
    while stack:
        cp, snap = stack.pop()
        st.undo_to(cp)
        assert st.snapshot() == snap
    st.check()


def test_thousand_random_trajectories():
    rng = random.Random(2024)
    for i in range(1000):
        if i % 2:
            inst, _ = corpus_entry(i % 200)
        else:
            inst, _ = generate(GenParams(n=rng.randint(3, 9), k=rng.randint(0, 4), t=rng.randint(1, 5), seed=i))
        _trajectory(inst, rng, steps=rng.randint(1, 25))


def test_update_r_drops_records():
    # a=0 b=1 c=2 d=3 e=4
    st = SearchState(four_tree_instance())
    for pair in [(1, 2), (2, 1), (4, 1), (2, 4)]:
        st.record_branch(pair)
    st.apply_pair((0, 1))  # (a,b) turns {b,e} into a cherry of the first tree
    assert (1, 2) not in st.records  # x' equals the new y
    assert (2, 1) in st.records      # {b,c} count unchanged
    assert (4, 1) not in st.records  # {b,e} count went from 1 to 2
    assert (2, 4) in st.records
    st.undo_to(st.checkpoint()._replace(log_position=0, seq_len=0, n_prime=st.n, dead=0))
    assert set(st.records) == set()


def test_records_keep_count_when_untouched():
    st = SearchState(parse_instance("((a,b),(c,d));\n((a,c),(b,d));"))
    st.record_branch((0, 1))
    assert st.is_redundant((0, 1))
    st.apply_pair((2, 3))  # removes c from tree 1 only; {a,b} untouched
    assert st.is_redundant((0, 1))
