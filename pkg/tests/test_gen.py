import pytest

from treechild.gen import GenParams, SplitMix64, default_taxa, generate, random_network, sample_trees
from treechild.network import (
    Network,
    displays,
    has_parallel_edges,
    is_tree_child,
    reticulation_number,
    validate_network,
)
from treechild.newick import parse_instance, write_network, write_tree


def test_splitmix_reference_values():
    # published first outputs for seed 0 and seed 1234567
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    rng = SplitMix64(1234567)
    assert rng.next_u64() == 6457827717110365317
    assert rng.next_u64() == 3203168211198807973


def test_below_stays_in_range():
    rng = SplitMix64(5)
    vals = [rng.below(7) for _ in range(2000)]
    assert set(vals) == set(range(7))
    with pytest.raises(ValueError):
        rng.below(0)


@pytest.mark.parametrize("kw", [dict(n=1, k=0), dict(n=3, k=-1), dict(n=3, k=0, t=0)])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        GenParams(**kw)


@pytest.mark.parametrize("seed", range(5))
def test_tree_when_k_zero(seed):
    net = random_network(GenParams(n=5, k=0, seed=seed))
    assert reticulation_number(net) == 0
    assert len(net.leaves()) == 5


def test_two_leaf_cherry():
    net = random_network(GenParams(n=2, k=0))
    assert write_network(net, default_taxa(2)) == "(t1,t2);"


def test_n20_k5_seed42_properties():
    net = random_network(GenParams(n=20, k=5, seed=42))
    validate_network(net, 20)
    assert is_tree_child(net)
    assert not has_parallel_edges(net)
    assert reticulation_number(net) <= 5


def test_sample_from_tree_gives_itself():
    inst = parse_instance("((a,b),(c,(d,e)));")
    net = Network.from_tree(inst.trees[0])
    out = sample_trees(net, 5, seed=3, taxa=inst.taxa)
    assert [write_tree(t, inst.taxa) for t in out.trees] == ["((a,b),(c,(d,e)));"]


def test_samples_are_displayed_and_distinct():
    net = random_network(GenParams(n=12, k=4, seed=9))
    out = sample_trees(net, 10, seed=1)
    texts = [write_tree(t, out.taxa) for t in out.trees]
    assert 1 <= len(texts) <= 10 and len(set(texts)) == len(texts)
    assert all(displays(net, t) for t in out.trees)


def test_seeded_reproducibility():
    a_inst, a_net = generate(GenParams(n=20, k=5, t=10, seed=7))
    b_inst, b_net = generate(GenParams(n=20, k=5, t=10, seed=7))
    assert write_network(a_net, a_inst.taxa) == write_network(b_net, b_inst.taxa)
    assert [write_tree(t, a_inst.taxa) for t in a_inst.trees] == [write_tree(t, b_inst.taxa) for t in b_inst.trees]


def test_many_draws_are_sound():
    for seed in range(60):
        n = 2 + seed % 15
        k = seed % 7
        net = random_network(GenParams(n=n, k=k, seed=seed))
        validate_network(net, n)
        assert is_tree_child(net) and not has_parallel_edges(net)
        assert len(net.leaves()) == n
        assert reticulation_number(net) <= k
