import pytest

from conftest import WEIGHT3_SEQUENCE, four_tree_instance, two_reticulation_network
from treechild.forest import CherryPickingSequence
from treechild.network import (
    DisplayUnverifiable,
    InvalidSequenceError,
    Network,
    NetworkError,
    displays,
    has_parallel_edges,
    is_tree_child,
    network_from_sequence,
    reticulation_number,
    switching_count,
    validate_network,
)
from treechild.newick import parse_instance, parse_network, parse_tree


def test_weight3_sequence_network():
    inst = four_tree_instance()
    seq = CherryPickingSequence.parse(WEIGHT3_SEQUENCE, inst.taxa)
    assert seq.weight == 3 and seq.is_tree_child()
    net = network_from_sequence(inst.n, seq)
    validate_network(net, inst.n)
    assert reticulation_number(net) == 3
    assert is_tree_child(net)
    assert all(displays(net, tree) for tree in inst.trees)


def test_two_reticulation_network_is_not_tree_child():
    inst = four_tree_instance()
    net = two_reticulation_network(inst.taxa)
    validate_network(net, inst.n)
    assert reticulation_number(net) == 2
    assert not is_tree_child(net)
    assert all(displays(net, tree) for tree in inst.trees)


def test_single_taxon_network():
    net = network_from_sequence(1, CherryPickingSequence([(0, None)], 1))
    assert len(net) == 1 and net.leaf[net.root] == 0
    assert reticulation_number(net) == 0


def test_tree_sequence_gives_tree():
    inst = parse_instance("((a,b),(c,d));")
    seq = CherryPickingSequence.parse("(a,b)(c,d)(b,d)(d,-)", inst.taxa)
    net = network_from_sequence(inst.n, seq)
    assert reticulation_number(net) == 0
    assert displays(net, inst.trees[0])


@pytest.mark.parametrize("entries,msg", [
    ([(0, 1)], "terminal"),
    ([(0, None), (1, None)], "terminal"),
    ([(0, 0), (0, None)], "repeats"),
    ([(0, 2), (1, None)], "second element"),
])
def test_invalid_sequences(entries, msg):
    with pytest.raises(InvalidSequenceError, match=msg):
        network_from_sequence(3, CherryPickingSequence(entries, 3))


def test_missing_taxon_rejected():
    with pytest.raises(InvalidSequenceError, match="taxa"):
        network_from_sequence(3, CherryPickingSequence([(0, 1), (1, None)], 3))


def test_tree_child_detection():
    net, _ = parse_network("((a,(b)#H1),(#H1,c));")
    assert is_tree_child(net)
    # both children of the top node are reticulations
    net, _ = parse_network("(((x)#H1,(y)#H2),((#H1,#H2),z));")
    assert not is_tree_child(net)


def test_parallel_edges():
    net = Network()
    r, u, a, b = net.add_node(), net.add_node(), net.add_node(0), net.add_node(1)
    net.root = r
    for e in [(r, u), (r, u), (u, a), (r, b)]:
        net.add_edge(*e)
    assert has_parallel_edges(net)
    with pytest.raises(NetworkError):
        validate_network(net)


def test_cycle_detected():
    net = Network()
    r, u, v, a = net.add_node(), net.add_node(), net.add_node(), net.add_node(0)
    net.root = r
    for e in [(r, u), (u, v), (v, u), (v, a)]:
        net.add_edge(*e)
    with pytest.raises(NetworkError):
        net.topological_order()


def test_display_negative():
    inst = parse_instance("((a,b),(c,d));\n((a,c),(b,d));")
    net = Network.from_tree(inst.trees[0])
    assert displays(net, inst.trees[0])
    assert not displays(net, inst.trees[1])


def test_display_budget():
    inst = four_tree_instance()
    net = two_reticulation_network(inst.taxa)
    assert switching_count(net) == 4
    with pytest.raises(DisplayUnverifiable):
        displays(net, inst.trees[0], budget=2)


def test_display_checks_leaf_set():
    inst = parse_instance("((a,b),c);")
    other = parse_tree("((a,b),(c,d));", parse_instance("((a,b),(c,d));").taxa)
    net = Network.from_tree(inst.trees[0])
    assert not displays(net, other)
