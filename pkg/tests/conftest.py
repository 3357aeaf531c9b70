import functools

from treechild.gen import GenParams, generate
from treechild.network import Network
from treechild.newick import TaxonTable, parse_instance

FOUR_TREES = "(((a,b),e),(c,d)); (((a,b),(c,e)),d); ((a,(e,(b,c))),d); ((a,(e,b)),(c,d));"
WEIGHT3_SEQUENCE = "(a,b)(c,d)(c,b)(c,e)(b,e)(a,e)(e,d)(d,-)"


def four_tree_instance():
    return parse_instance(FOUR_TREES.replace(" ", "\n"))


def two_reticulation_network(taxa: TaxonTable) -> Network:
    """The two-reticulation network drawn for the four example trees, node by node."""
    net = Network()
    names = ["root", "abce", "cd", "ab", "bce", "bc", "Rb", "Rc"]
    node = {name: net.add_node() for name in names}
    for label in "abcde":
        node[label] = net.add_node(taxa.id(label))
    net.root = node["root"]
    for u, v in [
        ("root", "abce"), ("root", "cd"),
        ("abce", "ab"), ("abce", "bce"),
        ("ab", "a"), ("ab", "Rb"),
        ("bce", "e"), ("bce", "bc"),
        ("bc", "Rb"), ("bc", "Rc"),
        ("cd", "d"), ("cd", "Rc"),
        ("Rb", "b"), ("Rc", "c"),
    ]:
        net.add_edge(node[u], node[v])
    return net


def corpus_params(i: int) -> GenParams:
    return GenParams(n=[4, 5, 6][i % 3], t=[2, 3, 4][(i // 3) % 3], k=[1, 2, 3][(i // 9) % 3], seed=i)


@functools.lru_cache(maxsize=None)
def corpus_entry(i: int):
    """(instance, generating network) for corpus index ``i``."""
    return generate(corpus_params(i))


CORPUS_SIZE = 200


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
