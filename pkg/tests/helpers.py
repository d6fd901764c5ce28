"""Strategies and small named graphs shared by the tests."""
from hypothesis import strategies as st

from graphrate.graph import Graph
from graphrate.rewrite import Rule


@st.composite
def graphs(draw, max_nodes=4, max_edges=4, node_labels=("a", "b"), edge_labels=("x", "y")):
    n = draw(st.integers(0, max_nodes))
    labels = draw(st.lists(st.sampled_from(node_labels), min_size=n, max_size=n))
    nodes = [(f"v{i}", lab) for i, lab in enumerate(labels)]
    edges = []
    if n:
        m = draw(st.integers(0, max_edges))
        for j in range(m):
            s = draw(st.integers(0, n - 1))
            t = draw(st.integers(0, n - 1))
            edges.append((f"e{j}", f"v{s}", f"v{t}", draw(st.sampled_from(edge_labels))))
    return Graph(nodes, edges)


@st.composite
def renamings(draw, g):
    """An isomorphic copy of g with shuffled fresh ids."""
    nperm = draw(st.permutations(list(range(g.num_nodes))))
    eperm = draw(st.permutations(list(range(g.num_edges))))
    nodes = list(g.nodes)
    edges = list(g.edges)
    return g.rename(
        {v: f"n{nperm[i]}" for i, v in enumerate(nodes)},
        {e: f"f{eperm[i]}" for i, e in enumerate(edges)},
    )


def path(n, label="a", elabel="x"):
    return Graph([(i, label) for i in range(n)], [(i, i, i + 1, elabel) for i in range(n - 1)])


def cycle(n, label="a", elabel="x"):
    return Graph([(i, label) for i in range(n)], [(i, i, (i + 1) % n, elabel) for i in range(n)])


NODE = Graph([("u", "a")])
EDGE = Graph([("u", "a"), ("v", "a")], [("e", "u", "v", "x")])
EMPTY = Graph()


def extend(g: Graph, nodes=(), edges=()) -> Graph:
    """g with extra (id, label) nodes and (id, src, tgt, label) edges."""
    return Graph(list(g.nodes.items()) + list(nodes), [(e, *d) for e, d in g.edges.items()] + list(edges))


# a rule creating c with edges from p1 and p2 (the derivability example)
DER_L = Graph([("p1", "n"), ("p2", "n")])
DER_R = Graph([("p1", "n"), ("p2", "n"), ("c", "n")], [("a", "p1", "c", "e"), ("b", "p2", "c", "e")])
DER_RULE = Rule.from_correspondence("create", DER_L, DER_R, {"p1": "p1", "p2": "p2"})
