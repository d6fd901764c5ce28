from fractions import Fraction

import pytest

from graphrate.cli import resolve_model
from graphrate.dsl import ModelError, format_graph, load_model, parse_graph, parse_model, print_model
from graphrate.graph import Graph, canonical_key, is_isomorphic
from graphrate.greg import CONSTANT_KEY, ClosurePolicy, expand_system

BIRTH_DEATH = """
model bd
labels node n
rule birth: {} -> { u:n } @ 2 { }
rule death: { u:n } -> {} @ 1 { }
observable N = { u:n }
"""

BUNDLED = ["walker.gts", "voter.gts", "pa.gts", "population.gts"]


class TestParse:
    def test_walker(self, walker):
        assert len(walker.rules) == 4
        assert walker.node_labels == ("w", "d")
        assert walker.rates == {"FE": 2, "BC": 1, "FC": 3, "BE": 1}
        assert set(walker.observables) == {"C", "O"}
        assert len(walker.invariants) == 8 and len(walker.equivalences) == 2

    def test_rule_correspondence(self, walker):
        fe = walker.rule("FE")
        nmap, emap = fe.partial_map()
        assert nmap == {"w": "w", "x": "x", "y": "y"}
        assert emap == {"a": "a", "c": "c"}

    def test_birth_death(self):
        m = parse_model(BIRTH_DEATH)
        assert [r.name for r in m.rules] == ["birth", "death"]
        assert m.rates["birth"] == 2
        sys = expand_system(m)
        (eq,) = sys.equations.values()
        assert eq.coeffs[CONSTANT_KEY] == 2

    def test_renamed_correspondence(self):
        m = parse_model("rule r: { p:a } -> { q:a, z:a; q -x-> z } @ 1/2 { p=q }")
        assert m.rules[0].partial_map() == ({"p": "q"}, {})
        assert m.rates["r"] == Fraction(1, 2)

    def test_side_references(self):
        m = parse_model(BIRTH_DEATH + "observable D = death.lhs\n")
        assert canonical_key(m.observables["D"]) == canonical_key(m.observables["N"])

    def test_outputs(self):
        m = parse_model(BIRTH_DEATH + "output twice = 2 * k(death) * N - 1\n")
        lc = m.outputs["twice"]
        assert lc.coeffs == {canonical_key(Graph([("u", "n")])): 2, CONSTANT_KEY: -1}

    def test_options_and_expectations(self):
        m = parse_model(BIRTH_DEATH + "option max_obs = 7\nexpect N = 3\n")
        assert m.options == {"max_obs": 7} and m.expectations == {"N": 3}

    def test_graph_literal_separators(self):
        a = parse_graph("{ u:n, v:n; u -e-> v }")
        b = parse_graph("{ u:n\n v:n\n f: u -e-> v }")
        assert is_isomorphic(a, b)
        assert set(a.edges) == {"e0"} and set(b.edges) == {"f"}


class TestErrors:
    def test_empty_file(self):
        m = parse_model("")
        assert m.rules == [] and m.observables == {}

    def test_non_mono_correspondence(self):
        text = "rule r: { u:a, v:a } -> { w:a } @ 1 { u=w, v=w }"
        with pytest.raises(ModelError) as info:
            parse_model(text)
        assert info.value.line == 1

    def test_undeclared_label(self):
        with pytest.raises(ModelError) as info:
            parse_model("labels node a\nlabels edge x\ngraph G { u:b }\n")
        assert "node label 'b'" in str(info.value) and info.value.line == 3

    def test_unknown_reference(self):
        with pytest.raises(ModelError) as info:
            parse_model("\n\nobservable X = Nowhere\n")
        assert info.value.line == 3

    def test_bad_rate(self):
        with pytest.raises(ModelError):
            parse_model("rule r: {} -> { u:a } @ 0 { }")

    def test_bad_character(self):
        with pytest.raises(ModelError) as info:
            parse_model("model x\n  $")
        assert (info.value.line, info.value.col) == (2, 3)

    def test_unknown_statement(self):
        with pytest.raises(ModelError):
            parse_model("frobnicate everything")

    def test_dangling_edge(self):
        with pytest.raises(ModelError):
            parse_graph("{ u:a; u -x-> v }")

    def test_two_graphs_in_a_product(self):
        with pytest.raises(ModelError):
            parse_model(BIRTH_DEATH + "output bad = N * N\n")


class TestPrint:
    def test_format_graph(self):
        assert format_graph(Graph()) == "{ }"
        g = parse_graph("{ u:a, v:b; e: u -x-> v }")
        assert parse_graph(format_graph(g)) == g

    @pytest.mark.parametrize("name", BUNDLED)
    def test_roundtrip(self, name):
        m = load_model(resolve_model(name))
        again = parse_model(print_model(m))
        assert [r.name for r in again.rules] == [r.name for r in m.rules]
        for a, b in zip(m.rules, again.rules):
            assert a.lhs == b.lhs and a.rhs == b.rhs and a.partial_map() == b.partial_map()
        assert again.rates == m.rates
        assert {n: canonical_key(g) for n, g in again.observables.items()} == {
            n: canonical_key(g) for n, g in m.observables.items()
        }
        assert again.outputs == m.outputs
        assert again.options == m.options
        assert print_model(again) == print_model(m)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_models_close(name):
    m = load_model(resolve_model(name))
    opts = m.options
    policy = ClosurePolicy(
        max_size=int(opts["max_size"]) if "max_size" in opts else None,
        max_observables=int(opts.get("max_obs", 20)),
    )
    sys = expand_system(m, policy=policy)
    assert sys.closed and sys.equations
