import random

import pytest
from hypothesis import given, strategies as st

from graphrate.generators import GenConfig, random_derivation, random_rule
from graphrate.graph import Graph, Morphism, is_isomorphic, iter_matches, subgraph_intersection
from graphrate.rewrite import (
    RewriteContext,
    Rule,
    apply_rule,
    compose_rules,
    final_pullback_complement,
    is_derivable,
    is_derivation,
    pullback,
    pushout,
    reverse_rule,
)
from helpers import DER_L, DER_R, DER_RULE, EDGE, EMPTY, NODE, extend

CFG = GenConfig(max_nodes=3, max_edges=3)

# a deletion with a side effect: delete c2 and the edge c2 -> c3,
# create c4 and the edge c3 -> c4; c1 -> c2 disappears as a side effect
DEL_L = Graph([("c2", "n"), ("c3", "n")], [("r", "c2", "c3", "e")])
DEL_R = Graph([("c3", "n"), ("c4", "n")], [("g", "c3", "c4", "e")])
DEL_RULE = Rule.from_correspondence("alpha", DEL_L, DEL_R, {"c3": "c3"})
DEL_G = Graph(
    [("c1", "n"), ("c2", "n"), ("c3", "n")],
    [("u", "c1", "c2", "e"), ("k", "c1", "c3", "e"), ("r", "c2", "c3", "e")],
)
DEL_F = Morphism.inclusion(DEL_L, DEL_G)
DEL_H = Graph(
    [("c1", "n"), ("c3", "n"), ("c4", "n")],
    [("k", "c1", "c3", "e"), ("g", "c3", "c4", "e")],
)

BIRTH = Rule.from_correspondence("birth", EMPTY, NODE, {})
DEATH = Rule.from_correspondence("death", NODE, EMPTY, {})


class TestPushout:
    def test_identity_span(self):
        i = Morphism.identity(EDGE)
        b, c = pushout(i, i)
        assert is_isomorphic(b.cod, EDGE) and b.is_iso and c.is_iso

    def test_empty_apex_is_disjoint_union(self):
        other = Graph([("p", "b")], [("l", "p", "p", "y")])
        b, c = pushout(Morphism(EMPTY, EDGE, {}, {}), Morphism(EMPTY, other, {}, {}))
        assert b.cod.num_nodes == 3 and b.cod.num_edges == 2

    def test_shared_source(self):
        a = Graph([("s", "a")])
        b_leg = Morphism(a, EDGE, {"s": "u"}, {})
        c_leg = Morphism(a, EDGE, {"s": "u"}, {})
        b, c = pushout(b_leg, c_leg)
        p = b.cod
        expected = Graph([(0, "a"), (1, "a"), (2, "a")], [(0, 0, 1, "x"), (1, 0, 2, "x")])
        assert is_isomorphic(p, expected)
        assert b.node_map["u"] == c.node_map["u"]

    def test_rejects_mismatched_domains(self):
        with pytest.raises(ValueError):
            pushout(Morphism.identity(NODE), Morphism.identity(EDGE))

    def test_rejects_non_mono_span(self):
        two = Graph([("p", "a"), ("q", "a")])
        squash = Morphism(two, NODE, {"p": "u", "q": "u"}, {})
        with pytest.raises(ValueError):
            pushout(squash, squash)

    def test_non_mono_leg_is_swapped(self):
        two = Graph([("p", "a"), ("q", "a")])
        squash = Morphism(two, NODE, {"p": "u", "q": "u"}, {})
        mono = Morphism.inclusion(two, Graph([("p", "a"), ("q", "a"), ("r", "a")]))
        b, c = pushout(squash, mono)
        assert b.cod.num_nodes == 2 and b.dom == NODE and c.dom == mono.cod


class TestPullback:
    def test_identities(self):
        i = Morphism.identity(EDGE)
        p1, p2 = pullback(i, i)
        assert is_isomorphic(p1.dom, EDGE)

    def test_disjoint_matches(self):
        host = Graph([("u", "a"), ("v", "a")])
        f1 = Morphism(NODE, host, {"u": "u"}, {})
        f2 = Morphism(NODE, host, {"u": "v"}, {})
        assert pullback(f1, f2)[0].dom.is_empty()

    @given(st.integers(0, 10_000))
    def test_inclusions_give_intersection(self, seed):
        rng = random.Random(seed)
        from graphrate.generators import random_graph, random_subgraph

        h = random_graph(rng, GenConfig(max_nodes=5, max_edges=6))
        a, b = random_subgraph(rng, h), random_subgraph(rng, h)
        p1, p2 = pullback(Morphism.inclusion(a, h), Morphism.inclusion(b, h))
        assert is_isomorphic(p1.dom, subgraph_intersection(a, b, h))


class TestFinalPullbackComplement:
    def test_identity_leg_keeps_everything(self):
        i = Morphism.identity(EDGE)
        h, incl = final_pullback_complement(i, Morphism.identity(EDGE))
        assert h.cod == EDGE

    def test_deletion_deletion_removes_dangling_edge(self):
        h, incl = final_pullback_complement(DEL_RULE.left, DEL_F)
        d = h.cod
        assert set(d.nodes) == {"c1", "c3"}
        assert set(d.edges) == {"k"}

    def test_node_with_loop(self):
        g = Graph([("u", "a")], [("l", "u", "u", "x")])
        k = Morphism(EMPTY, NODE, {}, {})
        h, _ = final_pullback_complement(k, Morphism.inclusion(NODE, g))
        assert h.cod.is_empty()


class TestApplyRule:
    def test_identity_rule(self):
        rule = Rule.identity(EDGE)
        host = extend(EDGE, [("w", "a")], [("f", "v", "w", "x")])
        f = Morphism.inclusion(EDGE, host)
        d = apply_rule(rule, f)
        assert is_isomorphic(d.target, host)
        assert d.comatch.node_map == f.node_map and d.comatch.edge_map == f.edge_map

    def test_birth_adds_fresh_node(self):
        host = Graph([("u", "a"), ("v", "a")])
        d = apply_rule(BIRTH, Morphism(EMPTY, host, {}, {}))
        assert d.target.num_nodes == 3
        assert ("birth", 0, "u") in d.target.nodes

    def test_deletion_derivation(self):
        d = apply_rule(DEL_RULE, DEL_F)
        assert is_isomorphic(d.target, DEL_H)
        assert set(d.context.nodes) == {"c1", "c3"}
        assert is_derivation(DEL_F, DEL_RULE, d.comatch, d.corule)

    def test_fresh_ids_follow_context(self):
        ctx = RewriteContext()
        host = Graph()
        d1 = apply_rule(BIRTH, Morphism(EMPTY, host, {}, {}), ctx)
        d2 = apply_rule(BIRTH, Morphism(EMPTY, d1.target, {}, {}), ctx)
        assert set(d2.target.nodes) == {("birth", 0, "u"), ("birth", 1, "u")}

    def test_fresh_ids_avoid_clashes(self):
        d1 = apply_rule(BIRTH, Morphism(EMPTY, EMPTY, {}, {}))
        d2 = apply_rule(BIRTH, Morphism(EMPTY, d1.target, {}, {}))
        assert d2.target.num_nodes == 2

    def test_deterministic(self):
        a = apply_rule(DEL_RULE, DEL_F)
        b = apply_rule(DEL_RULE, DEL_F)
        assert a.target == b.target and a.comatch == b.comatch

    def test_rejects_non_match(self):
        with pytest.raises(ValueError):
            apply_rule(DEL_RULE, Morphism.identity(EDGE))

    @given(st.integers(0, 100_000))
    def test_inner_squares(self, seed):
        d = random_derivation(random.Random(seed), CFG)
        rule, f, g, beta, h = d.rule, d.match, d.comatch, d.corule, d.inner
        # both squares commute
        assert rule.left.then(f) == h.then(beta.left)
        assert rule.right.then(g) == h.then(beta.right)
        assert g.is_mono and h.is_mono and beta.left.is_mono and beta.right.is_mono
        # right square: jointly surjective and K is exactly the overlap
        img_g = g.image()
        img_d = beta.right.image()
        hh = d.target
        assert set(img_g.nodes) | set(img_d.nodes) == set(hh.nodes)
        assert set(img_g.edges) | set(img_d.edges) == set(hh.edges)
        overlap = subgraph_intersection(img_g, img_d, hh)
        assert overlap == rule.right.then(g).image()
        # left square: a pullback, and D is everything not deleted
        gg = d.source
        img_f = f.image()
        assert subgraph_intersection(img_f, beta.left.image(), gg) == rule.left.then(f).image()
        deleted = set(img_f.nodes) - set(rule.left.then(f).image().nodes)
        for e, (s, t, _) in gg.edges.items():
            keep = e not in img_f.edges or e in rule.left.then(f).image().edges
            keep = keep and s not in deleted and t not in deleted
            assert (e in d.context.edges) == keep


class TestReverseAndCompose:
    def test_reverse_identity(self):
        r = Rule.identity(EDGE)
        assert reverse_rule(r).lhs == r.lhs and reverse_rule(r).rhs == r.rhs

    def test_reverse_birth_is_death(self):
        rb = reverse_rule(BIRTH)
        assert rb.lhs == NODE and rb.rhs.is_empty()

    def test_reverse_is_involution(self):
        assert reverse_rule(reverse_rule(DEL_RULE)) == DEL_RULE

    @given(st.integers(0, 100_000))
    def test_reverse_involution_random(self, seed):
        r = random_rule(random.Random(seed), CFG)
        assert reverse_rule(reverse_rule(r)) == r

    def test_compose_with_identity(self):
        c = compose_rules(DEL_RULE, Rule.identity(DEL_R))
        assert c.partial_map() == DEL_RULE.partial_map()
        assert c.lhs == DEL_L and c.rhs == DEL_R

    def test_compose_with_reverse_keeps_kernel(self):
        c = compose_rules(DEL_RULE, reverse_rule(DEL_RULE))
        assert is_isomorphic(c.ker, DEL_RULE.ker)
        assert c.partial_map() == ({"c3": "c3"}, {})

    def test_birth_then_death(self):
        c = compose_rules(BIRTH, DEATH)
        assert c.lhs.is_empty() and c.rhs.is_empty() and c.ker.is_empty()

    def test_compose_rejects_mismatch(self):
        with pytest.raises(ValueError):
            compose_rules(DEL_RULE, DEL_RULE)

    def test_rule_legs_must_be_monos(self):
        two = Graph([("p", "a"), ("q", "a")])
        with pytest.raises(ValueError):
            Rule.from_correspondence("bad", two, NODE, {"p": "u", "q": "u"})

    def test_correspondence_must_respect_endpoints(self):
        loop = Graph([("u", "a")], [("l", "u", "u", "x")])
        with pytest.raises(ValueError):
            Rule.from_correspondence("bad", EDGE, loop, {"u": "u"}, {"e": "l"})


class TestDerivability:
    def test_comatch_of_derivation_is_derivable(self):
        d = apply_rule(DEL_RULE, DEL_F)
        ok, witness = is_derivable(d.comatch, DEL_RULE)
        assert ok and witness.dom == DEL_L

    def test_extra_edge_into_created_node(self):
        h_ok = extend(DER_R, [], [("x", "p1", "p2", "e")])
        g = Morphism.inclusion(DER_R, h_ok)
        assert is_derivable(g, DER_RULE)[0]
        h_bad = extend(DER_R, [], [("red", "p1", "c", "e")])
        h = Morphism.inclusion(DER_R, h_bad)
        assert is_derivable(h, DER_RULE) == (False, None)

    def test_identity_like_match(self):
        ok, witness = is_derivable(Morphism.identity(DER_R), DER_RULE)
        assert ok and witness.dom == DER_L
        assert is_isomorphic(witness.cod, DER_L)

    def test_deletion_derivation_is_irreversible(self):
        assert not is_derivable(DEL_F, reverse_rule(DEL_RULE))[0]

    def test_wrong_domain(self):
        with pytest.raises(ValueError):
            is_derivable(Morphism.identity(DER_L), DER_RULE)

    @given(st.integers(0, 100_000))
    def test_every_comatch_is_derivable(self, seed):
        d = random_derivation(random.Random(seed), CFG)
        ok, witness = is_derivable(d.comatch, d.rule)
        assert ok
        # the witness rederives the comatch up to a commuting iso
        again = apply_rule(d.rule, witness)
        assert is_isomorphic(again.target, d.target)

    def test_matches_for_derivation(self):
        # every match of the rule's lhs in G derives some comatch
        assert len(list(iter_matches(DEL_L, DEL_G))) == 3
