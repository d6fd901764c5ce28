"""Single-pushout rewriting with monic rules and matches.

A rule is a span ``L <- K -> R`` of monos.  Applying it to a match
``f: L -> G`` deletes ``f(L - K)`` together with any edge left dangling
(final pullback complement) and then glues in ``R - K`` (pushout).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .graph import Graph, Morphism, find_isomorphism

REVERSE_MARK = "~"


class Rule:
    """A partial map ``lhs ⇀ rhs`` given as the span ``lhs <-left- ker -right-> rhs``."""

    __slots__ = ("name", "lhs", "rhs", "ker", "left", "right")

    def __init__(self, name: str, left: Morphism, right: Morphism):
        if left.dom != right.dom:
            raise ValueError("rule legs must share their domain")
        if not (left.is_mono and right.is_mono):
            raise ValueError(f"rule {name!r}: both legs must be monos")
        self.name = name
        self.ker = left.dom
        self.lhs = left.cod
        self.rhs = right.cod
        self.left = left
        self.right = right

    @classmethod
    def from_correspondence(
        cls, name: str, lhs: Graph, rhs: Graph, nodes: Mapping, edges: Mapping = None
    ) -> "Rule":
        """Build a rule from a partial id map lhs -> rhs.

        Unmapped lhs items are deleted, unmapped rhs items are created.
        The kernel reuses the lhs ids.
        """
        edges = dict(edges or {})
        nodes = dict(nodes)
        if len(set(nodes.values())) != len(nodes) or len(set(edges.values())) != len(edges):
            raise ValueError(f"rule {name!r}: correspondence must be injective")
        for e, e2 in edges.items():
            s, t, _ = lhs.edges[e]
            s2, t2, _ = rhs.edges[e2]
            if nodes.get(s) != s2 or nodes.get(t) != t2:
                raise ValueError(
                    f"rule {name!r}: edge {e!r} kept but its endpoints do not correspond"
                )
        ker = lhs.subgraph(nodes, edges)
        left = Morphism.inclusion(ker, lhs)
        right = Morphism(ker, rhs, nodes, edges)  # validates labels
        return cls(name, left, right)

    @classmethod
    def identity(cls, g: Graph, name: str = "id") -> "Rule":
        i = Morphism.identity(g)
        return cls(name, i, i)

    def partial_map(self) -> tuple[dict, dict]:
        """The rule as partial node and edge maps lhs -> rhs."""
        return (
            {self.left.node_map[k]: self.right.node_map[k] for k in self.ker.nodes},
            {self.left.edge_map[k]: self.right.edge_map[k] for k in self.ker.edges},
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rule):
            return NotImplemented
        return (
            self.name == other.name
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self) -> int:
        return hash((self.name, self.left, self.right))

    def __repr__(self) -> str:
        return f"Rule({self.name}: {self.lhs} ⇀ {self.rhs})"


def reverse_rule(rule: Rule) -> Rule:
    """Swap the legs.  Reversing twice gives back the same rule."""
    name = rule.name
    name = name[: -len(REVERSE_MARK)] if name.endswith(REVERSE_MARK) else name + REVERSE_MARK
    return Rule(name, rule.right, rule.left)


# ---------------------------------------------------------------------------
# limits and colimits


def _default_fresh(kind: str, x):
    return ("+", x)


def pushout(
    ab: Morphism, ac: Morphism, fresh: Callable[[str, object], object] | None = None
) -> tuple[Morphism, Morphism]:
    """Pushout of the span ``B <-ab- A -ac-> C``, at least one leg mono.

    The result keeps C's ids and mints new ids for the part of B outside
    the image of A via ``fresh(kind, b_id)``.
    """
    if ab.dom != ac.dom:
        raise ValueError("span legs have different domains")
    if not ab.is_mono:
        if not ac.is_mono:
            raise ValueError("pushouts are only built along monos")
        c_to_p, b_to_p = pushout(ac, ab, fresh)
        return b_to_p, c_to_p
    fresh = fresh or _default_fresh
    b, c = ab.cod, ac.cod
    back_n = {w: a for a, w in ab.node_map.items()}
    back_e = {f: a for a, f in ab.edge_map.items()}
    nmap = {}
    for v in b.node_ids():
        nmap[v] = ac.node_map[back_n[v]] if v in back_n else fresh("node", v)
    emap = {}
    for e in b.edge_ids():
        emap[e] = ac.edge_map[back_e[e]] if e in back_e else fresh("edge", e)
    new_nodes = [(nmap[v], b.label(v)) for v in b.node_ids() if v not in back_n]
    new_edges = [
        (emap[e], nmap[s], nmap[t], lab)
        for e in b.edge_ids()
        if e not in back_e
        for s, t, lab in [b.edges[e]]
    ]
    clash = [x for x, _ in new_nodes if x in c.nodes] + [x for x, *_ in new_edges if x in c.edges]
    if clash:
        raise ValueError(f"fresh ids collide with existing ids: {clash!r}")
    p = Graph(list(c.nodes.items()) + new_nodes, [(e, *d) for e, d in c.edges.items()] + new_edges)
    b_to_p = Morphism(b, p, nmap, emap, check=False)
    c_to_p = Morphism.inclusion(c, p)
    return b_to_p, c_to_p


def pullback(f1: Morphism, f2: Morphism) -> tuple[Morphism, Morphism]:
    """Pullback ``X <-p1- P -p2-> Y`` of the cospan ``X -f1-> Z <-f2- Y``.

    Apex ids are pairs (x, y) with f1(x) = f2(y).
    """
    if f1.cod != f2.cod:
        raise ValueError("cospan legs have different codomains")
    x, y = f1.dom, f2.dom
    nodes = [
        ((a, b), x.label(a))
        for a in x.node_ids()
        for b in y.node_ids()
        if f1.node_map[a] == f2.node_map[b]
    ]
    edges = [
        ((a, b), (sa, sb), (ta, tb), lab)
        for a in x.edge_ids()
        for b in y.edge_ids()
        if f1.edge_map[a] == f2.edge_map[b]
        for (sa, ta, lab), (sb, tb, _) in [(x.edges[a], y.edges[b])]
    ]
    p = Graph(nodes, edges)
    p1 = Morphism(p, x, {v: v[0] for v in p.nodes}, {e: e[0] for e in p.edges}, check=False)
    p2 = Morphism(p, y, {v: v[1] for v in p.nodes}, {e: e[1] for e in p.edges}, check=False)
    return p1, p2


def final_pullback_complement(k: Morphism, f: Morphism) -> tuple[Morphism, Morphism]:
    """FPBC ``K -h-> D -incl-> G`` of ``K -k-> L -f-> G`` for monos k, f.

    D is G minus f(L - k(K)) minus every edge incident to a deleted node.
    """
    if not (k.is_mono and f.is_mono):
        raise ValueError("final pullback complements are built for monos only")
    if k.cod != f.dom:
        raise ValueError("morphisms are not composable")
    g = f.cod
    kept_n = set(k.node_map.values())
    kept_e = set(k.edge_map.values())
    del_n = {f.node_map[v] for v in k.cod.nodes if v not in kept_n}
    del_e = {f.edge_map[e] for e in k.cod.edges if e not in kept_e}
    del_e |= {e for e, (s, t, _) in g.edges.items() if s in del_n or t in del_n}
    d = g.subgraph((v for v in g.nodes if v not in del_n), (e for e in g.edges if e not in del_e))
    h = k.then(f).with_cod(d)
    return h, Morphism.inclusion(d, g)


# ---------------------------------------------------------------------------
# derivations


@dataclass
class RewriteContext:
    """Source of application tags used to mint fresh ids."""

    counter: itertools.count = field(default_factory=itertools.count)

    def next_tag(self) -> int:
        return next(self.counter)


@dataclass(frozen=True)
class Derivation:
    """The square ``f ~rule~> comatch`` with its inner FPBC and pushout squares."""

    rule: Rule
    match: Morphism  # f: L -> G
    comatch: Morphism  # g: R -> H
    corule: Rule  # G ⇀ H, kernel D
    inner: Morphism  # h: K -> D

    @property
    def source(self) -> Graph:
        return self.match.cod

    @property
    def target(self) -> Graph:
        return self.comatch.cod

    @property
    def context(self) -> Graph:
        return self.corule.ker


def apply_rule(rule: Rule, f: Morphism, context: RewriteContext | None = None) -> Derivation:
    """The representative derivation of ``rule`` at match ``f``.

    Created items get ids ``(rule name, tag, rhs id)``; the tag comes from
    ``context`` (0 without one) and is bumped until no id clashes.
    """
    if f.dom != rule.lhs:
        raise ValueError(f"match domain is not the left-hand side of {rule.name!r}")
    if not f.is_mono:
        raise ValueError("matches must be monos")
    h, d_incl = final_pullback_complement(rule.left, f)
    d = h.cod
    tag = context.next_tag() if context is not None else 0
    created_n = [v for v in rule.rhs.nodes if v not in set(rule.right.node_map.values())]
    created_e = [e for e in rule.rhs.edges if e not in set(rule.right.edge_map.values())]
    while any((rule.name, tag, v) in d.nodes for v in created_n) or any(
        (rule.name, tag, e) in d.edges for e in created_e
    ):
        tag = context.next_tag() if context is not None else tag + 1
    g, d_to_h = pushout(rule.right, h, lambda kind, x: (rule.name, tag, x))
    corule = Rule(f"{rule.name}@{tag}", d_incl, d_to_h)
    return Derivation(rule, f, g, corule, h)


def compose_rules(a: Rule, b: Rule) -> Rule:
    """Composite partial map ``b ∘ a`` via the pullback of the inner legs."""
    if a.rhs != b.lhs:
        raise ValueError("rule interfaces do not match")
    p1, p2 = pullback(a.right, b.left)
    return Rule(f"{a.name};{b.name}", p1.then(a.left), p2.then(b.right))


def partial_of_morphism(m: Morphism) -> tuple[dict, dict]:
    return dict(m.node_map), dict(m.edge_map)


def compose_partial(p: tuple[dict, dict], q: tuple[dict, dict]) -> tuple[dict, dict]:
    """``q ∘ p`` for partial maps given as (node dict, edge dict)."""
    return (
        {x: q[0][y] for x, y in p[0].items() if y in q[0]},
        {x: q[1][y] for x, y in p[1].items() if y in q[1]},
    )


def square_commutes(top: Rule, left: Morphism, right: Morphism, bottom: Rule) -> bool:
    """``right ∘ top == bottom ∘ left`` as partial maps."""
    a = compose_partial(top.partial_map(), partial_of_morphism(right))
    b = compose_partial(partial_of_morphism(left), bottom.partial_map())
    return a == b


def is_derivation(f: Morphism, rule: Rule, g: Morphism, corule: Rule) -> bool:
    """Whether the square (f, rule, g, corule) is a derivation.

    Compares against the representative derivation: there must be an
    isomorphism of codomains that commutes with the comatches and the
    corules.  Both together determine the candidate isomorphism.
    """
    if f.dom != rule.lhs or g.dom != rule.rhs or corule.lhs != f.cod or corule.rhs != g.cod:
        return False
    if not (f.is_mono and g.is_mono):
        return False
    rep = apply_rule(rule, f)
    rep_n, rep_e = rep.corule.partial_map()
    cor_n, cor_e = corule.partial_map()
    if set(rep_n) != set(cor_n) or set(rep_e) != set(cor_e):
        return False
    nmap: dict = {}
    emap: dict = {}
    pairs_n = [(rep.comatch.node_map[r], g.node_map[r]) for r in rule.rhs.nodes]
    pairs_n += [(rep_n[x], cor_n[x]) for x in rep_n]
    pairs_e = [(rep.comatch.edge_map[r], g.edge_map[r]) for r in rule.rhs.edges]
    pairs_e += [(rep_e[x], cor_e[x]) for x in rep_e]
    for table, pairs in ((nmap, pairs_n), (emap, pairs_e)):
        for a, b in pairs:
            if table.setdefault(a, b) != b:
                return False
    h_rep = rep.target
    if set(nmap) != set(h_rep.nodes) or set(emap) != set(h_rep.edges):
        return False
    try:
        u = Morphism(h_rep, g.cod, nmap, emap)
    except ValueError:
        return False
    return u.is_iso


def is_derivable(g: Morphism, rule: Rule) -> tuple[bool, Morphism | None]:
    """Whether the match ``g: rhs -> H`` is a comatch of some derivation.

    Applies the reverse rule to g, then the rule to the resulting match,
    and looks for an isomorphism of codomains commuting with the comatches.
    Returns the flag and the witness match of the left-hand side.
    """
    if g.dom != rule.rhs:
        raise ValueError("match domain is not the right-hand side of the rule")
    back = apply_rule(reverse_rule(rule), g)
    f = back.comatch
    fwd = apply_rule(rule, f)
    g2 = fwd.comatch
    u = find_isomorphism(
        g.cod,
        g2.cod,
        {g.node_map[r]: g2.node_map[r] for r in rule.rhs.nodes},
        {g.edge_map[r]: g2.edge_map[r] for r in rule.rhs.edges},
    )
    if u is None:
        return False, None
    return True, f
