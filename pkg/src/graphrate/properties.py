"""Randomised checks of the modularity and correspondence properties of derivations.

Every ``check_*`` function draws one instance, decides it by exhaustive
search for the mediating matches, and returns True (holds), False
(counterexample) or None (instance not applicable, e.g. the factor is not
derivable where the property needs it to be).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .generators import (
    GenConfig,
    host_with_match,
    random_derivation,
    random_extension,
    random_rule,
    random_subgraph,
)
from .graph import Graph, Morphism, find_isomorphism, iter_matches
from .rewrite import Rule, apply_rule, is_derivable, is_derivation, pushout, reverse_rule

DEFAULT_CFG = GenConfig(node_labels=("a", "b"), edge_labels=("x", "y"), max_nodes=3, max_edges=3)


def _seed(inner: Morphism, outer: Morphism) -> tuple[dict, dict]:
    """Node and edge seeds forcing m ∘ inner = outer for a morphism m out of cod(inner)."""
    return (
        {inner.node_map[x]: outer.node_map[x] for x in inner.dom.nodes},
        {inner.edge_map[x]: outer.edge_map[x] for x in inner.dom.edges},
    )


def mediating_matches(inner: Morphism, outer: Morphism) -> list[Morphism]:
    """All matches m: cod(inner) -> cod(outer) with m ∘ inner = outer."""
    n, e = _seed(inner, outer)
    return list(iter_matches(inner.cod, outer.cod, n, e))


def _small(g: Graph, limit: int = 5) -> bool:
    return g.num_nodes <= limit


def check_forward_modularity(rng: random.Random, cfg: GenConfig = DEFAULT_CFG):
    """Given f = f2 ∘ f1, the comatch of f factors uniquely as g2 ∘ g1 through a derivation."""
    rule = random_rule(rng, cfg)
    s, f1 = host_with_match(rng, rule.lhs, cfg, 1, 2, prefix="s")
    g, f2 = host_with_match(rng, s, cfg, 1, 2, prefix="g")
    if not _small(g):
        return None
    f = f1.then(f2)
    d = apply_rule(rule, f)
    d1 = apply_rule(rule, f1)
    if not _small(d.target):
        return None
    found = [
        g2 for g2 in mediating_matches(d1.comatch, d.comatch)
        if is_derivation(f2, d1.corule, g2, d.corule)
    ]
    return len(found) == 1 and found[0].is_mono


def check_backward_modularity(rng: random.Random, cfg: GenConfig = DEFAULT_CFG):
    """Given g = g2 ∘ g1, the match f factors uniquely as f2 ∘ f1 through a derivation."""
    d = random_derivation(rng, cfg)
    h = d.target
    if not _small(h) or not _small(d.source):
        return None
    t = random_subgraph(rng, h, must=d.comatch.image())
    g1 = d.comatch.with_cod(t)
    g2 = Morphism.inclusion(t, h)
    if not is_derivable(g1, d.rule)[0]:
        # g factors through g1, so g1 must be derivable
        return False
    back = apply_rule(reverse_rule(d.rule), g1)
    f1 = back.comatch
    gamma = reverse_rule(back.corule)
    if not is_derivation(f1, d.rule, g1, gamma):
        return False
    found = [
        f2 for f2 in mediating_matches(f1, d.match)
        if is_derivation(f2, gamma, g2, d.corule)
    ]
    return len(found) == 1 and found[0].is_mono


def derivable_oracle(g: Morphism, rule: Rule, extra_edges: int = 1) -> bool:
    """Brute-force derivability: search for a match f with f ~rule~> g.

    Candidate sources are L glued to the context D' (H without the items
    created along g) plus up to ``extra_edges`` dangling edges on the
    deleted nodes; every match of L into every candidate is applied and
    its comatch compared with g up to a commuting isomorphism.
    """
    h = g.cod
    kept_n = set(rule.right.node_map.values())
    kept_e = set(rule.right.edge_map.values())
    created_n = {g.node_map[r] for r in rule.rhs.nodes if r not in kept_n}
    created_e = {g.edge_map[r] for r in rule.rhs.edges if r not in kept_e}
    ctx_nodes = [v for v in h.nodes if v not in created_n]
    ctx_edges = [e for e in h.edges if e not in created_e]
    if any(h.src(e) in created_n or h.tgt(e) in created_n for e in ctx_edges):
        return False  # no context graph D' exists
    ctx = h.subgraph(ctx_nodes, ctx_edges)
    k_to_ctx = rule.right.then(g).with_cod(ctx)
    l_to_src, _ = pushout(rule.left, k_to_ctx, lambda kind, x: ("del", x))
    src = l_to_src.cod
    deleted = [l_to_src.node_map[v] for v in rule.lhs.nodes if v not in set(rule.left.node_map.values())]
    labels = sorted({lab for *_, lab in list(h.edges.values()) + list(rule.lhs.edges.values())} or {"x"})
    variants = [src]
    if extra_edges:
        for u in deleted:
            for v in src.nodes:
                for lab in labels:
                    for s, t in {(u, v), (v, u)}:
                        variants.append(
                            Graph(list(src.nodes.items()), [(e, *x) for e, x in src.edges.items()] + [(("extra",), s, t, lab)])
                        )
    for cand in variants:
        for f in iter_matches(rule.lhs, cand):
            d = apply_rule(rule, f)
            seed_n = {d.comatch.node_map[r]: g.node_map[r] for r in rule.rhs.nodes}
            seed_e = {d.comatch.edge_map[r]: g.edge_map[r] for r in rule.rhs.edges}
            if find_isomorphism(d.target, h, seed_n, seed_e) is not None:
                return True
    return False


def _random_comatch(rng: random.Random, cfg: GenConfig):
    """A match of some rule's rhs: half from real derivations, half arbitrary."""
    if rng.random() < 0.5:
        d = random_derivation(rng, cfg)
        rule, g = d.rule, d.comatch
        if rng.random() < 0.5:
            t = random_extension(rng, g.cod, cfg, 1, 2, prefix="x")
            g = g.then(Morphism.inclusion(g.cod, t))
        return rule, g
    rule = random_rule(rng, cfg)
    h, g = host_with_match(rng, rule.rhs, cfg, 1, 3)
    return rule, g


def check_derivability(rng: random.Random, cfg: GenConfig = DEFAULT_CFG):
    """is_derivable agrees with reversibility of the reverse derivation and with brute force."""
    rule, g = _random_comatch(rng, cfg)
    if not _small(g.cod):
        return None
    flag, witness = is_derivable(g, rule)
    back = apply_rule(reverse_rule(rule), g)
    reversible = is_derivation(back.comatch, rule, g, reverse_rule(back.corule))
    oracle = derivable_oracle(g, rule)
    if flag and not is_derivation(witness, rule, g, reverse_rule(back.corule)):
        return False
    return flag == reversible == oracle


def _rule_with_creation(rng: random.Random, cfg: GenConfig) -> Rule:
    while True:
        rule = random_rule(rng, cfg)
        if rule.rhs.num_nodes > len(rule.right.node_map):
            return rule


def check_restriction(rng: random.Random, cfg: GenConfig = DEFAULT_CFG):
    """A comatch g never factors through a non-derivable match g1."""
    d = random_derivation(rng, cfg, _rule_with_creation(rng, cfg))
    rule = d.rule
    if not _small(d.target):
        return None
    t = random_extension(rng, rule.rhs, cfg, 1, 3, prefix="t")
    g1 = Morphism.inclusion(rule.rhs, t)
    if is_derivable(g1, rule)[0]:
        return None
    return not mediating_matches(g1, d.comatch)


def check_correspondence(rng: random.Random, cfg: GenConfig = DEFAULT_CFG):
    """Factorisations of f through f1 and of g through g1 are equinumerous."""
    d = random_derivation(rng, cfg)
    rule = d.rule
    if not _small(d.target) or not _small(d.source):
        return None
    if rng.random() < 0.5:
        t = random_subgraph(rng, d.target, must=d.comatch.image())
        g1 = d.comatch.with_cod(t)
    else:
        t = random_extension(rng, rule.rhs, cfg, 1, 2, prefix="t")
        g1 = Morphism.inclusion(rule.rhs, t)
    if not is_derivable(g1, rule)[0]:
        return None
    f1 = apply_rule(reverse_rule(rule), g1).comatch
    left = mediating_matches(f1, d.match)
    right = mediating_matches(g1, d.comatch)
    return len(left) == len(right)


@dataclass
class SuiteResult:
    name: str
    instances: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)  # seeds of counterexamples

    @property
    def ok(self) -> bool:
        return not self.failures


def run_suite(name: str, check: Callable, n: int = 1000, seed: int = 0, cfg: GenConfig = DEFAULT_CFG, max_attempts: int | None = None) -> SuiteResult:
    """Run ``check`` on fresh instances until ``n`` of them were applicable."""
    res = SuiteResult(name)
    attempts = 0
    max_attempts = max_attempts or 50 * n
    while res.instances < n and attempts < max_attempts:
        inst_seed = seed * 1_000_003 + attempts
        attempts += 1
        out = check(random.Random(inst_seed), cfg)
        if out is None:
            res.skipped += 1
            continue
        res.instances += 1
        if not out:
            res.failures.append(inst_seed)
    return res


SUITES = {
    "forward modularity": check_forward_modularity,
    "backward modularity": check_backward_modularity,
    "derivability": check_derivability,
    "restriction": check_restriction,
    "correspondence": check_correspondence,
}
