"""Brute-force reference implementations, deliberately naive."""
from __future__ import annotations

import itertools
from fractions import Fraction

from graphrate.graph import Graph


def brute_matches(pattern: Graph, target: Graph) -> list[tuple[dict, dict]]:
    """Every injective label- and structure-preserving map, by full enumeration."""
    pn = list(pattern.nodes)
    pe = list(pattern.edges)
    out = []
    for image in itertools.permutations(list(target.nodes), len(pn)):
        nmap = dict(zip(pn, image))
        if any(pattern.label(v) != target.label(nmap[v]) for v in pn):
            continue
        for eimage in itertools.permutations(list(target.edges), len(pe)):
            emap = dict(zip(pe, eimage))
            ok = True
            for e in pe:
                s, t, lab = pattern.edges[e]
                s2, t2, lab2 = target.edges[emap[e]]
                if (nmap[s], nmap[t], lab) != (s2, t2, lab2):
                    ok = False
                    break
            if ok:
                out.append((nmap, emap))
    return out


def brute_count(pattern: Graph, target: Graph) -> int:
    return len(brute_matches(pattern, target))


def brute_isomorphic(g: Graph, h: Graph) -> bool:
    if (g.num_nodes, g.num_edges) != (h.num_nodes, h.num_edges):
        return False
    return brute_count(g, h) > 0


def brute_generator_action(rule, pattern: Graph, state: Graph) -> Fraction:
    """Σ over matches f of rule.lhs in state of <F>(H_f) - <F>(state), counting by brute force."""
    from graphrate.graph import Morphism
    from graphrate.rewrite import apply_rule

    before = brute_count(pattern, state)
    total = 0
    for nmap, emap in brute_matches(rule.lhs, state):
        f = Morphism(rule.lhs, state, nmap, emap)
        total += brute_count(pattern, apply_rule(rule, f).target) - before
    return Fraction(total)
