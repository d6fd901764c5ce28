"""Minimal gluings of two graphs and the factorisation of arbitrary gluings.

A minimal gluing of G1 and G2 is determined, up to isomorphism of
gluings, by which items of G1 are identified with which items of G2,
i.e. by a partial monomorphism G1 ⇀ G2.  We enumerate those and push
each one out to obtain the tip.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .graph import Graph, Morphism, canonical_key, find_isomorphism, sorted_ids
from .rewrite import pushout


@dataclass(frozen=True)
class MinimalGluing:
    left_inj: Morphism  # G1 -> U
    right_inj: Morphism  # G2 -> U
    overlap: Graph  # subgraph of G1 glued onto G2
    key: str  # canonical key of the tip

    @property
    def tip(self) -> Graph:
        return self.left_inj.cod

    @property
    def overlap_size(self) -> int:
        return len(self.overlap)

    @cached_property
    def relation(self) -> tuple[frozenset, frozenset]:
        """Pairs (x1, x2) of G1/G2 items sent to the same tip item."""
        return _relation(self.left_inj, self.right_inj)


def _relation(f1: Morphism, f2: Morphism) -> tuple[frozenset, frozenset]:
    inv_n: dict = {}
    for y, w in f2.node_map.items():
        inv_n.setdefault(w, []).append(y)
    inv_e: dict = {}
    for y, w in f2.edge_map.items():
        inv_e.setdefault(w, []).append(y)
    nodes = frozenset((x, y) for x, w in f1.node_map.items() for y in inv_n.get(w, ()))
    edges = frozenset((x, y) for x, w in f1.edge_map.items() for y in inv_e.get(w, ()))
    return nodes, edges


def partial_monos(g1: Graph, g2: Graph):
    """Yield every partial mono g1 ⇀ g2 as (node map, edge map)."""
    nodes1 = g1.node_ids()
    edges1 = g1.edge_ids()
    nmap: dict = {}
    used_n: set = set()

    def edges_rec(i: int, emap: dict, used_e: set):
        if i == len(edges1):
            yield dict(nmap), dict(emap)
            return
        e = edges1[i]
        yield from edges_rec(i + 1, emap, used_e)
        s, t, lab = g1.edges[e]
        if s in nmap and t in nmap:
            for f in g2.edges_between(nmap[s], nmap[t], lab):
                if f in used_e:
                    continue
                emap[e] = f
                used_e.add(f)
                yield from edges_rec(i + 1, emap, used_e)
                used_e.discard(f)
                del emap[e]

    def nodes_rec(i: int):
        if i == len(nodes1):
            yield from edges_rec(0, {}, set())
            return
        v = nodes1[i]
        yield from nodes_rec(i + 1)
        for w in g2.node_ids():
            if w in used_n or g2.label(w) != g1.label(v):
                continue
            nmap[v] = w
            used_n.add(w)
            yield from nodes_rec(i + 1)
            used_n.discard(w)
            del nmap[v]

    yield from nodes_rec(0)


def glue(g1: Graph, g2: Graph, nmap: dict, emap: dict) -> MinimalGluing:
    """Push out the span g1 ⊇ X -> g2 given by a partial mono.

    Tip ids are ``(1, x)`` for items only in g1 and ``(2, y)`` for g2.
    """
    overlap = g1.subgraph(nmap, emap)
    g2t = g2.rename({y: (2, y) for y in g2.nodes}, {f: (2, f) for f in g2.edges})
    tag2 = Morphism(
        g2, g2t, {y: (2, y) for y in g2.nodes}, {f: (2, f) for f in g2.edges}, check=False
    )
    into2 = Morphism(
        overlap, g2t, {x: (2, y) for x, y in nmap.items()}, {e: (2, f) for e, f in emap.items()}
    )
    left, right2 = pushout(Morphism.inclusion(overlap, g1), into2, lambda kind, x: (1, x))
    right = tag2.then(right2)
    return MinimalGluing(left, right, overlap, canonical_key(left.cod))


def _order_key(m: MinimalGluing):
    rel_n, rel_e = m.relation
    return (
        -m.overlap_size,
        m.key,
        repr(sorted_ids(rel_n)),
        repr(sorted_ids(rel_e)),
    )


def minimal_gluings(g1: Graph, g2: Graph) -> list[MinimalGluing]:
    """One representative per isomorphism class of minimal gluings of g1, g2.

    Ordered by overlap size (largest first), then by tip key.
    """
    seen = set()
    out = []
    for nmap, emap in partial_monos(g1, g2):
        m = glue(g1, g2, nmap, emap)
        if m.relation in seen:
            continue
        seen.add(m.relation)
        out.append(m)
    out.sort(key=_order_key)
    return out


def gluings_isomorphic(a: MinimalGluing, b: MinimalGluing) -> bool:
    """Exhaustive search for a tip isomorphism commuting with both injections."""
    seed_n: dict = {}
    seed_e: dict = {}
    for f, g in ((a.left_inj, b.left_inj), (a.right_inj, b.right_inj)):
        for x, w in f.node_map.items():
            if seed_n.setdefault(w, g.node_map[x]) != g.node_map[x]:
                return False
        for x, w in f.edge_map.items():
            if seed_e.setdefault(w, g.edge_map[x]) != g.edge_map[x]:
                return False
    return find_isomorphism(a.tip, b.tip, seed_n, seed_e) is not None


def factor_gluing(
    f1: Morphism, f2: Morphism, gluings: list[MinimalGluing] | None = None
) -> tuple[MinimalGluing, Morphism]:
    """Factor matches f1: G1 -> H, f2: G2 -> H as (u ∘ μ1, u ∘ μ2).

    ``gluings`` may be passed to reuse a precomputed minimal_gluings(G1, G2).
    """
    if f1.cod != f2.cod:
        raise ValueError("matches must share their codomain")
    if gluings is None:
        gluings = minimal_gluings(f1.dom, f2.dom)
    rel = _relation(f1, f2)
    mu = next((m for m in gluings if m.relation == rel), None)
    if mu is None:
        raise ValueError("gluing list does not contain the required class")
    nmap: dict = {}
    emap: dict = {}
    for inj, f in ((mu.left_inj, f1), (mu.right_inj, f2)):
        for x, w in inj.node_map.items():
            nmap[w] = f.node_map[x]
        for x, w in inj.edge_map.items():
            emap[w] = f.edge_map[x]
    u = Morphism(mu.tip, f1.cod, nmap, emap)
    if not u.is_mono:
        raise AssertionError("mediating morphism is not mono")
    return mu, u
