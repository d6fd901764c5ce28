"""Directed labelled multigraphs, morphisms and monomorphism enumeration.

Graphs are immutable values.  Node and edge ids are arbitrary hashable
objects (strings from model files, ints for canonical forms, tuples for
ids minted during rewriting); labels are strings.
"""
from __future__ import annotations

import itertools
import json
from collections import defaultdict
from functools import lru_cache
from types import MappingProxyType
from typing import Hashable, Iterable, Iterator, Mapping

Id = Hashable
EdgeData = tuple  # (src, tgt, label)


def id_sort_key(x):
    """Total order over the mixed id types used in this package."""
    if isinstance(x, bool):
        return (0, int(x))
    if isinstance(x, int):
        return (0, x)
    if isinstance(x, str):
        return (1, x)
    if isinstance(x, tuple):
        return (2, tuple(id_sort_key(y) for y in x))
    return (3, repr(x))


def sorted_ids(ids: Iterable[Id]) -> list:
    return sorted(ids, key=id_sort_key)


class Graph:
    """A finite directed multigraph with labelled nodes and edges."""

    __slots__ = ("_nodes", "_edges", "_hash", "_index")

    def __init__(self, nodes=(), edges=()):
        if isinstance(nodes, Mapping):
            nodes = nodes.items()
        if isinstance(edges, Mapping):
            edges = ((e, *d) for e, d in edges.items())
        nd: dict = {}
        for v, lab in nodes:
            if v in nd:
                raise ValueError(f"duplicate node id {v!r}")
            nd[v] = str(lab)
        ed: dict = {}
        for e, s, t, lab in edges:
            if e in ed:
                raise ValueError(f"duplicate edge id {e!r}")
            if s not in nd or t not in nd:
                raise ValueError(f"edge {e!r} has an endpoint outside the node set")
            ed[e] = (s, t, str(lab))
        self._nodes = nd
        self._edges = ed
        self._hash = None
        self._index = None

    @classmethod
    def empty(cls) -> "Graph":
        return _EMPTY

    @property
    def nodes(self) -> Mapping:
        """Read-only map node id -> label."""
        return MappingProxyType(self._nodes)

    @property
    def edges(self) -> Mapping:
        """Read-only map edge id -> (src, tgt, label)."""
        return MappingProxyType(self._edges)

    def node_ids(self) -> list:
        return sorted_ids(self._nodes)

    def edge_ids(self) -> list:
        return sorted_ids(self._edges)

    def label(self, v) -> str:
        return self._nodes[v]

    def src(self, e):
        return self._edges[e][0]

    def tgt(self, e):
        return self._edges[e][1]

    def edge_label(self, e) -> str:
        return self._edges[e][2]

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def __len__(self) -> int:
        return len(self._nodes) + len(self._edges)

    def is_empty(self) -> bool:
        return not self._nodes

    def edges_between(self, s, t, label: str) -> list:
        """Sorted ids of the edges s -label-> t."""
        return self._edge_index().get((s, t, label), [])

    def _edge_index(self) -> dict:
        if self._index is None:
            idx = defaultdict(list)
            for e in self.edge_ids():
                idx[self._edges[e]].append(e)
            self._index = dict(idx)
        return self._index

    def incident_edges(self, v) -> list:
        return [e for e, (s, t, _) in self._edges.items() if s == v or t == v]

    def degree(self, v) -> int:
        return sum((s == v) + (t == v) for s, t, _ in self._edges.values())

    def subgraph(self, node_ids: Iterable[Id], edge_ids: Iterable[Id] = ()) -> "Graph":
        """The subgraph on the given ids; edges must have both endpoints kept."""
        vs = set(node_ids)
        es = set(edge_ids)
        for v in vs:
            if v not in self._nodes:
                raise ValueError(f"{v!r} is not a node of the graph")
        for e in es:
            if e not in self._edges:
                raise ValueError(f"{e!r} is not an edge of the graph")
            s, t, _ = self._edges[e]
            if s not in vs or t not in vs:
                raise ValueError(f"edge {e!r} would dangle in the subgraph")
        return Graph(
            ((v, self._nodes[v]) for v in self._nodes if v in vs),
            ((e, *self._edges[e]) for e in self._edges if e in es),
        )

    def induced(self, node_ids: Iterable[Id]) -> "Graph":
        vs = set(node_ids)
        es = [e for e, (s, t, _) in self._edges.items() if s in vs and t in vs]
        return self.subgraph(vs, es)

    def is_subgraph_of(self, host: "Graph") -> bool:
        return all(host._nodes.get(v) == lab for v, lab in self._nodes.items()) and all(
            host._edges.get(e) == d for e, d in self._edges.items()
        )

    def rename(self, node_map: Mapping, edge_map: Mapping | None = None) -> "Graph":
        """Copy with ids renamed; ids missing from the maps are kept."""
        edge_map = edge_map or {}
        nm = lambda v: node_map.get(v, v)
        return Graph(
            ((nm(v), lab) for v, lab in self._nodes.items()),
            ((edge_map.get(e, e), nm(s), nm(t), lab) for e, (s, t, lab) in self._edges.items()),
        )

    def serialize(self) -> str:
        """Id-level serialisation: sorted node list then sorted edge triples."""
        nodes = [[_jsonable(v), self._nodes[v]] for v in self.node_ids()]
        edges = [
            [_jsonable(e), _jsonable(s), _jsonable(t), lab]
            for e in self.edge_ids()
            for s, t, lab in [self._edges[e]]
        ]
        return json.dumps({"nodes": nodes, "edges": edges}, separators=(",", ":"))

    def to_json(self) -> dict:
        return {
            "nodes": [[_jsonable(v), self._nodes[v]] for v in self.node_ids()],
            "edges": [
                [_jsonable(e), _jsonable(s), _jsonable(t), lab]
                for e in self.edge_ids()
                for s, t, lab in [self._edges[e]]
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Graph":
        return cls(
            ((_unjson(v), lab) for v, lab in data["nodes"]),
            ((_unjson(e), _unjson(s), _unjson(t), lab) for e, s, t, lab in data["edges"]),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self._nodes.items()), frozenset(self._edges.items())))
        return self._hash

    def __repr__(self) -> str:
        ns = " ".join(f"{v}:{self._nodes[v]}" for v in self.node_ids())
        es = ", ".join(
            f"{e}: {s} -{lab}-> {t}" for e in self.edge_ids() for s, t, lab in [self._edges[e]]
        )
        return f"Graph({ns}{' | ' + es if es else ''})"


_EMPTY = Graph()


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    return x


def _unjson(x):
    if isinstance(x, list):
        return tuple(_unjson(y) for y in x)
    return x


class Morphism:
    """A structure- and label-preserving map dom -> cod.

    The maps are total on dom.  Construction validates the morphism
    unless ``check=False`` (used internally on freshly built maps).
    """

    __slots__ = ("dom", "cod", "node_map", "edge_map")

    def __init__(self, dom: Graph, cod: Graph, node_map: Mapping, edge_map: Mapping, check: bool = True):
        self.dom = dom
        self.cod = cod
        self.node_map = dict(node_map)
        self.edge_map = dict(edge_map)
        if check:
            self._validate()

    def _validate(self) -> None:
        dom, cod = self.dom, self.cod
        if set(self.node_map) != set(dom.nodes) or set(self.edge_map) != set(dom.edges):
            raise ValueError("morphism maps must be total on the domain")
        for v, w in self.node_map.items():
            if w not in cod.nodes:
                raise ValueError(f"node {v!r} maps outside the codomain")
            if dom.label(v) != cod.label(w):
                raise ValueError(f"node {v!r} label not preserved")
        for e, f in self.edge_map.items():
            if f not in cod.edges:
                raise ValueError(f"edge {e!r} maps outside the codomain")
            s, t, lab = dom.edges[e]
            if cod.edges[f] != (self.node_map[s], self.node_map[t], lab):
                raise ValueError(f"edge {e!r} structure or label not preserved")

    @classmethod
    def identity(cls, g: Graph) -> "Morphism":
        return cls(g, g, {v: v for v in g.nodes}, {e: e for e in g.edges}, check=False)

    @classmethod
    def inclusion(cls, sub: Graph, host: Graph) -> "Morphism":
        if not sub.is_subgraph_of(host):
            raise ValueError("not a subgraph")
        return cls(sub, host, {v: v for v in sub.nodes}, {e: e for e in sub.edges}, check=False)

    @property
    def is_mono(self) -> bool:
        return len(set(self.node_map.values())) == len(self.node_map) and len(
            set(self.edge_map.values())
        ) == len(self.edge_map)

    @property
    def is_iso(self) -> bool:
        return (
            self.is_mono
            and len(self.node_map) == self.cod.num_nodes
            and len(self.edge_map) == self.cod.num_edges
        )

    def then(self, other: "Morphism") -> "Morphism":
        """Composite ``other ∘ self``."""
        if other.dom != self.cod:
            raise ValueError("morphisms are not composable")
        return Morphism(
            self.dom,
            other.cod,
            {v: other.node_map[w] for v, w in self.node_map.items()},
            {e: other.edge_map[f] for e, f in self.edge_map.items()},
            check=False,
        )

    def image(self) -> Graph:
        return direct_image(self)

    def inverse(self) -> "Morphism":
        if not self.is_iso:
            raise ValueError("only isomorphisms are invertible")
        return Morphism(
            self.cod,
            self.dom,
            {w: v for v, w in self.node_map.items()},
            {f: e for e, f in self.edge_map.items()},
            check=False,
        )

    def with_cod(self, cod: Graph) -> "Morphism":
        """Same maps, different codomain (e.g. corestriction to a subgraph)."""
        return Morphism(self.dom, cod, self.node_map, self.edge_map)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Morphism):
            return NotImplemented
        return (
            self.node_map == other.node_map
            and self.edge_map == other.edge_map
            and self.dom == other.dom
            and self.cod == other.cod
        )

    def __hash__(self) -> int:
        return hash((frozenset(self.node_map.items()), frozenset(self.edge_map.items())))

    def __repr__(self) -> str:
        nm = ", ".join(f"{v}->{self.node_map[v]}" for v in sorted_ids(self.node_map))
        em = ", ".join(f"{e}->{self.edge_map[e]}" for e in sorted_ids(self.edge_map))
        return f"Morphism({nm}{' | ' + em if em else ''})"


def direct_image(f: Morphism) -> Graph:
    """The subgraph f(dom) of cod."""
    return f.cod.subgraph(f.node_map.values(), f.edge_map.values())


# ---------------------------------------------------------------------------
# lattice of subgraphs


def _check_subgraphs(a: Graph, b: Graph, host: Graph) -> None:
    if not (a.is_subgraph_of(host) and b.is_subgraph_of(host)):
        raise ValueError("both arguments must be subgraphs of the same host graph")


def subgraph_union(a: Graph, b: Graph, host: Graph) -> Graph:
    _check_subgraphs(a, b, host)
    return host.subgraph(set(a.nodes) | set(b.nodes), set(a.edges) | set(b.edges))


def subgraph_intersection(a: Graph, b: Graph, host: Graph) -> Graph:
    _check_subgraphs(a, b, host)
    return host.subgraph(set(a.nodes) & set(b.nodes), set(a.edges) & set(b.edges))


# ---------------------------------------------------------------------------
# monomorphism enumeration


class _Plan:
    """Pattern-side data for the backtracking matcher."""

    def __init__(self, pattern: Graph, fixed: Iterable[Id]):
        self.pattern = pattern
        groups = defaultdict(list)
        for e in pattern.edge_ids():
            groups[pattern.edges[e]].append(e)
        self.groups = dict(groups)
        order = [v for v in sorted_ids(fixed)]
        placed = set(order)
        nbrs = defaultdict(set)
        for s, t, _ in pattern.edges.values():
            nbrs[s].add(t)
            nbrs[t].add(s)
        deg = {v: pattern.degree(v) for v in pattern.nodes}
        rest = [v for v in pattern.node_ids() if v not in placed]
        while rest:
            # most-constrained first: adjacency to placed nodes, then degree
            best = max(rest, key=lambda v: (len(nbrs[v] & placed), deg[v], -rest.index(v)))
            rest.remove(best)
            order.append(best)
            placed.add(best)
        self.order = order
        pos = {v: i for i, v in enumerate(order)}
        # groups whose later endpoint is order[i], checked when order[i] is assigned
        self.checks = defaultdict(list)
        for (s, t, lab), es in self.groups.items():
            self.checks[max(pos[s], pos[t])].append((s, t, lab, len(es)))


def _node_assignments(plan: _Plan, target: Graph, seed: Mapping) -> Iterator[dict]:
    pattern = plan.pattern
    order = plan.order
    tidx = target._edge_index()
    by_label = defaultdict(list)
    for w in target.node_ids():
        by_label[target.label(w)].append(w)
    assign: dict = {}
    used: set = set()

    def consistent(i: int) -> bool:
        for s, t, lab, n in plan.checks.get(i, ()):
            if len(tidx.get((assign[s], assign[t], lab), ())) < n:
                return False
        return True

    def rec(i: int) -> Iterator[dict]:
        if i == len(order):
            yield assign
            return
        v = order[i]
        if v in seed:
            cands = [seed[v]]
        else:
            cands = by_label.get(pattern.label(v), ())
        for w in cands:
            if w in used or w not in target.nodes or target.label(w) != pattern.label(v):
                continue
            assign[v] = w
            used.add(w)
            if consistent(i):
                yield from rec(i + 1)
            used.discard(w)
            del assign[v]

    yield from rec(0)


def iter_matches(
    pattern: Graph,
    target: Graph,
    node_seed: Mapping | None = None,
    edge_seed: Mapping | None = None,
) -> Iterator[Morphism]:
    """Yield every monomorphism pattern -> target extending the seeds."""
    node_seed = {v: w for v, w in (node_seed or {}).items() if v in pattern.nodes}
    edge_seed = {e: f for e, f in (edge_seed or {}).items() if e in pattern.edges}
    if pattern.num_nodes > target.num_nodes or pattern.num_edges > target.num_edges:
        return
    plan = _Plan(pattern, node_seed)
    tidx = target._edge_index()
    groups = sorted(plan.groups.items(), key=lambda kv: id_sort_key(kv[1][0]))
    for assign in _node_assignments(plan, target, node_seed):
        per_group = []
        ok = True
        for (s, t, lab), pes in groups:
            tes = tidx.get((assign[s], assign[t], lab), [])
            fixed = {e: edge_seed[e] for e in pes if e in edge_seed}
            if any(f not in tes for f in fixed.values()) or len(set(fixed.values())) < len(fixed):
                ok = False
                break
            free_p = [e for e in pes if e not in fixed]
            free_t = [f for f in tes if f not in set(fixed.values())]
            options = [
                {**fixed, **dict(zip(free_p, perm))}
                for perm in itertools.permutations(free_t, len(free_p))
            ]
            if not options:
                ok = False
                break
            per_group.append(options)
        if not ok:
            continue
        node_map = dict(assign)
        for combo in itertools.product(*per_group):
            edge_map = {}
            for part in combo:
                edge_map.update(part)
            yield Morphism(pattern, target, node_map, edge_map, check=False)


def enumerate_matches(
    pattern: Graph,
    target: Graph,
    node_seed: Mapping | None = None,
    edge_seed: Mapping | None = None,
) -> list:
    """All matches (monomorphisms) of pattern into target, in a fixed order."""
    return list(iter_matches(pattern, target, node_seed, edge_seed))


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def count_matches(pattern: Graph, target: Graph) -> int:
    """Number of monomorphisms pattern -> target, without building them."""
    if pattern.num_nodes > target.num_nodes or pattern.num_edges > target.num_edges:
        return 0
    plan = _Plan(pattern, ())
    tidx = target._edge_index()
    total = 0
    for assign in _node_assignments(plan, target, {}):
        ways = 1
        for (s, t, lab), pes in plan.groups.items():
            ways *= _falling(len(tidx.get((assign[s], assign[t], lab), ())), len(pes))
            if not ways:
                break
        total += ways
    return total


def evaluate_observable(pattern: Graph, state: Graph) -> int:
    """The graph observable <pattern> evaluated at state."""
    return count_matches(pattern, state)


def find_isomorphism(
    g: Graph, h: Graph, node_seed: Mapping | None = None, edge_seed: Mapping | None = None
) -> Morphism | None:
    """Some isomorphism g -> h extending the seeds, or None."""
    if g.num_nodes != h.num_nodes or g.num_edges != h.num_edges:
        return None
    return next(iter_matches(g, h, node_seed, edge_seed), None)


# ---------------------------------------------------------------------------
# canonical forms


def _canonical_search(g: Graph):
    ids = g.node_ids()
    n = len(ids)
    ix = {v: i for i, v in enumerate(ids)}
    labels = sorted(set(g.nodes.values()) | {lab for _, _, lab in g.edges.values()})
    lrank = {lab: i for i, lab in enumerate(labels)}
    edges = [(ix[s], ix[t], lrank[lab]) for s, t, lab in g.edges.values()]
    out = [[] for _ in range(n)]
    inn = [[] for _ in range(n)]
    for s, t, lab in edges:
        out[s].append((lab, t))
        inn[t].append((lab, s))

    def refine(colors: list) -> list:
        k = len(set(colors))
        while True:
            sigs = [
                (
                    colors[i],
                    tuple(sorted((lab, colors[j]) for lab, j in out[i])),
                    tuple(sorted((lab, colors[j]) for lab, j in inn[i])),
                )
                for i in range(n)
            ]
            rank = {s: r for r, s in enumerate(sorted(set(sigs)))}
            new = [rank[s] for s in sigs]
            if len(rank) == k:
                return new
            colors, k = new, len(rank)

    def certificate(order: list) -> tuple:
        pos = [0] * n
        for p, i in enumerate(order):
            pos[i] = p
        return tuple(sorted((pos[s], pos[t], lab) for s, t, lab in edges))

    best = [None, None]  # certificate, order
    autos: list = []

    def orbit_rep(prefix: list):
        gens = [a for a in autos if all(a[p] == p for p in prefix)]
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in gens:
            for i in range(n):
                ri, rj = find(i), find(a[i])
                if ri != rj:
                    parent[ri] = rj
        return find

    def search(colors: list, prefix: list) -> None:
        cells = defaultdict(list)
        for i, c in enumerate(colors):
            cells[c].append(i)
        target = next((cells[c] for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            order = sorted(range(n), key=lambda i: colors[i])
            cert = certificate(order)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, order
            elif cert == best[0]:
                a = [0] * n
                for p, i in enumerate(best[1]):
                    a[i] = order[p]
                autos.append(a)
            return
        explored: list = []
        for v in target:
            if explored:
                find = orbit_rep(prefix)
                if any(find(v) == find(w) for w in explored):
                    continue
            explored.append(v)
            indiv = [2 * c + 1 for c in colors]
            indiv[v] -= 1
            search(refine(indiv), prefix + [v])

    init = [lrank[g.label(v)] for v in ids]
    search(refine(init) if n else init, [])
    order = best[1] or []
    cert = best[0] or ()
    node_labels = [g.label(ids[i]) for i in order]
    key = json.dumps(
        [node_labels, [[s, t, labels[lab]] for s, t, lab in cert]], separators=(",", ":")
    )
    return key, [ids[i] for i in order]


@lru_cache(maxsize=200_000)
def _canonical(g: Graph):
    key, order = _canonical_search(g)
    pos = {v: i for i, v in enumerate(order)}
    triples = sorted(
        (((pos[s], pos[t], lab), e) for e, (s, t, lab) in g.edges.items()),
        key=lambda x: (x[0], id_sort_key(x[1])),
    )
    edge_pos = {e: k for k, (_, e) in enumerate(triples)}
    canon = Graph(
        ((pos[v], g.label(v)) for v in order),
        ((edge_pos[e], pos[s], pos[t], lab) for e, (s, t, lab) in g.edges.items()),
    )
    return key, canon, pos, edge_pos


def canonical_key(g: Graph) -> str:
    """A string that is equal for two graphs iff they are isomorphic."""
    return _canonical(g)[0]


def canonical_form(g: Graph) -> Graph:
    """The representative of g's isomorphism class (ids 0..n-1)."""
    return _canonical(g)[1]


def canonical_iso(g: Graph) -> Morphism:
    """An isomorphism from g onto canonical_form(g)."""
    _, canon, pos, edge_pos = _canonical(g)
    return Morphism(g, canon, pos, edge_pos, check=False)


def is_isomorphic(g: Graph, h: Graph) -> bool:
    return canonical_key(g) == canonical_key(h)


def graph_from_key(key: str) -> Graph:
    """Rebuild the canonical graph encoded in a canonical key."""
    node_labels, edges = json.loads(key)
    return Graph(enumerate(node_labels), ((k, s, t, lab) for k, (s, t, lab) in enumerate(edges)))
