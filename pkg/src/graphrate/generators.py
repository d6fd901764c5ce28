"""Random small graphs, rules and matches for property checks and experiments."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .graph import Graph, Morphism, canonical_key, iter_matches
from .rewrite import Derivation, Rule, apply_rule


@dataclass
class GenConfig:
    node_labels: tuple = ("a", "b")
    edge_labels: tuple = ("x", "y")
    max_nodes: int = 4
    max_edges: int = 4
    loops: bool = True


def random_graph(rng: random.Random, cfg: GenConfig, min_nodes: int = 0, max_nodes: int | None = None, prefix: str = "") -> Graph:
    hi = cfg.max_nodes if max_nodes is None else max_nodes
    n = rng.randint(min(min_nodes, hi), hi)
    nodes = [(f"{prefix}v{i}", rng.choice(cfg.node_labels)) for i in range(n)]
    edges = []
    if n:
        for j in range(rng.randint(0, cfg.max_edges)):
            s = rng.randrange(n)
            t = rng.randrange(n)
            if s == t and not cfg.loops:
                continue
            edges.append((f"{prefix}e{j}", nodes[s][0], nodes[t][0], rng.choice(cfg.edge_labels)))
    return Graph(nodes, edges)


def random_subgraph(rng: random.Random, g: Graph, keep: float = 0.6, must=None) -> Graph:
    """A random subgraph of g; ``must`` is a subgraph it has to contain."""
    must_n = set(must.nodes) if must is not None else set()
    must_e = set(must.edges) if must is not None else set()
    nodes = {v for v in g.nodes if v in must_n or rng.random() < keep}
    edges = [
        e
        for e, (s, t, _) in g.edges.items()
        if e in must_e or (s in nodes and t in nodes and rng.random() < keep)
    ]
    return g.subgraph(nodes, edges)


def random_extension(rng: random.Random, g: Graph, cfg: GenConfig, max_new_nodes: int = 2, max_new_edges: int = 3, prefix: str = "t") -> Graph:
    """g plus a few random new nodes and edges (which may attach to old nodes)."""
    nodes = list(g.nodes.items())
    for i in range(rng.randint(0, max_new_nodes)):
        nodes.append((f"{prefix}v{i}", rng.choice(cfg.node_labels)))
    edges = [(e, *d) for e, d in g.edges.items()]
    ids = [v for v, _ in nodes]
    if ids:
        for j in range(rng.randint(0, max_new_edges)):
            s, t = rng.choice(ids), rng.choice(ids)
            if s == t and not cfg.loops:
                continue
            edges.append((f"{prefix}e{j}", s, t, rng.choice(cfg.edge_labels)))
    return Graph(nodes, edges)


def random_rule(rng: random.Random, cfg: GenConfig, name: str = "r", max_lhs_nodes: int = 3) -> Rule:
    """L random, K a random subgraph of L, R a random extension of K."""
    small = GenConfig(cfg.node_labels, cfg.edge_labels, max_lhs_nodes, min(cfg.max_edges, 3), cfg.loops)
    lhs = random_graph(rng, small, prefix="l")
    ker = random_subgraph(rng, lhs)
    rhs = random_extension(rng, ker, cfg, max_new_nodes=2, max_new_edges=2, prefix="r")
    nodes = {v: v for v in ker.nodes}
    edges = {e: e for e in ker.edges}
    return Rule.from_correspondence(name, lhs, rhs, nodes, edges)


def random_match(rng: random.Random, pattern: Graph, host: Graph, limit: int = 200) -> Morphism | None:
    """A match chosen uniformly among the first ``limit`` matches, if any."""
    ms = []
    for m in iter_matches(pattern, host):
        ms.append(m)
        if len(ms) >= limit:
            break
    return rng.choice(ms) if ms else None


def host_with_match(rng: random.Random, pattern: Graph, cfg: GenConfig, max_new_nodes: int = 2, max_new_edges: int = 3, prefix: str = "h") -> tuple[Graph, Morphism]:
    """A random graph containing ``pattern`` together with the inclusion."""
    host = random_extension(rng, pattern, cfg, max_new_nodes, max_new_edges, prefix)
    return host, Morphism.inclusion(pattern, host)


def random_derivation(rng: random.Random, cfg: GenConfig, rule: Rule | None = None) -> Derivation:
    """A rule applied at a match into a random host containing its lhs."""
    rule = rule or random_rule(rng, cfg)
    host, _ = host_with_match(rng, rule.lhs, cfg)
    f = random_match(rng, rule.lhs, host)
    return apply_rule(rule, f)


def all_graphs(node_labels=("a",), edge_labels=("x",), max_nodes: int = 2, max_edges: int = 2) -> list[Graph]:
    """Every graph up to isomorphism within the given bounds, smallest first."""
    seen = {}
    for n in range(max_nodes + 1):
        for labels in itertools.combinations_with_replacement(node_labels, n):
            slots = [(s, t, lab) for s in range(n) for t in range(n) for lab in edge_labels]
            for m in range(max_edges + 1 if n else 1):
                for chosen in itertools.combinations_with_replacement(slots, m):
                    g = Graph(
                        [(i, lab) for i, lab in enumerate(labels)],
                        [(j, s, t, lab) for j, (s, t, lab) in enumerate(chosen)],
                    )
                    seen.setdefault(canonical_key(g), g)
    return list(seen.values())
