"""Minimal gluings of two model graphs, layered by overlap size, with invariant fates.

    python scripts/gluing_layers.py walker.gts E_motif FE_lhs
"""
import argparse
from collections import Counter

from graphrate.cli import _graph_arg, resolve_model
from graphrate.dsl import load_model
from graphrate.gluing import minimal_gluings
from graphrate.graph import count_matches


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("model", nargs="?", default="walker.gts")
    p.add_argument("g1", nargs="?", default="E_motif")
    p.add_argument("g2", nargs="?", default="FE_lhs")
    a = p.parse_args()
    model = load_model(resolve_model(a.model))
    mgs = minimal_gluings(_graph_arg(model, a.g1), _graph_arg(model, a.g2))
    fates = []
    for m in mgs:
        hit = next((n for n, pat in model.invariants if count_matches(pat, m.tip)), None)
        fates.append(hit or "kept")
    layer = None
    for m, fate in zip(mgs, fates):
        if m.overlap_size != layer:
            layer = m.overlap_size
            print(f"overlap {layer}:")
        print(f"  {m.tip.num_nodes} nodes {m.tip.num_edges} edges  -> {fate}")
    print(f"{len(mgs)} gluings; first invariant hit per gluing:")
    for fate, n in sorted(Counter(fates).items()):
        print(f"  {fate:16s} {n}")


if __name__ == "__main__":
    main()
