"""Run the randomised derivation property suites and report counterexample seeds."""
import argparse
import time
from dataclasses import dataclass

from graphrate.generators import GenConfig
from graphrate.properties import SUITES, run_suite


@dataclass
class Config:
    instances: int = 1000
    seed: int = 1
    max_nodes: int = 3
    max_edges: int = 3


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("-n", "--instances", type=int, default=Config.instances)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--max-nodes", type=int, default=Config.max_nodes)
    p.add_argument("--max-edges", type=int, default=Config.max_edges)
    p.add_argument("--only", choices=sorted(SUITES), action="append")
    a = p.parse_args()
    cfg = Config(a.instances, a.seed, a.max_nodes, a.max_edges)
    gen = GenConfig(max_nodes=cfg.max_nodes, max_edges=cfg.max_edges)
    bad = 0
    for name in a.only or SUITES:
        t0 = time.perf_counter()
        res = run_suite(name, SUITES[name], n=cfg.instances, seed=cfg.seed, cfg=gen)
        bad += len(res.failures)
        print(
            f"{name:22s} {res.instances:6d} instances  {res.skipped:5d} skipped  "
            f"{len(res.failures)} counterexamples  {time.perf_counter() - t0:.1f}s"
        )
        for s in res.failures[:5]:
            print(f"    failing instance seed {s}")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
