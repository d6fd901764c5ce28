"""Sweep walker rates and compare the expanded system's steady velocity with the closed form."""
import argparse
import itertools
import re
from dataclasses import dataclass

from graphrate.cli import resolve_model
from graphrate.dsl import parse_model
from graphrate.greg import expand_system
from graphrate.odeint import OdeProblem, evaluate_outputs, steady_state
from walker_pipeline import closed_form_velocity


@dataclass
class Config:
    values: tuple = (1, 2, 3)
    dt: float = 1e-2


def with_rates(text: str, rates: dict) -> str:
    """Rewrite the ``@ rate`` of each rule so that k(RULE) in outputs follows."""
    def sub(m):
        return f"{m.group(1)}{rates[m.group(2)]}"
    return re.sub(r"(rule (\w+):[^@\n]*@ *)(\S+)", sub, text)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--values", type=int, nargs="+", default=list(Config.values))
    a = p.parse_args()
    cfg = Config(values=tuple(a.values))
    with open(resolve_model("walker.gts")) as fh:
        text = fh.read()
    worst = 0.0
    print("   FE BE FC BC        V (ode)     V (closed)")
    for fe, be, fc, bc in itertools.product(cfg.values, repeat=4):
        rates = {"FE": fe, "BE": be, "FC": fc, "BC": bc}
        model = parse_model(with_rates(text, rates))
        system = expand_system(model)
        problem = OdeProblem.from_system(system, dt=cfg.dt)
        v = evaluate_outputs(system.outputs, problem.variables, steady_state(problem).values)["V"]
        ref = closed_form_velocity(model.rates)
        worst = max(worst, abs(v - ref))
        print(f"  {fe:3d}{be:3d}{fc:3d}{bc:3d}   {v:+.9f}   {ref:+.9f}")
    print(f"max abs deviation {worst:.2e}")


if __name__ == "__main__":
    main()
