"""Walker on a circular track: rate equations, master equation and simulation side by side.

    python scripts/walker_pipeline.py --runs 2000 --t-end 20
"""
import argparse
import time
from dataclasses import dataclass

from graphrate.cli import resolve_model
from graphrate.ctmc import ensemble, master_expectations, reachable_space
from graphrate.dsl import load_model
from graphrate.greg import expand_system
from graphrate.odeint import OdeProblem, evaluate_outputs, integrate, steady_state


@dataclass
class Config:
    model: str = "walker.gts"
    t_end: float = 20.0
    dt: float = 1e-3
    runs: int = 2000
    seed: int = 0
    checkpoints: tuple = (1.0, 5.0, 20.0)


def closed_form_velocity(k: dict) -> float:
    fe, be, fc, bc = (float(k[n]) for n in ("FE", "BE", "FC", "BC"))
    return ((fc + bc) * (fe - be) + (fe + be) * (fc - bc)) / (2 * (fe + be + fc + bc))


def run(cfg: Config) -> None:
    model = load_model(resolve_model(cfg.model))
    t0 = time.perf_counter()
    system = expand_system(model)
    print(f"expanded to {len(system.equations)} equations in {time.perf_counter() - t0:.2f}s")
    for key, lc in system.equations.items():
        rhs = " ".join(f"{'+' if c > 0 else '-'} {abs(c)} <{system.name(k)}>" for k, c in lc.items())
        print(f"  d<{system.name(key)}>/dt = {rhs}")

    problem = OdeProblem.from_system(system, dt=cfg.dt)
    times, ys = integrate(problem, t_end=cfg.t_end)
    res = steady_state(problem)
    v = evaluate_outputs(system.outputs, problem.variables, res.values)["V"]
    print(f"steady state " + ", ".join(f"{n} = {float(x):.9f}" for n, x in zip(problem.names, res.values)) + f", V = {v:.9f}")
    print(f"closed form V = {closed_form_velocity(model.rates):.9f}")

    space = reachable_space(model, model.init)
    c = model.observables["C"]
    mt, _, ex = master_expectations(space, None, [c], cfg.t_end, cfg.dt)
    s = ensemble(model, model.init, cfg.t_end, cfg.runs, cfg.seed, sample_times=list(cfg.checkpoints), observables={"C": c})
    ci = problem.names.index("C")
    print(f"{len(space)} reachable states; <C> at checkpoints:")
    print("      t       ode    master   gillespie")
    for i, t in enumerate(cfg.checkpoints):
        j = int(round(t / cfg.dt))
        print(f"  {t:5g}  {ys[j, ci]:.6f}  {ex[j, 0]:.6f}  {s.mean[i, 0]:.4f} ± {s.stderr[i, 0]:.4f}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default=Config.model)
    p.add_argument("--t-end", type=float, default=Config.t_end)
    p.add_argument("--runs", type=int, default=Config.runs)
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    run(Config(model=a.model, t_end=a.t_end, runs=a.runs, seed=a.seed))


if __name__ == "__main__":
    main()
