"""Command-line entry point: ``graphrate <command> ...``.

Exit status: 0 ok, 2 usage, 3 invalid input, 4 cap reached or no
convergence, 5 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from importlib import resources

import numpy as np

from .ctmc import StateSpaceCapExceeded, ensemble, master_expectations, reachable_space
from .dsl import ModelError, load_model, parse_graph
from .gluing import minimal_gluings
from .graph import Graph, _jsonable
from .greg import (
    ClosurePolicy,
    ExpansionCapExceeded,
    OdeSystem,
    SubstitutionCycleError,
    expand_system,
    to_latex,
)
from .odeint import (
    IntegrationError,
    OdeProblem,
    evaluate_outputs,
    evaluate_outputs_series,
    integrate,
    steady_state,
    write_csv,
)

log = logging.getLogger("graphrate")

EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_LIMIT = 4
EXIT_INTERNAL = 5


def resolve_model(path: str) -> str:
    """A model path, falling back to the bundled models by file name."""
    if os.path.exists(path):
        return path
    bundled = resources.files("graphrate") / "models" / os.path.basename(path)
    if bundled.is_file():
        return str(bundled)
    return path


def _model(path: str):
    return load_model(resolve_model(path))


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _graph_arg(model, text: str) -> Graph:
    if text.lstrip().startswith("{"):
        return parse_graph(text)
    if text in model.graphs:
        return model.graphs[text]
    if text in model.observables:
        return model.observables[text]
    if "." in text:
        name, side = text.rsplit(".", 1)
        for r in model.rules:
            if r.name == name and side in ("lhs", "rhs"):
                return r.lhs if side == "lhs" else r.rhs
    raise ModelError(f"no graph named {text!r} in the model")


def _load_system(path: str) -> OdeSystem:
    try:
        with open(path) as fh:
            return OdeSystem.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ModelError(f"cannot read system file {path}: {exc}") from exc


def cmd_expand(args) -> int:
    model = _model(args.model)
    opts = model.options
    max_size = args.max_size if args.max_size is not None else opts.get("max_size")
    max_obs = args.max_obs if args.max_obs is not None else opts.get("max_obs", 20)
    policy = ClosurePolicy(
        use_invariants=not args.no_invariants,
        use_equivalences=not args.no_equiv,
        max_size=None if max_size is None else int(max_size),
        max_observables=int(max_obs),
    )
    try:
        system = expand_system(model, policy=policy)
        status = 0
    except ExpansionCapExceeded as exc:
        system = exc.system
        status = EXIT_LIMIT
        log.error("%s", exc)
    _emit(json.dumps(system.to_json(), indent=2) + "\n", args.out)
    state = "closed" if system.closed else f"open, frontier {len(system.frontier)}"
    print(f"{len(system.equations)} equations ({state})", file=sys.stderr)
    for key, lc in system.equations.items():
        rhs = " ".join(f"{'+' if c > 0 else '-'} {abs(c)}*<{system.name(k)}>" for k, c in lc.items()) or "0"
        print(f"  d<{system.name(key)}>/dt = {rhs}", file=sys.stderr)
    return status


def _initial(args) -> dict:
    init = {}
    for item in args.set or ():
        name, _, value = item.partition("=")
        if not value:
            raise ModelError(f"--set expects NAME=VALUE, got {item!r}")
        init[name] = float(Fraction(value))
    return init


def cmd_integrate(args) -> int:
    system = _load_system(args.system)
    problem = OdeProblem.from_system(system, _initial(args), args.t_end, args.dt)
    times, ys = integrate(problem)
    outs = evaluate_outputs_series(system.outputs, problem.variables, ys)
    names = problem.names + list(outs)
    table = np.column_stack([ys] + [outs[n] for n in outs]) if outs else ys
    if args.out:
        write_csv(args.out, names, times, table, every=args.every)
    final = dict(zip(names, map(float, table[-1])))
    print(json.dumps({"t": float(times[-1]), "values": final}, indent=2))
    return 0


def cmd_steady(args) -> int:
    system = _load_system(args.system)
    problem = OdeProblem.from_system(system, _initial(args), dt=args.dt)
    res = steady_state(problem, tol=args.tol, window=args.window, t_max=args.t_max)
    data = res.to_json(problem.names)
    data["outputs"] = evaluate_outputs(system.outputs, problem.variables, res.values)
    _emit(json.dumps(data, indent=2) + "\n", args.out)
    if not res.converged:
        log.error("no convergence before t = %g", args.t_max)
        return EXIT_LIMIT
    return 0


def cmd_simulate(args) -> int:
    if args.runs < 1:
        raise _Usage("--runs must be at least 1")
    if not args.t_end > 0:
        raise _Usage("--t-end must be positive")
    model = _model(args.model)
    g0 = _graph_arg(model, args.init) if args.init else model.init
    if g0 is None:
        raise ModelError("no initial graph: give --init or an init statement")
    summary = ensemble(
        model, g0, args.t_end, args.runs, args.seed,
        sample_times=[args.t_end * i / args.samples for i in range(args.samples + 1)],
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary.to_json(), fh, indent=2)
    for t, m, s in zip(summary.times, summary.mean, summary.stderr):
        cols = "  ".join(f"{n}={mv:.6g}±{sv:.2g}" for n, mv, sv in zip(summary.names, m, s))
        print(f"t={t:.6g}  {cols}")
    return 0


def cmd_master(args) -> int:
    model = _model(args.model)
    g0 = _graph_arg(model, args.init) if args.init else model.init
    if g0 is None:
        raise ModelError("no initial graph: give --init or an init statement")
    space = reachable_space(model, g0, args.cap)
    names = list(model.observables)
    times, ps, ex = master_expectations(space, None, list(model.observables.values()), args.t_end, args.dt)
    print(json.dumps({
        "states": len(space),
        "t": float(times[-1]),
        "expectations": dict(zip(names, map(float, ex[-1]))),
        "total_probability": float(ps[-1].sum()),
    }, indent=2))
    return 0


def cmd_gluings(args) -> int:
    model = _model(args.model)
    g1 = _graph_arg(model, args.g1)
    g2 = _graph_arg(model, args.g2)
    mgs = minimal_gluings(g1, g2)
    if args.json:
        print(json.dumps([
            {
                "index": i,
                "overlap_size": m.overlap_size,
                "key": m.key,
                "tip": m.tip.to_json(),
                "left": _morphism_json(m.left_inj),
                "right": _morphism_json(m.right_inj),
            }
            for i, m in enumerate(mgs)
        ], indent=2))
        return 0
    print(f"{len(mgs)} minimal gluings of {args.g1} and {args.g2}")
    layer = None
    for i, m in enumerate(mgs):
        if m.overlap_size != layer:
            layer = m.overlap_size
            print(f"-- overlap size {layer}")
        rel_n, rel_e = m.relation
        pairs = ", ".join(f"{a}={b}" for a, b in sorted(rel_n, key=repr) + sorted(rel_e, key=repr))
        print(f"[{i}] {len(m.tip.nodes)} nodes, {len(m.tip.edges)} edges; identified: {pairs or 'nothing'}")
    return 0


def _morphism_json(f) -> dict:
    return {
        "nodes": [[_jsonable(a), _jsonable(b)] for a, b in f.node_map.items()],
        "edges": [[_jsonable(a), _jsonable(b)] for a, b in f.edge_map.items()],
    }


def cmd_latex(args) -> int:
    system = _load_system(args.system)
    _emit(to_latex(system), args.out)
    return 0


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphrate", description="Rate equations for stochastic graph rewriting.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", help="derive the closed ODE system of a model")
    e.add_argument("model")
    e.add_argument("--max-size", type=int, help="zero-closure: drop observables with more nodes")
    e.add_argument("--max-obs", type=int, help="cap on the number of equations")
    e.add_argument("--no-equiv", action="store_true", help="ignore declared equivalences")
    e.add_argument("--no-invariants", action="store_true", help="ignore forbidden patterns")
    e.add_argument("--out", help="write the JSON system here (default stdout)")
    e.set_defaults(func=cmd_expand)

    i = sub.add_parser("integrate", help="integrate a system with RK4")
    i.add_argument("system")
    i.add_argument("--t-end", type=float, required=True)
    i.add_argument("--dt", type=float, default=1e-3)
    i.add_argument("--set", action="append", metavar="NAME=VALUE", help="override an initial value")
    i.add_argument("--out", help="CSV time series")
    i.add_argument("--every", type=int, default=1, help="write every n-th step")
    i.set_defaults(func=cmd_integrate)

    s = sub.add_parser("steady", help="integrate a system to steady state")
    s.add_argument("system")
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--window", type=int, default=100)
    s.add_argument("--t-max", type=float, default=1e4)
    s.add_argument("--set", action="append", metavar="NAME=VALUE")
    s.add_argument("--out")
    s.set_defaults(func=cmd_steady)

    m = sub.add_parser("simulate", help="Gillespie ensemble")
    m.add_argument("model")
    m.add_argument("--init", help="graph name or literal (default: the model's init)")
    m.add_argument("--t-end", type=float, required=True)
    m.add_argument("--runs", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--samples", type=int, default=10, help="number of sampling intervals")
    m.add_argument("--out", help="ensemble summary JSON")
    m.set_defaults(func=cmd_simulate)

    q = sub.add_parser("master", help="solve the master equation on the reachable states")
    q.add_argument("model")
    q.add_argument("--init")
    q.add_argument("--cap", type=int, default=1000)
    q.add_argument("--t-end", type=float, default=10.0)
    q.add_argument("--dt", type=float, default=1e-3)
    q.set_defaults(func=cmd_master)

    g = sub.add_parser("gluings", help="list the minimal gluings of two graphs")
    g.add_argument("model")
    g.add_argument("g1")
    g.add_argument("g2")
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_gluings)

    x = sub.add_parser("latex", help="render a system as LaTeX")
    x.add_argument("system")
    x.add_argument("--out")
    x.set_defaults(func=cmd_latex)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _Usage as exc:
        parser.error(str(exc))  # exits with status 2
    except (ModelError, SubstitutionCycleError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ExpansionCapExceeded, StateSpaceCapExceeded, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except Exception as exc:  # invariant violations and bugs
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
