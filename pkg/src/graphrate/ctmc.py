"""The CTMC a model defines on isomorphism classes of graphs.

States are keyed by canonical key.  Each state's outgoing rates come from
enumerating every match of every rule's lhs, applying the rule and
bucketing the results by the key of the codomain.
"""
from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

from .graph import Graph, canonical_form, canonical_key, count_matches, iter_matches
from .greg import Model
from .odeint import OdeProblem, integrate
from .rewrite import RewriteContext, Rule, apply_rule

RNG_ALGORITHM = "numpy.random.PCG64"


@dataclass(frozen=True)
class Transition:
    rule: str
    match_index: int
    target: str
    graph: Graph  # canonical representative of the target class


@dataclass
class TransitionRow:
    source: str
    transitions: list  # Transition, self-loops excluded
    rates: dict  # target key -> Fraction (rates applied)

    @property
    def diagonal(self) -> Fraction:
        return -sum(self.rates.values(), Fraction(0))

    @property
    def exit_rate(self) -> Fraction:
        return -self.diagonal


def rule_targets(rule: Rule, g: Graph) -> list:
    """(match index, result graph) for every match of the rule in g."""
    ctx = RewriteContext()
    return [(i, apply_rule(rule, f, ctx).target) for i, f in enumerate(iter_matches(rule.lhs, g))]


def transition_row(model: Model, g: Graph) -> TransitionRow:
    src = canonical_key(g)
    transitions = []
    rates: dict = {}
    for rule in model.rules:
        k = model.rate(rule)
        for i, h in rule_targets(rule, g):
            key = canonical_key(h)
            if key == src:
                continue
            transitions.append(Transition(rule.name, i, key, canonical_form(h)))
            rates[key] = rates.get(key, Fraction(0)) + k
    return TransitionRow(src, transitions, rates)


def generator_action(rule: Rule, pattern: Graph, g: Graph, rate=1) -> Fraction:
    """Σ_H q_GH (<F>(H) - <F>(G)) for a single rule, by brute-force enumeration."""
    before = count_matches(pattern, g)
    total = sum(count_matches(pattern, h) - before for _, h in rule_targets(rule, g))
    return Fraction(rate) * total


def model_generator_action(model: Model, pattern: Graph, g: Graph) -> Fraction:
    row = transition_row(model, g)
    before = count_matches(pattern, g)
    return sum(
        (k * (count_matches(pattern, _graph_of(row, key)) - before) for key, k in row.rates.items()),
        Fraction(0),
    )


def _graph_of(row: TransitionRow, key: str) -> Graph:
    return next(t.graph for t in row.transitions if t.target == key)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Trajectory:
    times: np.ndarray
    states: list  # canonical keys
    values: np.ndarray  # one row per time, one column per observable
    names: list
    seed: int
    model: str = "model"
    rng: str = RNG_ALGORITHM
    absorbed: bool = False
    t_end: float = 0.0

    def value_at(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(i, 0)]

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["t", *self.names])
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t)), *(int(v) for v in row)])
        finally:
            if own:
                fh.close()


class _Chain:
    """Lazily explored chain with cached rows and observable values."""

    def __init__(self, model: Model, observables: list):
        self.model = model
        self.observables = observables
        self.rows: dict = {}
        self.graphs: dict = {}
        self.values: dict = {}

    def add(self, g: Graph) -> str:
        key = canonical_key(g)
        if key not in self.graphs:
            self.graphs[key] = canonical_form(g)
        return key

    def row(self, key: str):
        if key not in self.rows:
            r = transition_row(self.model, self.graphs[key])
            targets = list(r.rates)
            for t in r.transitions:
                self.graphs.setdefault(t.target, t.graph)
            rates = np.array([float(r.rates[t]) for t in targets])
            self.rows[key] = (targets, np.cumsum(rates), float(rates.sum()) if len(rates) else 0.0)
        return self.rows[key]

    def value(self, key: str) -> np.ndarray:
        if key not in self.values:
            g = self.graphs[key]
            self.values[key] = np.array([count_matches(p, g) for p in self.observables], dtype=float)
        return self.values[key]


def _run(chain: _Chain, g0_key: str, t_end: float, rng: np.random.Generator):
    times = [0.0]
    states = [g0_key]
    key = g0_key
    t = 0.0
    while True:
        targets, cum, total = chain.row(key)
        if total <= 0:
            return times, states, True
        t += rng.exponential(1.0 / total)
        if t > t_end:
            return times, states, False
        j = int(np.searchsorted(cum, rng.random() * total, side="right"))
        key = targets[min(j, len(targets) - 1)]
        times.append(t)
        states.append(key)


def _observables(model: Model, observables) -> tuple[list, list]:
    if observables is None:
        observables = model.observables
    if isinstance(observables, dict):
        return list(observables), list(observables.values())
    return [f"obs{i}" for i in range(len(observables))], list(observables)


def gillespie(model: Model, g0: Graph, t_end: float, seed: int, observables=None, chain: _Chain | None = None) -> Trajectory:
    """One exponential-clock trajectory; deterministic given the seed."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    names, pats = _observables(model, observables)
    chain = chain or _Chain(model, pats)
    rng = np.random.Generator(np.random.PCG64(seed))
    times, states, absorbed = _run(chain, chain.add(g0), t_end, rng)
    values = np.array([chain.value(k) for k in states]).reshape(len(states), len(pats))
    return Trajectory(np.array(times), states, values, names, seed, model.name, absorbed=absorbed, t_end=t_end)


@dataclass
class EnsembleSummary:
    times: np.ndarray
    names: list
    mean: np.ndarray
    stderr: np.ndarray
    runs: int
    seed: int
    absorption_times: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "kind": "ensemble",
            "runs": self.runs,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "observables": list(self.names),
            "series": [
                {
                    "t": float(t),
                    "mean": dict(zip(self.names, map(float, m))),
                    "stderr": dict(zip(self.names, map(float, s))),
                }
                for t, m, s in zip(self.times, self.mean, self.stderr)
            ],
        }


def ensemble(model: Model, g0: Graph, t_end: float, runs: int, seed: int, sample_times=None, observables=None) -> EnsembleSummary:
    """Mean and standard error of the observables at the sample times.

    Run i uses seed + i.  Also records the absorption time of each run
    that reaches a state with no outgoing transitions.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    names, pats = _observables(model, observables)
    chain = _Chain(model, pats)
    start = chain.add(g0)
    ts = np.linspace(0.0, t_end, 11) if sample_times is None else np.asarray(sample_times, dtype=float)
    acc = np.zeros((len(ts), len(pats)))
    acc2 = np.zeros_like(acc)
    absorbed = []
    for r in range(runs):
        rng = np.random.Generator(np.random.PCG64(seed + r))
        times, states, dead = _run(chain, start, t_end, rng)
        idx = np.searchsorted(np.asarray(times), ts, side="right") - 1
        vals = np.array([chain.value(states[i]) for i in idx]).reshape(len(ts), len(pats))
        acc += vals
        acc2 += vals * vals
        if dead:
            absorbed.append(times[-1])
    mean = acc / runs
    var = np.maximum(acc2 / runs - mean * mean, 0.0) * (runs / max(runs - 1, 1))
    return EnsembleSummary(ts, names, mean, np.sqrt(var / runs), runs, seed, absorbed)


# ---------------------------------------------------------------------------
# exact solution on finite state spaces


class StateSpaceCapExceeded(RuntimeError):
    def __init__(self, cap: int, explored: int):
        super().__init__(f"reachable state space exceeds the cap of {cap} states")
        self.cap = cap
        self.explored = explored


@dataclass
class StateSpace:
    keys: list
    graphs: list
    generator: sparse.csr_matrix  # Q, rows sum to zero
    exact: dict  # (i, j) -> Fraction rate

    @property
    def index(self) -> dict:
        return {k: i for i, k in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.keys)

    def observable(self, pattern: Graph) -> np.ndarray:
        return np.array([count_matches(pattern, g) for g in self.graphs], dtype=float)


def reachable_space(model: Model, g0: Graph, cap: int = 1000) -> StateSpace:
    """Breadth-first closure of the states reachable from g0."""
    if cap < 1:
        raise ValueError("cap must be positive")
    start = canonical_key(g0)
    keys = [start]
    graphs = [canonical_form(g0)]
    index = {start: 0}
    exact: dict = {}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        row = transition_row(model, graphs[i])
        reps = {t.target: t.graph for t in row.transitions}
        for key, rate in row.rates.items():
            if key not in index:
                if len(keys) >= cap:
                    raise StateSpaceCapExceeded(cap, len(keys))
                index[key] = len(keys)
                keys.append(key)
                graphs.append(reps[key])
                queue.append(index[key])
            exact[(i, index[key])] = rate
    n = len(keys)
    q = sparse.lil_matrix((n, n))
    for (i, j), r in exact.items():
        q[i, j] = float(r)
    diag = -np.asarray(q.sum(axis=1)).ravel()
    q.setdiag(diag)
    return StateSpace(keys, graphs, q.tocsr(), exact)


def master_expectations(space: StateSpace, p0, patterns: list, t_end: float, dt: float = 1e-3):
    """Integrate dp/dt = Q^T p and return (times, probabilities, expectations).

    ``p0`` is a probability vector over the space, a dict key -> probability,
    or None for a point mass on the first (initial) state.
    """
    n = len(space)
    if p0 is None:
        p = np.zeros(n)
        p[0] = 1.0
    elif isinstance(p0, dict):
        p = np.zeros(n)
        idx = space.index
        for k, v in p0.items():
            p[idx[k]] = v
    else:
        p = np.asarray(p0, dtype=float)
    if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p0 must be a probability vector on the state space")
    problem = OdeProblem(list(space.keys), space.generator.T.tocsr(), np.zeros(n), p, t_end, dt)
    times, ps = integrate(problem)
    obs = np.column_stack([space.observable(pat) for pat in patterns]) if patterns else np.zeros((n, 0))
    return times, ps, ps @ obs


def write_summary_json(summary: EnsembleSummary, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary.to_json(), fh, indent=2)
