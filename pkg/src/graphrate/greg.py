"""Rate equations for graph observables.

For a rule ``α: L ⇀ R`` and a pattern F, the jump of <F> is

    sum over derivable right gluings μ of <cod(α†(μ1))>  -  sum over left gluings μ of <tip(μ)>

and the rate equation of <F> is the k-weighted sum of jumps over the
rules of a model.  ``expand_system`` iterates this on every observable that
shows up, closing the system with forbidden patterns, declared
equivalences and size truncation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .gluing import minimal_gluings
from .graph import (
    Graph,
    canonical_form,
    canonical_key,
    count_matches,
    graph_from_key,
    iter_matches,
)
from .rewrite import Rule, is_derivable

FORMAT_VERSION = 1
CONSTANT_KEY = canonical_key(Graph())


@lru_cache(maxsize=100_000)
def key_graph(key: str) -> Graph:
    return graph_from_key(key)


@dataclass(frozen=True)
class Observable:
    """The graph observable <graph>: a state G maps to the number of matches graph -> G."""

    graph: Graph
    key: str

    @classmethod
    def of(cls, g: Graph) -> "Observable":
        return cls(canonical_form(g), canonical_key(g))

    @classmethod
    def from_key(cls, key: str) -> "Observable":
        return cls(key_graph(key), key)

    def __call__(self, state: Graph) -> int:
        return count_matches(self.graph, state)


@dataclass(frozen=True)
class Term:
    """Where one summand of a jump came from."""

    rule: str
    side: str  # "+" production, "-" consumption
    gluing: int  # index into the rule side's minimal gluings with F
    key: str
    coeff: Fraction
    fate: str = "kept"


class LinearCombination:
    """A finite sum of observables with exact rational coefficients, keyed by canonical key."""

    __slots__ = ("coeffs", "provenance")

    def __init__(self, coeffs: Mapping[str, Fraction] | None = None, provenance: Iterable[Term] = ()):
        self.coeffs = {k: Fraction(c) for k, c in (coeffs or {}).items() if c != 0}
        self.provenance = tuple(provenance)

    @classmethod
    def from_terms(cls, terms: Iterable[Term]) -> "LinearCombination":
        terms = list(terms)
        acc: dict = {}
        for t in terms:
            sign = 1 if t.side == "+" else -1
            acc[t.key] = acc.get(t.key, Fraction(0)) + sign * t.coeff
        return cls(acc, terms)

    @classmethod
    def constant(cls, c) -> "LinearCombination":
        return cls({CONSTANT_KEY: Fraction(c)})

    def keys(self) -> list:
        return sorted(self.coeffs, key=lambda k: (key_graph(k).num_nodes, len(key_graph(k)), k))

    def items(self) -> list:
        return [(k, self.coeffs[k]) for k in self.keys()]

    def __getitem__(self, key: str) -> Fraction:
        return self.coeffs.get(key, Fraction(0))

    def __add__(self, other: "LinearCombination") -> "LinearCombination":
        acc = dict(self.coeffs)
        for k, c in other.coeffs.items():
            acc[k] = acc.get(k, Fraction(0)) + c
        return LinearCombination(acc, self.provenance + other.provenance)

    def __neg__(self) -> "LinearCombination":
        return self.scale(-1)

    def __sub__(self, other: "LinearCombination") -> "LinearCombination":
        return self + (-other)

    def scale(self, c) -> "LinearCombination":
        c = Fraction(c)
        return LinearCombination({k: v * c for k, v in self.coeffs.items()}, self.provenance)

    def __mul__(self, c) -> "LinearCombination":
        return self.scale(c)

    __rmul__ = __mul__

    def evaluate(self, state: Graph) -> Fraction:
        """Value of the combination at a concrete state graph."""
        return sum(
            (c * count_matches(key_graph(k), state) for k, c in self.coeffs.items()),
            Fraction(0),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearCombination):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __len__(self) -> int:
        return len(self.coeffs)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "LinearCombination(0)"
        return "LinearCombination(" + " + ".join(f"{c}*<{k}>" for k, c in self.items()) + ")"

    def to_json(self) -> list:
        return [
            {"coeff-num": c.numerator, "coeff-den": c.denominator, "key": k} for k, c in self.items()
        ]

    @classmethod
    def from_json(cls, data: list) -> "LinearCombination":
        return cls({t["key"]: Fraction(t["coeff-num"], t["coeff-den"]) for t in data})


# ---------------------------------------------------------------------------
# jumps


@lru_cache(maxsize=20_000)
def _consumption(rule: Rule, fkey: str) -> tuple:
    f = key_graph(fkey)
    return tuple(
        Term(rule.name, "-", i, mu.key, Fraction(1))
        for i, mu in enumerate(minimal_gluings(rule.lhs, f))
    )


@lru_cache(maxsize=20_000)
def _production(rule: Rule, fkey: str) -> tuple:
    f = key_graph(fkey)
    out = []
    for i, mu in enumerate(minimal_gluings(rule.rhs, f)):
        ok, witness = is_derivable(mu.left_inj, rule)
        if ok:
            out.append(Term(rule.name, "+", i, canonical_key(witness.cod), Fraction(1)))
    return tuple(out)


def _as_observable(f) -> Observable:
    return f if isinstance(f, Observable) else Observable.of(f)


def consumption_terms(rule: Rule, f) -> LinearCombination:
    """Sum of <tip> over the minimal gluings of the rule's lhs with F (sign +)."""
    terms = _consumption(rule, _as_observable(f).key)
    return LinearCombination.from_terms(
        Term(t.rule, "+", t.gluing, t.key, t.coeff) for t in terms
    )


def production_terms(rule: Rule, f) -> LinearCombination:
    """Sum of <cod α†(μ1)> over the derivable minimal gluings of the rule's rhs with F."""
    return LinearCombination.from_terms(_production(rule, _as_observable(f).key))


def jump_terms(rule: Rule, f) -> list[Term]:
    key = _as_observable(f).key
    return list(_production(rule, key)) + list(_consumption(rule, key))


def jump(rule: Rule, f) -> LinearCombination:
    """The jump of <F> under the rule, as production minus consumption."""
    return LinearCombination.from_terms(jump_terms(rule, f))


# ---------------------------------------------------------------------------
# models and closures


@dataclass
class Model:
    rules: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)  # rule name -> Fraction
    node_labels: tuple = ()
    edge_labels: tuple = ()
    graphs: dict = field(default_factory=dict)  # named graphs
    observables: dict = field(default_factory=dict)  # name -> Graph
    invariants: list = field(default_factory=list)  # (name, forbidden pattern)
    equivalences: list = field(default_factory=list)  # (pattern, replacement)
    outputs: dict = field(default_factory=dict)  # name -> LinearCombination
    init: Graph | None = None
    expectations: dict = field(default_factory=dict)  # graph name -> Fraction
    options: dict = field(default_factory=dict)
    name: str = "model"

    def __post_init__(self):
        for r in self.rules:
            k = self.rates.get(r.name)
            if k is None or k <= 0:
                raise ValueError(f"rule {r.name!r} needs a strictly positive rate")
        for name, pat in self.invariants:
            if pat.is_empty():
                raise ValueError(f"forbidden pattern {name!r} is empty")

    def rate(self, rule: Rule) -> Fraction:
        return self.rates[rule.name]

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def name_of(self, key: str) -> str | None:
        for name, g in list(self.observables.items()) + list(self.graphs.items()):
            if canonical_key(g) == key:
                return name
        return None


@dataclass
class ClosurePolicy:
    use_invariants: bool = True
    use_equivalences: bool = True
    max_size: int | None = None  # zero-closure: drop observables with more nodes
    max_observables: int = 20


class SubstitutionCycleError(ValueError):
    pass


class ExpansionCapExceeded(RuntimeError):
    """Raised when expansion reaches the observable cap with work left."""

    def __init__(self, system: "OdeSystem"):
        super().__init__(
            f"observable cap {system.policy.max_observables} reached; "
            f"{len(system.frontier)} observables left unexpanded"
        )
        self.system = system


def substitution_map(model: Model) -> dict:
    """Canonical key of each equivalence pattern -> key of its replacement."""
    sub: dict = {}
    for pat, rep in model.equivalences:
        pk, rk = canonical_key(pat), canonical_key(rep)
        if sub.get(pk, rk) != rk:
            raise SubstitutionCycleError("pattern declared equivalent to two different observables")
        sub[pk] = rk
    for start in sub:
        seen = {start}
        k = sub[start]
        while k in sub:
            if k in seen:
                raise SubstitutionCycleError("equivalence declarations form a cycle")
            seen.add(k)
            k = sub[k]
        if k == start:
            raise SubstitutionCycleError("equivalence declarations form a cycle")
    return sub


class _Closer:
    """Per-key closure decisions for one (model, policy) pair."""

    def __init__(self, model: Model, policy: ClosurePolicy):
        self.model = model
        self.policy = policy
        self.sub = substitution_map(model) if policy.use_equivalences else {}
        self.cache: dict = {}

    def fate(self, key: str) -> tuple[str, str | None]:
        if key in self.cache:
            return self.cache[key]
        g = key_graph(key)
        out: tuple[str, str | None] = ("kept", key)
        if self.policy.use_invariants:
            for name, pat in self.model.invariants:
                if next(iter_matches(pat, g), None) is not None:
                    out = (f"pruned:{name}", None)
                    break
        if out[1] is not None and key in self.sub:
            out = ("substituted", self.sub[key])
        if (
            out[1] is not None
            and self.policy.max_size is not None
            and key_graph(out[1]).num_nodes > self.policy.max_size
        ):
            out = ("truncated", None)
        self.cache[key] = out
        return out

    def close(self, lc: LinearCombination) -> LinearCombination:
        acc: dict = {}
        for k, c in lc.coeffs.items():
            _, new = self.fate(k)
            if new is not None:
                acc[new] = acc.get(new, Fraction(0)) + c
        prov = [
            Term(t.rule, t.side, t.gluing, t.key, t.coeff, self.fate(t.key)[0])
            for t in lc.provenance
        ]
        return LinearCombination(acc, prov)


def apply_closures(lc: LinearCombination, model: Model, policy: ClosurePolicy | None = None) -> LinearCombination:
    """Prune forbidden observables, substitute declared equivalents, truncate by size."""
    return _Closer(model, policy or ClosurePolicy()).close(lc)


def rate_equation(model: Model, f) -> LinearCombination:
    """d<F>/dt before closure: the rate-weighted sum of the rules' jumps."""
    total = LinearCombination()
    for rule in model.rules:
        total = total + jump(rule, f).scale(model.rate(rule))
    return total


# ---------------------------------------------------------------------------
# expansion


@dataclass
class OdeSystem:
    equations: dict  # key -> LinearCombination (rates applied)
    by_rule: dict  # key -> {rule name -> closed jump}
    rates: dict
    policy: ClosurePolicy
    seeds: list
    frontier: list = field(default_factory=list)
    names: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)  # key -> [Term]
    outputs: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)  # key -> float

    @property
    def closed(self) -> bool:
        return not self.frontier

    @property
    def variables(self) -> list:
        return list(self.equations)

    def name(self, key: str) -> str:
        if key == CONSTANT_KEY:
            return "1"
        return self.names.get(key, key)

    def to_json(self) -> dict:
        keys = list(self.equations) + [k for k in self.frontier if k not in self.equations]
        for lc in list(self.equations.values()) + list(self.outputs.values()):
            keys += [k for k in lc.coeffs if k not in keys]
        return {
            "format_version": FORMAT_VERSION,
            "kind": "ode-system",
            "observables": [
                {"key": k, "name": self.name(k), "graph": key_graph(k).to_json()} for k in keys
            ],
            "equations": [
                {
                    "lhs-key": k,
                    "terms": lc.to_json(),
                    "by-rule": {r: j.to_json() for r, j in self.by_rule.get(k, {}).items()},
                }
                for k, lc in self.equations.items()
            ],
            "rates": {r: [k.numerator, k.denominator] for r, k in self.rates.items()},
            "policy": asdict(self.policy),
            "seeds": list(self.seeds),
            "closed": self.closed,
            "frontier": list(self.frontier),
            "outputs": {n: lc.to_json() for n, lc in self.outputs.items()},
            "initial": dict(self.initial),
            "provenance": {
                k: [
                    {
                        "rule": t.rule,
                        "side": t.side,
                        "gluing": t.gluing,
                        "key": t.key,
                        "fate": t.fate,
                    }
                    for t in terms
                ]
                for k, terms in self.provenance.items()
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "OdeSystem":
        if data.get("format_version") != FORMAT_VERSION or data.get("kind") != "ode-system":
            raise ValueError("not an ode-system file of a supported format version")
        names = {o["key"]: o["name"] for o in data["observables"]}
        return cls(
            equations={e["lhs-key"]: LinearCombination.from_json(e["terms"]) for e in data["equations"]},
            by_rule={
                e["lhs-key"]: {r: LinearCombination.from_json(t) for r, t in e.get("by-rule", {}).items()}
                for e in data["equations"]
            },
            rates={r: Fraction(n, d) for r, (n, d) in data["rates"].items()},
            policy=ClosurePolicy(**data["policy"]),
            seeds=list(data["seeds"]),
            frontier=list(data["frontier"]),
            names=names,
            provenance={
                k: [Term(t["rule"], t["side"], t["gluing"], t["key"], Fraction(1), t["fate"]) for t in ts]
                for k, ts in data.get("provenance", {}).items()
            },
            outputs={n: LinearCombination.from_json(t) for n, t in data.get("outputs", {}).items()},
            initial=dict(data.get("initial", {})),
        )


def _initial_values(model: Model, keys: Iterable[str]) -> dict:
    explicit = {}
    for name, value in model.expectations.items():
        g = model.observables.get(name) or model.graphs.get(name)
        if g is None:
            raise ValueError(f"expectation given for unknown graph {name!r}")
        explicit[canonical_key(g)] = float(value)
    out = {}
    for k in keys:
        if k in explicit:
            out[k] = explicit[k]
        elif model.init is not None:
            out[k] = float(count_matches(key_graph(k), model.init))
        else:
            out[k] = 0.0
    return out


def default_seeds(model: Model, policy: ClosurePolicy | None = None) -> list:
    """The model's observables followed by whatever its outputs mention."""
    policy = policy or ClosurePolicy()
    closer = _Closer(model, policy)
    seeds = [canonical_key(g) for g in model.observables.values()]
    for lc in model.outputs.values():
        seeds += [k for k in closer.close(lc).keys() if k != CONSTANT_KEY]
    return list(dict.fromkeys(seeds))


def expand_system(model: Model, seeds: Iterable | None = None, policy: ClosurePolicy | None = None) -> OdeSystem:
    """Expand rate equations from the seeds until closure or the observable cap.

    Seeds may be graphs, Observables or canonical keys.  Raises
    ExpansionCapExceeded (carrying the partial system) at the cap.
    """
    policy = policy or ClosurePolicy()
    if seeds is None:
        seeds = default_seeds(model, policy)
    seed_keys = []
    for s in seeds:
        if isinstance(s, str):
            seed_keys.append(s)
        else:
            seed_keys.append(_as_observable(s).key)
    seed_keys = [k for k in dict.fromkeys(seed_keys) if k != CONSTANT_KEY]
    if not seed_keys:
        raise ValueError("expansion needs at least one non-constant seed observable")
    if not model.rules:
        raise ValueError("model has no rules to expand")
    closer = _Closer(model, policy)
    system = OdeSystem({}, {}, dict(model.rates), policy, seed_keys)
    queue = deque(seed_keys)
    queued = set(seed_keys)
    while queue:
        key = queue.popleft()
        if len(system.equations) >= policy.max_observables:
            system.frontier = [key] + list(queue)
            _finish(system, model, closer)
            raise ExpansionCapExceeded(system)
        per_rule = {}
        total = LinearCombination()
        prov = []
        for rule in model.rules:
            closed = closer.close(jump(rule, Observable.from_key(key)))
            per_rule[rule.name] = LinearCombination(closed.coeffs)
            prov += closed.provenance
            total = total + LinearCombination(closed.coeffs).scale(model.rate(rule))
        system.equations[key] = LinearCombination(total.coeffs)
        system.by_rule[key] = per_rule
        system.provenance[key] = prov
        for k in total.keys():
            if k != CONSTANT_KEY and k not in queued:
                queue.append(k)
                queued.add(k)
    _finish(system, model, closer)
    return system


def _finish(system: OdeSystem, model: Model, closer: _Closer) -> None:
    system.outputs = {n: LinearCombination(closer.close(lc).coeffs) for n, lc in model.outputs.items()}
    keys = list(system.equations) + [k for k in system.frontier if k not in system.equations]
    fresh = 0
    for k in keys:
        name = model.name_of(k)
        if name is None:
            fresh += 1
            name = f"X{fresh}"
        system.names[k] = name
    system.initial = _initial_values(model, system.equations)


# ---------------------------------------------------------------------------
# LaTeX


def _tex_name(name: str) -> str:
    return name.replace("_", r"\_")


def _tex_coeff(c: Fraction) -> str:
    c = abs(c)
    if c == 1:
        return ""
    if c.denominator == 1:
        return f"{c.numerator} "
    return rf"\tfrac{{{c.numerator}}}{{{c.denominator}}} "


def to_latex(system: OdeSystem) -> str:
    """Render the system in an ``alignat*`` block, one rule-weighted term at a time."""
    lines = [r"\begin{alignat*}{2}"]
    for key in system.equations:
        terms = []
        for rule, lc in system.by_rule.get(key, {}).items():
            for k, c in lc.items():
                obs = "1" if k == CONSTANT_KEY else rf"\langle \mathrm{{{_tex_name(system.name(k))}}} \rangle"
                sign = "-" if c < 0 else "+"
                terms.append((sign, rf"{_tex_coeff(c)}k_{{\mathrm{{{_tex_name(rule)}}}}} {obs}"))
        if not terms:
            body = "0"
        else:
            body = ("- " if terms[0][0] == "-" else "") + terms[0][1]
            body += "".join(f" {s} {t}" for s, t in terms[1:])
        lhs = rf"\frac{{d}}{{dt}} \langle \mathrm{{{_tex_name(system.name(key))}}} \rangle"
        lines.append(rf"  {lhs} &={{}}& {body} \\")
    lines.append(r"\end{alignat*}")
    legend = [r"\begin{itemize}"]
    for key in system.equations:
        legend.append(
            rf"  \item $\mathrm{{{_tex_name(system.name(key))}}}$: \texttt{{{_tex_escape(key_graph(key).serialize())}}}"
        )
    legend.append(r"\end{itemize}")
    return "\n".join(lines + legend) + "\n"


def _tex_escape(s: str) -> str:
    for a, b in (("\\", r"\textbackslash{}"), ("{", r"\{"), ("}", r"\}"), ("_", r"\_"), ("#", r"\#"), ("&", r"\&"), ("%", r"\%"), ("$", r"\$")):
        s = s.replace(a, b)
    return s
