"""Reader and printer for the plain-text model format (``.gts`` files).

See docs/model-format.md for the grammar.  A short example::

    labels node w d
    graph E { w:w, x:d, y:d; a: w -l1-> x; b: w -l2-> y; c: x -bb-> y }
    rule FC: E -> BE_lhs @ 3 { w, x, y, b, c }
    observable C = E
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .graph import Graph, canonical_key, sorted_ids
from .greg import CONSTANT_KEY, LinearCombination, Model, key_graph
from .rewrite import Rule


class ModelError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[{}:,;=@*/+\-().])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, num, punct, arrow, nl, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            out.append(Token("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.model = Model()
        self.graph_pos: dict = {}
        self.rule_defs: dict = {}
        self.auto = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ModelError(msg, tok.line, tok.col)

    def skip_nl(self):
        while self.tok.kind == "nl":
            self.i += 1

    def accept(self, text: str) -> Token | None:
        if self.tok.text == text and self.tok.kind in ("punct", "arrow", "ident"):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of file'!r}")
        return t

    def ident(self, what: str = "a name") -> Token:
        if self.tok.kind not in ("ident", "num"):
            self.error(f"expected {what}, found {self.tok.text or 'end of file'!r}")
        t = self.tok
        self.i += 1
        return t

    def end_statement(self):
        if self.tok.kind not in ("nl", "eof"):
            self.error(f"unexpected {self.tok.text!r} at end of statement")

    # grammar
    def parse(self) -> Model:
        self.skip_nl()
        while self.tok.kind != "eof":
            head = self.tok
            if head.kind != "ident":
                self.error("expected a statement keyword")
            handler = getattr(self, "st_" + head.text, None)
            if handler is None:
                self.error(f"unknown statement {head.text!r}")
            self.i += 1
            handler(head)
            self.end_statement()
            self.skip_nl()
        self.check_labels()
        return self.model

    def st_model(self, head):
        self.model.name = self.ident("a model name").text

    def st_labels(self, head):
        kind = self.ident("'node' or 'edge'")
        names = []
        while self.tok.kind in ("ident", "num"):
            names.append(self.ident().text)
        if kind.text == "node":
            self.model.node_labels = tuple(dict.fromkeys(self.model.node_labels + tuple(names)))
        elif kind.text == "edge":
            self.model.edge_labels = tuple(dict.fromkeys(self.model.edge_labels + tuple(names)))
        else:
            self.error("expected 'node' or 'edge'", kind)

    def define_graph(self, name: Token, g: Graph):
        if name.text in self.model.graphs:
            self.error(f"graph {name.text!r} defined twice", name)
        self.model.graphs[name.text] = g
        self.graph_pos[name.text] = name

    def st_graph(self, head):
        name = self.ident("a graph name")
        self.accept("=")
        self.define_graph(name, self.graph_literal())

    def graph_literal(self) -> Graph:
        open_tok = self.expect("{")
        nodes: dict = {}
        edges: list = []
        seen_edges: set = set()
        while True:
            while self.tok.kind == "nl" or self.tok.text in (",", ";"):
                self.i += 1
            if self.accept("}"):
                break
            if self.tok.kind == "eof":
                self.error("unterminated graph literal", open_tok)
            first = self.ident("a node or edge")
            eid_tok, src = None, first
            if self.accept(":"):
                second = self.ident("a label or source node")
                if self.tok.text != "-":
                    if first.text in nodes:
                        self.error(f"node {first.text!r} declared twice", first)
                    nodes[first.text] = second.text
                    continue
                eid_tok, src = first, second
            self.expect("-")
            lab = self.ident("an edge label")
            self.expect("->")
            tgt = self.ident("a target node")
            if eid_tok is None:
                while f"e{self.auto}" in seen_edges:
                    self.auto += 1
                eid = f"e{self.auto}"
                self.auto += 1
            else:
                eid = eid_tok.text
            if eid in seen_edges:
                self.error(f"edge {eid!r} declared twice", eid_tok or src)
            seen_edges.add(eid)
            edges.append((eid, src, lab.text, tgt))
        built = []
        for eid, src, lab, tgt in edges:
            for end in (src, tgt):
                if end.text not in nodes:
                    self.error(f"edge endpoint {end.text!r} is not a node of this graph", end)
            built.append((eid, src.text, tgt.text, lab))
        self.auto = 0
        return Graph(nodes, built)

    def graph_ref(self) -> tuple[Graph, str | None]:
        if self.tok.text == "{":
            return self.graph_literal(), None
        name = self.ident("a graph name or literal")
        if self.accept("."):
            side = self.ident("'lhs' or 'rhs'")
            rule = self.rule_defs.get(name.text)
            if rule is None:
                self.error(f"unknown rule {name.text!r}", name)
            if side.text not in ("lhs", "rhs"):
                self.error("expected 'lhs' or 'rhs'", side)
            return (rule.lhs if side.text == "lhs" else rule.rhs), None
        g = self.model.graphs.get(name.text)
        if g is None:
            g = self.model.observables.get(name.text)
        if g is None:
            self.error(f"unknown graph {name.text!r}", name)
        return g, name.text

    def number(self) -> Fraction:
        neg = self.accept("-") is not None
        t = self.tok
        if t.kind != "num":
            self.error(f"expected a number, found {t.text or 'end of file'!r}")
        self.i += 1
        val = Fraction(t.text)
        if self.accept("/"):
            d = self.tok
            if d.kind != "num":
                self.error("expected a denominator")
            self.i += 1
            if Fraction(d.text) == 0:
                self.error("division by zero", d)
            val /= Fraction(d.text)
        return -val if neg else val

    def st_rule(self, head):
        name = self.ident("a rule name")
        if name.text in self.rule_defs:
            self.error(f"rule {name.text!r} defined twice", name)
        if "~" in name.text or ";" in name.text:
            self.error("rule names may not contain '~' or ';'", name)
        self.expect(":")
        lhs, _ = self.graph_ref()
        self.expect("->")
        rhs, _ = self.graph_ref()
        at = self.expect("@")
        rate = self.number()
        if rate <= 0:
            self.error("rates must be strictly positive", at)
        nodes: dict = {}
        edges: dict = {}
        if self.accept("{"):
            while not self.accept("}"):
                if self.tok.text in (",", ";") or self.tok.kind == "nl":
                    self.i += 1
                    continue
                left = self.ident("a lhs id")
                right = self.ident("a rhs id") if self.accept("=") else left
                if left.text in lhs.nodes:
                    if right.text not in rhs.nodes:
                        self.error(f"{right.text!r} is not a node of the rhs", right)
                    tgt = nodes
                elif left.text in lhs.edges:
                    if right.text not in rhs.edges:
                        self.error(f"{right.text!r} is not an edge of the rhs", right)
                    tgt = edges
                else:
                    self.error(f"{left.text!r} is not an item of the lhs", left)
                if left.text in tgt:
                    self.error(f"{left.text!r} mapped twice", left)
                tgt[left.text] = right.text
        try:
            rule = Rule.from_correspondence(name.text, lhs, rhs, nodes, edges)
        except ValueError as exc:
            self.error(str(exc), name)
        self.rule_defs[name.text] = rule
        self.model.rules.append(rule)
        self.model.rates[name.text] = rate

    def st_observable(self, head):
        name = self.ident("an observable name")
        if name.text in self.model.observables:
            self.error(f"observable {name.text!r} defined twice", name)
        self.expect("=")
        g, _ = self.graph_ref()
        self.model.observables[name.text] = g

    def st_forbid(self, head):
        name = self.ident("an invariant name")
        if any(n == name.text for n, _ in self.model.invariants):
            self.error(f"invariant {name.text!r} defined twice", name)
        self.expect("=")
        g, _ = self.graph_ref()
        if g.is_empty():
            self.error("a forbidden pattern must not be empty", name)
        self.model.invariants.append((name.text, g))

    def st_equiv(self, head):
        a, _ = self.graph_ref()
        self.expect("=")
        b, _ = self.graph_ref()
        self.model.equivalences.append((a, b))

    def st_output(self, head):
        name = self.ident("an output name")
        self.expect("=")
        self.model.outputs[name.text] = self.expression()

    def expression(self) -> LinearCombination:
        total = LinearCombination()
        sign = Fraction(1)
        if self.accept("-"):
            sign = Fraction(-1)
        else:
            self.accept("+")
        while True:
            total = total + self.product().scale(sign)
            if self.accept("+"):
                sign = Fraction(1)
            elif self.accept("-"):
                sign = Fraction(-1)
            else:
                return total

    def product(self) -> LinearCombination:
        coeff = Fraction(1)
        key = None
        while True:
            tok = self.tok
            if tok.kind == "num":
                coeff *= self.number()
            elif tok.text == "(":
                self.i += 1
                inner = self.expression()
                self.expect(")")
                if len(inner) != 1 or CONSTANT_KEY not in inner.coeffs:
                    self.error("parenthesised factors must be constants", tok)
                coeff *= inner[CONSTANT_KEY]
            elif tok.text == "k" and self.toks[self.i + 1].text == "(":
                self.i += 2
                rname = self.ident("a rule name")
                if rname.text not in self.model.rates:
                    self.error(f"unknown rule {rname.text!r}", rname)
                coeff *= self.model.rates[rname.text]
                self.expect(")")
            elif tok.kind == "ident" or tok.text == "{":
                if key is not None:
                    self.error("a term may mention at most one observable", tok)
                g, _ = self.graph_ref()
                key = canonical_key(g)
            else:
                self.error(f"expected a factor, found {tok.text or 'end of file'!r}")
            if self.accept("/"):
                d = self.number()
                if d == 0:
                    self.error("division by zero", tok)
                coeff /= d
            if not self.accept("*"):
                break
        return LinearCombination({CONSTANT_KEY if key is None else key: coeff})

    def st_init(self, head):
        if self.model.init is not None:
            self.error("init given twice", head)
        self.model.init, _ = self.graph_ref()

    def st_expect(self, head):
        name = self.ident("an observable or graph name")
        if name.text not in self.model.observables and name.text not in self.model.graphs:
            self.error(f"unknown graph {name.text!r}", name)
        self.expect("=")
        self.model.expectations[name.text] = self.number()

    def st_option(self, head):
        name = self.ident("an option name")
        self.expect("=")
        self.model.options[name.text] = self.number()

    def check_labels(self):
        m = self.model
        if not m.node_labels and not m.edge_labels:
            return
        items = [(n, g) for n, g in m.graphs.items()]
        items += [(f"rule {r.name}", r.lhs) for r in m.rules] + [(f"rule {r.name}", r.rhs) for r in m.rules]
        items += [(n, g) for n, g in m.observables.items()] + list(m.invariants)
        if m.init is not None:
            items.append(("init", m.init))
        for name, g in items:
            for v in g.nodes.values():
                if v not in m.node_labels:
                    tok = self.graph_pos.get(name)
                    raise ModelError(
                        f"{name}: node label {v!r} is not declared",
                        tok.line if tok else None,
                        tok.col if tok else None,
                    )
            for _, _, lab in g.edges.values():
                if lab not in m.edge_labels:
                    tok = self.graph_pos.get(name)
                    raise ModelError(
                        f"{name}: edge label {lab!r} is not declared",
                        tok.line if tok else None,
                        tok.col if tok else None,
                    )


def parse_model(text: str) -> Model:
    """Parse and validate a model file; errors carry line and column."""
    try:
        return _Parser(text).parse()
    except ModelError:
        raise
    except ValueError as exc:  # e.g. model-level validation
        raise ModelError(str(exc)) from exc


def load_model(path: str) -> Model:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def parse_graph(text: str) -> Graph:
    """Parse a single graph literal such as ``{ u:n, v:n; u -e-> v }``."""
    p = _Parser(text)
    p.skip_nl()
    g = p.graph_literal()
    p.skip_nl()
    if p.tok.kind != "eof":
        p.error("trailing input after graph literal")
    return g


# ---------------------------------------------------------------------------
# printing

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$|\d+$")


def format_graph(g: Graph) -> str:
    for x in list(g.nodes) + list(g.edges):
        if not isinstance(x, str) or not _IDENT.match(x):
            g = _plain_ids(g)
            break
    parts = [f"{v}:{g.label(v)}" for v in sorted_ids(g.nodes)]
    parts += [f"{e}: {s} -{lab}-> {t}" for e in sorted_ids(g.edges) for s, t, lab in [g.edges[e]]]
    return "{ " + ", ".join(parts) + " }" if parts else "{ }"


def _plain_ids(g: Graph) -> Graph:
    nmap = {v: f"n{i}" for i, v in enumerate(sorted_ids(g.nodes))}
    emap = {e: f"e{i}" for i, e in enumerate(sorted_ids(g.edges))}
    return g.rename(nmap, emap)


def _num(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def print_model(model: Model) -> str:
    """Render a model in the file format; parse_model(print_model(m)) reproduces m."""
    names = {canonical_key(g): n for n, g in model.graphs.items()}

    def ref(g: Graph) -> str:
        for n, h in model.graphs.items():
            if h == g:
                return n
        return format_graph(g)

    out = [f"model {model.name}"]
    if model.node_labels:
        out.append("labels node " + " ".join(model.node_labels))
    if model.edge_labels:
        out.append("labels edge " + " ".join(model.edge_labels))
    out += [f"graph {n} {format_graph(g)}" for n, g in model.graphs.items()]
    for r in model.rules:
        for g in (r.lhs, r.rhs):
            if ref(g).startswith("{") and not all(isinstance(x, str) and _IDENT.match(x) for x in list(g.nodes) + list(g.edges)):
                raise ValueError(f"rule {r.name!r} uses ids that cannot be written in the file format")
        nmap, emap = r.partial_map()
        corr = ", ".join(
            a if a == b else f"{a}={b}"
            for a, b in [(x, nmap[x]) for x in sorted_ids(nmap)] + [(x, emap[x]) for x in sorted_ids(emap)]
        )
        out.append(f"rule {r.name}: {ref(r.lhs)} -> {ref(r.rhs)} @ {_num(model.rates[r.name])} {{ {corr} }}")
    out += [f"observable {n} = {ref(g)}" for n, g in model.observables.items()]
    out += [f"forbid {n} = {ref(g)}" for n, g in model.invariants]
    out += [f"equiv {ref(a)} = {ref(b)}" for a, b in model.equivalences]
    for name, lc in model.outputs.items():
        terms = []
        for k, c in lc.items():
            body = _num(abs(c)) if k == CONSTANT_KEY else f"{_num(abs(c))} * " + (
                names.get(k) or format_graph(key_graph(k))
            )
            terms.append(("- " if c < 0 else "+ ") + body)
        expr = " ".join(terms) if terms else "0"
        out.append(f"output {name} = {expr.removeprefix('+ ')}")
    if model.init is not None:
        out.append(f"init {ref(model.init)}")
    out += [f"expect {n} = {_num(v)}" for n, v in model.expectations.items()]
    out += [f"option {n} = {_num(Fraction(v))}" for n, v in model.options.items()]
    return "\n".join(out) + "\n"

