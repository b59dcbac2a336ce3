"""Text format for models (``.pepa`` files).

Grammar::

    model    := ratesblk? def+ "system" ":" coop
    ratesblk := "rates" "{" (IDENT "=" REAL ";")* "}"
    def      := IDENT "=" choice ";"
    choice   := seq ("+" seq)*
    seq      := "(" IDENT "," rate ")" "." seq | IDENT
    rate     := REAL | IDENT | "T" (":" REAL)?
    coop     := group ("<" idlist? ">" group)*        // left-assoc
    group    := IDENT "[" INT "]" | IDENT | "(" coop ")"
    idlist   := IDENT ("," IDENT)*

``//`` starts a comment. A comment of the form ``//@ key: value`` is a
metadata pragma and is kept in :attr:`ModelSpec.metadata`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core.model import (Active, Cooperation, Group, ModelSpec, Named, Passive,
                         Prefix, SequentialComponentDef)
from .errors import ParseError

KEYWORDS = {"rates", "system", "T"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<pragma>//@[^\n]*)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[=;(),.+<>\[\]{}:\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, REAL, KW, PUNCT, EOF
    text: str
    span: SourceSpan


def tokenize(text):
    tokens, pragmas = [], []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span,
                             (), text[pos])
        kind = m.lastgroup
        tok = m.group()
        span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
        if kind == "pragma":
            body = tok[3:].strip()
            key, _, value = body.partition(":")
            pragmas.append((key.strip(), value.strip()))
        elif kind == "num":
            tokens.append(Token("INT" if tok.isdigit() else "REAL", tok, span))
        elif kind == "ident":
            tokens.append(Token("KW" if tok in KEYWORDS else "IDENT", tok, span))
        elif kind == "punct":
            tokens.append(Token("PUNCT", tok, span))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    eof = SourceSpan(n, n, line, n - line_start + 1)
    tokens.append(Token("EOF", "", eof))
    return tokens, pragmas


class _Parser:
    def __init__(self, text):
        self.tokens, self.pragmas = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected):
        t = self.tok
        found = t.text if t.kind != "EOF" else "end of input"
        exp = sorted(expected)
        raise ParseError(f"expected {' or '.join(exp)}, found {found!r}",
                         t.span, exp, found)

    def at(self, text):
        return self.tok.kind in ("PUNCT", "KW") and self.tok.text == text

    def expect(self, text):
        if not self.at(text):
            self.fail([repr(text)])
        t = self.tok
        self.i += 1
        return t

    def ident(self, what="identifier"):
        if self.tok.kind != "IDENT":
            self.fail([what])
        t = self.tok
        self.i += 1
        return t

    def number(self):
        neg = False
        if self.at("-"):
            self.i += 1
            neg = True
        if self.tok.kind not in ("INT", "REAL"):
            self.fail(["number"])
        v = float(self.tok.text)
        self.i += 1
        return -v if neg else v

    # model := ratesblk? def+ "system" ":" coop
    def model(self):
        rates, names = {}, {}
        if self.at("rates"):
            self.i += 1
            self.expect("{")
            while self.tok.kind == "IDENT":
                name_tok = self.ident()
                names[name_tok.text] = name_tok.span
                self.expect("=")
                rates[name_tok.text] = self.number()
                self.expect(";")
            self.expect("}")
        defs = []
        seen = set()
        while not self.at("system"):
            if self.tok.kind != "IDENT":
                self.fail(["definition", "'system'"] if defs else ["definition"])
            name_tok = self.ident()
            if name_tok.text in seen:
                raise ParseError(f"duplicate definition {name_tok.text}",
                                 name_tok.span, (), name_tok.text)
            seen.add(name_tok.text)
            names[name_tok.text] = name_tok.span
            self.expect("=")
            seqs = [self.seq()]
            while self.at("+"):
                self.i += 1
                seqs.append(self.seq())
            self.expect(";")
            defs.append((name_tok.text, seqs))
        self.expect("system")
        self.expect(":")
        system = self.coop()
        if self.tok.kind != "EOF":
            self.fail(["'<'", "end of input"])
        return rates, defs, names, system

    def seq(self):
        steps = []
        while self.at("("):
            self.i += 1
            action = self.ident("action").text
            self.expect(",")
            steps.append((action, self.rate()))
            self.expect(")")
            self.expect(".")
        if self.tok.kind != "IDENT":
            self.fail(["'('", "state identifier"])
        return steps, self.ident().text

    def rate(self):
        if self.at("T"):
            self.i += 1
            if self.at(":"):
                self.i += 1
                return Passive(self.number())
            return Passive(1.0)
        if self.tok.kind == "IDENT":
            return Named(self.ident().text)
        if self.tok.kind in ("INT", "REAL") or self.at("-"):
            return Active(self.number())
        self.fail(["number", "rate name", "'T'"])

    def coop(self):
        node = self.group()
        while self.at("<"):
            self.i += 1
            acts = []
            if self.tok.kind == "IDENT":
                acts.append(self.ident("action").text)
                while self.at(","):
                    self.i += 1
                    acts.append(self.ident("action").text)
            self.expect(">")
            node = ("coop", node, self.group(), frozenset(acts))
        return node

    def group(self):
        if self.at("("):
            self.i += 1
            node = self.coop()
            self.expect(")")
            return node
        if self.tok.kind != "IDENT":
            self.fail(["'('", "state identifier"])
        name = self.ident().text
        pop = 1
        if self.at("["):
            self.i += 1
            if self.tok.kind != "INT":
                self.fail(["integer"])
            pop = int(self.tok.text)
            self.i += 1
            self.expect("]")
        return ("group", name, pop)


def _desugar(defs):
    """Expand prefix chains into anonymous intermediate states."""
    declared = {name for name, _ in defs}
    taken = set(declared)
    states, owner, anonymous = {}, {}, set()
    for name, seqs in defs:
        letters = _letters()
        pending = []
        own = []
        for steps, target in seqs:
            if not steps:
                # a bare identifier as a choice branch has no behaviour
                continue
            chain = [name]
            for _ in steps[1:]:
                nm = name + next(letters)
                while nm in taken:
                    nm = name + next(letters)
                taken.add(nm)
                chain.append(nm)
            chain.append(target)
            action, rate = steps[0]
            own.append(Prefix(action, rate, chain[1]))
            for k, (action, rate) in enumerate(steps[1:], start=1):
                pending.append((chain[k], Prefix(action, rate, chain[k + 1])))
        states[name] = tuple(own)
        for nm, p in pending:
            states[nm] = (p,)
            anonymous.add(nm)
            owner[nm] = name
    return states, owner, anonymous


def _letters():
    import itertools
    import string
    for k in itertools.count(1):
        for combo in itertools.product(string.ascii_lowercase, repeat=k):
            yield "".join(combo)


def _stem(state):
    s = re.sub(r"_?\d+[a-z]*\Z", "", state)
    return s or state


def _build(rates, defs, spans, system, pragmas):
    states, owner, anonymous = _desugar(defs)
    order = list(states)
    parent = {s: s for s in order}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    for s, prefixes in states.items():
        for p in prefixes:
            if p.continuation in parent:
                parent[find(p.continuation)] = find(s)
    members = {}
    for s in order:
        members.setdefault(find(s), []).append(s)

    referenced = []
    _collect_refs(system, referenced)
    comps = []
    comp_of = {}
    used_names = set()
    for root, ss in members.items():
        initial = next((r for r in referenced if r in ss), ss[0])
        name = _stem(initial)
        if name in used_names:
            name = initial
        k = 2
        base = name
        while name in used_names:
            name = f"{base}{k}"
            k += 1
        used_names.add(name)
        comp = SequentialComponentDef(
            name, {s: states[s] for s in ss}, initial,
            frozenset(s for s in ss if s in anonymous))
        comps.append(comp)
        for s in ss:
            comp_of[s] = name

    def node(t):
        if t[0] == "group":
            return Group(comp_of.get(t[1], t[1]), t[1], t[2])
        return Cooperation(node(t[1]), node(t[2]), t[3])

    return ModelSpec(tuple(comps), rates, node(system), tuple(pragmas), spans)


def _collect_refs(t, acc):
    if t[0] == "group":
        acc.append(t[1])
    else:
        _collect_refs(t[1], acc)
        _collect_refs(t[2], acc)


def parse_model(text):
    """Parse model text into a :class:`ModelSpec`; raises :class:`ParseError`."""
    p = _Parser(text)
    rates, defs, spans, system = p.model()
    return _build(rates, defs, spans, system, p.pragmas)


def parse_rates(text):
    """Parse a standalone rates file (a single ``rates { ... }`` block)."""
    p = _Parser(text)
    p.expect("rates")
    p.expect("{")
    out = {}
    while p.tok.kind == "IDENT":
        name = p.ident().text
        p.expect("=")
        out[name] = p.number()
        p.expect(";")
    p.expect("}")
    if p.tok.kind != "EOF":
        p.fail(["end of input"])
    return out


# --------------------------------------------------------------- printing

def _fmt_num(v):
    return repr(float(v))


def _fmt_rate(r):
    if isinstance(r, Active):
        return _fmt_num(r.value)
    if isinstance(r, Passive):
        return f"T:{_fmt_num(r.weight)}"
    return r.name


def _fmt_chain(d, prefix):
    parts = []
    while True:
        parts.append(f"({prefix.action}, {_fmt_rate(prefix.rate)})")
        nxt = prefix.continuation
        if nxt in d.anonymous and len(d.states[nxt]) == 1:
            prefix = d.states[nxt][0]
            continue
        return ".".join(parts) + "." + nxt


def _fmt_coopset(actions):
    return "<" + ", ".join(sorted(actions)) + ">"


def _fmt_node(node, top=False):
    if isinstance(node, Group):
        return f"{node.state}[{node.population}]"
    left = _fmt_node(node.left, top)
    right = _fmt_node(node.right)
    if isinstance(node.right, Cooperation):
        right = f"({right})"
    sep = "\n    " if top else " "
    return f"{left}{sep}{_fmt_coopset(node.actions)} {right}"


def rates_block(rates, indent="    "):
    lines = ["rates {"]
    for name in sorted(rates):
        lines.append(f"{indent}{name} = {_fmt_num(rates[name])};")
    lines.append("}")
    return "\n".join(lines)


def serialize_model(model):
    """Canonical text for ``model``; ``parse_model`` inverts it."""
    out = [f"//@ {k}: {v}" for k, v in model.metadata]
    if out:
        out.append("")
    if model.rates:
        out.append(rates_block(model.rates))
        out.append("")
    for d in model.definitions:
        for state, prefixes in d.states.items():
            if state in d.anonymous:
                continue
            body = " + ".join(_fmt_chain(d, p) for p in prefixes)
            out.append(f"{state} = {body};")
        out.append("")
    out.append("system:")
    out.append("    " + _fmt_node(model.system, top=True))
    return "\n".join(out) + "\n"
