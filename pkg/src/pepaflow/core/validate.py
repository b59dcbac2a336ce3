"""Static checks over a :class:`ModelSpec`.

Validation never raises; it returns every diagnostic it finds. A model is
valid when none of them has ``severity == "error"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ACTION_RE, Active, Group, Named, Passive, local_states


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    location: str = ""
    span: object = None

    def __str__(self):
        where = ""
        if self.span is not None:
            where = f"{self.span.line}:{self.span.column}: "
        elif self.location:
            where = f"{self.location}: "
        return f"{where}{self.severity} {self.code}: {self.message}"


def is_valid(diagnostics):
    return not any(d.severity == "error" for d in diagnostics)


def validate(model):
    out = []

    def emit(severity, code, message, location=""):
        out.append(Diagnostic(severity, code, message, location,
                              model.spans.get(location)))

    for name, value in model.rates.items():
        if not (value > 0 and math.isfinite(value)):
            emit("error", "E_NONPOS_RATE",
                 f"rate {name} = {value} must be a positive finite number", name)

    groups = list(_groups_with_context(model.system, frozenset()))
    synced = {g.component: ctx for g, ctx in groups}
    defs = {d.name: d for d in model.definitions}

    for d in model.definitions:
        if d.initial not in d.states:
            emit("error", "E_UNDEF_STATE",
                 f"initial state {d.initial} of {d.name} is not declared",
                 d.name)
        kinds = {}
        for state, prefixes in d.states.items():
            if not prefixes:
                emit("error", "E_DEADLOCK_STATE",
                     f"state {state} has no outgoing prefix", state)
            for p in prefixes:
                _check_prefix(emit, model, d, state, p, synced.get(d.name, frozenset()))
                passive = isinstance(p.rate, Passive)
                if kinds.setdefault(p.action, passive) != passive:
                    emit("error", "E_MIXED_RATE",
                         f"action {p.action} is both active and passive in {d.name}",
                         state)
        if d.initial in d.states:
            reach = set(local_states(d))
            for state in d.states:
                if state not in reach:
                    emit("warning", "W_UNREACHABLE",
                         f"state {state} is unreachable from {d.initial}", state)

    seen = {}
    for g, _ in groups:
        d = defs.get(g.component)
        if d is None:
            emit("error", "E_UNDEF_COMPONENT",
                 f"system refers to undefined component {g.component}",
                 g.state)
            continue
        if g.state not in d.states:
            emit("error", "E_UNDEF_STATE",
                 f"system refers to undeclared state {g.state}", g.state)
        if not isinstance(g.population, int) or g.population < 1:
            emit("error", "E_BAD_POPULATION",
                 f"population of {g.state} must be a positive integer", g.state)
        if g.component in seen:
            emit("error", "E_ALIASED_GROUP",
                 f"component {g.component} appears in more than one group",
                 g.state)
        seen[g.component] = g
    used = set(seen)
    for d in model.definitions:
        if d.name not in used:
            emit("warning", "W_UNUSED_COMPONENT",
                 f"component {d.name} is not part of the system", d.initial)

    if all(g.component in defs for g, _ in groups):
        _check_system(emit, model.system, defs)
    return out


def _check_prefix(emit, model, d, state, p, synced):
    if not ACTION_RE.match(p.action):
        emit("error", "E_BAD_ACTION", f"bad action label {p.action!r}", state)
    if p.continuation not in d.states:
        emit("error", "E_UNDEF_STATE",
             f"continuation {p.continuation} is not a state of {d.name}", state)
    r = p.rate
    if isinstance(r, Active) and not (r.value > 0 and math.isfinite(r.value)):
        emit("error", "E_NONPOS_RATE", f"rate of {p.action} must be positive", state)
    elif isinstance(r, Passive) and not r.weight > 0:
        emit("error", "E_NONPOS_RATE",
             f"passive weight of {p.action} must be positive", state)
    elif isinstance(r, Named) and r.name not in model.rates:
        emit("error", "E_UNBOUND_RATE", f"rate {r.name} has no binding", state)
    # an unsynchronised self-loop would be a transition with no effect
    if p.continuation == state and p.action not in synced:
        emit("error", "E_SELF_LOOP",
             f"{state} loops to itself on unsynchronised action {p.action}", state)


def _groups_with_context(node, ctx):
    if isinstance(node, Group):
        yield node, ctx
    else:
        inner = ctx | node.actions
        yield from _groups_with_context(node.left, inner)
        yield from _groups_with_context(node.right, inner)


def _alphabet(node, defs):
    if isinstance(node, Group):
        d = defs[node.component]
        reach = local_states(d) if node.state in d.states else list(d.states)
        return {p.action for s in reach for p in d.prefixes(s)}
    return _alphabet(node.left, defs) | _alphabet(node.right, defs)


def _passivity(node, defs, emit):
    """Map action -> True when the subtree offers it only passively."""
    if isinstance(node, Group):
        d = defs[node.component]
        out = {}
        for s in d.states:
            for p in d.prefixes(s):
                out[p.action] = out.get(p.action, False) or isinstance(p.rate, Passive)
        return out
    left = _passivity(node.left, defs, emit)
    right = _passivity(node.right, defs, emit)
    out = {}
    for a in list(left) + [a for a in right if a not in left]:
        if a in node.actions:
            if a in left and a in right:
                out[a] = left[a] and right[a]
        elif a in left and a in right and left[a] != right[a]:
            emit("error", "E_MIXED_RATE",
                 f"action {a} is offered actively and passively by independent "
                 f"subsystems", a)
            out[a] = False
        else:
            out[a] = left.get(a, right.get(a))
    return out


def _check_system(emit, system, defs):
    def walk(node):
        if isinstance(node, Group):
            return
        la, ra = _alphabet(node.left, defs), _alphabet(node.right, defs)
        for a in sorted(node.actions):
            if not ACTION_RE.match(a):
                emit("error", "E_BAD_ACTION", f"bad action label {a!r} in cooperation set", a)
            if a not in la or a not in ra:
                emit("warning", "W_COOP_ONE_SIDED",
                     f"cooperation action {a} is not performed on both sides", a)
        walk(node.left)
        walk(node.right)

    walk(system)
    for a, passive in _passivity(system, defs, emit).items():
        if passive:
            emit("error", "E_PASSIVE_UNSYNC",
                 f"passive action {a} is never synchronised with an active partner", a)
