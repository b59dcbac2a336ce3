"""Population semantics: compile a model into transition classes.

Each class carries a small rate expression over the population vector.
The expressions are shared between classes where the cooperation tree
shares them, so :class:`PopulationModel` can generate one straight-line
Python function that evaluates every class rate with common
subexpressions computed once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ModelError
from .model import Group, Passive, local_states, resolve_rate
from .validate import is_valid, validate


# ---------------------------------------------------------------- rate IR

@dataclass(frozen=True)
class Lin:
    """Linear form sum(coef * x[idx])."""
    terms: tuple


@dataclass(frozen=True)
class Add:
    a: object
    b: object


@dataclass(frozen=True)
class Min:
    a: object
    b: object


@dataclass(frozen=True)
class Mul:
    a: object
    b: object


@dataclass(frozen=True)
class Share:
    """num / max(den, floor), taken as 0 when den is 0.

    A positive ``floor`` turns a passive share, which would jump from 0 to
    num/den as den leaves 0, into a continuous ramp.  It is chosen below the
    smallest positive value den takes at integer counts, so discrete
    semantics are unchanged.
    """
    num: object
    den: object
    floor: float = 0.0


@dataclass(frozen=True)
class Gate:
    """value when cond > 0, else 0."""
    value: object
    cond: object


def evaluate(expr, x):
    """Reference evaluator for a rate expression; counts below 0 act as 0."""
    t = type(expr)
    if t is Lin:
        return sum(c * max(float(x[i]), 0.0) for i, c in expr.terms)
    if t is Add:
        return evaluate(expr.a, x) + evaluate(expr.b, x)
    if t is Min:
        return min(evaluate(expr.a, x), evaluate(expr.b, x))
    if t is Mul:
        return evaluate(expr.a, x) * evaluate(expr.b, x)
    if t is Share:
        den = evaluate(expr.den, x)
        return evaluate(expr.num, x) / max(den, expr.floor) if den > 0.0 else 0.0
    if t is Gate:
        return evaluate(expr.value, x) if evaluate(expr.cond, x) > 0.0 else 0.0
    raise TypeError(expr)


def _indices(expr, acc):
    t = type(expr)
    if t is Lin:
        acc.update(i for i, _ in expr.terms)
    elif t is Share:
        _indices(expr.num, acc)
        _indices(expr.den, acc)
    elif t is Gate:
        _indices(expr.value, acc)
        _indices(expr.cond, acc)
    else:
        _indices(expr.a, acc)
        _indices(expr.b, acc)
    return acc


def generate_source(exprs, name="_rates"):
    """Python source for a function mapping a count vector to ``exprs``."""
    used = set()
    for e in exprs:
        _indices(e, used)
    lines = [f"def {name}(x):"]
    for i in sorted(used):
        lines.append(f"    x{i} = x[{i}]")
        lines.append(f"    if x{i} < 0.0: x{i} = 0.0")
    memo = {}

    def emit(e):
        key = e
        if key in memo:
            return memo[key]
        t = type(e)
        if t is Lin:
            code = " + ".join(f"{c!r}*x{i}" for i, c in e.terms) or "0.0"
        elif t is Add:
            code = f"{emit(e.a)} + {emit(e.b)}"
        elif t is Min:
            a, b = emit(e.a), emit(e.b)
            code = f"{a} if {a} < {b} else {b}"
        elif t is Mul:
            code = f"{emit(e.a)} * {emit(e.b)}"
        elif t is Share:
            n, d = emit(e.num), emit(e.den)
            if e.floor > 0.0:
                f = repr(e.floor)
                code = f"{n} / ({d} if {d} > {f} else {f}) if {d} > 0.0 else 0.0"
            else:
                code = f"{n} / {d} if {d} > 0.0 else 0.0"
        elif t is Gate:
            v, c = emit(e.value), emit(e.cond)
            code = f"{v} if {c} > 0.0 else 0.0"
        else:
            raise TypeError(e)
        var = f"t{len(memo)}"
        lines.append(f"    {var} = {code}")
        memo[key] = var
        return var

    outs = [emit(e) for e in exprs]
    lines.append(f"    return [{', '.join(outs)}]")
    return "\n".join(lines) + "\n"


def generate_jacobian_source(exprs, name="_jac"):
    """Source for the piecewise-exact gradient of every expression.

    The generated function returns the nonzero partials as a flat list whose
    (row, column) layout is returned alongside the source.
    """
    used = set()
    for e in exprs:
        _indices(e, used)
    lines = [f"def {name}(x):"]
    for i in sorted(used):
        lines.append(f"    x{i} = x[{i}]")
        lines.append(f"    if x{i} < 0.0: x{i} = 0.0")
    memo = {}
    counter = [0]

    def tmp(code):
        var = f"t{counter[0]}"
        counter[0] += 1
        lines.append(f"    {var} = {code}")
        return var

    def emit(e):
        if e in memo:
            return memo[e]
        t = type(e)
        if t is Lin:
            val = tmp(" + ".join(f"{c!r}*x{i}" for i, c in e.terms) or "0.0")
            grad = {}
            for i, c in e.terms:
                grad[i] = repr(c)
        elif t is Add:
            (a, ga), (b, gb) = emit(e.a), emit(e.b)
            val = tmp(f"{a} + {b}")
            grad = {}
            for i in sorted(set(ga) | set(gb)):
                grad[i] = tmp(f"{ga.get(i, '0.0')} + {gb.get(i, '0.0')}")
        elif t is Min:
            (a, ga), (b, gb) = emit(e.a), emit(e.b)
            cond = tmp(f"{a} < {b}")
            val = tmp(f"{a} if {cond} else {b}")
            grad = {i: tmp(f"{ga.get(i, '0.0')} if {cond} else {gb.get(i, '0.0')}")
                    for i in sorted(set(ga) | set(gb))}
        elif t is Mul:
            (a, ga), (b, gb) = emit(e.a), emit(e.b)
            val = tmp(f"{a} * {b}")
            grad = {i: tmp(f"{a} * {gb.get(i, '0.0')} + {b} * {ga.get(i, '0.0')}")
                    for i in sorted(set(ga) | set(gb))}
        elif t is Share:
            (n, gn), (d, gd) = emit(e.num), emit(e.den)
            keys = sorted(set(gn) | set(gd))
            if e.floor > 0.0:
                f = repr(e.floor)
                val = tmp(f"{n} / ({d} if {d} > {f} else {f}) if {d} > 0.0 else 0.0")
                # below the floor the share is num / floor, linear in num
                grad = {i: tmp(f"({gn.get(i, '0.0')} - {val} * {gd.get(i, '0.0')}) / {d}"
                               f" if {d} > {f} else {gn.get(i, '0.0')} / {f}")
                        for i in keys}
            else:
                val = tmp(f"{n} / {d} if {d} > 0.0 else 0.0")
                grad = {i: tmp(f"({gn.get(i, '0.0')} - {val} * {gd.get(i, '0.0')}) / {d}"
                               f" if {d} > 0.0 else 0.0")
                        for i in keys}
        elif t is Gate:
            (v, gv), (c, _) = emit(e.value), emit(e.cond)
            val = tmp(f"{v} if {c} > 0.0 else 0.0")
            grad = {i: tmp(f"{g} if {c} > 0.0 else 0.0") for i, g in gv.items()}
        else:
            raise TypeError(e)
        memo[e] = (val, grad)
        return memo[e]

    rows, cols, outs = [], [], []
    for k, e in enumerate(exprs):
        _, grad = emit(e)
        for i, g in sorted(grad.items()):
            rows.append(k)
            cols.append(i)
            outs.append(g)
    lines.append(f"    return [{', '.join(outs)}]")
    return "\n".join(lines) + "\n", rows, cols


def _exec(src, name):
    namespace = {}
    exec(compile(src, "<pepaflow-generated>", "exec"), namespace)
    return namespace[name]


def build_function(exprs):
    return _exec(generate_source(exprs), "_rates")


def build_jacobian(exprs):
    src, rows, cols = generate_jacobian_source(exprs)
    return _exec(src, "_jac"), np.array(rows, dtype=int), np.array(cols, dtype=int)


# ------------------------------------------------------- transition classes

@dataclass(frozen=True)
class TransitionClass:
    """A population-level transition.

    ``participants`` lists (component, from-state, to-state) for every
    sequential component taking part; ``delta`` maps (component, state) to
    the integer change in its count.
    """

    action: str
    participants: tuple
    delta: tuple
    rate_expr: object

    def rate(self, v):
        return evaluate(self.rate_expr, _counts(v))

    @property
    def rate_fn(self):
        return self.rate

    def delta_map(self):
        return dict(self.delta)


def _counts(v):
    return getattr(v, "counts", v)


# passive shares ramp up over this fraction of the smallest passive weight
PASSIVE_FLOOR = 1e-3


@dataclass
class _Offer:
    classes: list  # of (participants, delta dict, expr)
    agg: object
    passive: bool
    floor: float = 0.0  # smallest positive value of agg at integer counts


def _leaf(group, definition, rates, index):
    comp = group.component
    offers = {}
    ordered = local_states(definition)
    for s in ordered:
        i = index[(comp, s)]
        for p in definition.prefixes(s):
            r = resolve_rate(p.rate, rates)
            passive = isinstance(p.rate, Passive)
            delta = {}
            if p.continuation != s:
                delta = {(comp, s): -1, (comp, p.continuation): 1}
            cls = (((comp, s, p.continuation),), delta, Lin(((i, r),)))
            o = offers.setdefault(p.action, _Offer([], {}, passive))
            o.classes.append(cls)
            o.agg[i] = o.agg.get(i, 0.0) + r
    for o in offers.values():
        o.floor = min(o.agg.values())
        o.agg = Lin(tuple(o.agg.items()))
    return offers


def _merge_delta(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
        if out[k] == 0:
            del out[k]
    return out


def _combine(left, right):
    """Synchronise two offers of the same action."""
    AL, AR = left.agg, right.agg
    single_l = len(left.classes) == 1
    single_r = len(right.classes) == 1
    classes = []
    if not left.passive and not right.passive:
        m = Min(AL, AR)
        for pl, dl, rl in left.classes:
            for pr, dr, rr in right.classes:
                factors = []
                if not single_l:
                    factors.append(Share(rl, AL))
                if not single_r:
                    factors.append(Share(rr, AR))
                expr = m
                for f in reversed(factors):
                    expr = Mul(f, expr)
                classes.append((pl + pr, _merge_delta(dl, dr), expr))
        return _Offer(classes, m, False)
    if left.passive and right.passive:
        m = Min(AL, AR)
        for pl, dl, rl in left.classes:
            for pr, dr, rr in right.classes:
                expr = Mul(Mul(Share(rl, AL), Share(rr, AR)), m)
                classes.append((pl + pr, _merge_delta(dl, dr), expr))
        return _Offer(classes, m, True, min(left.floor, right.floor))
    # one passive side: it takes a weight-proportional share of the active rate
    swap = left.passive is False
    act, pas = (left, right) if swap else (right, left)
    floor = PASSIVE_FLOOR * pas.floor
    for pa, da, ra in act.classes:
        for pp, dp, rp in pas.classes:
            expr = Mul(Share(rp, pas.agg, floor), ra)
            parts = pa + pp if swap else pp + pa
            classes.append((parts, _merge_delta(da, dp), expr))
    return _Offer(classes, Mul(Share(pas.agg, pas.agg, floor), act.agg), False)


def _offers(node, defs, rates, index):
    if isinstance(node, Group):
        return _leaf(node, defs[node.component], rates, index)
    left = _offers(node.left, defs, rates, index)
    right = _offers(node.right, defs, rates, index)
    out = {}
    for a in list(left) + [a for a in right if a not in left]:
        lo, ro = left.get(a), right.get(a)
        if a in node.actions:
            if lo is not None and ro is not None:
                out[a] = _combine(lo, ro)
            # otherwise the action is blocked in this subtree
        elif lo is not None and ro is not None:
            out[a] = _Offer(lo.classes + ro.classes, Add(lo.agg, ro.agg),
                            lo.passive, min(lo.floor, ro.floor))
        else:
            out[a] = lo if lo is not None else ro
    return out


def _require_valid(model):
    diags = validate(model)
    if not is_valid(diags):
        errors = [str(d) for d in diags if d.severity == "error"]
        raise ModelError("invalid model: " + "; ".join(errors), diags)


def state_index(model):
    defs = {d.name: d for d in model.definitions}
    index = []
    for g in model.groups():
        for s in local_states(_start_at(defs[g.component], g.state)):
            index.append((g.component, s))
    return tuple(index)


def _start_at(d, state):
    if d.initial == state:
        return d
    return type(d)(d.name, d.states, state, d.anonymous)


def compile_transition_classes(model):
    return list(compile_model(model).classes)


def compile_model(model):
    """Validate and compile ``model`` into a :class:`PopulationModel`."""
    _require_valid(model)
    defs = {d.name: _start_at(d, g.state) for g in model.groups()
            for d in model.definitions if d.name == g.component}
    index = state_index(model)
    pos = {k: i for i, k in enumerate(index)}
    offers = _offers(model.system, defs, model.rates, pos)
    classes = []
    for action, o in offers.items():
        for parts, delta, expr in o.classes:
            ordered = tuple(sorted(delta.items(), key=lambda kv: pos[kv[0]]))
            classes.append(TransitionClass(action, parts, ordered, expr))
    return PopulationModel(model, index, tuple(classes))


class PopulationModel:
    """Compiled model: state indexing, transition classes, fast rate kernel."""

    def __init__(self, spec, index, classes):
        self.spec = spec
        self.index = index
        self.classes = classes
        self.position = {k: i for i, k in enumerate(index)}
        self.components = {}
        for i, (comp, _) in enumerate(index):
            self.components.setdefault(comp, []).append(i)
        self.populations = {g.component: g.population for g in spec.groups()}
        x0 = np.zeros(len(index))
        for g in spec.groups():
            x0[self.position[(g.component, g.state)]] = g.population
        self.initial = x0
        S = np.zeros((len(classes), len(index)))
        for k, c in enumerate(classes):
            for key, d in c.delta:
                S[k, self.position[key]] = d
        self.stoich = S
        self.actions = []
        for c in classes:
            if c.action not in self.actions:
                self.actions.append(c.action)

    @cached_property
    def rate_kernel(self):
        return build_function([c.rate_expr for c in self.classes])

    def rates(self, x):
        x = x.tolist() if hasattr(x, "tolist") else list(x)
        return np.array(self.rate_kernel(x), dtype=float)

    def vector_field(self, x):
        return self.rates(x) @ self.stoich

    @cached_property
    def jacobian_kernel(self):
        return build_jacobian([c.rate_expr for c in self.classes])

    def rate_jacobian(self, x):
        fn, rows, cols = self.jacobian_kernel
        x = x.tolist() if hasattr(x, "tolist") else list(x)
        J = np.zeros((len(self.classes), len(self.index)))
        if len(rows):
            J[rows, cols] = fn(x)
        return J

    def jacobian(self, x):
        """d(vector_field)/dx, exact away from the min() switching surfaces."""
        return self.stoich.T @ self.rate_jacobian(x)

    def action_mask(self, action):
        return np.array([c.action == action for c in self.classes])

    def component_slices(self):
        return {c: np.array(ix) for c, ix in self.components.items()}

    def vector(self, counts):
        from ..fluid import PopulationVector
        return PopulationVector(self.index, np.asarray(counts, dtype=float))

    def __getstate__(self):
        # the generated kernel is rebuilt on demand after unpickling
        state = dict(self.__dict__)
        state.pop("rate_kernel", None)
        state.pop("jacobian_kernel", None)
        return state
