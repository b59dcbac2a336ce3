"""Performance measures computed from solved models."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core.compile import PopulationModel
from .core.model import Passive, resolve_rate
from .ctmc import PopulationCTMC, expected_counts, expected_throughput
from .errors import MetricsError, PepaError
from .fluid import PopulationVector, SteadyStateResult

MESSAGE_KINDS = ("request", "response", "command")


# ----------------------------------------------------------- solved points

def _is_ctmc(result):
    return (isinstance(result, tuple) and len(result) == 2
            and isinstance(result[0], PopulationCTMC))


def _population(result):
    """(index, counts) of a fluid result, population vector or (ctmc, dist)."""
    if isinstance(result, SteadyStateResult):
        result = result.fixed_point
    if isinstance(result, PopulationVector):
        return result.index, np.asarray(result.counts, float)
    if _is_ctmc(result):
        ctmc, dist = result
        return ctmc.index, expected_counts(ctmc, dist)
    raise TypeError(f"not a solved model: {type(result).__name__}")


def _classes(classes):
    return classes.classes if isinstance(classes, PopulationModel) else classes


def throughput(result, classes, action):
    """Events per unit time of ``action``."""
    if _is_ctmc(result):
        return expected_throughput(result[0], result[1], action)
    cls = [c for c in _classes(classes) if c.action == action]
    if not cls:
        warnings.warn(f"W_UNKNOWN_ACTION: {action!r} does not occur in the model",
                      stacklevel=2)
        return 0.0
    _, x = _population(result)
    return float(sum(c.rate(x) for c in cls))


def _idle_state(model, index, component):
    if isinstance(model, PopulationModel):
        try:
            return model.spec.component(component).initial
        except (KeyError, PepaError):
            pass
    for comp, state in index:
        if comp == component:
            return state
    raise MetricsError(f"unknown component {component!r}", "E_UNKNOWN_COMPONENT")


def utilization(result, component, busy_states=None, model=None):
    """Fraction of ``component``'s population in ``busy_states``.

    By default every state except the component's initial (idle) state is busy.
    """
    index, x = _population(result)
    rows = [i for i, (comp, _) in enumerate(index) if comp == component]
    if not rows:
        raise MetricsError(f"unknown component {component!r}", "E_UNKNOWN_COMPONENT")
    if busy_states is None:
        idle = _idle_state(model, index, component)
        busy_states = {s for c, s in index if c == component and s != idle}
    else:
        busy_states = set(busy_states)
        unknown = busy_states - {index[i][1] for i in rows}
        if unknown:
            raise MetricsError(f"not states of {component}: {sorted(unknown)}",
                               "E_UNKNOWN_STATE")
    total = float(x[rows].sum())
    if total <= 0.0:
        raise MetricsError(f"component {component!r} has no population",
                           "E_EMPTY_GROUP")
    busy = float(sum(x[i] for i in rows if index[i][1] in busy_states))
    return min(1.0, max(0.0, busy / total))


def class_rates(result, model):
    """Expected rate of every transition class of ``model``."""
    if _is_ctmc(result):
        ctmc, dist = result
        p = np.asarray(getattr(dist, "probabilities", dist))
        out = np.zeros(len(model.classes))
        for prob, state in zip(p, ctmc.states):
            if prob > 0:
                out += prob * model.rates(state.astype(float))
        return out
    _, x = _population(result)
    return model.rates(x)


def _task_time(model, comp, src, dst, action):
    for p in model.spec.component(comp).prefixes(src):
        if p.action == action and p.continuation == dst:
            if isinstance(p.rate, Passive):
                return None
            return 1.0 / resolve_rate(p.rate, model.spec.rates)
    return None


def capacity_utilization(result, model, component):
    """Share of ``component``'s capacity spent on tasks (utilization law).

    Sums, over the transitions that return the component to its idle state,
    the completion rate times the mean task time ``1/r`` of its own prefix,
    and divides by the population.  Time spent holding the component while
    a partner is not ready is not counted, unlike :func:`utilization`.
    """
    if component not in model.populations:
        raise MetricsError(f"unknown component {component!r}", "E_UNKNOWN_COMPONENT")
    total = model.populations[component]
    idle = _idle_state(model, model.index, component)
    rates = class_rates(result, model)
    busy = 0.0
    for c, rate in zip(model.classes, rates):
        for comp, src, dst in c.participants:
            if comp == component and src != idle and dst == idle and rate > 0:
                tau = _task_time(model, comp, src, dst, c.action)
                if tau is None:
                    raise MetricsError(f"{component} finishes {c.action} passively; "
                                       "give busy states instead", "E_PASSIVE_TASK")
                busy += rate * tau
    return float(min(1.0, max(0.0, busy / total)))


def load_component(model):
    """The component whose population is the offered load (UEs)."""
    name = model.spec.meta("load")
    if name:
        return name
    return model.spec.groups()[0].component


def completion_action(model, default=None):
    return model.spec.meta("completion") or default


def average_response_time(result, model, in_progress=None, completion=None):
    """Little's law: L / X over the in-progress states.

    ``in_progress`` is a set of (component, state) pairs; the default is every
    non-idle state of the load component.
    """
    index, x = _population(result)
    completion = completion or completion_action(model)
    if completion is None:
        raise MetricsError("no completion action given", "E_NO_COMPLETION")
    if in_progress is None:
        comp = load_component(model)
        idle = _idle_state(model, index, comp)
        in_progress = {(c, s) for c, s in index if c == comp and s != idle}
    in_progress = set(in_progress)
    L = float(sum(v for key, v in zip(index, x) if key in in_progress))
    X = throughput(result, model, completion)
    if X <= 0.0:
        raise MetricsError(f"throughput of {completion!r} is zero", "E_ZERO_THROUGHPUT")
    return L / X


# -------------------------------------------------------------- scalability

@dataclass(frozen=True)
class ProductivityPoint:
    lam: float
    T: float
    C: float
    targetT: float

    def __post_init__(self):
        if not self.C > 0:
            raise MetricsError("cost must be positive", "E_NONPOS_COST")
        if not (self.lam > 0 and self.T > 0 and self.targetT > 0):
            raise MetricsError("productivity point needs positive lam, T, targetT",
                               "E_BAD_POINT")


def value(T, targetT):
    """Response-time value function f(T) = 1 / (1 + T / targetT)."""
    return 1.0 / (1.0 + T / targetT)


def productivity(p):
    return p.lam * value(p.T, p.targetT) / p.C


def scalability(p1, p2):
    """Productivity of ``p2`` relative to ``p1``."""
    if p1.targetT != p2.targetT:
        raise MetricsError("points must share targetT", "E_TARGET_MISMATCH")
    return productivity(p2) / productivity(p1)


# ---------------------------------------------------------------- call flows

class FlowMessage(NamedTuple):
    seq: int
    src: str
    dst: str
    label: str
    kind: str


@dataclass(frozen=True)
class CallFlowSpec:
    messages: tuple = ()
    name: str = ""

    def __len__(self):
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)


class MessageCount(NamedTuple):
    total: int
    by_kind: dict


def parse_flow(text, name=""):
    """Parse ``seq; src; dst; label; kind`` lines (``#`` starts a comment)."""
    msgs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 5 or not all(parts):
            raise MetricsError(f"line {lineno}: expected 5 ';'-separated fields",
                               "E_FLOW_SYNTAX")
        seq, src, dst, label, kind = parts
        if not re.fullmatch(r"\d+", seq):
            raise MetricsError(f"line {lineno}: bad sequence number {seq!r}",
                               "E_FLOW_SYNTAX")
        if kind not in MESSAGE_KINDS:
            raise MetricsError(f"line {lineno}: unknown kind {kind!r}", "E_FLOW_SYNTAX")
        msgs.append(FlowMessage(int(seq), src, dst, label, kind))
    seqs = [m.seq for m in msgs]
    if seqs != sorted(set(seqs)):
        raise MetricsError("sequence numbers must be strictly increasing",
                           "E_FLOW_SYNTAX")
    return CallFlowSpec(tuple(msgs), name)


def load_flow(path):
    from pathlib import Path
    p = Path(path)
    return parse_flow(p.read_text(), p.stem)


def count_messages(flow):
    by_kind = {k: 0 for k in MESSAGE_KINDS}
    for m in flow:
        by_kind[m.kind] += 1
    return MessageCount(len(flow.messages), by_kind)


# ------------------------------------------------------------------ reports

@dataclass(frozen=True)
class MetricsReport:
    throughput: dict
    utilization: dict
    art: float
    populations: PopulationVector
    config: object = field(default=None, compare=False)

    def to_dict(self):
        out = {"throughput": dict(self.throughput),
               "utilization": dict(self.utilization),
               "art": self.art,
               "populations": self.populations.as_dict()}
        if self.config is not None:
            cfg = self.config
            out["config"] = {"n": cfg.n, "nf_counts": list(cfg.nf_counts),
                             "processors_per_nf": cfg.processors_per_nf,
                             "threads_per_processor": cfg.threads_per_processor,
                             "rates": dict(cfg.rates)}
        return out


def processor_components(model):
    names = model.spec.meta("processors")
    if names:
        return [s.strip() for s in names.split(",") if s.strip()]
    return []


def network_processors(model):
    """Processor components excluding the one that belongs to the load."""
    client = model.spec.meta("load_processor")
    return [p for p in processor_components(model) if p != client]


def report(result, model, config=None, processors=None, completion=None):
    """Throughput of every action, processor capacity utilization and ART."""
    index, x = _population(result)
    if _is_ctmc(result):
        tp = {a: expected_throughput(result[0], result[1], a) for a in model.actions}
    else:
        tp = dict.fromkeys(model.actions, 0.0)
        for c in model.classes:
            tp[c.action] += c.rate(x)
    procs = processor_components(model) if processors is None else processors
    util = {p: capacity_utilization(result, model, p) for p in procs}
    completion = completion or completion_action(model)
    art = float("nan")
    if completion is not None and tp.get(completion, 0.0) > 0:
        art = average_response_time(result, model, completion=completion)
    return MetricsReport(tp, util, art, PopulationVector(index, x), config)
