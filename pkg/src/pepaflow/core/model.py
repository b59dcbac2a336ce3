"""Abstract syntax for population process-algebra models."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from ..errors import RateError

ACTION_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


@dataclass(frozen=True)
class Active:
    value: float


@dataclass(frozen=True)
class Passive:
    weight: float = 1.0


@dataclass(frozen=True)
class Named:
    name: str


Rate = Union[Active, Passive, Named]


@dataclass(frozen=True)
class Prefix:
    action: str
    rate: Rate
    continuation: str


@dataclass(frozen=True)
class SequentialComponentDef:
    """One sequential component: its local states and their prefixes.

    ``states`` maps state ids to their outgoing prefixes in definition order.
    States listed in ``anonymous`` were introduced when desugaring a prefix
    chain; they always have exactly one prefix and print back as part of the
    chain they came from.
    """

    name: str
    states: Mapping[str, tuple]
    initial: str
    anonymous: frozenset = frozenset()

    def prefixes(self, state):
        return self.states.get(state, ())


@dataclass(frozen=True)
class Group:
    component: str
    state: str
    population: int


@dataclass(frozen=True)
class Cooperation:
    left: "SystemNode"
    right: "SystemNode"
    actions: frozenset


SystemNode = Union[Group, Cooperation]


@dataclass(frozen=True)
class ModelSpec:
    definitions: tuple
    rates: Mapping[str, float]
    system: SystemNode
    metadata: tuple = ()
    # source locations of state definitions, filled in by the parser
    spans: Mapping = field(default_factory=dict, compare=False, repr=False)

    def component(self, name):
        for d in self.definitions:
            if d.name == name:
                return d
        raise KeyError(name)

    def meta(self, key, default=None):
        for k, v in self.metadata:
            if k == key:
                return v
        return default

    def meta_all(self, key):
        return [v for k, v in self.metadata if k == key]

    def groups(self):
        return list(iter_groups(self.system))

    def with_population(self, component, population):
        """Copy of the model with one group's population replaced."""
        return ModelSpec(self.definitions, self.rates,
                         _replace_pop(self.system, component, population),
                         self.metadata, self.spans)

    def with_rates(self, rates):
        merged = dict(self.rates)
        merged.update(rates)
        return ModelSpec(self.definitions, merged, self.system,
                         self.metadata, self.spans)


def _replace_pop(node, component, population):
    if isinstance(node, Group):
        if node.component == component:
            return Group(node.component, node.state, int(population))
        return node
    return Cooperation(_replace_pop(node.left, component, population),
                       _replace_pop(node.right, component, population),
                       node.actions)


def iter_groups(node):
    if isinstance(node, Group):
        yield node
    else:
        yield from iter_groups(node.left)
        yield from iter_groups(node.right)


def resolve_rate(rate, rates):
    """Numeric value of a rate; passive rates resolve to their weight."""
    if isinstance(rate, Active):
        return rate.value
    if isinstance(rate, Passive):
        return rate.weight
    try:
        return rates[rate.name]
    except KeyError:
        raise RateError(f"rate {rate.name!r} has no binding") from None


def local_states(definition):
    """Reachable local states of a component, in definition order."""
    seen = {definition.initial}
    stack = [definition.initial]
    while stack:
        s = stack.pop()
        for p in definition.prefixes(s):
            c = p.continuation
            if c in definition.states and c not in seen:
                seen.add(c)
                stack.append(c)
    return [s for s in definition.states if s in seen]


def apparent_rate(definition, state, action, rates):
    """Total rate at which ``state`` can perform ``action``.

    Passive prefixes make the apparent rate infinite.
    """
    total = 0.0
    for p in definition.prefixes(state):
        if p.action != action:
            continue
        if isinstance(p.rate, Passive):
            return math.inf
        total += resolve_rate(p.rate, rates)
    return total


def actions_of(definition):
    out = []
    for prefixes in definition.states.values():
        for p in prefixes:
            if p.action not in out:
                out.append(p.action)
    return out
