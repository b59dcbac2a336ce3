from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pepaflow.core import Group, Passive, compile_model, resolve_rate
from pepaflow.ctmc import (enumerate_states, expected_counts, expected_throughput,
                           steady_state_distribution)
from pepaflow.errors import CapExceededError, PepaError, ReducibleChainError
from pepaflow.netmodels import ArchitectureConfig, build_ssba_model
from pepaflow.parser import parse_model

from conftest import client_server, two_state


def solve(spec):
    chain = enumerate_states(spec)
    return chain, steady_state_distribution(chain)


def test_client_server_oracle():
    chain, dist = solve(client_server(2, 1))
    assert chain.states.tolist() == [[2, 0, 1], [1, 1, 1], [0, 2, 1]]
    assert chain.n_transitions == 4
    assert np.allclose(dist.probabilities, [0.4, 0.4, 0.2], atol=1e-12)
    assert expected_throughput(chain, dist, "req") == pytest.approx(0.8, abs=1e-12)
    assert expected_throughput(chain, dist, "done") == pytest.approx(0.8, abs=1e-12)


def test_two_state_oracle():
    chain, dist = solve(two_state(2.0, 1.0))
    assert np.allclose(dist.probabilities, [1 / 3, 2 / 3], atol=1e-12)
    assert expected_throughput(chain, dist, "a") == pytest.approx(2 / 3, abs=1e-12)


def test_single_state_chain():
    spec = parse_model("A = (a, 1.0).A; B = (a, 2.0).B; system: A[1] <a> B[1]")
    chain, dist = solve(spec)
    assert chain.n_states == 1 and chain.n_transitions == 0
    assert dist.probabilities.tolist() == [1.0]


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_symmetric_two_state_is_binomial(n):
    from math import comb
    chain, dist = solve(two_state(1.0, 1.0, n))
    for state, p in zip(chain.states, dist.probabilities):
        k = int(state[0])
        assert p == pytest.approx(comb(n, k) / 2 ** n, abs=1e-12)


def test_reducible_chain_is_rejected():
    spec = parse_model("""
        A = (a, 1.0).A2; A2 = (b, 1.0).A;
        B = (g, 1.0).B3 + (c, 1.0).B5;
        B3 = (e, 1.0).B4; B4 = (f, 1.0).B3;
        B5 = (h, 1.0).B6; B6 = (i, 1.0).B5;
        system: A[1] <a> B[1]
    """)
    chain = enumerate_states(spec)
    with pytest.raises(ReducibleChainError) as info:
        steady_state_distribution(chain)
    assert info.value.code == "E_REDUCIBLE"


def test_state_cap():
    with pytest.raises(CapExceededError) as info:
        enumerate_states(client_server(200, 3), cap=10)
    assert info.value.code == "E_CAP_EXCEEDED"


def test_nonintegral_start_rejected():
    pm = compile_model(client_server(2, 1))
    with pytest.raises(PepaError) as info:
        enumerate_states(pm, v0=pm.initial + 0.5)
    assert info.value.code == "E_NONINTEGRAL"


def test_unknown_action_warns_and_is_zero():
    chain, dist = solve(client_server(2, 1))
    with pytest.warns(UserWarning, match="W_UNKNOWN_ACTION"):
        assert expected_throughput(chain, dist, "nope") == 0.0


def test_power_iteration_agrees_with_direct():
    chain = enumerate_states(client_server(12, 3))
    a = steady_state_distribution(chain, method="direct")
    b = steady_state_distribution(chain, method="power")
    assert np.max(np.abs(a.probabilities - b.probabilities)) < 1e-9
    assert b.residual < 1e-10


def test_ssba_small_state_space_size():
    chain = enumerate_states(build_ssba_model(ArchitectureConfig(2, threads_per_processor=1)))
    assert (chain.n_states, chain.n_transitions) == (5832, 23697)
    dist = steady_state_distribution(chain)
    assert dist.residual < 1e-10


# ------------------------------------------- individual-level oracle

def _leaves(node):
    if isinstance(node, Group):
        return [node]
    return _leaves(node.left) + _leaves(node.right)


def _moves(spec, node, state, offset=0):
    """(action, rate, passive, new_state) of an individual-level PEPA term.

    ``state`` holds one local state per copy of every group, left to right.
    """
    if isinstance(node, Group):
        d = spec.component(node.component)
        out = []
        for k in range(node.population):
            s = state[offset + k]
            for p in d.prefixes(s):
                new = list(state)
                new[offset + k] = p.continuation
                if isinstance(p.rate, Passive):
                    out.append((p.action, p.rate.weight, True, tuple(new)))
                else:
                    out.append((p.action, resolve_rate(p.rate, spec.rates), False,
                                tuple(new)))
        return out
    width = sum(g.population for g in _leaves(node.left))
    left = _moves(spec, node.left, state, offset)
    right = _moves(spec, node.right, state, offset + width)
    out = [m for m in left + right if m[0] not in node.actions]
    for a in node.actions:
        la = [m for m in left if m[0] == a]
        ra = [m for m in right if m[0] == a]
        if not la or not ra:
            continue
        RL, RR = sum(m[1] for m in la), sum(m[1] for m in ra)
        pl, pr = la[0][2], ra[0][2]
        for m1 in la:
            for m2 in ra:
                if pl and not pr:
                    rate, passive = m1[1] / RL * m2[1], False
                elif pr and not pl:
                    rate, passive = m2[1] / RR * m1[1], False
                else:
                    rate, passive = m1[1] / RL * m2[1] / RR * min(RL, RR), pl and pr
                # merge the two sides' changes
                new = tuple(n2 if n2 != o else n1
                            for n1, n2, o in zip(m1[3], m2[3], state))
                out.append((a, rate, passive, new))
    return out


def _individual_chain(spec):
    leaves = _leaves(spec.system)
    start = tuple(g.state for g in leaves for _ in range(g.population))
    seen, order, edges = {start: 0}, [start], []
    queue = [start]
    while queue:
        s = queue.pop()
        for a, r, _, t in _moves(spec, spec.system, s):
            if t == s:
                continue
            if t not in seen:
                seen[t] = len(order)
                order.append(t)
                queue.append(t)
            edges.append((seen[s], seen[t], r, a))
    n = len(order)
    Q = np.zeros((n, n))
    for i, j, r, _ in edges:
        Q[i, j] += r
    Q -= np.diag(Q.sum(axis=1))
    A = Q.T.copy()
    A[-1] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    owners = [g.component for g in leaves for _ in range(g.population)]
    return order, owners, pi, edges


ORACLE_MODELS = [
    client_server(1, 1), client_server(2, 1), client_server(3, 2), client_server(3, 3),
    parse_model("""
        C = (req, 2.0).C2; C2 = (think, 1.0).C;
        S = (req, T:1).S2 + (req, T:3).S3; S2 = (y, 1.0).S; S3 = (z, 2.0).S;
        system: S[2] <req> C[3]
    """),
    parse_model("""
        A = (a, 1.0).A2 + (a, 3.0).A3; A2 = (x, 2.0).A; A3 = (w, 1.5).A;
        B = (a, 2.0).B2; B2 = (b, 1.0).B;
        D = (b, 4.0).D2; D2 = (v, 0.5).D;
        system: A[2] <a> (B[2] <b> D[1])
    """),
]


@pytest.mark.parametrize("spec", ORACLE_MODELS)
def test_counts_chain_is_the_lumped_individual_chain(spec):
    pm = compile_model(spec)
    chain = enumerate_states(pm)
    dist = steady_state_distribution(chain)
    order, owners, pi, edges = _individual_chain(spec)
    lumped = defaultdict(float)
    for s, p in zip(order, pi):
        counts = [0] * len(pm.index)
        for comp, local in zip(owners, s):
            counts[pm.position[(comp, local)]] += 1
        lumped[tuple(counts)] += p
    ours = {tuple(int(v) for v in s): p for s, p in zip(chain.states, dist.probabilities)}
    assert set(ours) == set(lumped)
    for k, p in ours.items():
        assert p == pytest.approx(lumped[k], abs=1e-10)
    for a in pm.actions:
        ref = sum(pi[i] * r for i, _, r, act in edges if act == a)
        assert expected_throughput(chain, dist, a) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(1, 5))
def test_throughput_balances_around_the_cycle(n, m):
    chain, dist = solve(client_server(n, m))
    x_req = expected_throughput(chain, dist, "req")
    x_done = expected_throughput(chain, dist, "done")
    assert x_req == pytest.approx(x_done, rel=1e-9)
    # little's law on the thinking clients: E[C2] * rate 1.0 = X
    counts = expected_counts(chain, dist)
    assert counts[1] == pytest.approx(x_done, rel=1e-9)
    assert counts[0] + counts[1] == pytest.approx(n)
    assert dist.probabilities.sum() == pytest.approx(1.0)
    assert np.all(dist.probabilities >= 0)
