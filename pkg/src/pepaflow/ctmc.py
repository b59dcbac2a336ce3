"""Exact lumped CTMC for small populations."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .core.compile import PopulationModel, compile_model
from .errors import CapExceededError, PepaError, ReducibleChainError

DEFAULT_CAP = 2_000_000
DIRECT_LIMIT = 50_000


@dataclass(frozen=True)
class PopulationCTMC:
    """States are integer count vectors laid out like ``index``.

    Transitions are parallel arrays; ``action`` holds indices into ``actions``.
    """

    index: tuple
    states: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    rate: np.ndarray
    action: np.ndarray
    actions: tuple
    initial_index: int = 0

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_transitions(self):
        return len(self.src)

    def generator(self):
        """Sparse generator matrix Q (rows sum to zero)."""
        n = self.n_states
        Q = sp.coo_matrix((self.rate, (self.src, self.dst)), shape=(n, n)).tocsr()
        out = np.asarray(Q.sum(axis=1)).ravel()
        return (Q - sp.diags(out)).tocsr()

    def outflow(self):
        return np.bincount(self.src, weights=self.rate, minlength=self.n_states)


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray
    residual: float = 0.0
    method: str = "direct"

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, i):
        return float(self.probabilities[i])


def _as_model(model):
    return model if isinstance(model, PopulationModel) else compile_model(model)


def enumerate_states(model, v0=None, cap=DEFAULT_CAP):
    """Breadth-first reachability closure from ``v0`` (default: initial counts)."""
    pm = _as_model(model)
    start = pm.initial if v0 is None else np.asarray(getattr(v0, "counts", v0))
    if not np.allclose(start, np.round(start)):
        raise PepaError("initial vector must be integral", "E_NONINTEGRAL")
    start = tuple(int(round(c)) for c in start)
    kernel = pm.rate_kernel
    moves = [tuple((i, int(d)) for i, d in enumerate(row) if d != 0)
             for row in pm.stoich]
    act_ix = {a: k for k, a in enumerate(pm.actions)}
    cls_act = [act_ix[c.action] for c in pm.classes]

    seen = {start: 0}
    order = [start]
    queue = deque([start])
    src, dst, rate, act = [], [], [], []
    while queue:
        s = queue.popleft()
        i = seen[s]
        for k, r in enumerate(kernel(list(s))):
            if r <= 0.0 or not moves[k]:
                continue
            t = list(s)
            for j, d in moves[k]:
                t[j] += d
            t = tuple(t)
            j = seen.get(t)
            if j is None:
                j = len(order)
                seen[t] = j
                order.append(t)
                queue.append(t)
            src.append(i)
            dst.append(j)
            rate.append(r)
            act.append(cls_act[k])
            if len(src) >= cap:
                raise CapExceededError(
                    f"transition budget {cap} exhausted after {len(order)} states;"
                    " use the fluid engine")
    return PopulationCTMC(pm.index, np.array(order, dtype=np.int64).reshape(len(order), -1),
                          np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                          np.array(rate, dtype=float), np.array(act, dtype=np.int64),
                          tuple(pm.actions), 0)


def _check_single_recurrent_class(ctmc):
    n = ctmc.n_states
    if n == 1:
        return
    A = sp.coo_matrix((np.ones(len(ctmc.src)), (ctmc.src, ctmc.dst)), shape=(n, n))
    ncomp, labels = connected_components(A, directed=True, connection="strong")
    if ncomp == 1:
        return
    leaves = np.ones(ncomp, dtype=bool)
    cross = labels[ctmc.src] != labels[ctmc.dst]
    leaves[labels[ctmc.src[cross]]] = False
    if leaves.sum() > 1:
        raise ReducibleChainError(
            f"chain has {int(leaves.sum())} closed communicating classes")


def _direct(Q):
    n = Q.shape[0]
    A = Q.T.tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[-1] = 1.0
    return spsolve(A.tocsc(), b)


def _power(ctmc, Q, tol=1e-13, max_iter=200_000):
    lam = 1.1 * float(ctmc.outflow().max())
    P = (sp.identity(Q.shape[0], format="csr") + Q / lam).T.tocsr()
    pi = np.full(Q.shape[0], 1.0 / Q.shape[0])
    for _ in range(max_iter):
        nxt = P @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol * max(1.0, float(pi.max())):
            return nxt
        pi = nxt
    return pi


def steady_state_distribution(ctmc, method="auto"):
    """Solve pi Q = 0 with sum(pi) = 1."""
    _check_single_recurrent_class(ctmc)
    n = ctmc.n_states
    if n == 1:
        return StationaryDistribution(np.ones(1), 0.0, "trivial")
    Q = ctmc.generator()
    use_direct = method == "direct" or (method == "auto" and n <= DIRECT_LIMIT)
    pi = _direct(Q) if use_direct else _power(ctmc, Q)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    res = float(np.max(np.abs(Q.T @ pi))) / max(1.0, float(ctmc.outflow().max()))
    if use_direct and res > 1e-10:
        pi2 = _power(ctmc, Q)
        res2 = float(np.max(np.abs(Q.T @ pi2))) / max(1.0, float(ctmc.outflow().max()))
        if res2 < res:
            return StationaryDistribution(pi2, res2, "power")
    return StationaryDistribution(pi, res, "direct" if use_direct else "power")


def expected_throughput(ctmc, dist, action):
    if action not in ctmc.actions:
        warnings.warn(f"W_UNKNOWN_ACTION: {action!r} does not occur in the chain",
                      stacklevel=2)
        return 0.0
    k = ctmc.actions.index(action)
    sel = ctmc.action == k
    p = np.asarray(getattr(dist, "probabilities", dist))
    return float(np.sum(p[ctmc.src[sel]] * ctmc.rate[sel]))


def expected_counts(ctmc, dist):
    """Mean population vector under ``dist``."""
    p = np.asarray(getattr(dist, "probabilities", dist))
    return p @ ctmc.states.astype(float)
