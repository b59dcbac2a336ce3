"""Mean-field (fluid) analysis of compiled population models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import BDF

from .core.compile import PopulationModel, compile_model, evaluate
from .errors import ConvergenceError, NegativePopulationError


@dataclass(frozen=True)
class PopulationVector:
    """Counts per (component, local state), indexed like ``index``."""

    index: tuple
    counts: np.ndarray

    def __getitem__(self, key):
        if isinstance(key, str):
            hits = [i for i, (_, s) in enumerate(self.index) if s == key]
            if len(hits) != 1:
                raise KeyError(key)
            return float(self.counts[hits[0]])
        return float(self.counts[self.index.index(tuple(key))])

    def component_total(self, component):
        return float(sum(c for (comp, _), c in zip(self.index, self.counts)
                         if comp == component))

    def as_dict(self):
        return {f"{c}.{s}": float(v) for (c, s), v in zip(self.index, self.counts)}

    def __len__(self):
        return len(self.counts)


@dataclass(frozen=True)
class SteadyStateResult:
    fixed_point: PopulationVector
    residual_norm: float
    elapsed_model_time: float
    converged: bool
    steps: int = 0
    method: str = ""
    max_drift: float = 0.0  # largest relative per-component drift per unit time

    @property
    def counts(self):
        return self.fixed_point.counts


def _as_model(model):
    if isinstance(model, PopulationModel):
        return model
    return compile_model(model)


def vector_field(classes, v):
    """Time derivative of the population vector.

    ``classes`` may be a :class:`PopulationModel` or a list of transition
    classes; in the latter case ``v`` must be a :class:`PopulationVector`.
    """
    if isinstance(classes, PopulationModel):
        return classes.vector_field(np.asarray(getattr(v, "counts", v), float))
    pos = {k: i for i, k in enumerate(v.index)}
    out = np.zeros(len(v.index))
    for c in classes:
        r = evaluate(c.rate_expr, v.counts)
        for key, d in c.delta:
            out[pos[key]] += d * r
    return out


def residual(pm, x):
    f = pm.vector_field(x)
    return float(np.max(np.abs(f)) / max(1.0, float(np.max(np.abs(x)))))


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW
# keeps h * rho well inside the real stability interval (about 3.3)
_STAB = 2.0


class _Tracker:
    """Bookkeeping shared by both integration paths."""

    def __init__(self, pm, rel_tol, window, threshold):
        self.pm = pm
        self.rel_tol = rel_tol
        self.window = window
        self.threshold = threshold
        self.groups = [np.array(ix) for ix in pm.components.values()]
        self.pops = np.array([pm.populations[c] for c in pm.components])
        self.below_since = None
        self.max_drift = 0.0

    def renormalize(self, y, dt):
        """Clamp and rescale each component back onto its population."""
        y = y.copy()
        for ix, pop in zip(self.groups, self.pops):
            seg = y[ix]
            total = seg.sum()
            drift = abs(total - pop) / pop
            if dt > 0:
                self.max_drift = max(self.max_drift, drift / max(dt, 1.0))
            if seg.min() < -self.rel_tol * max(1.0, pop):
                raise NegativePopulationError(
                    f"count {seg.min():.3g} below zero in component")
            seg = np.clip(seg, 0.0, None)
            s = seg.sum()
            y[ix] = seg * (pop / s) if s > 0 else seg
        return y

    def observe(self, t, res):
        """Record a residual sample; True once it stayed low for ``window``."""
        if res < self.threshold:
            if self.below_since is None:
                self.below_since = t
            return t - self.below_since >= self.window
        self.below_since = None
        return False


def _dopri(pm, y, tr, t_max, max_steps, scale):
    f = pm.vector_field
    atol = tr.rel_tol * 1e-3 * scale
    rtol = tr.rel_tol
    t = 0.0
    k1 = f(y)
    fnorm = float(np.max(np.abs(k1)))
    h = min(0.01 * scale / max(fnorm, 1e-12), 1.0) if fnorm > 0 else 1.0
    h_max = math.inf
    rho = 0.0  # running estimate of the Jacobian's spectral radius
    steps = 0
    K = np.empty((7, len(y)))
    while t < t_max:
        if steps >= max_steps:
            return y, t, steps, False
        cap = _STAB / rho if rho > 0 else math.inf
        h = min(h, h_max, cap, t_max - t)
        K[0] = k1
        for s in range(1, 7):
            ys = y + h * (np.dot(_A[s], K[:s]))
            K[s] = f(ys)
        y_new = y + h * (_B @ K)
        err_vec = h * (_E @ K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / sc))
        if err <= 1.0:
            try:
                y_new = tr.renormalize(y_new, h)
            except NegativePopulationError:
                # shrink the step ceiling and retry from the same point
                h_max = h / 4
                if h_max < 1e-14 * max(1.0, t):
                    raise
                continue
            # Hairer's estimate from the two stages evaluated at c = 1
            ys6 = y + h * np.dot(_A[5], K[:5])
            den = float(np.max(np.abs((y + h * (_B @ K)) - ys6)))
            if den > 1e-12 * scale:
                est = float(np.max(np.abs(K[6] - K[5]))) / den
                rho = max(est, 0.5 * rho)
            t += h
            steps += 1
            y = y_new
            k1 = K[6]
            res = float(np.max(np.abs(k1)) / max(1.0, float(np.max(np.abs(y)))))
            if tr.observe(t, res):
                return y, t, steps, True
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return y, t, steps, False


def _reachable_basis(pm):
    """Orthonormal basis of the directions the dynamics can move in.

    Every linear conservation law (not only the per-component totals) is
    orthogonal to this subspace, so steps inside it keep all of them.
    """
    S = pm.stoich
    if S.size == 0:
        return np.zeros((len(pm.index), 0))
    u, sv, _ = np.linalg.svd(S.T, full_matrices=False)
    rank = int(np.sum(sv > sv[0] * max(S.shape) * np.finfo(float).eps))
    return u[:, :rank]


def _newton(pm, tr, x, tol, max_iter=25):
    """Damped Newton on f(x) = 0 within the invariant affine subspace of x.

    Returns the root or None.  The root is only a candidate: the caller must
    still see the trajectory stay on it for a full window.
    """
    B = _reachable_basis(pm)
    if B.shape[1] == 0:
        return None
    x = x.copy()
    r0 = residual(pm, x)
    for _ in range(max_iter):
        F = pm.vector_field(x)
        dz = np.linalg.lstsq(pm.jacobian(x) @ B, -F, rcond=None)[0]
        dx = B @ dz
        lam = 1.0
        while True:
            xn = x + lam * dx
            # a clipped step would leave the invariant subspace
            if xn.min() >= -tr.rel_tol * 1e-3:
                xn = np.clip(xn, 0.0, None)
                rn = residual(pm, xn)
                if rn < r0:
                    break
            lam /= 2
            if lam < 1e-4:
                return None
        x, r0 = xn, rn
        if rn < tol:
            return x
    return None


def _bdf(pm, y, t0, tr, t_max, scale, polish=True, chunk_steps=400,
         max_steps=200_000):
    """Stiff integration in restartable chunks.

    Each chunk ends after ``chunk_steps`` accepted steps or ``span`` model
    time.  The state is renormalized between chunks and, unless the residual
    is already inside a sustained window, a Newton polish is attempted.
    """
    atol = tr.rel_tol * 1e-3 * scale
    t = t0
    steps = 0
    first_step = None
    polished = False
    while t < t_max and steps < max_steps:
        span = min(max(tr.window, 0.5 * t), t_max - t)
        if first_step is not None:
            first_step = min(first_step, 0.5 * ((t + span) - t))
        solver = BDF(lambda _t, x: pm.vector_field(x), t, y, t + span,
                     rtol=tr.rel_tol, atol=atol, first_step=first_step,
                     jac=lambda _t, x: pm.jacobian(x))
        prev = t
        for _ in range(chunk_steps):
            msg = solver.step()
            if solver.status == "failed":
                raise ConvergenceError(f"stiff integrator failed: {msg}")
            steps += 1
            yk = solver.y
            if yk.min() < -tr.rel_tol * scale:
                raise NegativePopulationError(
                    f"count {yk.min():.3g} below zero at t={solver.t:.4g}")
            if tr.observe(solver.t, residual(pm, yk)):
                return tr.renormalize(yk, solver.t - prev), float(solver.t), steps, \
                    True, polished
            if solver.status == "finished":
                break
        y = tr.renormalize(solver.y, solver.t - prev)
        t = float(solver.t)
        first_step = solver.h_abs if solver.h_abs > 0 else None
        if polish and tr.below_since is None:
            # min() switching surfaces make the stiff solver chatter just
            # above the threshold; jump to the root and let the window decide
            root = _newton(pm, tr, y, 1e-3 * tr.threshold)
            if root is not None:
                y = root
                polished = True
                first_step = None
    return y, t, steps, False, polished


def integrate_to_steady_state(model, v0=None, rel_tol=1e-6, window=10.0,
                              residual_threshold=1e-8, t_max=1e6,
                              method="auto", max_explicit_steps=500):
    """Integrate the fluid ODE until its residual stays small for ``window``.

    ``method`` is ``"dopri5"`` (explicit, adaptive), ``"bdf"`` (stiff), or
    ``"auto"``, which starts explicitly and hands over to BDF when the
    explicit step count runs past ``max_explicit_steps``.

    The stiff stage also tries Newton's method on the fixed-point equations,
    with steps confined to the span of the transition vectors so every linear
    invariant of the initial state is kept.  A root is accepted only after
    the residual window has been observed from it as well.
    """
    pm = _as_model(model)
    y = pm.initial.copy() if v0 is None else np.asarray(
        getattr(v0, "counts", v0), dtype=float).copy()
    scale = max(1.0, float(np.max(np.abs(y))))
    tr = _Tracker(pm, rel_tol, window, residual_threshold)
    polished = False
    if method == "bdf":
        y, t, steps, ok, polished = _bdf(pm, y, 0.0, tr, t_max, scale)
        used = "bdf"
    else:
        limit = max_explicit_steps if method == "auto" else 10 ** 9
        y, t, steps, ok = _dopri(pm, y, tr, t_max, limit, scale)
        used = "dopri5"
        if not ok and t < t_max and method == "auto":
            tr.below_since = None
            y, t, more, ok, polished = _bdf(pm, y, t, tr, t_max, scale)
            steps += more
            used = "dopri5+bdf"
    if polished:
        used += "+newton"
    res = residual(pm, y)
    result = SteadyStateResult(PopulationVector(pm.index, np.clip(y, 0.0, None)),
                               res, t, ok, steps, used, tr.max_drift)
    if not ok:
        raise ConvergenceError(
            f"no steady state within t_max={t_max:g} (residual {res:.3g})", result)
    return result
