"""Load sweeps, saturation detection, architecture comparison, scalability."""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import metrics
from .core.compile import compile_model
from .ctmc import DEFAULT_CAP, enumerate_states, steady_state_distribution
from .errors import ConvergenceError, PepaError, SaturationError
from .fluid import integrate_to_steady_state
from .netmodels import BUILDERS, data_path, preset
from .parser import parse_model

SOLVERS = ("fluid", "ctmc")


@dataclass(frozen=True)
class ModelSource:
    """Either a builder (``arch`` + ``config``) or model text with a load group."""

    arch: str = None
    config: object = None
    text: str = None
    group: str = None

    def __post_init__(self):
        if (self.text is None) == (self.arch is None):
            raise PepaError("give exactly one of arch or text", "E_USAGE")
        if self.arch is not None and self.arch not in BUILDERS:
            raise PepaError(f"unknown architecture {self.arch!r}", "E_USAGE")

    @cached_property
    def _parsed(self):
        return parse_model(self.text)

    @property
    def load_group(self):
        if self.group:
            return self.group
        if self.arch is not None:
            return "Ue"
        spec = self._parsed
        return spec.meta("load") or spec.groups()[0].component

    def spec(self, n=None):
        if self.arch is not None:
            cfg = self.config if n is None else self.config.with_n(int(n))
            return BUILDERS[self.arch](cfg)
        spec = self._parsed
        return spec if n is None else spec.with_population(self.load_group, int(n))

    def config_at(self, n):
        return None if self.config is None else self.config.with_n(int(n))


@dataclass(frozen=True)
class SweepSpec:
    source: ModelSource
    n_grid: tuple
    solver: str = "fluid"
    ctmc_cap: int = DEFAULT_CAP

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise PepaError("empty n-grid", "E_USAGE")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise PepaError("n-grid must be positive and strictly increasing",
                            "E_USAGE")
        if self.solver not in SOLVERS:
            raise PepaError(f"unknown solver {self.solver!r}", "E_USAGE")
        object.__setattr__(self, "n_grid", grid)


@dataclass(frozen=True)
class SweepRow:
    n: int
    throughput: float
    art: float
    utilization: dict
    converged: bool
    method: str = ""
    drift: float = 0.0  # largest relative per-component drift per unit model time


@dataclass(frozen=True)
class SaturationReport:
    n_star: int
    plateau_throughput: float
    theta: float


@dataclass(frozen=True)
class PointSolution:
    report: metrics.MetricsReport
    converged: bool
    method: str
    completion: str
    drift: float = 0.0

    @property
    def throughput(self):
        return self.report.throughput.get(self.completion, 0.0) if self.completion else 0.0


def solve_point(source, n, solver="fluid", ctmc_cap=DEFAULT_CAP):
    """Solve ``source`` at load ``n``.

    Fluid non-convergence is reported through ``converged`` rather than raised.
    """
    pm = compile_model(source.spec(n))
    if solver == "ctmc":
        chain = enumerate_states(pm, cap=ctmc_cap)
        result = (chain, steady_state_distribution(chain))
        ok, method, drift = True, "ctmc", 0.0
    else:
        try:
            result = integrate_to_steady_state(pm)
            ok = True
        except ConvergenceError as exc:
            if exc.result is None:
                raise
            result, ok = exc.result, False
        method, drift = result.method, result.max_drift
    return PointSolution(metrics.report(result, pm, source.config_at(n)), ok, method,
                         metrics.completion_action(pm), drift)


def _row(args):
    source, n, solver, cap = args
    sol = solve_point(source, n, solver, cap)
    return SweepRow(n, sol.throughput, sol.report.art, sol.report.utilization,
                    sol.converged, sol.method, sol.drift)


def sweep(spec, jobs=1):
    """One row per grid point, in grid order."""
    work = [(spec.source, n, spec.solver, spec.ctmc_cap) for n in spec.n_grid]
    if jobs and jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_row, work))
    return [_row(w) for w in work]


def find_saturation(n_grid, throughputs, theta=0.05):
    """Smallest grid n whose relative gain to the next point is below ``theta``."""
    n_grid = list(n_grid)
    X = [float(x) for x in throughputs]
    if len(n_grid) != len(X):
        raise PepaError("grid and throughput lengths differ", "E_USAGE")
    if len(n_grid) < 3:
        raise PepaError("saturation needs at least 3 grid points", "E_USAGE")
    for k in range(len(X) - 1):
        if X[k] > 0:
            gain = (X[k + 1] - X[k]) / X[k]
        else:
            gain = 0.0 if X[k + 1] <= 0 else math.inf
        if gain < theta:
            return SaturationReport(n_grid[k], X[-1], theta)
    raise SaturationError(
        f"throughput still growing by >= {theta:g} at n={n_grid[-1]}; extend the grid")


def saturation_of(rows, theta=0.05):
    return find_saturation([r.n for r in rows], [r.throughput for r in rows], theta)


# ----------------------------------------------------------------- grids

def geometric_grid(lo, hi, points):
    """Strictly increasing integers spaced geometrically from lo to hi."""
    lo, hi = max(1, int(round(lo))), max(1, int(round(hi)))
    if points < 2 or hi <= lo:
        return (lo,)
    raw = np.geomspace(lo, hi, int(points))
    out = []
    for v in raw:
        n = int(round(v))
        if out and n <= out[-1]:
            n = out[-1] + 1
        out.append(n)
    return tuple(out)


def parse_grid(text):
    """``a:b:points`` (geometric) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise PepaError(f"bad n-grid {text!r}; expected a:b:points", "E_USAGE")
        try:
            a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise PepaError(f"bad n-grid {text!r}", "E_USAGE") from None
        if k < 1 or a < 1 or b < a:
            raise PepaError(f"bad n-grid {text!r}", "E_USAGE")
        return geometric_grid(a, b, k)
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise PepaError(f"bad n-grid {text!r}", "E_USAGE") from None


def predicted_knee(source, n_big=10 ** 6):
    """Load at which a linear no-queueing curve meets the throughput ceiling."""
    x1 = _row((source, 1, "fluid", DEFAULT_CAP)).throughput
    xmax = _row((source, n_big, "fluid", DEFAULT_CAP)).throughput
    if x1 <= 0:
        raise PepaError("zero throughput at n=1", "E_ZERO_THROUGHPUT")
    return xmax / x1


def default_grid(source, points=20, decades=2.0):
    """Geometric grid spanning ``decades`` centred on the predicted knee."""
    knee = predicted_knee(source)
    half = 10 ** (decades / 2)
    return geometric_grid(max(1.0, knee / half), knee * half, points)


# ---------------------------------------------------------------- compare

@dataclass(frozen=True)
class ArchitectureResult:
    arch: str
    rows: tuple
    saturation: SaturationReport
    bottleneck: str
    bottleneck_utilization: float
    messages: metrics.MessageCount
    total_processors: int
    sweep_seconds: float = 0.0


@dataclass(frozen=True)
class ComparisonReport:
    preset: str
    n_grid: tuple
    results: dict
    ratio: float
    theta: float


FLOW_FILES = {"ssba": "ssba.flow", "baseline5g": "baseline_5g.flow"}


def architecture_flow(arch):
    return metrics.parse_flow(data_path("flows", FLOW_FILES[arch]).read_text(), arch)


def _bottleneck(row, candidates):
    name = max(candidates, key=lambda k: (row.utilization[k], k))
    return name, row.utilization[name]


def compare_grid(configs, points_per_two_decades=40):
    """Shared grid covering every architecture's knee by a decade each side."""
    knees = [predicted_knee(ModelSource(arch=a, config=c)) for a, c in configs]
    lo, hi = min(knees) / 10, max(knees) * 10
    points = int(math.ceil(points_per_two_decades * math.log10(hi / lo) / 2)) + 1
    return geometric_grid(lo, hi, points)


def compare(preset_id="b1", n_grid=None, rates=None, theta=0.05, jobs=1,
            archs=("ssba", "baseline5g"), **layout):
    """Sweep each architecture at the same processor budget on one grid."""
    configs = [(a, preset(preset_id, 1, rates=rates, **layout)) for a in archs]
    grid = tuple(n_grid) if n_grid is not None else compare_grid(configs)
    results = {}
    for arch, cfg in configs:
        start = time.perf_counter()
        rows = tuple(sweep(SweepSpec(ModelSource(arch=arch, config=cfg), grid), jobs))
        elapsed = time.perf_counter() - start
        sat = saturation_of(rows, theta)
        pm = compile_model(BUILDERS[arch](cfg))
        b, u = _bottleneck(rows[-1], metrics.network_processors(pm))
        results[arch] = ArchitectureResult(
            arch, rows, sat, b, u, metrics.count_messages(architecture_flow(arch)),
            cfg.total_processors(), elapsed)
    a, b = archs[0], archs[-1]
    ratio = results[a].saturation.n_star / results[b].saturation.n_star
    return ComparisonReport(str(preset_id), grid, results, ratio, theta)


# ------------------------------------------------------------ scalability

@dataclass(frozen=True)
class ScalabilityRow:
    n: int
    base: metrics.ProductivityPoint
    scaled: metrics.ProductivityPoint
    S: float


def _productivity_point(source, n, targetT, solver="fluid"):
    sol = solve_point(source, n, solver)
    lam, art = sol.throughput, sol.report.art
    if not sol.converged or lam <= 0 or not art > 0:
        return None
    return metrics.ProductivityPoint(lam, art, float(source.config.total_processors()),
                                     targetT)


def no_load_art(source):
    return solve_point(source, 1).report.art


def scalability_curve(arch, cfg_base, cfg_scaled, n_grid, target_factor=5.0):
    """S(n) = psi(scaled) / psi(base); targetT = factor * no-load ART of base."""
    a = ModelSource(arch=arch, config=cfg_base)
    b = ModelSource(arch=arch, config=cfg_scaled)
    targetT = target_factor * no_load_art(a)
    rows = []
    for n in n_grid:
        p1 = _productivity_point(a, n, targetT)
        p2 = _productivity_point(b, n, targetT)
        if p1 is None or p2 is None:
            warnings.warn(f"n={n}: zero throughput or unsolved point skipped",
                          stacklevel=2)
            continue
        rows.append(ScalabilityRow(int(n), p1, p2, metrics.scalability(p1, p2)))
    return rows


__all__ = [
    "ModelSource", "PointSolution", "SweepSpec", "SweepRow", "SaturationReport", "solve_point",
    "sweep", "find_saturation", "saturation_of", "geometric_grid", "parse_grid",
    "predicted_knee", "default_grid", "compare", "compare_grid",
    "ComparisonReport", "ArchitectureResult", "architecture_flow",
    "scalability_curve", "ScalabilityRow", "no_load_art",
]
