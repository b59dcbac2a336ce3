"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""

import time

import numpy as np
import pytest

from pepaflow import bench, metrics
from pepaflow.ctmc import enumerate_states, expected_throughput, steady_state_distribution
from pepaflow.fluid import integrate_to_steady_state
from pepaflow.metrics import ProductivityPoint, scalability
from pepaflow.netmodels import build, preset

from conftest import client_server

LINES = []


def check(name, ok, detail):
    LINES.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(LINES[-1])
    assert ok, detail


@pytest.fixture(scope="module")
def comparisons():
    return {pid: bench.compare(pid) for pid in ("b1", "b2")}


def test_oracle_fluid_vs_ctmc():
    start = time.perf_counter()
    errors = []
    for n in (10, 20, 40):
        spec = client_server(n, n // 5)
        fluid_x = metrics.throughput(integrate_to_steady_state(spec),
                                     bench.compile_model(spec), "done")
        chain = enumerate_states(spec)
        ctmc_x = expected_throughput(chain, steady_state_distribution(chain), "done")
        errors.append(abs(fluid_x - ctmc_x) / ctmc_x)
    elapsed = time.perf_counter() - start
    ok = (all(b <= a for a, b in zip(errors, errors[1:])) and errors[-1] < 0.05
          and elapsed < 10.0)
    check("oracle equivalence", ok,
          f"relative errors {[f'{e:.2e}' for e in errors]} in {elapsed:.2f} s")


def test_hand_derived_ctmc_values():
    # Counts (C1, C2) with one server: (2,0) -req 1-> (1,1) -req 1-> (0,2),
    # done at rate C2.  Cut equations: p0 = p1 and p1 = 2 p2, so
    # p = (2, 2, 1) / 5 and X(req) = p0 + p1 = 0.8.
    chain = enumerate_states(client_server(2, 1))
    dist = steady_state_distribution(chain)
    x = expected_throughput(chain, dist, "req")
    err = max(np.max(np.abs(dist.probabilities - [0.4, 0.4, 0.2])), abs(x - 0.8))
    check("hand-derived CTMC values", err < 1e-9,
          f"pi={np.round(dist.probabilities, 12).tolist()} X={x:.12f} max error {err:.1e}")


def test_conservation(comparisons):
    drifts = [r.drift for rep in comparisons.values() for res in rep.results.values()
              for r in res.rows]
    for n in (10, 20, 40):
        drifts.append(integrate_to_steady_state(client_server(n, n // 5)).max_drift)
    for arch in ("ssba", "baseline5g"):
        for n in (1, 100, 100_000):
            drifts.append(integrate_to_steady_state(build(arch, preset("b1", n))).max_drift)
    worst = max(drifts)
    check("population conservation", worst < 1e-9,
          f"max relative drift per unit time {worst:.2e} over {len(drifts)} trajectories")


def test_message_counts():
    ssba = metrics.count_messages(bench.architecture_flow("ssba")).total
    base = metrics.count_messages(bench.architecture_flow("baseline5g")).total
    check("message counts", ssba == 15 and base > ssba and base - ssba >= 4,
          f"ssba {ssba}, baseline {base}")


def test_linear_configuration_scaling(comparisons):
    parts, ok = [], True
    for arch in ("ssba", "baseline5g"):
        r1 = comparisons["b1"].results[arch]
        r2 = comparisons["b2"].results[arch]
        ratio = r2.saturation.n_star / r1.saturation.n_star
        slow = max(r1.sweep_seconds, r2.sweep_seconds)
        ok &= abs(ratio - 3.0) <= 0.6 and slow < 60.0
        converged = all(r.converged for r in r1.rows + r2.rows)
        ok &= converged
        parts.append(f"{arch} {r2.saturation.n_star}/{r1.saturation.n_star}={ratio:.2f}"
                     f" (slowest sweep {slow:.1f} s)")
    check("linear configuration scaling", ok, "; ".join(parts))


def test_architecture_ordering(comparisons):
    ratios = {pid: rep.ratio for pid, rep in comparisons.items()}
    budgets = {pid: {r.total_processors for r in rep.results.values()}
               for pid, rep in comparisons.items()}
    ok = all(v > 1.5 for v in ratios.values()) and all(len(b) == 1 for b in budgets.values())
    check("architecture ordering", ok,
          ", ".join(f"{pid} ratio {v:.2f}" for pid, v in ratios.items()))


def test_bottleneck_identity(comparisons):
    res = comparisons["b1"].results["ssba"]
    beyond = [r for r in res.rows if r.n > res.saturation.n_star]
    procs = metrics.network_processors(bench.compile_model(build("ssba", preset("b1", 1))))
    ok = bool(beyond)
    worst_u, worst_other = 1.0, 0.0
    for row in beyond:
        name, u = bench._bottleneck(row, procs)
        low = min(row.utilization[p] for p in procs if p != name)
        ok &= name == "Bccp" and u >= 0.99 and low < 0.9
        worst_u, worst_other = min(worst_u, u), max(worst_other, low)
    check("bottleneck identity", ok,
          f"Bccp over {len(beyond)} loads past n*={res.saturation.n_star}: "
          f"min utilization {worst_u:.4f}, lowest other <= {worst_other:.3f}")


def test_throughput_monotonicity(comparisons):
    worst = 0.0
    count = 0
    for rep in comparisons.values():
        for res in rep.results.values():
            xs = [r.throughput for r in res.rows]
            count += 1
            for a, b in zip(xs, xs[1:]):
                worst = max(worst, (a - b) / a if a > 0 else 0.0)
    check("throughput monotonicity", worst <= 1e-6,
          f"largest relative decrease {worst:.1e} over {count} sweeps")


def test_scalability_sanity():
    cfg = preset("b1", 1)
    same = bench.scalability_curve("ssba", cfg, cfg, (10, 200, 5000))
    exact = all(r.S == 1.0 for r in same)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        lam, T, C, target = rng.uniform(0.01, 1e4, size=4)
        k = rng.uniform(0.01, 100.0)
        p1 = ProductivityPoint(lam, T, C, target)
        p2 = ProductivityPoint(lam * k, T, C * k, target)
        worst = max(worst, abs(scalability(p1, p2) - 1.0))
    check("scalability sanity", exact and worst <= 1e-12,
          f"identical configs S={[r.S for r in same]}, proportional scaling error {worst:.1e}")


def test_performance_envelope():
    start = time.perf_counter()
    res = integrate_to_steady_state(build("ssba", preset("b1", 100_000)))
    elapsed = time.perf_counter() - start
    check("performance envelope", res.converged and elapsed < 10.0,
          f"ssba n=100000 solved in {elapsed:.2f} s ({res.method})")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
