"""Productivity of the tripled configuration (b2) relative to b1.

psi = throughput * f(ART) / processors, with f(T) = 1 / (1 + T / targetT)
and targetT five times the single-user response time of b1.  The value
function is an assumption, so read the curve qualitatively: S near 1 means
the extra processors pay for themselves.
"""

from pepaflow import bench
from pepaflow.netmodels import preset

grid = (10, 50, 100, 200, 400, 600, 1000, 3000)
for arch in ("ssba", "baseline5g"):
    print(f"\n{arch}")
    print(f"{'n':>6} {'X b1':>9} {'X b2':>9} {'ART b1':>9} {'ART b2':>9} {'S':>7}")
    for r in bench.scalability_curve(arch, preset("b1", 1), preset("b2", 1), grid):
        print(f"{r.n:>6} {r.base.lam:>9.2f} {r.scaled.lam:>9.2f} "
              f"{r.base.T:>9.4f} {r.scaled.T:>9.4f} {r.S:>7.3f}")
