"""Where does each architecture saturate, and which processor is to blame?

Both models get the same processor budget (preset b1: one processor per NF)
and the same rates.  Throughput is the completion rate of the final
reconfiguration; n* is the first load past which it grows by less than 5%.
Utilization is capacity used: task completions times mean task time, per
processor.  Time a processor spends acquired but waiting for a partner NF
is left out (``metrics.utilization`` with busy states measures that instead).
"""

from pepaflow import bench, metrics
from pepaflow.core import compile_model
from pepaflow.netmodels import build, preset

grid = bench.geometric_grid(10, 2000, 16)
for arch in ("ssba", "baseline5g"):
    cfg = preset("b1", 1)
    rows = bench.sweep(bench.SweepSpec(bench.ModelSource(arch=arch, config=cfg), grid))
    sat = bench.saturation_of(rows)
    procs = metrics.network_processors(compile_model(build(arch, cfg)))
    print(f"\n{arch}: n* = {sat.n_star}, plateau throughput {sat.plateau_throughput:.2f}")
    print(f"{'n':>6} {'X':>9} {'ART':>9}  busiest processors")
    for r in rows:
        top = sorted(procs, key=lambda p: -r.utilization[p])[:3]
        busy = ", ".join(f"{p} {r.utilization[p]:.3f}" for p in top)
        print(f"{r.n:>6} {r.throughput:>9.3f} {r.art:>9.4f}  {busy}")
