"""Fluid approximation against the exact lumped chain for a client/server model.

N clients alternate between requesting (shared with M servers) and thinking.
The fluid throughput min(N/2, M) becomes exact as N grows.
"""

from pepaflow import (compile_model, enumerate_states, expected_throughput,
                      integrate_to_steady_state, parse_model,
                      steady_state_distribution)

TEXT = """
C1 = (req, 1.0).C2;
C2 = (done, 1.0).C1;
S1 = (req, 1.0).S1;
system: C1[{n}] <req> S1[{m}]
"""

print(f"{'N':>4} {'M':>3} {'states':>7} {'X fluid':>10} {'X ctmc':>10} {'rel err':>9}")
for n in (5, 10, 20, 40, 80):
    m = max(1, n // 5)
    pm = compile_model(parse_model(TEXT.format(n=n, m=m)))
    fl = integrate_to_steady_state(pm)
    x_fluid = fl.counts[pm.position[("C", "C2")]]  # done fires at rate C2
    chain = enumerate_states(pm)
    x_ctmc = expected_throughput(chain, steady_state_distribution(chain), "done")
    print(f"{n:>4} {m:>3} {chain.n_states:>7} {x_fluid:>10.6f} {x_ctmc:>10.6f} "
          f"{abs(x_fluid - x_ctmc) / x_ctmc:>9.2e}")
