"""Exhaustive closure and convergence checks on tiny graphs."""
# %%
import time

from r1w1 import mkdep11, mkdom11, mmat11, verify
from r1w1.algorithms import mmat11_without_rule5
from r1w1.topology import all_connected_graphs, complete, cycle, path, star

# %% Matching on every connected graph with up to four vertices.
t0 = time.perf_counter()
for n in range(1, 5):
    for g in all_connected_graphs(n):
        r = verify(mmat11(), g)
        print(f"n={n} m={g.m}  configs={r.configs_explored:4d}  "
              f"worst={r.worst_case_moves} bound={r.analytic_bound}  ok={r.passed}")
print(f"{time.perf_counter() - t0:.2f}s")

# %% Counter-based algorithms: worst cases sit well under 4n.
for alg in (mkdom11(1), mkdom11(2), mkdep11(0), mkdep11(1)):
    worst = [verify(alg, g).worst_case_moves for g in (path(3), cycle(4), complete(3), star(5))]
    print(alg.selector(), worst)

# %% Negative control: without its give-up rule, matching gets stuck.
r = verify(mmat11_without_rule5(), path(3))
print("closure counterexample:", r.closure_counterexample)
print("convergence failure:", r.convergence_failure)
