"""The five-phase message-passing simulation of an atomic-state algorithm."""
# %%
from r1w1 import TrParams, generate, mmat11, run_transformed
from r1w1.transformer import check_exclusion, random_init, serialization_witness

g = generate("gnp", 20, 0.2, seed=7)
alg = mmat11()
trace, m = run_transformed(alg, g, random_init(alg, g, 1), TrParams(K=2, seed=1))
print(f"cycles={m.cycles} rounds={m.rounds} moves={m.moves} bcasts={m.bcasts} "
      f"converged={m.converged}")

# %% Who executed in each cycle, and how many were enabled after Phase 1.
for c in m.per_cycle:
    print(f"cycle {c.cycle:2d}  enabled={c.enabled}  executed={c.executed}  coherent={c.coherent}")

# %% Executors are always three or more hops apart, and every cycle equals
# some serial order of its moves.
print("exclusion:", check_exclusion(g, m))
print("serializable:", all(serialization_witness(alg, g, c.pre, c.moves, c.post)
                           for c in trace.cycles))

# %% Starting mid-cycle is harmless after the first Phase 1.
for start in range(1, 6):
    _, m = run_transformed(alg, g, random_init(alg, g, 1), TrParams(seed=1, start_phase=start))
    print(start, m.cycles, m.converged)
