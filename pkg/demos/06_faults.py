"""Message loss and memory corruption after and during convergence."""
# %%
from r1w1 import TrParams, generate, mkdom11, run_transformed
from r1w1.transformer import DropRandom, fault_after_convergence, random_init

g = generate("gnp", 18, 0.25, seed=3, connected=True)
alg = mkdom11(1)
init = random_init(alg, g, 3)

# %% Ten rounds of total message loss after convergence leave it legitimate.
_, post, info = fault_after_convergence(alg, g, init, TrParams(seed=3), "drop_all")
print("converged at round", post, "legitimate each round:", info["legit_each_round"])

# %% Corrupting two nodes' state and caches: the system repairs itself.
_, _, info = fault_after_convergence(alg, g, init, TrParams(seed=3), "corrupt", ids=[2, 9])
print(info)

# %% Random loss during convergence slows it down until the loss stops.
for last in (0, 100, 300):
    faults = [DropRandom(0.3, 0, last)] if last else []
    _, m = run_transformed(alg, g, init, TrParams(seed=3, faults=faults))
    print(f"drops until round {last:3d}: silent at round {m.silent_round}")
