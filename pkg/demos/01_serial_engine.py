"""Serial execution of the maximal matching algorithm under different daemons."""
# %% Build a small graph and an arbitrary starting configuration.
import random

from r1w1 import execute, generate, mmat11, mmat_potentials
from r1w1.algorithms import random_config
from r1w1.engine import GreedyAdversarial, RoundRobinEnabled, SeededRandom

g = generate("gnp", 12, 0.3, seed=4, connected=True)
alg = mmat11()
start = random_config(alg, g, random.Random(4))
print(g)

# %% Each daemon picks one enabled process per step; the run stops when silent.
for daemon in (SeededRandom(1), RoundRobinEnabled(), GreedyAdversarial()):
    t = execute(alg, g, start, daemon)
    print(f"{daemon!r:24} moves={len(t):2d} legitimate={alg.legitimate(g, t.final)}")

# %% The potentials (A, B) along one run: A counts matched pairs.
t = execute(alg, g, start, SeededRandom(1))
timeline = [mmat_potentials(g, c) for c in t.configurations(alg, g)]
print(" -> ".join(f"{a},{b}" for a, b in timeline))
print("matching:", sorted(alg.output(g, t.final)))

# %% Traces export as JSON lines and replay to the same final configuration.
print(t.to_jsonl().splitlines()[0])
assert t.replay(alg, g) == t.final
