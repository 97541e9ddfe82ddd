"""The matching potential B can grow; (A, B) still improves lexicographically."""
# %%
from r1w1 import apply_move, mmat11, mmat_potentials
from r1w1.algorithms import BOT
from r1w1.topology import path

g, alg = path(3), mmat11()
before = ((1,), (BOT,), (1,))          # P0 and P2 both point at free P1
after, rec = apply_move(alg, g, before, 0, 3)
print("rule", rec.rule, mmat_potentials(g, before), "->", mmat_potentials(g, after))

# %% Over many random runs, B rises often but A never falls and no move stalls.
import random

from r1w1 import execute
from r1w1.algorithms import random_config
from r1w1.engine import SeededRandom
from r1w1.topology import gnp
from r1w1.verifier import check_mmat_trace

tally = {}
for seed in range(300):
    h = gnp(20, 0.2, seed=seed)
    t = execute(alg, h, random_config(alg, h, random.Random(seed)), SeededRandom(seed))
    for prop, v in check_mmat_trace(h, t).violations.items():
        tally[prop] = tally.get(prop, 0) + len(v)
print(tally)
