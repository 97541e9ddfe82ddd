"""How often at least one enabled process wins the local vote."""
# %%
import math

from r1w1.topology import complete, gnp, star
from r1w1.transformer import winner_probability_estimate

c = 1 - math.exp(-math.exp(-0.5))
print(f"lower bound c = {c:.5f}")

# %% Everyone enabled on a clique is the hardest case for the vote.
for K in (2, 3, 5, 10):
    f = winner_probability_estimate(complete(10), range(10), K=K, trials=20_000)
    print(f"K={K:2d}  frequency={f:.4f}")

# %% A single enabled process always wins; so does anyone on a star when votes are distinct.
print(winner_probability_estimate(gnp(15, 0.3, seed=2), [6], trials=1000))
print(winner_probability_estimate(star(9), range(9), n_prime=10**9, trials=1000))

# %% Leaving out a node's own vote lets two neighbors both win in one cycle.
from r1w1 import TrParams, mmat11
from r1w1.algorithms import BOT
from r1w1.transformer import TransformerNetwork

net = TransformerNetwork(mmat11(), complete(2), ((BOT,), (BOT,)),
                         TrParams(own_vote=False, adversarial_start=False))
print("executed together:", net.step_cycle().executed)
