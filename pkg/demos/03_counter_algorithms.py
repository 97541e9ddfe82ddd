"""k-domination and k-dependency with neighbor counters."""
# %%
import random

from r1w1 import execute, generate, mkdep11, mkdom11
from r1w1.algorithms import random_config
from r1w1.engine import SeededRandom
from r1w1.verifier import (check_counter_trace, oracle_maximal_k_dependent,
                           oracle_minimal_k_dominating)

g = generate("gnp", 25, 0.2, seed=11, connected=True)

# %% Minimal 2-dominating set from a random start.
alg = mkdom11(2)
t = execute(alg, g, random_config(alg, g, random.Random(0)), SeededRandom(0))
s = alg.output(g, t.final)
print(f"|S|={len(s)} moves={len(t)} (4n={4 * g.n}) oracle={oracle_minimal_k_dominating(g, s, 2)}")

# %% Per-process rule counts stay within their caps.
worst = max(sum(t.rule_counts(i).values()) for i in range(g.n))
print("most moves by one process:", worst, "violations:", check_counter_trace(alg, g, t).violations)

# %% Maximal independent set is the k = 0 case of k-dependency.
alg = mkdep11(0)
t = execute(alg, g, random_config(alg, g, random.Random(1)), SeededRandom(1))
s = alg.output(g, t.final)
print(f"MIS size {len(s)}, maximal: {oracle_maximal_k_dependent(g, s, 0)}")
