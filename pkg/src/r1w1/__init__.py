"""Self-stabilizing algorithms in the R(1)W(1) atomic-state model.

Modules:

- :mod:`r1w1.topology`    graphs, neighbor sets, generators
- :mod:`r1w1.engine`      serial execution under a central daemon
- :mod:`r1w1.algorithms`  MMat11, MkDom11, MkDep11
- :mod:`r1w1.verifier`    brute-force oracles and exhaustive checking
- :mod:`r1w1.transformer` synchronous message-passing simulation
- :mod:`r1w1.cli`         batch front end
"""
from .algorithms import (BOT, AlgorithmSpec, legitimacy, mkdep11, mkdom11,
                         mmat11, mmat_potentials, parse_algorithm, preset)
from .engine import (GreedyAdversarial, RoundRobinEnabled, Scripted, SeededRandom,
                     apply_move, enabled_rules, execute, is_silent)
from .topology import Graph, build_graph, generate, load_graph
from .transformer import TrParams, run_transformed
from .verifier import verify, verify_closure, verify_convergence

__version__ = "0.1.0"
