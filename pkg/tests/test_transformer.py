import csv
import io
import json
import random
from collections import Counter

import pytest
from scipy.stats import chisquare

from r1w1.algorithms import BOT, mkdep11, mkdom11, mmat11, random_config
from r1w1.engine import apply_move, enabled_processes
from r1w1.topology import build_graph, complete, cycle, gnp, path, random_tree, star
from r1w1.transformer import (CorruptState, DropAll, DropRandom, ExclusionViolated,
                              Message, TrNode, TrParams, TransformerNetwork,
                              check_cache_coherent, check_exclusion,
                              fault_after_convergence, inject_fault, metrics_json,
                              random_init, rows_to_csv, run_transformed,
                              serialization_witness, sweep, unique_max_sender,
                              winner_probability_estimate, SWEEP_COLUMNS)
from r1w1.verifier import analytic_bound

MM = mmat11()
ALGS = [mmat11(), mkdom11(1), mkdep11(0)]


def q(*ptrs):
    return tuple((p,) for p in ptrs)


def quiet(**kw):
    """Coherent caches and idle voting variables at start-up."""
    return TrParams(adversarial_start=False, **kw)


# -- parameters ---------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(K=1), dict(n_prime=2), dict(start_phase=6)])
def test_params_rejected(kw):
    with pytest.raises(ValueError):
        TrParams(**kw).validate(3)


def test_vote_range():
    assert TrParams(K=3).vote_range(10) == 30
    assert TrParams(K=2, n_prime=25).vote_range(10) == 50


# -- Phase 1 ---------------------------------------------------------------------

def _node(pid, nbrs, x, cache, seed=0):
    return TrNode(pid, tuple(nbrs), x, dict(cache), random.Random(seed))


def test_phase1_corrects_stale_cache():
    g = path(3)
    node = _node(1, [0, 2], (BOT,), {0: (BOT,), 2: (BOT,)})
    node.phase1_step([Message(0, "state", (1,)), Message(2, "state", (1,))], MM, g, 6)
    assert node.C == {0: (1,), 2: (1,)}
    assert node.g and 1 <= node.r <= 6


def test_phase1_disabled_draws_nothing():
    g = path(3)
    node = _node(0, [1], (1,), {1: (BOT,)})
    node.phase1_step([Message(1, "state", (0,))], MM, g, 6)
    assert not node.g and node.r is None


def test_phase1_votes_uniform():
    g = path(3)
    R = 20
    node = _node(1, [0, 2], (BOT,), {0: (BOT,), 2: (BOT,)}, seed=11)
    draws = Counter()
    for _ in range(100_000):
        node.phase1_step([], MM, g, R)
        draws[node.r] += 1
    assert set(draws) == set(range(1, R + 1))
    assert chisquare([draws[v] for v in range(1, R + 1)]).pvalue > 0.001


# -- Phase 2 -----------------------------------------------------------------------

def test_unique_max_examples():
    assert unique_max_sender([(5, "a"), (3, "b")]) == "a"
    assert unique_max_sender([(5, "a"), (5, "b")]) is None
    assert unique_max_sender([]) is None


def test_phase2_received_only():
    node = _node(0, [1, 2], (BOT,), {})
    node.g, node.r = True, 9
    node.phase2_step([Message(1, "vote", 5), Message(2, "vote", 3)], own_vote=False)
    assert node.w == 1


def test_phase2_own_vote_counts():
    node = _node(0, [1, 2], (BOT,), {})
    node.g, node.r = True, 9
    node.phase2_step([Message(1, "vote", 5), Message(2, "vote", 3)])
    assert node.w == 0
    node.r = 5
    node.phase2_step([Message(1, "vote", 5)])
    assert node.w is None


# -- Phase 3 ---------------------------------------------------------------------

def _lone_enabled_mkdom():
    # S = {1, 3} is a minimal dominating set of P5; only P2's counter is wrong.
    g = path(5)
    cfg = ((0, 1), (1, 0), (0, 0), (1, 0), (0, 1))
    return g, cfg


def test_lone_enabled_node_executes():
    alg = mkdom11(1)
    g, cfg = _lone_enabled_mkdom()
    assert enabled_processes(alg, g, cfg) == [2]
    net = TransformerNetwork(alg, g, cfg, quiet(seed=5))
    m = net.step_cycle()
    assert m.executed == [2] and m.enabled == 1
    assert alg.legitimate(g, net.projected())


def test_distance_two_competitors_one_named():
    center = _node(1, [0, 2], (BOT,), {})
    center.phase2_step([Message(0, "vote", 7), Message(2, "vote", 4)])
    assert center.w == 0
    loser = _node(2, [1, 3], (BOT,), {1: (BOT,), 3: (BOT,)})
    loser.g = True
    loser.phase3_step([Message(1, "winner", 0), Message(3, "winner", 2)], MM, path(4))
    assert not loser.executed


def test_isolated_enabled_node_executes():
    alg = mkdom11(1)
    g = build_graph(1, [])
    _, m = run_transformed(alg, g, ((0, 0),), quiet())
    assert m.per_cycle[0].executed == [0]
    assert m.converged


# -- Phase 4 / 5 ----------------------------------------------------------------------

def test_phase4_adopts_named_entry():
    j = _node(1, [0], (BOT,), {0: (BOT,)})
    j.phase4_step([Message(0, "update", ((1,), {1: (0,)}))])
    assert j.x == (0,) and j.modified and j.C[0] == (1,)


def test_phase4_cache_only_when_not_named():
    j = _node(2, [1], (BOT,), {1: (BOT,)})
    j.phase4_step([Message(1, "update", ((0,), {0: (1,)}))])
    assert j.x == (BOT,) and not j.modified and j.C[1] == (0,)


def test_rule2_winner_matches_engine():
    g = path(2)
    pre = q(BOT, BOT)
    net = TransformerNetwork(MM, g, pre, quiet(seed=3))
    while not net.step_cycle().executed:
        pass
    (mv,) = net.trace.cycles[-1].moves
    expect, _ = apply_move(MM, g, pre, mv[0], mv[1])
    assert net.projected() == expect
    assert check_cache_coherent(net)


def test_no_enabled_only_phase1_broadcasts():
    g = path(3)
    net = TransformerNetwork(MM, g, q(1, 0, BOT), quiet())
    m = net.step_cycle()
    assert m.enabled == 0 and m.executed == [] and m.bcasts == g.n


def test_seven_node_path_two_victims():
    # 0-1 matched; P2 and P5 are three hops apart and each grabs a free
    # neighbor (P3 and P4), which are adjacent to each other.
    g = path(7)
    pre = q(1, 0, BOT, BOT, BOT, BOT, BOT)
    net = TransformerNetwork(MM, g, pre, quiet())
    net.step_round()  # Phase 1
    for node in net.nodes:
        if node.g:
            node.r = net.R if node.id in (2, 5) else 1
    while net.phase != 1:
        net.step_round()
    rec = net.trace.cycles[-1]
    m = net.metrics.per_cycle[-1]
    assert m.executed == [2, 5]
    assert net.projected() == q(1, 0, 3, 2, 5, 4, BOT)
    assert check_cache_coherent(net)
    assert net.nodes[3].C[4] == (5,) and net.nodes[4].C[3] == (2,)
    assert serialization_witness(MM, g, rec.pre, rec.moves, rec.post)


# -- exclusion / coherency / serialization ------------------------------------------

def test_check_exclusion_examples():
    assert check_exclusion(path(6), {3})
    assert check_exclusion(path(6), {0, 5})
    assert not check_exclusion(path(6), {0, 2})


def test_coherency_lifecycle():
    g = gnp(15, 0.25, seed=2, connected=True)
    net = TransformerNetwork(MM, g, random_init(MM, g, 2), TrParams(seed=2))
    assert not check_cache_coherent(net)
    net.step_round()
    assert check_cache_coherent(net)
    for _ in range(30):
        assert net.step_cycle().coherent


def test_serialization_examples():
    g = path(6)
    pre = q(BOT, BOT, BOT, BOT, BOT, BOT)
    post1, r1 = apply_move(MM, g, pre, 0, 2)
    assert serialization_witness(MM, g, pre, [(0, 2, 1, r1.writes)], post1)
    post2, r2 = apply_move(MM, g, post1, 5, 2)
    moves = [(0, 2, 1, r1.writes), (5, 2, 4, r2.writes)]
    assert serialization_witness(MM, g, pre, moves, post2)
    assert not serialization_witness(MM, g, pre, moves, post1)
    with pytest.raises(ExclusionViolated):
        serialization_witness(MM, g, pre, [(0, 2, 1, {}), (2, 2, 3, {})], pre)


@pytest.mark.parametrize("alg", ALGS, ids=lambda a: a.name)
@pytest.mark.parametrize("start", [1, 2, 3, 4, 5])
def test_runs_converge_safely(alg, start):
    for seed in range(4):
        g = gnp(20, 0.2, seed=seed, connected=True)
        trace, m = run_transformed(alg, g, random_init(alg, g, seed),
                                   TrParams(seed=seed, start_phase=start))
        assert m.converged and alg.legitimate(g, trace.final)
        assert check_exclusion(g, m)
        assert all(c.coherent for c in m.per_cycle if not c.warmup)
        assert all(c.bcasts <= 5 * g.n for c in m.per_cycle)
        steady = sum(len(c.moves) for c, pc in zip(trace.cycles, m.per_cycle)
                     if not pc.warmup)
        assert steady <= analytic_bound(alg, g.n)
        for c, pc in zip(trace.cycles, m.per_cycle):
            if not pc.warmup and c.moves:
                assert serialization_witness(alg, g, c.pre, c.moves, c.post)


def test_run_is_deterministic():
    g = gnp(20, 0.2, seed=7)
    out = [metrics_json(*run_transformed(MM, g, random_init(MM, g, 1), TrParams(seed=1)), MM)
           for _ in range(2)]
    assert json.dumps(out[0]) == json.dumps(out[1])
    assert {"cycles", "rounds", "bcasts", "moves", "converged", "per_cycle"} <= set(out[0])


# -- winner probability -------------------------------------------------------------

def test_winner_probability_complete10():
    assert winner_probability_estimate(complete(10), range(10), K=2, trials=10_000) >= 0.45


def test_winner_probability_single_enabled():
    assert winner_probability_estimate(gnp(12, 0.3, seed=1), [4], trials=2000) == 1.0


def test_star_distinct_votes_one_winner():
    g = star(8)
    assert winner_probability_estimate(g, range(8), n_prime=10**9, trials=5000) == 1.0


def test_own_vote_ablation_breaks_exclusion():
    # Neighbors only: each endpoint of an edge sees just the other's vote
    # and names it, so both execute in the same cycle.
    g = path(2)
    net = TransformerNetwork(MM, g, q(BOT, BOT), quiet(own_vote=False))
    m = net.step_cycle()
    assert m.executed == [0, 1]
    assert not check_exclusion(g, m.executed)


# -- faults -------------------------------------------------------------------------

@pytest.mark.parametrize("alg", ALGS, ids=lambda a: a.name)
def test_drop_all_after_convergence(alg):
    g = gnp(15, 0.25, seed=4, connected=True)
    net, post, info = fault_after_convergence(alg, g, random_init(alg, g, 4),
                                              TrParams(seed=4), "drop_all")
    assert post is not None and len(info["legit_each_round"]) == 10
    assert all(info["legit_each_round"])


@pytest.mark.parametrize("alg", ALGS, ids=lambda a: a.name)
def test_corrupt_reconverges(alg):
    g = gnp(15, 0.25, seed=5, connected=True)
    net, post, info = fault_after_convergence(alg, g, random_init(alg, g, 5),
                                              TrParams(seed=5), "corrupt", ids=[3, 8])
    assert info["reconverged"]
    assert info["moves_after"] <= analytic_bound(alg, g.n)


def test_drop_random_resumes_after_plan():
    g = gnp(20, 0.2, seed=9, connected=True)
    p = TrParams(seed=9, faults=[DropRandom(0.3, 0, 200)])
    trace, m = run_transformed(MM, g, random_init(MM, g, 9), p)
    assert m.converged and m.rounds > 200


def test_corrupt_state_scheduled():
    g = cycle(6)
    net = TransformerNetwork(MM, g, q(1, 0, 3, 2, 5, 4), quiet(seed=1))
    inject_fault(net, CorruptState((0, 1), 2))
    assert net.faults_pending()
    assert net.run()
    assert MM.legitimate(g, net.projected())


def test_drop_all_blocks_delivery():
    g = path(2)
    net = TransformerNetwork(MM, g, q(BOT, BOT), quiet(faults=[DropAll(0, 9)]))
    net.step_cycle()
    net.step_cycle()
    assert net.metrics.moves == 0


# -- sweep ---------------------------------------------------------------------------

def test_sweep_csv():
    rows = sweep(mkdep11(0), lambda n, s: gnp(n, 0.3, seed=s, connected=True),
                 lambda g, s: random_init(mkdep11(0), g, s), [5, 8], [0, 1, 2])
    text = rows_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0]) == SWEEP_COLUMNS
    assert [(int(r["n"]), int(r["seed"])) for r in parsed] == [
        (n, s) for n in (5, 8) for s in (0, 1, 2)]
    assert all(int(r["moves"]) <= 4 * int(r["n"]) for r in parsed)
