import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from r1w1.algorithms import BOT, mkdep11, mkdom11, mmat11, make_config, random_config
from r1w1.engine import (ContractError, GreedyAdversarial, LocalityError, MoveRecord,
                         RoundRobinEnabled, Scripted, SeededRandom, apply_move,
                         apply_writes, enabled_rules, execute, is_silent,
                         neighborhood_view, parse_daemon, select_process, successors)
from r1w1.topology import all_connected_graphs, build_graph, complete, cycle, gnp, path, star
from r1w1.verifier import enumerate_configs

from oracles import counter_moves, mmat_moves

MM = mmat11()


def q(*ptrs):
    return tuple((p,) for p in ptrs)


# -- enabled_rules ------------------------------------------------------------

def test_enabled_rules_free_neighbor():
    assert enabled_rules(MM, path(3), q(BOT, BOT, BOT), 1) == [2]


def test_enabled_rules_rule1_and_rule2():
    # P0 points at P1 and P2 is free: both guards hold at P1.
    assert enabled_rules(MM, path(3), q(1, BOT, BOT), 1) == [1, 2]


def test_enabled_rules_two_suitors():
    # With P2 also pointing at P1 no neighbor is free, so only Rule 1 holds.
    assert enabled_rules(MM, path(3), q(1, BOT, 1), 1) == [1]


@pytest.mark.parametrize("alg,cfg", [
    (MM, q(1, 0, BOT)),
    (mkdom11(1), ((0, 2), (1, 0), (0, 2), (1, 0))),
])
def test_enabled_rules_legitimate_is_empty(alg, cfg):
    g = path(3) if alg is MM else cycle(4)
    assert alg.legitimate(g, cfg)
    assert all(enabled_rules(alg, g, cfg, i) == [] for i in range(g.n))


# -- apply_move -----------------------------------------------------------------

def test_apply_rule2_lowest_witness():
    cfg, rec = apply_move(MM, path(3), q(BOT, BOT, BOT), 0, 2)
    assert cfg == q(1, 0, BOT)
    assert rec.witness == 1 and set(rec.writes) == {0, 1}


def test_apply_rule1_fixes_only_counter():
    alg = mkdom11(1)
    g = cycle(4)
    before = ((0, 2), (1, 1), (0, 2), (1, 0))
    after, rec = apply_move(alg, g, before, 1, 1)
    assert after == ((0, 2), (1, 0), (0, 2), (1, 0))
    assert rec.writes == {1: {"c": 0}}


def test_apply_disabled_rule_raises():
    with pytest.raises(ContractError):
        apply_move(MM, path(3), q(BOT, BOT, BOT), 0, 1)
    with pytest.raises(ContractError):
        apply_move(MM, path(3), q(BOT, BOT, BOT), 1, 2, witness=1)


def test_write_locality_enforced():
    with pytest.raises(LocalityError):
        apply_writes(MM, path(3), q(BOT, BOT, BOT), 0, {2: {"q": 1}})


def test_view_is_read_local():
    view = neighborhood_view(MM, path(3), q(BOT, BOT, BOT), 0)
    assert 1 in view and 2 not in view
    with pytest.raises(ContractError):
        view[2]


# -- execute / is_silent -------------------------------------------------------------

def test_execute_mmat_scripted():
    t = execute(MM, path(3), q(BOT, BOT, BOT), Scripted([0]))
    assert t.silent and len(t) == 1 and t.final == q(1, 0, BOT)


def test_execute_mkdep_k3():
    alg = mkdep11(0)
    t = execute(alg, complete(3), ((0, 0),) * 3, Scripted([0]))
    assert t.silent and len(t) == 1
    assert alg.output(complete(3), t.final) == {0}


def test_execute_from_legitimate_is_empty():
    t = execute(MM, path(3), q(1, 0, BOT))
    assert t.silent and len(t) == 0


def test_budget_exhaustion_is_reported():
    t = execute(MM, path(3), q(BOT, BOT, BOT), max_moves=0)
    assert t.budget_exhausted and not t.silent
    with pytest.raises(ValueError):
        execute(MM, path(3), q(BOT, BOT, BOT), max_moves=-1)


def test_is_silent_examples():
    assert is_silent(MM, path(3), q(1, 0, BOT))
    assert not is_silent(MM, path(3), q(BOT, BOT, BOT))
    assert is_silent(MM, build_graph(1, []), q(BOT))


# -- daemons ---------------------------------------------------------------------

def test_scripted_skips_disabled():
    assert select_process(Scripted([2, 0]), {0, 1}) == 0


def test_scripted_exhausted_falls_back_to_lowest():
    d = Scripted([1])
    assert select_process(d, {1, 4}) == 1
    assert select_process(d, {3, 4}) == 3


def test_seeded_random_deterministic():
    a = [SeededRandom(7).select([0, 3, 5, 9]) for _ in range(2)]
    assert a[0] == a[1]


def test_round_robin_cyclic():
    assert select_process(RoundRobinEnabled(), {0, 3}, history=[1]) == 3
    assert select_process(RoundRobinEnabled(), {0, 3}, history=[3]) == 0


def test_greedy_returns_member():
    g = gnp(8, 0.4, seed=2)
    cfg = random_config(MM, g, random.Random(2))
    t = execute(MM, g, cfg, GreedyAdversarial())
    assert t.silent and MM.legitimate(g, t.final)


def test_parse_daemon():
    assert isinstance(parse_daemon("random:3"), SeededRandom)
    assert isinstance(parse_daemon("roundrobin"), RoundRobinEnabled)
    assert isinstance(parse_daemon("greedy"), GreedyAdversarial)
    assert isinstance(parse_daemon("scripted:0,2"), Scripted)
    with pytest.raises(ValueError):
        parse_daemon("fair")


# -- traces -------------------------------------------------------------------------

def test_jsonl_roundtrip():
    g = gnp(10, 0.3, seed=4)
    t = execute(MM, g, random_config(MM, g, random.Random(4)), SeededRandom(4))
    lines = t.to_jsonl().splitlines()
    assert len(lines) == len(t)
    recs = [MoveRecord.from_json(json.loads(line)) for line in lines]
    assert {"step", "proc", "rule", "writes"} <= set(json.loads(lines[0]))
    assert recs == t.moves


# -- oracle agreement over whole state spaces ---------------------------------------------

SMALL = [g for n in (2, 3, 4) for g in all_connected_graphs(n)]


@pytest.mark.parametrize("g", SMALL, ids=repr)
def test_mmat_successors_match_oracle(g):
    adj = [list(g.neighbors(i)) for i in range(g.n)]
    for cfg in enumerate_configs(MM, g):
        mine = {(i, r, w, tuple(rec[0] for rec in c)) for i, r, w, c in successors(MM, g, cfg)}
        assert mine == set(mmat_moves(adj, [rec[0] for rec in cfg]))


@pytest.mark.parametrize("kind,k", [("dom", 1), ("dom", 2), ("dep", 0), ("dep", 1)])
@pytest.mark.parametrize("g", [path(3), cycle(4), complete(3), star(4)], ids=repr)
def test_counter_successors_match_oracle(g, kind, k):
    alg = mkdom11(k) if kind == "dom" else mkdep11(k)
    adj = [list(g.neighbors(i)) for i in range(g.n)]
    for cfg in enumerate_configs(alg, g):
        x = [rec[0] for rec in cfg]
        c = [rec[1] for rec in cfg]
        mine = {(i, r, tuple(a for a, _ in s), tuple(b for _, b in s))
                for i, r, _, s in successors(alg, g, cfg)}
        assert mine == set(counter_moves(adj, x, c, k, kind))


# -- properties ----------------------------------------------------------------------

algs = st.sampled_from([mmat11(), mkdom11(1), mkdom11(2), mkdep11(0), mkdep11(1)])


@settings(max_examples=120, deadline=None)
@given(algs, st.integers(1, 16), st.floats(0.05, 0.6), st.integers(0, 10**6),
       st.sampled_from(["random", "roundrobin", "greedy"]))
def test_execution_properties(alg, n, p, seed, daemon):
    g = gnp(n, p, seed=seed)
    rng = random.Random(seed)
    cfg0 = random_config(alg, g, rng)
    d = parse_daemon(f"random:{seed}" if daemon == "random" else daemon)
    t = execute(alg, g, cfg0, d)
    assert t.silent and alg.legitimate(g, t.final)
    assert t.replay(alg, g) == t.final
    cfgs = list(t.configurations(alg, g))
    for mv, before, after in zip(t.moves, cfgs, cfgs[1:]):
        assert mv.rule == enabled_rules(alg, g, before, mv.proc)[0]
        changed = {j for j in range(g.n) if before[j] != after[j]}
        assert changed <= {mv.proc, *g.neighbors(mv.proc)}
        assert changed  # every move changes something


def test_make_config_sanitizes():
    g = path(3)
    assert make_config(MM, g, [(2,), (0,), (BOT,)]) == q(BOT, 0, BOT)
    assert make_config(mkdom11(1), g, [(5, 9), (0, -3), (1, 1)]) == ((1, 1), (0, 0), (1, 1))
