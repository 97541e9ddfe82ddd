"""Synchronous message-passing execution of an R(1)W(1) algorithm.

Every node keeps its own state ``x``, a cache ``C`` of its neighbors' states
and a little voting machinery. Rounds are grouped into five-phase cycles:

1. broadcast ``x``; refresh the cache; evaluate guards; draw a vote if enabled
2. broadcast the vote; pick the sender of the unique largest vote
3. broadcast the pick; a node named by every neighbor executes its command
4. an executor broadcasts its new ``x`` and the neighbor states it wrote
5. a node whose ``x`` was written by a neighbor rebroadcasts it

Within a round all sends are computed from the pre-round state before any
node processes its inbox.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import random
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .algorithms import AlgorithmSpec, config_to_json, random_config
from .engine import (Configuration, ContractError, NeighborhoodView,
                     apply_move, is_silent)
from .topology import Graph

STATE, VOTE, WINNER, UPDATE = "state", "vote", "winner", "update"
PHASE_KIND = {1: STATE, 2: VOTE, 3: WINNER, 4: UPDATE, 5: STATE}


# -- faults ------------------------------------------------------------------

@dataclass(frozen=True)
class DropAll:
    """Drop every delivery in rounds ``first..last`` (inclusive)."""
    first: int
    last: int

    def drops(self, rnd, rng):
        return self.first <= rnd <= self.last


@dataclass(frozen=True)
class DropRandom:
    """Drop each delivery independently with probability ``p`` in rounds
    ``first..last``."""
    p: float
    first: int
    last: int

    def drops(self, rnd, rng):
        return self.first <= rnd <= self.last and rng.random() < self.p


@dataclass(frozen=True)
class CorruptState:
    """Overwrite ``x`` and ``C`` of ``ids`` with random domain values at the
    start of cycle ``cycle``."""
    ids: tuple
    cycle: int


def inject_fault(net: "TransformerNetwork", fault) -> None:
    """Schedule ``fault`` on a running network."""
    net.faults.append(fault)


# -- parameters and records --------------------------------------------------

@dataclass
class TrParams:
    K: int = 2
    n_prime: int | None = None
    seed: int = 0
    start_phase: int = 1
    max_cycles: int = 10_000
    faults: list = field(default_factory=list)
    # Count a node's own vote when it picks a winner candidate. Without it two
    # adjacent enabled nodes can name each other and both execute.
    own_vote: bool = True
    # Arbitrary caches and voting variables at start-up (self-stabilizing
    # setting); otherwise caches start coherent and nodes idle.
    adversarial_start: bool = True
    record_rounds: bool = False

    def validate(self, n: int) -> None:
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")
        if self.n_prime is not None and self.n_prime < n:
            raise ValueError(f"n_prime={self.n_prime} is below n={n}")
        if self.start_phase not in (1, 2, 3, 4, 5):
            raise ValueError(f"start_phase must be in 1..5, got {self.start_phase}")

    def vote_range(self, n: int) -> int:
        return self.K * (self.n_prime if self.n_prime is not None else n)


@dataclass(frozen=True)
class Message:
    sender: int
    kind: str
    payload: object


@dataclass
class CycleMetrics:
    cycle: int
    first_round: int
    executed: list
    bcasts: int
    coherent: bool
    enabled: int | None   # |H(t)| after Phase 1; None if the cycle had no Phase 1
    warmup: bool          # no Phase 1 has completed before this cycle's voting

    def to_dict(self):
        return asdict(self)


@dataclass
class CycleRecord:
    pre: Configuration
    moves: list           # (proc, rule, witness, writes)
    post: Configuration


@dataclass
class TransformedTrace:
    initial: Configuration
    cycles: list = field(default_factory=list)
    rounds_legit: list = field(default_factory=list)
    final: Configuration = None


@dataclass
class Metrics:
    cycles: int = 0
    rounds: int = 0
    bcasts: int = 0
    moves: int = 0
    converged: bool = False
    silent_round: int | None = None
    per_cycle: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"cycles": self.cycles, "rounds": self.rounds, "bcasts": self.bcasts,
                "moves": self.moves, "converged": self.converged,
                "silent_round": self.silent_round,
                "per_cycle": [c.to_dict() for c in self.per_cycle]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- nodes -------------------------------------------------------------------

class TrNode:
    """Runtime of one process: state, cache and voting variables."""

    def __init__(self, pid: int, neighbors: tuple, x: tuple, cache: dict,
                 rng: random.Random):
        self.id = pid
        self.neighbors = neighbors
        self.x = x
        self.C = cache
        self.r = None
        self.g = False
        self.w = None
        self.M: list[Message] = []
        self.executed = False
        self.modified = False
        self.delta: dict = {}
        self.move = None
        self.rng = rng

    def view(self, alg: AlgorithmSpec, g: Graph) -> NeighborhoodView:
        records = {self.id: self.x}
        degrees = {self.id: len(self.neighbors)}
        for j in self.neighbors:
            records[j] = self.C[j]
            degrees[j] = g.degree(j)
        return NeighborhoodView(self.id, self.neighbors, records, degrees, alg.index)

    def send(self, phase: int):
        """Payload this node broadcasts in ``phase``, or None."""
        if phase == 1:
            return self.x
        if phase == 2:
            return self.r if self.g else None
        if phase == 3:
            return self.w
        if phase == 4:
            return (self.x, dict(self.delta)) if self.executed else None
        if phase == 5:
            return self.x if self.modified else None
        raise ValueError(phase)

    def phase1_step(self, incoming, alg, g, R):
        for m in incoming:
            self.C[m.sender] = m.payload
        view = self.view(alg, g)
        self.g = any(r.witnesses(view) for r in alg.rules)
        self.r = self.rng.randint(1, R) if self.g else None

    def phase2_step(self, incoming, own_vote=True):
        votes = [(m.payload, m.sender) for m in incoming]
        if own_vote and self.g:
            votes.append((self.r, self.id))
        self.w = unique_max_sender(votes)

    def phase3_step(self, incoming, alg, g):
        named = {m.sender: m.payload for m in incoming}
        if not self.g or any(named.get(j) != self.id for j in self.neighbors):
            return
        view = self.view(alg, g)
        for rule in alg.rules:
            options = rule.witnesses(view)
            if options:
                witness = options[0]
                writes = rule.command(view, witness)
                break
        else:
            return
        delta = {}
        for j, assignment in writes.items():
            rec = list(self.x if j == self.id else self.C[j])
            for var, val in assignment.items():
                rec[alg.index[var]] = val
            if j == self.id:
                self.x = tuple(rec)
            else:
                self.C[j] = tuple(rec)
                delta[j] = tuple(rec)
        self.delta = delta
        self.executed = True
        self.move = (self.id, rule.id, witness, writes)

    def phase4_step(self, incoming):
        for m in incoming:
            x, delta = m.payload
            self.C[m.sender] = x
            if self.id in delta and delta[self.id] != self.x:
                self.x = delta[self.id]
                self.modified = True

    def phase5_step(self, incoming):
        for m in incoming:
            self.C[m.sender] = m.payload

    def end_cycle(self):
        self.executed = False
        self.modified = False
        self.delta = {}
        self.move = None
        self.w = None


def unique_max_sender(votes):
    """Sender of the strictly largest vote, or None on a tie or no votes."""
    if not votes:
        return None
    top = max(v for v, _ in votes)
    senders = [s for v, s in votes if v == top]
    return senders[0] if len(senders) == 1 else None


def node_rng(seed: int, pid: int) -> random.Random:
    state = np.random.SeedSequence([seed, pid]).generate_state(2)
    return random.Random(int(state[0]) << 32 | int(state[1]))


# -- network -----------------------------------------------------------------

class TransformerNetwork:
    """A resumable synchronous simulation of the transformed algorithm."""

    def __init__(self, alg: AlgorithmSpec, g: Graph, init_cfg: Configuration,
                 params: TrParams | None = None):
        self.alg = alg
        self.g = g
        self.params = params or TrParams()
        self.params.validate(g.n)
        self.R = self.params.vote_range(g.n)
        self.faults = list(self.params.faults)
        seed = self.params.seed
        self.fault_rng = random.Random(f"faults:{seed}")
        init_rng = random.Random(f"init:{seed}")
        self.nodes = []
        for i in range(g.n):
            if self.params.adversarial_start:
                cache = {j: tuple(init_rng.choice(d) for d in alg.domains(g, j))
                         for j in g.adj[i]}
            else:
                cache = {j: init_cfg[j] for j in g.adj[i]}
            self.nodes.append(TrNode(i, g.adj[i], init_cfg[i], cache, node_rng(seed, i)))
        if self.params.adversarial_start:
            for node in self.nodes:
                node.g = init_rng.random() < 0.5
                node.r = init_rng.randint(1, self.R) if node.g else None
                node.w = init_rng.choice([None, node.id, *node.neighbors])
        self.round = 0
        self.cycle = 0
        self.phase1_done = False
        self.trace = TransformedTrace(initial=init_cfg)
        self.metrics = Metrics()
        self._begin_cycle()

    # phase clock
    def phase_of(self, rnd: int) -> int:
        return (rnd + self.params.start_phase - 1) % 5 + 1

    @property
    def phase(self) -> int:
        return self.phase_of(self.round)

    def projected(self) -> Configuration:
        return tuple(node.x for node in self.nodes)

    def _begin_cycle(self):
        for f in self.faults:
            if isinstance(f, CorruptState) and f.cycle == self.cycle:
                self._corrupt(f.ids)
        self._cyc = {"first_round": self.round, "bcasts": 0, "enabled": None,
                     "warmup": not (self.phase1_done or self.phase == 1),
                     "pre": self.projected(), "moves": []}

    def _corrupt(self, ids):
        alg, g, rng = self.alg, self.g, self.fault_rng
        for i in ids:
            node = self.nodes[i]
            node.x = tuple(rng.choice(d) for d in alg.domains(g, i))
            node.C = {j: tuple(rng.choice(d) for d in alg.domains(g, j))
                      for j in g.adj[i]}

    def _dropped(self, rnd: int) -> bool:
        return any(f.drops(rnd, self.fault_rng) for f in self.faults
                   if not isinstance(f, CorruptState))

    def faults_pending(self) -> bool:
        for f in self.faults:
            if isinstance(f, CorruptState):
                if f.cycle > self.cycle:
                    return True
            elif f.last >= self.round:
                return True
        return False

    def step_round(self) -> None:
        """One synchronous round: all sends, delivery, then all receives."""
        phase = self.phase
        alg, g, p = self.alg, self.g, self.params
        outgoing = [(node.id, node.send(phase)) for node in self.nodes]
        inbox: list[list[Message]] = [[] for _ in self.nodes]
        kind = PHASE_KIND[phase]
        sent = 0
        for sender, payload in outgoing:
            if payload is None:
                continue
            sent += 1
            for j in g.adj[sender]:
                if not self._dropped(self.round):
                    inbox[j].append(Message(sender, kind, payload))
        self._cyc["bcasts"] += sent
        for node, msgs in zip(self.nodes, inbox):
            node.M = msgs
            if phase == 1:
                node.phase1_step(msgs, alg, g, self.R)
            elif phase == 2:
                node.phase2_step(msgs, p.own_vote)
            elif phase == 3:
                node.phase3_step(msgs, alg, g)
            elif phase == 4:
                node.phase4_step(msgs)
            else:
                node.phase5_step(msgs)
        if phase == 1:
            self.phase1_done = True
            self._cyc["enabled"] = sum(node.g for node in self.nodes)
        elif phase == 3:
            self._cyc["moves"] = [node.move for node in self.nodes if node.move]
        self.round += 1
        self.metrics.rounds = self.round
        self.metrics.bcasts += sent
        if p.record_rounds:
            cfg = self.projected()
            self.trace.rounds_legit.append((self.round - 1, phase, alg.legitimate(g, cfg)))
        if phase == 5:
            self._end_cycle()

    def _end_cycle(self):
        c = self._cyc
        moves = c["moves"]
        post = self.projected()
        m = CycleMetrics(cycle=self.cycle, first_round=c["first_round"],
                         executed=sorted(mv[0] for mv in moves), bcasts=c["bcasts"],
                         coherent=check_cache_coherent(self), enabled=c["enabled"],
                         warmup=c["warmup"])
        self.metrics.per_cycle.append(m)
        self.metrics.moves += len(moves)
        self.metrics.cycles += 1
        self.trace.cycles.append(CycleRecord(c["pre"], moves, post))
        for node in self.nodes:
            node.end_cycle()
        self.cycle += 1
        self._last = m
        self._begin_cycle()

    def step_cycle(self) -> CycleMetrics:
        start = self.cycle
        while self.cycle == start:
            self.step_round()
        return self._last

    def run(self, max_cycles: int | None = None) -> bool:
        """Run whole cycles until one passes with nothing enabled and no
        fault still scheduled, or ``max_cycles`` more cycles have run.
        Returns True on silence."""
        budget = self.params.max_cycles if max_cycles is None else max_cycles
        for _ in range(budget):
            m = self.step_cycle()
            if (m.enabled == 0 and not m.executed and not self.faults_pending()
                    and is_silent(self.alg, self.g, self.projected())):
                self.metrics.silent_round = self.round - 1
                self.metrics.converged = self.alg.legitimate(self.g, self.projected())
                self.trace.final = self.projected()
                return True
        self.metrics.converged = False
        self.trace.final = self.projected()
        return False

    def run_rounds(self, count: int) -> None:
        for _ in range(count):
            self.step_round()
        self.trace.final = self.projected()


def run_transformed(alg: AlgorithmSpec, g: Graph, init_cfg: Configuration,
                    params: TrParams | None = None):
    """Simulate until silence or ``params.max_cycles``.

    Returns ``(TransformedTrace, Metrics)``.
    """
    net = TransformerNetwork(alg, g, init_cfg, params)
    net.run()
    return net.trace, net.metrics


# -- checks ------------------------------------------------------------------

def check_cache_coherent(net: TransformerNetwork) -> bool:
    """Every cached neighbor state equals that neighbor's actual state."""
    nodes = net.nodes
    return all(node.C[j] == nodes[j].x for node in nodes for j in node.neighbors)


def exclusion_violations(g: Graph, executed) -> list[tuple[int, int]]:
    return [(a, b) for a, b in itertools.combinations(sorted(executed), 2)
            if g.distance(a, b) < 3]


def check_exclusion(g: Graph, metrics, include_warmup: bool = False) -> bool:
    """True iff in every cycle the executors are pairwise at distance >= 3.

    ``metrics`` is a :class:`Metrics`, a list of :class:`CycleMetrics`, or a
    single executed set.
    """
    if isinstance(metrics, Metrics):
        metrics = metrics.per_cycle
    if metrics and not isinstance(next(iter(metrics)), CycleMetrics):
        return not exclusion_violations(g, metrics)
    return all(not exclusion_violations(g, m.executed)
               for m in metrics if include_warmup or not m.warmup)


class ExclusionViolated(ValueError):
    pass


def serialization_witness(alg: AlgorithmSpec, g: Graph, pre: Configuration,
                          moves, post: Configuration) -> bool:
    """Replay a cycle's moves serially in every order; True iff every order
    reaches ``post``. Raises :class:`ExclusionViolated` when the executors are
    not pairwise three hops apart (the replay is then meaningless)."""
    procs = [mv[0] for mv in moves]
    if exclusion_violations(g, procs):
        raise ExclusionViolated(f"executors {procs} are within two hops")
    for order in itertools.permutations(moves):
        cfg = pre
        try:
            for proc, rule, witness, _ in order:
                cfg, _ = apply_move(alg, g, cfg, proc, rule, witness=witness)
        except ContractError:
            return False
        if cfg != post:
            return False
    return True


def winner_probability_estimate(g: Graph, enabled, K: int = 2, trials: int = 10_000,
                                n_prime: int | None = None, seed: int = 0,
                                own_vote: bool = True) -> float:
    """Monte Carlo frequency of voting rounds in which at least one enabled
    node meets the execution condition (vectorised over trials)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    R = K * (n_prime or g.n)
    enabled = sorted(enabled)
    rng = np.random.default_rng(seed)
    votes = np.zeros((trials, g.n), dtype=np.int64)
    if enabled:
        votes[:, enabled] = rng.integers(1, R + 1, size=(trials, len(enabled)))
    en = set(enabled)
    cand = np.full((trials, g.n), -1, dtype=np.int64)
    for j in range(g.n):
        pool = list(g.adj[j]) + ([j] if own_vote and j in en else [])
        if not pool:
            continue
        sub = votes[:, pool]
        top = sub.max(axis=1)
        unique = (sub == top[:, None]).sum(axis=1) == 1
        pick = np.asarray(pool)[sub.argmax(axis=1)]
        cand[:, j] = np.where(unique & (top > 0), pick, -1)
    any_exec = np.zeros(trials, dtype=bool)
    for i in enabled:
        ok = np.ones(trials, dtype=bool)
        for j in g.adj[i]:
            ok &= cand[:, j] == i
        any_exec |= ok
    return float(any_exec.mean())


# -- experiments -------------------------------------------------------------

def fault_after_convergence(alg: AlgorithmSpec, g: Graph, init_cfg: Configuration,
                            params: TrParams, fault: str, rounds: int = 10,
                            ids=None):
    """Converge, then apply ``fault`` (``"drop_all"`` for ``rounds`` rounds or
    ``"corrupt"`` on ``ids``) and run on.

    Returns ``(network, converged_round, post_fault_info)`` where the info
    holds the per-round legitimacy during the drop window, or the moves made
    after corruption and whether the system converged again.
    """
    p = replace(params, faults=[], record_rounds=True)
    net = TransformerNetwork(alg, g, init_cfg, p)
    if not net.run():
        return net, None, {"converged_first": False}
    post = net.round - 1
    if fault == "drop_all":
        mark = len(net.trace.rounds_legit)
        inject_fault(net, DropAll(post + 1, post + rounds))
        net.run_rounds(rounds)
        window = [legit for _, _, legit in net.trace.rounds_legit[mark:]]
        return net, post, {"legit_each_round": window}
    if fault == "corrupt":
        ids = tuple(ids or ())
        if any(not 0 <= i < g.n for i in ids):
            raise ValueError(f"corrupt ids {list(ids)} out of range for n={g.n}")
        moves_before = net.metrics.moves
        inject_fault(net, CorruptState(ids, net.cycle + 1))
        net.step_cycle()  # finish the current (already begun) cycle
        ok = net.run()
        return net, post, {"reconverged": ok and net.metrics.converged,
                           "moves_after": net.metrics.moves - moves_before}
    raise ValueError(f"unknown fault {fault!r}")


def sweep(alg: AlgorithmSpec, graph_for, init_for, ns, seeds, params: TrParams | None = None):
    """One row per ``(n, seed)``, ordered by ``(n, seed)``.

    ``graph_for(n, seed)`` and ``init_for(g, seed)`` build the instance.
    """
    base = params or TrParams()
    rows = []
    for n in ns:
        for seed in seeds:
            g = graph_for(n, seed)
            p = replace(base, seed=seed, faults=list(base.faults))
            _, m = run_transformed(alg, g, init_for(g, seed), p)
            rows.append({"n": n, "seed": seed, "cycles": m.cycles, "rounds": m.rounds,
                         "bcasts": m.bcasts, "moves": m.moves,
                         "converged": m.converged})
    return rows


SWEEP_COLUMNS = ("n", "seed", "cycles", "rounds", "bcasts", "moves", "converged")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in SWEEP_COLUMNS})
    return buf.getvalue()


def random_init(alg: AlgorithmSpec, g: Graph, seed: int) -> Configuration:
    return random_config(alg, g, random.Random(f"cfg:{seed}"))


def metrics_json(trace: TransformedTrace, metrics: Metrics, alg: AlgorithmSpec) -> dict:
    d = metrics.to_dict()
    d["final"] = config_to_json(alg, trace.final) if trace.final is not None else None
    return d
