"""Serial execution of guarded-command algorithms in the R(1)W(1) model.

A move by process ``i`` reads the variables of ``i`` and its neighbors
(through a :class:`NeighborhoodView`) and atomically writes variables of the
same closed neighborhood. One enabled process is chosen per step by a daemon.

A configuration is a tuple with one record per process; a record is a tuple
of variable values ordered as the algorithm's ``variables``.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .topology import Graph

Configuration = tuple  # tuple[tuple, ...], one record per process


class ContractError(RuntimeError):
    """A move was requested that the model does not allow."""


class LocalityError(ContractError):
    """A command wrote outside the mover's closed neighborhood."""


class NeighborhoodView:
    """Read-only window on the closed neighborhood of ``center``.

    Rule code only ever sees one of these, so it cannot read anything beyond
    one hop.
    """

    __slots__ = ("center", "neighbors", "_records", "_degrees", "_index")

    def __init__(self, center: int, neighbors: tuple[int, ...], records: dict,
                 degrees: dict, index: dict):
        self.center = center
        self.neighbors = neighbors
        self._records = records
        self._degrees = degrees
        self._index = index

    def __getitem__(self, j: int) -> tuple:
        try:
            return self._records[j]
        except KeyError:
            raise ContractError(
                f"process {self.center} cannot read process {j}") from None

    def get(self, j: int, var: str):
        return self[j][self._index[var]]

    def degree(self, j: int) -> int:
        return self._degrees[j]

    def __contains__(self, j):
        return j in self._records


def neighborhood_view(alg, g: Graph, cfg: Configuration, i: int) -> NeighborhoodView:
    nbrs = g.adj[i]
    records = {i: cfg[i]}
    degrees = {i: len(nbrs)}
    for j in nbrs:
        records[j] = cfg[j]
        degrees[j] = len(g.adj[j])
    return NeighborhoodView(i, nbrs, records, degrees, alg.index)


# -- guards and moves --------------------------------------------------------

def enabled_rules(alg, g: Graph, cfg: Configuration, i: int) -> list[int]:
    """Ids of the rules whose guard holds at ``i``, ascending."""
    view = neighborhood_view(alg, g, cfg, i)
    return [r.id for r in alg.rules if r.witnesses(view)]


def enabled_processes(alg, g: Graph, cfg: Configuration) -> list[int]:
    return [i for i in range(g.n) if enabled_rules(alg, g, cfg, i)]


def is_silent(alg, g: Graph, cfg: Configuration) -> bool:
    view = neighborhood_view
    return not any(r.witnesses(view(alg, g, cfg, i))
                   for i in range(g.n) for r in alg.rules)


def apply_writes(alg, g: Graph, cfg: Configuration, i: int, writes: dict) -> Configuration:
    """Apply a write set of process ``i``; raises :class:`LocalityError` if a
    key falls outside ``{i} | N(i)``."""
    new = list(cfg)
    for j, assignment in writes.items():
        if j != i and not g.has_edge(i, j):
            raise LocalityError(f"process {i} wrote to non-neighbor {j}")
        rec = list(new[j])
        for var, val in assignment.items():
            rec[alg.index[var]] = val
        new[j] = tuple(rec)
    return tuple(new)


def _pick_witness(policy, view, rule, options):
    if policy == "lowest" or policy is None:
        # Witness lists are produced in ascending neighbor order.
        return options[0]
    if callable(policy):
        return policy(view, rule, options)
    raise ValueError(f"unknown witness policy {policy!r}")


@dataclass(frozen=True)
class MoveRecord:
    step: int
    proc: int
    rule: int
    witness: int | None
    writes: dict

    def to_json(self) -> dict:
        return {"step": self.step, "proc": self.proc, "rule": self.rule,
                "witness": self.witness,
                "writes": {str(j): w for j, w in sorted(self.writes.items())}}

    @classmethod
    def from_json(cls, d: dict) -> "MoveRecord":
        return cls(d["step"], d["proc"], d["rule"], d.get("witness"),
                   {int(j): w for j, w in d["writes"].items()})


def apply_move(alg, g: Graph, cfg: Configuration, i: int, rule: int,
               witness_policy="lowest", *, witness=..., step: int = 0):
    """Execute ``rule`` at ``i``. Returns ``(new_cfg, MoveRecord)``.

    ``witness`` pins the existential choice explicitly; otherwise
    ``witness_policy`` picks among the satisfying neighbors.
    """
    view = neighborhood_view(alg, g, cfg, i)
    r = alg.rule(rule)
    options = r.witnesses(view)
    if not options:
        raise ContractError(f"rule {rule} of {alg.name} is not enabled at process {i}")
    if witness is ...:
        witness = _pick_witness(witness_policy, view, r, options)
    elif witness not in options:
        raise ContractError(f"witness {witness} does not satisfy rule {rule} at {i}")
    writes = r.command(view, witness)
    new = apply_writes(alg, g, cfg, i, writes)
    return new, MoveRecord(step, i, rule, witness, writes)


def successors(alg, g: Graph, cfg: Configuration) -> Iterator[tuple]:
    """Every ``(proc, rule, witness, new_cfg)`` the model allows from ``cfg``:
    all enabled processes, all enabled rules, all witnesses."""
    for i in range(g.n):
        view = neighborhood_view(alg, g, cfg, i)
        for r in alg.rules:
            for w in r.witnesses(view):
                yield i, r.id, w, apply_writes(alg, g, cfg, i, r.command(view, w))


# -- daemons -----------------------------------------------------------------

class DaemonPolicy:
    """Central daemon: picks one process out of a non-empty enabled set."""

    def reset(self):
        pass

    def select(self, enabled: Sequence[int], history: Sequence[int] = (),
               context=None) -> int:
        raise NotImplementedError


class SeededRandom(DaemonPolicy):
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.reset()

    def reset(self):
        self.rng = random.Random(self.seed)

    def select(self, enabled, history=(), context=None):
        return enabled[self.rng.randrange(len(enabled))]

    def __repr__(self):
        return f"SeededRandom({self.seed})"


class RoundRobinEnabled(DaemonPolicy):
    """Next enabled id after the last mover, cyclically."""

    def select(self, enabled, history=(), context=None):
        if not history:
            return min(enabled)
        last = history[-1]
        later = [i for i in enabled if i > last]
        return min(later) if later else min(enabled)

    def __repr__(self):
        return "RoundRobinEnabled()"


class Scripted(DaemonPolicy):
    """Pops ids from a script, skipping ones that are not enabled; once the
    script runs out it falls back to the lowest enabled id."""

    def __init__(self, ids):
        self.ids = list(ids)
        self.reset()

    def reset(self):
        self._pos = 0

    def select(self, enabled, history=(), context=None):
        es = set(enabled)
        while self._pos < len(self.ids):
            i = self.ids[self._pos]
            self._pos += 1
            if i in es:
                return i
        return min(enabled)

    def __repr__(self):
        return f"Scripted({self.ids})"


class GreedyAdversarial(DaemonPolicy):
    """Picks the enabled process whose default move makes the least progress.

    Progress is ``alg.progress(g, before, after)`` (for MMat11 the change in
    the potentials A and B), or the number of changed variables if the
    algorithm has no progress measure. Ties go to the lowest id. This is a
    heuristic adversary only; worst cases come from the verifier.
    """

    def __init__(self, heuristic: Callable | None = None):
        self.heuristic = heuristic

    def select(self, enabled, history=(), context=None):
        if context is None:
            return min(enabled)
        alg, g, cfg, wpol = context
        score = self.heuristic or getattr(alg, "progress", None) or _changed_vars
        best = None
        for i in sorted(enabled):
            rule = enabled_rules(alg, g, cfg, i)[0]
            new, _ = apply_move(alg, g, cfg, i, rule, wpol)
            s = score(g, cfg, new)
            if best is None or s < best[0]:
                best = (s, i)
        return best[1]

    def __repr__(self):
        return "GreedyAdversarial()"


def _changed_vars(g, before, after):
    return sum(a != b for ra, rb in zip(before, after) for a, b in zip(ra, rb))


def select_process(policy: DaemonPolicy, enabled, history=(), context=None) -> int:
    if not enabled:
        raise ContractError("daemon asked to select from an empty enabled set")
    choice = policy.select(sorted(enabled), history, context)
    assert choice in enabled
    return choice


def parse_daemon(text: str) -> DaemonPolicy:
    """``random:7``, ``roundrobin``, ``greedy`` or ``scripted:0,2``."""
    kind, _, arg = text.partition(":")
    if kind in ("random", "seeded"):
        return SeededRandom(int(arg or 0))
    if kind in ("roundrobin", "round-robin", "rr"):
        return RoundRobinEnabled()
    if kind in ("greedy", "adversarial"):
        return GreedyAdversarial()
    if kind == "scripted":
        return Scripted(int(t) for t in arg.split(",") if t.strip())
    raise ValueError(f"unknown daemon {text!r}")


# -- execution ---------------------------------------------------------------

@dataclass
class Trace:
    initial: Configuration
    moves: list[MoveRecord] = field(default_factory=list)
    final: Configuration = None
    counts: Counter = field(default_factory=Counter)
    silent: bool = False
    budget_exhausted: bool = False

    def __len__(self):
        return len(self.moves)

    def configurations(self, alg, g) -> Iterator[Configuration]:
        """Initial configuration followed by the one after each move."""
        cfg = self.initial
        yield cfg
        for mv in self.moves:
            cfg = apply_writes(alg, g, cfg, mv.proc, mv.writes)
            yield cfg

    def replay(self, alg, g) -> Configuration:
        cfg = self.initial
        for cfg in self.configurations(alg, g):
            pass
        return cfg

    def rule_counts(self, proc: int) -> dict[int, int]:
        return {r: c for (p, r), c in self.counts.items() if p == proc}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.to_json()) + "\n" for m in self.moves)


def default_budget(n: int) -> int:
    return 10 * n + 100


def execute(alg, g: Graph, cfg0: Configuration, daemon: DaemonPolicy | None = None,
            witness_policy="lowest", max_moves: int | None = None) -> Trace:
    """Run until silent or until ``max_moves`` moves have been made.

    The selected process executes its lowest-numbered enabled rule.
    """
    if max_moves is None:
        max_moves = default_budget(g.n)
    if max_moves < 0:
        raise ValueError("max_moves must be non-negative")
    daemon = daemon or SeededRandom(0)
    daemon.reset()
    cfg = cfg0
    trace = Trace(initial=cfg0)
    history: list[int] = []
    while True:
        enabled = {}
        for i in range(g.n):
            rules = enabled_rules(alg, g, cfg, i)
            if rules:
                enabled[i] = rules
        if not enabled:
            trace.silent = True
            break
        if len(trace.moves) >= max_moves:
            trace.budget_exhausted = True
            break
        i = select_process(daemon, list(enabled), history,
                           (alg, g, cfg, witness_policy))
        cfg, rec = apply_move(alg, g, cfg, i, enabled[i][0], witness_policy,
                              step=len(trace.moves))
        trace.moves.append(rec)
        trace.counts[(i, rec.rule)] += 1
        history.append(i)
    trace.final = cfg
    return trace
