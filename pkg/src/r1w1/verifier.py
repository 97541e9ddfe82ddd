"""Brute-force solution oracles and exhaustive checking on small graphs.

``verify_closure`` compares legitimacy with silence on every configuration.
``verify_convergence`` walks the full move relation (every enabled process,
every enabled rule, every existential witness) and computes the longest
execution from each configuration.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator

from .algorithms import AlgorithmSpec, config_to_json
from .engine import Configuration, is_silent, successors
from .topology import Graph

DEFAULT_CAP = 10 ** 7


class StateSpaceTooLarge(ValueError):
    pass


# -- oracles -----------------------------------------------------------------

def oracle_maximal_matching(g: Graph, edge_set) -> bool:
    """True iff ``edge_set`` is a matching of ``g`` to which no edge of ``g``
    can be added."""
    covered = set()
    for i, j in edge_set:
        if not g.has_edge(i, j) or i in covered or j in covered:
            return False
        covered.update((i, j))
    return all(i in covered or j in covered for i, j in g.edges)


def is_k_dominating(g: Graph, s, k: int) -> bool:
    s = set(s)
    return all(sum(1 for j in g.adj[i] if j in s) >= k
               for i in range(g.n) if i not in s)


def is_k_dependent(g: Graph, s, k: int) -> bool:
    s = set(s)
    return all(sum(1 for j in g.adj[i] if j in s) <= k for i in s)


def oracle_minimal_k_dominating(g: Graph, s, k: int, exhaustive: bool = False) -> bool:
    """k-domination plus minimality.

    By default minimality is checked by removing one member at a time, which
    suffices because k-domination is preserved under supersets. With
    ``exhaustive=True`` every proper subset is tried instead (``n <= 12``).
    """
    s = frozenset(s)
    if not is_k_dominating(g, s, k):
        return False
    if exhaustive:
        if g.n > 12:
            raise ValueError("power-set oracle limited to 12 processes")
        members = sorted(s)
        return not any(is_k_dominating(g, sub, k)
                       for r in range(len(members))
                       for sub in itertools.combinations(members, r))
    return not any(is_k_dominating(g, s - {v}, k) for v in s)


def oracle_maximal_k_dependent(g: Graph, s, k: int, exhaustive: bool = False) -> bool:
    """k-dependency plus maximality (single additions, or every proper
    superset with ``exhaustive=True``)."""
    s = frozenset(s)
    if not is_k_dependent(g, s, k):
        return False
    rest = [v for v in range(g.n) if v not in s]
    if exhaustive:
        if g.n > 12:
            raise ValueError("power-set oracle limited to 12 processes")
        return not any(is_k_dependent(g, s | set(extra), k)
                       for r in range(1, len(rest) + 1)
                       for extra in itertools.combinations(rest, r))
    return not any(is_k_dependent(g, s | {v}, k) for v in rest)


def solution_ok(alg: AlgorithmSpec, g: Graph, cfg: Configuration) -> bool:
    """Check the set an algorithm outputs in ``cfg`` against brute force."""
    if alg.name in ("mmat11", "broken-fixture"):
        return oracle_maximal_matching(g, alg.output(g, cfg))
    if alg.name == "mkdom11":
        return oracle_minimal_k_dominating(g, alg.output(g, cfg), alg.params["k"])
    if alg.name == "mkdep11":
        return oracle_maximal_k_dependent(g, alg.output(g, cfg), alg.params["k"])
    raise ValueError(f"no oracle for {alg.name}")


def analytic_bound(alg: AlgorithmSpec, n: int) -> int:
    """Worst-case move count claimed for the algorithm on ``n`` processes."""
    if alg.name in ("mmat11", "broken-fixture"):
        return n // 2 + n
    return 4 * n


# -- configuration space -----------------------------------------------------

def state_space_size(alg: AlgorithmSpec, g: Graph) -> int:
    return math.prod(len(alg.record_domain(g, i)) for i in range(g.n))


def enumerate_configs(alg: AlgorithmSpec, g: Graph, cap: int = DEFAULT_CAP
                      ) -> Iterator[Configuration]:
    size = state_space_size(alg, g)
    if size > cap:
        raise StateSpaceTooLarge(
            f"{alg.selector()} on n={g.n} has {size} configurations (cap {cap})")
    return itertools.product(*(alg.record_domain(g, i) for i in range(g.n)))


# -- reports -----------------------------------------------------------------

@dataclass
class VerificationReport:
    graph: dict
    algorithm: str
    configs_explored: int = 0
    closure_ok: bool | None = None
    closure_counterexample: list | None = None
    oracle_ok: bool | None = None
    oracle_counterexample: list | None = None
    silent_configs: int = 0
    convergence_ok: bool | None = None
    convergence_failure: str | None = None
    convergence_counterexample: list | None = None
    worst_case_moves: int | None = None
    analytic_bound: int | None = None

    @property
    def passed(self) -> bool:
        checks = (self.closure_ok, self.oracle_ok, self.convergence_ok)
        return all(c is not False for c in checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_closure(alg: AlgorithmSpec, g: Graph, cap: int = DEFAULT_CAP,
                   report: VerificationReport | None = None) -> VerificationReport:
    """``legitimate(cfg) == is_silent(cfg)`` for every configuration; silent
    configurations are also checked against the brute-force oracle."""
    rep = report or VerificationReport(g.to_dict(), alg.selector())
    count = silent_count = 0
    closure_bad = oracle_bad = None
    for cfg in enumerate_configs(alg, g, cap):
        count += 1
        silent = is_silent(alg, g, cfg)
        if silent != alg.legitimate(g, cfg) and closure_bad is None:
            closure_bad = cfg
        if silent:
            silent_count += 1
            if oracle_bad is None and not solution_ok(alg, g, cfg):
                oracle_bad = cfg
    rep.configs_explored = count
    rep.silent_configs = silent_count
    rep.closure_ok = closure_bad is None
    rep.closure_counterexample = None if closure_bad is None else config_to_json(alg, closure_bad)
    rep.oracle_ok = oracle_bad is None
    rep.oracle_counterexample = None if oracle_bad is None else config_to_json(alg, oracle_bad)
    return rep


def verify_convergence(alg: AlgorithmSpec, g: Graph, bound: int | None = None,
                       cap: int = DEFAULT_CAP,
                       report: VerificationReport | None = None) -> VerificationReport:
    """Longest-path search over the full nondeterministic move relation.

    Fails on a cycle (livelock), on a silent but illegitimate configuration,
    or when some execution is longer than ``bound``. The counterexample is the
    offending configuration sequence.
    """
    rep = report or VerificationReport(g.to_dict(), alg.selector())
    if bound is None:
        bound = analytic_bound(alg, g.n)
    longest: dict = {}
    nxt: dict = {}
    failure = None
    fail_path = None
    on_stack: set = set()

    for start in enumerate_configs(alg, g, cap):
        if start in longest or failure:
            continue
        stack = [(start, successors(alg, g, start))]
        on_stack.add(start)
        best = {start: 0}
        while stack:
            node, it = stack[-1]
            pushed = False
            for _, _, _, child in it:
                if child in longest:
                    if longest[child] + 1 > best[node]:
                        best[node] = longest[child] + 1
                        nxt[node] = child
                    continue
                if child in on_stack:
                    failure = "livelock"
                    fail_path = [s for s, _ in stack] + [child]
                    break
                stack.append((child, successors(alg, g, child)))
                on_stack.add(child)
                best[child] = 0
                pushed = True
                break
            if failure:
                break
            if pushed:
                continue
            stack.pop()
            on_stack.discard(node)
            longest[node] = best.pop(node)
            if longest[node] == 0 and not alg.legitimate(g, node) and not failure:
                failure = "silent-illegitimate"
                fail_path = [node]
            if stack:
                parent = stack[-1][0]
                if longest[node] + 1 > best[parent]:
                    best[parent] = longest[node] + 1
                    nxt[parent] = node
        on_stack.clear()

    worst = max(longest.values(), default=0)
    if failure is None and worst > bound:
        failure = "bound-exceeded"
        start = max(longest, key=longest.get)
        fail_path = [start]
        while fail_path[-1] in nxt:
            fail_path.append(nxt[fail_path[-1]])
    rep.configs_explored = max(rep.configs_explored, len(longest))
    rep.worst_case_moves = worst
    rep.analytic_bound = bound
    rep.convergence_ok = failure is None
    rep.convergence_failure = failure
    rep.convergence_counterexample = (
        None if fail_path is None else [config_to_json(alg, c) for c in fail_path])
    return rep


def verify(alg: AlgorithmSpec, g: Graph, bound: int | None = None,
           cap: int = DEFAULT_CAP) -> VerificationReport:
    rep = verify_closure(alg, g, cap)
    return verify_convergence(alg, g, bound, cap, report=rep)


def _verify_job(args):
    alg_selector, g = args
    from .algorithms import parse_algorithm
    return verify(parse_algorithm(alg_selector), g)


def verify_corpus(alg: AlgorithmSpec, graphs, workers: int = 1) -> list[VerificationReport]:
    """Verify every graph; reports come back in input order for any
    worker count."""
    jobs = [(alg.selector(), g) for g in graphs]
    if workers <= 1:
        return [verify(alg, g) for g in graphs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_verify_job, jobs))


# -- per-trace lemma checks --------------------------------------------------

@dataclass
class TraceCheck:
    """Violations found on one trace, keyed by property name."""
    violations: dict = field(default_factory=dict)

    def add(self, prop: str, detail) -> None:
        self.violations.setdefault(prop, []).append(detail)

    def count(self, prop: str | None = None) -> int:
        if prop is None:
            return sum(len(v) for v in self.violations.values())
        return len(self.violations.get(prop, ()))

    @property
    def ok(self) -> bool:
        return not self.violations


def check_mmat_trace(g: Graph, trace, alg=None) -> TraceCheck:
    """Potential behaviour of an MMat11 trace, move by move.

    Properties: ``A-nondecreasing``, ``B-nonincreasing``, ``AB-changes``
    (at least one of A, B changes), ``lexicographic`` (A grows, or A stays
    and B shrinks) and ``bound`` (total moves).
    """
    from .algorithms import mmat11, mmat_potentials
    alg = alg or mmat11()
    out = TraceCheck()
    cfgs = trace.configurations(alg, g)
    prev = mmat_potentials(g, next(cfgs))
    for step, cfg in enumerate(cfgs):
        a, b = mmat_potentials(g, cfg)
        pa, pb = prev
        if a < pa:
            out.add("A-nondecreasing", (step, prev, (a, b)))
        if b > pb:
            out.add("B-nonincreasing", (step, prev, (a, b)))
        if (a, b) == prev:
            out.add("AB-changes", (step, prev))
        if not (a > pa or (a == pa and b < pb)):
            out.add("lexicographic", (step, prev, (a, b)))
        prev = (a, b)
    if len(trace) > analytic_bound(alg, g.n):
        out.add("bound", len(trace))
    return out


def check_counter_trace(alg: AlgorithmSpec, g: Graph, trace) -> TraceCheck:
    """Per-process rule caps and counter stability for MkDom11 / MkDep11.

    Properties: ``rule1-once``, ``rule1-first``, ``rule3-once``,
    ``rule2-twice``, ``count-stable`` and ``bound``.
    """
    out = TraceCheck()
    counts = [[0, 0, 0, 0] for _ in range(g.n)]
    moved = [False] * g.n
    correct = [False] * g.n

    def count(cfg, i):
        return sum(1 for j in g.adj[i] if cfg[j][0] == 1)

    cfgs = trace.configurations(alg, g)
    cfg = next(cfgs)
    for i in range(g.n):
        correct[i] = cfg[i][1] == count(cfg, i)
    for mv, cfg in zip(trace.moves, cfgs):
        i, r = mv.proc, mv.rule
        if r == 1 and moved[i]:
            out.add("rule1-first", (mv.step, i))
        moved[i] = True
        counts[i][r] += 1
        for j in range(g.n):
            now = cfg[j][1] == count(cfg, j)
            if correct[j] and not now:
                out.add("count-stable", (mv.step, j))
            correct[j] = correct[j] or now
    for i, (_, r1, r2, r3) in enumerate(counts):
        if r1 > 1:
            out.add("rule1-once", (i, r1))
        if r3 > 1:
            out.add("rule3-once", (i, r3))
        if r2 > 2:
            out.add("rule2-twice", (i, r2))
    if len(trace) > analytic_bound(alg, g.n):
        out.add("bound", len(trace))
    return out
