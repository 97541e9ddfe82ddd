"""MMat11, MkDom11 and MkDep11 as guarded-command rule sets.

Each rule is a pair of functions over a :class:`~r1w1.engine.NeighborhoodView`:
``witnesses(view)`` returns the list of existential choices that make the
guard true (``[None]`` for guards without an existential, ``[]`` when the
guard is false), and ``command(view, witness)`` returns the write set
``{process: {variable: value}}``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable

from .engine import Configuration, NeighborhoodView
from .topology import Graph

BOT = None  # the empty pointer of MMat11


@dataclass(frozen=True)
class Rule:
    id: int
    name: str
    witnesses: Callable[[NeighborhoodView], list]
    command: Callable[[NeighborhoodView, object], dict]


@dataclass(frozen=True, eq=False)
class AlgorithmSpec:
    name: str
    variables: tuple[str, ...]
    domains: Callable[[Graph, int], tuple[list, ...]]
    rules: tuple[Rule, ...]
    legitimate: Callable[[Graph, Configuration], bool]
    params: dict = field(default_factory=dict)
    output: Callable | None = None
    progress: Callable | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {v: k for k, v in enumerate(self.variables)})

    def rule(self, rid: int) -> Rule:
        for r in self.rules:
            if r.id == rid:
                return r
        raise KeyError(f"{self.name} has no rule {rid}")

    def record_domain(self, g: Graph, i: int) -> list[tuple]:
        return list(itertools.product(*self.domains(g, i)))

    def selector(self) -> str:
        if "k" in self.params:
            return f"{self.name}:k={self.params['k']}"
        return self.name

    def __repr__(self):
        return f"AlgorithmSpec({self.selector()})"


# -- MMat11 ------------------------------------------------------------------

def _mm_r1(v):
    i = v.center
    if v[i][0] is not BOT:
        return []
    return [j for j in v.neighbors if v[j][0] == i]


def _mm_r2(v):
    if v[v.center][0] is not BOT:
        return []
    return [j for j in v.neighbors if v[j][0] is BOT]


def _mm_r3(v):
    q = v[v.center][0]
    if q is BOT or q not in v.neighbors:
        return []
    return [None] if v[q][0] is BOT else []


def _mm_dangling(v):
    """q_i names a neighbor that points neither to i nor to nothing."""
    i = v.center
    q = v[i][0]
    return q is not BOT and q in v.neighbors and v[q][0] not in (i, BOT)


def _mm_r4(v):
    if not _mm_dangling(v):
        return []
    i = v.center
    return [k for k in v.neighbors if v[k][0] in (i, BOT)]


def _mm_r5(v):
    if not _mm_dangling(v):
        return []
    i = v.center
    return [] if any(v[k][0] in (i, BOT) for k in v.neighbors) else [None]


def mmat_matching(g: Graph, cfg: Configuration) -> set[tuple[int, int]]:
    """Matched pairs ``{(i, j) : q_i = j and q_j = i}``, each as ``i < j``."""
    out = set()
    for i in range(g.n):
        j = cfg[i][0]
        if j is not BOT and j > i and cfg[j][0] == i and g.has_edge(i, j):
            out.add((i, j))
    return out


def mmat_potentials(g: Graph, cfg: Configuration) -> tuple[int, int]:
    """``(A, B)``: number of matched pairs, and number of processes pointing
    at a neighbor that points at a third process."""
    a = len(mmat_matching(g, cfg))
    b = 0
    for i in range(g.n):
        j = cfg[i][0]
        if j is not BOT and g.has_edge(i, j) and cfg[j][0] not in (i, BOT):
            b += 1
    return a, b


def mmat_legitimate(g: Graph, cfg: Configuration) -> bool:
    for i in range(g.n):
        q = cfg[i][0]
        if q is not BOT and g.has_edge(i, q):
            if cfg[q][0] != i:
                return False
        elif q is BOT:
            if any(cfg[j][0] in (i, BOT) for j in g.adj[i]):
                return False
    return True


def _mm_progress(g, before, after):
    a0, b0 = mmat_potentials(g, before)
    a1, b1 = mmat_potentials(g, after)
    return abs(a1 - a0) + abs(b1 - b0)


def mmat11() -> AlgorithmSpec:
    rules = (
        Rule(1, "accept", _mm_r1, lambda v, j: {v.center: {"q": j}}),
        Rule(2, "force-pair", _mm_r2,
             lambda v, j: {v.center: {"q": j}, j: {"q": v.center}}),
        Rule(3, "force-pointee", _mm_r3,
             lambda v, _: {v[v.center][0]: {"q": v.center}}),
        Rule(4, "switch", _mm_r4,
             lambda v, k: {v.center: {"q": k}, k: {"q": v.center}}),
        Rule(5, "give-up", _mm_r5, lambda v, _: {v.center: {"q": BOT}}),
    )
    return AlgorithmSpec(
        name="mmat11",
        variables=("q",),
        domains=lambda g, i: ([BOT, *g.adj[i]],),
        rules=rules,
        legitimate=mmat_legitimate,
        output=mmat_matching,
        progress=_mm_progress,
    )


def mmat11_without_rule5() -> AlgorithmSpec:
    """Negative control: MMat11 with the give-up rule removed. Closure fails
    because a dangling pointer with no free or pointing neighbor is silent."""
    base = mmat11()
    return AlgorithmSpec(
        name="broken-fixture",
        variables=base.variables,
        domains=base.domains,
        rules=base.rules[:4],
        legitimate=base.legitimate,
        output=base.output,
        progress=base.progress,
    )


# -- MkDom11 / MkDep11 -------------------------------------------------------

def count_of(view: NeighborhoodView) -> int:
    """Number of neighbors of the view's center with ``x = 1``."""
    return sum(1 for j in view.neighbors if view[j][0] == 1)


def _count(g, cfg, i):
    return sum(1 for j in g.adj[i] if cfg[j][0] == 1)


def _fix_counter(v):
    return [None] if v[v.center][1] != count_of(v) else []


def _cmd_fix_counter(v, _):
    i = v.center
    return {i: {"c": count_of(v)}}


def _cmd_join(v, _):
    """x_i := 1 and bump each neighbor counter that is not already at |N_j|."""
    i = v.center
    writes = {i: {"x": 1}}
    for j in v.neighbors:
        c = v[j][1]
        if c < v.degree(j):
            writes[j] = {"c": c + 1}
    return writes


def _cmd_leave(v, _):
    i = v.center
    writes = {i: {"x": 0}}
    for j in v.neighbors:
        c = v[j][1]
        if c > 0:
            writes[j] = {"c": c - 1}
    return writes


def _xc_domains(g, i):
    return ([0, 1], list(range(g.degree(i) + 1)))


def selected_set(g: Graph, cfg: Configuration) -> set[int]:
    return {i for i in range(g.n) if cfg[i][0] == 1}


def mkdom11(k: int) -> AlgorithmSpec:
    if k < 1:
        raise ValueError(f"MkDom11 needs k >= 1, got {k}")

    def dominate(v):
        x, c = v[v.center]
        return [None] if x == 0 and c == count_of(v) and c < k else []

    def minimize(v):
        x, c = v[v.center]
        if not (x == 1 and c == count_of(v) and c >= k):
            return []
        ok = all(v[j][0] == 1 or v[j][1] > k for j in v.neighbors)
        return [None] if ok else []

    def legitimate(g, cfg):
        for i in range(g.n):
            x, c = cfg[i]
            if c != _count(g, cfg, i):
                return False
            if x == 0 and not c >= k:
                return False
            if x == 1 and not (c < k or any(cfg[j][0] == 0 and cfg[j][1] <= k
                                            for j in g.adj[i])):
                return False
        return True

    return AlgorithmSpec(
        name="mkdom11",
        variables=("x", "c"),
        domains=_xc_domains,
        rules=(Rule(1, "fix-counter", _fix_counter, _cmd_fix_counter),
               Rule(2, "k-domination", dominate, _cmd_join),
               Rule(3, "minimality", minimize, _cmd_leave)),
        legitimate=legitimate,
        params={"k": k},
        output=selected_set,
    )


def mkdep11(k: int) -> AlgorithmSpec:
    if k < 0:
        raise ValueError(f"MkDep11 needs k >= 0, got {k}")

    def depend(v):
        x, c = v[v.center]
        return [None] if x == 1 and c == count_of(v) and c > k else []

    def maximize(v):
        x, c = v[v.center]
        if not (x == 0 and c == count_of(v) and c <= k):
            return []
        ok = all(v[j][0] == 0 or v[j][1] < k for j in v.neighbors)
        return [None] if ok else []

    def legitimate(g, cfg):
        for i in range(g.n):
            x, c = cfg[i]
            if c != _count(g, cfg, i):
                return False
            if x == 1 and not c <= k:
                return False
            if x == 0 and not (c > k or any(cfg[j][0] == 1 and cfg[j][1] >= k
                                            for j in g.adj[i])):
                return False
        return True

    return AlgorithmSpec(
        name="mkdep11",
        variables=("x", "c"),
        domains=_xc_domains,
        rules=(Rule(1, "fix-counter", _fix_counter, _cmd_fix_counter),
               Rule(2, "k-dependency", depend, _cmd_leave),
               Rule(3, "maximality", maximize, _cmd_join)),
        legitimate=legitimate,
        params={"k": k},
        output=selected_set,
    )


def legitimacy(alg: AlgorithmSpec, g: Graph, cfg: Configuration) -> bool:
    return alg.legitimate(g, cfg)


def parse_algorithm(text: str) -> AlgorithmSpec:
    """``mmat11``, ``mkdom11:k=2``, ``mkdep11:k=0`` (``k`` defaults to 1 / 0)."""
    name, _, rest = text.partition(":")
    opts = dict(t.split("=", 1) for t in rest.split(":") if "=" in t)
    if name == "mmat11":
        return mmat11()
    if name == "mkdom11":
        return mkdom11(int(opts.get("k", 1)))
    if name == "mkdep11":
        return mkdep11(int(opts.get("k", 0)))
    if name == "broken-fixture":
        return mmat11_without_rule5()
    raise ValueError(f"unknown algorithm {text!r}")


# -- configurations ----------------------------------------------------------

def sanitize(alg: AlgorithmSpec, g: Graph, cfg) -> Configuration:
    """Coerce arbitrary initial values into the declared domains.

    A pointer naming a non-neighbor becomes ``BOT``; counters are clamped to
    ``[0, |N_i|]``; membership flags become 0/1.
    """
    out = []
    for i in range(g.n):
        rec = cfg[i]
        if not isinstance(rec, (tuple, list)):
            rec = (rec,)
        if alg.variables == ("q",):
            q = rec[0]
            out.append((q if q is not BOT and g.has_edge(i, q) else BOT,))
        else:
            x, c = rec
            out.append((1 if x else 0, min(max(int(c), 0), g.degree(i))))
    return tuple(out)


def validate(alg: AlgorithmSpec, g: Graph, cfg) -> None:
    if len(cfg) != g.n:
        raise ValueError(f"configuration has {len(cfg)} records for {g.n} processes")
    for i in range(g.n):
        doms = alg.domains(g, i)
        rec = cfg[i]
        if len(rec) != len(doms) or any(v not in d for v, d in zip(rec, doms)):
            raise ValueError(f"record {rec!r} of process {i} is outside the domain")


def make_config(alg: AlgorithmSpec, g: Graph, records) -> Configuration:
    return sanitize(alg, g, records)


def preset(alg: AlgorithmSpec, g: Graph, name: str) -> Configuration:
    """Named initial configurations: ``all-bottom``, ``all-zero``,
    ``all-ones-correct-counters``, ``all-zero-correct-counters``,
    ``all-ones`` (counters 0) and ``random:<seed>``."""
    kind, _, arg = name.partition(":")
    if kind == "random":
        return random_config(alg, g, random.Random(int(arg or 0)))
    if alg.variables == ("q",):
        if kind in ("all-bottom", "all-zero"):
            return tuple((BOT,) for _ in range(g.n))
        raise ValueError(f"preset {name!r} does not apply to {alg.name}")
    if kind in ("all-bottom", "all-zero"):
        return tuple((0, 0) for _ in range(g.n))
    if kind == "all-zero-correct-counters":
        return tuple((0, 0) for _ in range(g.n))
    if kind == "all-ones":
        return tuple((1, 0) for _ in range(g.n))
    if kind == "all-ones-correct-counters":
        return tuple((1, g.degree(i)) for i in range(g.n))
    raise ValueError(f"unknown preset {name!r}")


def random_config(alg: AlgorithmSpec, g: Graph, rng: random.Random) -> Configuration:
    return tuple(tuple(rng.choice(d) for d in alg.domains(g, i)) for i in range(g.n))


def config_to_json(alg: AlgorithmSpec, cfg: Configuration) -> list:
    if alg.variables == ("q",):
        return [rec[0] for rec in cfg]
    return [dict(zip(alg.variables, rec)) for rec in cfg]


def config_from_json(alg: AlgorithmSpec, g: Graph, data) -> Configuration:
    if alg.variables == ("q",):
        return sanitize(alg, g, [(v,) for v in data])
    return sanitize(alg, g, [(d["x"], d["c"]) if isinstance(d, dict) else tuple(d)
                             for d in data])
