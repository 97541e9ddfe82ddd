"""Undirected process graphs and deterministic graph generators.

Processes are dense integer ids ``0..n-1``. Neighbor tuples are kept sorted so
that "lowest id" tie-breaking elsewhere in the package is deterministic.
"""
from __future__ import annotations

import itertools
import json
import random
from collections import deque
from functools import cached_property
from pathlib import Path


class GraphError(ValueError):
    """Raised for malformed edges, bad generator parameters or descriptors."""


class Graph:
    """Immutable undirected simple graph.

    ``adj[i]`` is the sorted tuple of neighbors of process ``i``. One-hop,
    exact-two-hop and within-two-hop neighbor sets are cached on first use.
    """

    def __init__(self, n: int, adj: tuple[tuple[int, ...], ...]):
        self.n = n
        self.adj = adj
        self._nbr_sets = tuple(frozenset(a) for a in adj)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edges})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.adj == other.adj

    def __hash__(self):
        return hash((self.n, self.adj))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adj[i]

    def degree(self, i: int) -> int:
        return len(self.adj[i])

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._nbr_sets[i]

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self.adj[i] if i < j]

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    @cached_property
    def _two_hop(self) -> tuple[frozenset, ...]:
        out = []
        for i in range(self.n):
            s = set()
            for j in self.adj[i]:
                s.update(self.adj[j])
            s -= self._nbr_sets[i]
            s.discard(i)
            out.append(frozenset(s))
        return tuple(out)

    def two_hop_exact(self, i: int) -> frozenset:
        """Processes at distance exactly two from ``i``."""
        self._check(i)
        return self._two_hop[i]

    def within_two(self, i: int) -> frozenset:
        """Processes at distance one or two from ``i`` (``i`` excluded)."""
        self._check(i)
        return self._nbr_sets[i] | self._two_hop[i]

    def distances_from(self, i: int) -> list[float]:
        """BFS hop distances from ``i``; unreachable processes get ``inf``."""
        self._check(i)
        dist = [float("inf")] * self.n
        dist[i] = 0
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for v in self.adj[u]:
                if dist[v] == float("inf"):
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def distance(self, i: int, j: int) -> float:
        return self.distances_from(i)[j]

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return all(d != float("inf") for d in self.distances_from(0))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    def _check(self, i):
        if not 0 <= i < self.n:
            raise GraphError(f"process id {i} out of range [0, {self.n})")


def build_graph(n: int, edges) -> Graph:
    """Build a graph from an edge list; duplicate edges are merged."""
    if n < 0:
        raise GraphError(f"negative process count {n}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        i, j = (int(v) for v in e)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge {(i, j)} has an endpoint outside [0, {n})")
        if i == j:
            raise GraphError(f"self-loop edge {(i, j)}")
        nbrs[i].add(j)
        nbrs[j].add(i)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


# -- generators --------------------------------------------------------------

def path(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 processes")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def star(n: int) -> Graph:
    """Star on ``n`` processes with center 0 (``n - 1`` leaves)."""
    if n < 1:
        raise GraphError("a star needs at least 1 process")
    return build_graph(n, [(0, i) for i in range(1, n)])


def complete(n: int) -> Graph:
    return build_graph(n, itertools.combinations(range(n), 2))


def random_tree(n: int, seed: int = 0) -> Graph:
    """Random recursive tree: process ``i`` attaches to a uniform earlier one."""
    rng = random.Random(seed)
    return build_graph(n, [(i, rng.randrange(i)) for i in range(1, n)])


def gnp(n: int, p: float, seed: int = 0, connected: bool = False,
        max_tries: int = 10_000) -> Graph:
    """Erdos-Renyi G(n, p).

    With ``connected=True`` draws are repeated from the same seeded stream
    until a connected graph comes out.
    """
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability {p} not in [0, 1]")
    if n < 0:
        raise GraphError(f"negative process count {n}")
    rng = random.Random(seed)
    for _ in range(max_tries):
        g = build_graph(n, [e for e in itertools.combinations(range(n), 2)
                            if rng.random() < p])
        if not connected or g.is_connected():
            return g
    raise GraphError(f"no connected gnp({n}, {p}) within {max_tries} draws")


def generate(kind: str, n: int, p: float | None = None, seed: int = 0,
             connected: bool = False) -> Graph:
    """Dispatch to a named generator; output depends only on the arguments."""
    if n < 1:
        raise GraphError(f"process count must be positive, got {n}")
    if kind == "path":
        return path(n)
    if kind == "cycle":
        return cycle(n)
    if kind == "star":
        return star(n)
    if kind == "complete":
        return complete(n)
    if kind == "tree":
        return random_tree(n, seed)
    if kind == "gnp":
        if p is None:
            raise GraphError("gnp requires an edge probability")
        return gnp(n, p, seed, connected)
    raise GraphError(f"unknown graph kind {kind!r}")


def all_connected_graphs(n: int) -> list[Graph]:
    """One representative per isomorphism class of connected graphs on n nodes."""
    pairs = list(itertools.combinations(range(n), 2))
    perms = list(itertools.permutations(range(n)))
    seen = set()
    out = []
    for mask in range(1 << len(pairs)):
        edges = [pairs[b] for b in range(len(pairs)) if mask >> b & 1]
        canon = min(tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in edges))
                    for p in perms)
        if canon in seen:
            continue
        seen.add(canon)
        g = build_graph(n, edges)
        if g.is_connected():
            out.append(g)
    return out


# -- descriptors and files ---------------------------------------------------

def parse_descriptor(desc: str) -> Graph:
    """Parse strings such as ``cycle:8``, ``gnp:20:0.2:seed=7`` or
    ``tree:12:seed=3``. A trailing ``connected`` token forces a connected gnp.
    """
    parts = desc.split(":")
    kind = parts[0]
    positional = []
    opts = {}
    for tok in parts[1:]:
        if "=" in tok:
            key, val = tok.split("=", 1)
            opts[key] = val
        elif tok == "connected":
            opts["connected"] = "1"
        else:
            positional.append(tok)
    try:
        n = int(positional[0])
        p = float(positional[1]) if len(positional) > 1 else None
        if "p" in opts:
            p = float(opts["p"])
        seed = int(opts.get("seed", 0))
    except (IndexError, ValueError) as exc:
        raise GraphError(f"bad graph descriptor {desc!r}") from exc
    return generate(kind, n, p, seed, connected=opts.get("connected") in ("1", "true"))


def load_graph(path_or_desc: str) -> Graph:
    """Load a JSON graph file ``{"n": .., "edges": [[i, j], ..]}`` or parse a
    generator descriptor."""
    p = Path(path_or_desc)
    if p.suffix == ".json" or p.is_file():
        data = json.loads(p.read_text())
        return build_graph(data["n"], data["edges"])
    return parse_descriptor(path_or_desc)


def save_graph(g: Graph, path) -> None:
    Path(path).write_text(json.dumps(g.to_dict()))
