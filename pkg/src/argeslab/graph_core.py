"""Partially directed graphs over integer nodes, with DAG and CPDAG refinements.

Nodes are dense integers 0..p-1.  A node pair carries at most one edge,
either directed (i, j) meaning i -> j, or undirected {i, j}.  All graph
values are immutable after construction; algorithms produce new graphs
instead of mutating.
"""

from __future__ import annotations

import heapq
import re
from typing import Iterable


class GraphError(Exception):
    pass


class CycleError(GraphError):
    pass


class GraphParseError(GraphError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _canon_undirected(pairs) -> frozenset:
    out = set()
    for a, b in pairs:
        if a == b:
            raise GraphError(f"self loop on node {a}")
        out.add((a, b) if a < b else (b, a))
    return frozenset(out)


class Pdag:
    """Immutable partially directed graph on nodes 0..p-1.

    Parameters
    ----------
    p : int
        Node count.
    directed : iterable of (i, j)
        Directed edges i -> j.
    undirected : iterable of (a, b)
        Undirected edges; stored with a < b.

    Examples
    --------
    >>> g = Pdag(3, directed=[(0, 1)], undirected=[(1, 2)])
    >>> g.parents(1)
    (0,)
    >>> g.neighbors(1)
    (2,)
    >>> g.is_adjacent(0, 2)
    False
    """

    __slots__ = ("p", "directed", "undirected", "_parents", "_children",
                 "_neighbors", "_adjsets", "_hash")

    def __init__(self, p: int, directed: Iterable = (), undirected: Iterable = ()):
        if p < 0:
            raise GraphError("node count must be non-negative")
        directed = frozenset(tuple(e) for e in directed)
        undirected = _canon_undirected(undirected)
        for i, j in directed:
            if i == j:
                raise GraphError(f"self loop on node {i}")
            if not (0 <= i < p and 0 <= j < p):
                raise GraphError(f"edge ({i}, {j}) out of range for p={p}")
            if (j, i) in directed:
                raise GraphError(f"conflicting orientations between {i} and {j}")
        for a, b in undirected:
            if not (0 <= a < p and 0 <= b < p):
                raise GraphError(f"edge ({a}, {b}) out of range for p={p}")
            if (a, b) in directed or (b, a) in directed:
                raise GraphError(f"pair ({a}, {b}) is both directed and undirected")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

        parents = [[] for _ in range(p)]
        children = [[] for _ in range(p)]
        neighbors = [[] for _ in range(p)]
        adjsets = [set() for _ in range(p)]
        for i, j in directed:
            parents[j].append(i)
            children[i].append(j)
            adjsets[i].add(j)
            adjsets[j].add(i)
        for a, b in undirected:
            neighbors[a].append(b)
            neighbors[b].append(a)
            adjsets[a].add(b)
            adjsets[b].add(a)
        # ascending iteration order is a determinism contract for tie-breaking
        object.__setattr__(self, "_parents", tuple(tuple(sorted(v)) for v in parents))
        object.__setattr__(self, "_children", tuple(tuple(sorted(v)) for v in children))
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(v)) for v in neighbors))
        object.__setattr__(self, "_adjsets", tuple(frozenset(s) for s in adjsets))
        object.__setattr__(self, "_hash", hash((p, directed, undirected)))

    def __setattr__(self, name, value):
        raise AttributeError("graphs are immutable")

    def parents(self, i: int) -> tuple:
        return self._parents[i]

    def children(self, i: int) -> tuple:
        return self._children[i]

    def neighbors(self, i: int) -> tuple:
        """Nodes joined to i by an undirected edge, ascending."""
        return self._neighbors[i]

    def adjacents(self, i: int) -> tuple:
        return tuple(sorted(self._adjsets[i]))

    def adjacent_set(self, i: int) -> frozenset:
        return self._adjsets[i]

    def is_adjacent(self, i: int, j: int) -> bool:
        return j in self._adjsets[i]

    def has_directed(self, i: int, j: int) -> bool:
        return (i, j) in self.directed

    def has_undirected(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in self.undirected

    @property
    def num_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def edge_status(self, a: int, b: int) -> str:
        """One of 'none', '->', '<-', '--' for the ordered pair (a, b)."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if self.has_undirected(a, b):
            return "--"
        return "none"

    def __eq__(self, other):
        if not isinstance(other, Pdag):
            return NotImplemented
        return (self.p == other.p and self.directed == other.directed
                and self.undirected == other.undirected)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        d = sorted(self.directed)
        u = sorted(self.undirected)
        return f"{type(self).__name__}(p={self.p}, directed={d}, undirected={u})"


class Dag(Pdag):
    """Directed acyclic graph: a Pdag with no undirected edges and no cycle.

    Construction raises CycleError when the directed edges contain a cycle.
    """

    __slots__ = ()

    def __init__(self, p: int, directed: Iterable = ()):
        super().__init__(p, directed, ())
        _kahn_order(self.p, self.directed)  # raises CycleError on a cycle


class Cpdag(Pdag):
    """Completed PDAG representing a Markov equivalence class.

    Instances are produced by equivalence.dag_to_cpdag or validated with
    equivalence.ensure_cpdag; the constructor itself checks only the Pdag
    invariants.
    """

    __slots__ = ()


def _kahn_order(p: int, directed) -> tuple:
    indeg = [0] * p
    children = [[] for _ in range(p)]
    for i, j in directed:
        indeg[j] += 1
        children[i].append(j)
    ready = [i for i in range(p) if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in children[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != p:
        raise CycleError("directed edges contain a cycle")
    return tuple(order)


def topological_order(g: Pdag) -> tuple:
    """Deterministic topological order of g's directed edges.

    Kahn's algorithm with smallest-index-first tie-breaking, so the result
    is unique for a given graph.  Raises CycleError on a directed cycle.

    Examples
    --------
    >>> topological_order(Dag(3, [(2, 0), (0, 1)]))
    (2, 0, 1)
    """
    return _kahn_order(g.p, g.directed)


def skeleton(g: Pdag) -> Pdag:
    """Undirected graph with an edge {i, j} iff i and j are adjacent in g."""
    und = set(g.undirected)
    for i, j in g.directed:
        und.add((i, j) if i < j else (j, i))
    return Pdag(g.p, (), und)


def v_structures(g: Pdag) -> list:
    """All v-structures of g as triples (i, j, k): i -> j <- k, i < k, i,k non-adjacent."""
    out = []
    for j in range(g.p):
        pa = g.parents(j)
        for a in range(len(pa)):
            for b in range(a + 1, len(pa)):
                i, k = pa[a], pa[b]
                if not g.is_adjacent(i, k):
                    out.append((i, j, k))
    out.sort()
    return out


def unshielded_triples(g: Pdag) -> list:
    """Triples (i, j, k), i < k, with j adjacent to both and i, k non-adjacent."""
    out = []
    for j in range(g.p):
        adj = g.adjacents(j)
        for a in range(len(adj)):
            for b in range(a + 1, len(adj)):
                i, k = adj[a], adj[b]
                if not g.is_adjacent(i, k):
                    out.append((i, j, k))
    out.sort()
    return out


def descendants(g: Pdag, i: int) -> frozenset:
    """Nodes reachable from i along directed edges, including i itself."""
    seen = {i}
    stack = [i]
    while stack:
        u = stack.pop()
        for v in g.children(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return frozenset(seen)


def ancestors(g: Pdag, i: int) -> frozenset:
    """Nodes from which i is reachable along directed edges, including i."""
    seen = {i}
    stack = [i]
    while stack:
        u = stack.pop()
        for v in g.parents(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return frozenset(seen)


_EDGE_RE = re.compile(r"(\d+)\s*(->|--)\s*(\d+)")
_HEADER_RE = re.compile(r"nodes:\s*(\d+)")


def parse_graph(text: str) -> Pdag:
    """Parse the graph file format into a Pdag.

    Format: first non-comment line is ``nodes: <p>``; each following line is
    ``<i> -> <j>`` or ``<i> -- <j>``; ``#`` starts a comment; indices 0-based.

    Examples
    --------
    >>> parse_graph("nodes: 2\\n0 -> 1\\n")
    Pdag(p=2, directed=[(0, 1)], undirected=[])
    """
    p = None
    directed = []
    undirected = []
    seen = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if p is None:
            m = _HEADER_RE.fullmatch(line)
            if not m:
                raise GraphParseError("expected 'nodes: <count>' header", ln)
            p = int(m.group(1))
            continue
        m = _EDGE_RE.fullmatch(line)
        if not m:
            raise GraphParseError(f"unrecognized edge line {line!r}", ln)
        i, op, j = int(m.group(1)), m.group(2), int(m.group(3))
        if i == j:
            raise GraphParseError(f"self loop on node {i}", ln)
        if i >= p or j >= p:
            raise GraphParseError(f"node index out of range for p={p}", ln)
        key = (i, j) if i < j else (j, i)
        if key in seen:
            raise GraphParseError(f"duplicate or conflicting edge for pair {key}", ln)
        seen[key] = ln
        if op == "->":
            directed.append((i, j))
        else:
            undirected.append(key)
    if p is None:
        raise GraphParseError("no 'nodes:' header found", 1)
    return Pdag(p, directed, undirected)


def serialize_graph(g: Pdag) -> str:
    """Serialize g in the graph file format: directed edges first, then undirected,
    each block lexicographically sorted."""
    lines = [f"nodes: {g.p}"]
    lines.extend(f"{i} -> {j}" for i, j in sorted(g.directed))
    lines.extend(f"{a} -- {b}" for a, b in sorted(g.undirected))
    return "\n".join(lines) + "\n"
