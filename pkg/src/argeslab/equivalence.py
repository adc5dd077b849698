"""Markov-equivalence-class algebra: DAG <-> CPDAG conversion, orientation
closure, consistent extensions, and class enumeration."""

from __future__ import annotations

from itertools import product

from .graph_core import (Cpdag, CycleError, Dag, GraphError, Pdag, skeleton,
                         v_structures)


class ExtensionError(GraphError):
    """No consistent extension exists for the given PDAG."""


class MeekInconsistencyError(GraphError):
    """Orientation rules demanded both i -> j and j -> i."""


class ClassCapError(GraphError):
    """Equivalence class has more members than the requested cap."""


def markov_equivalent(a: Dag, b: Dag) -> bool:
    """True iff a and b have the same skeleton and the same v-structures."""
    if a.p != b.p:
        raise GraphError("node counts differ")
    return skeleton(a) == skeleton(b) and v_structures(a) == v_structures(b)


def _rule_firings(g: Pdag) -> set:
    """Orientations (a, b) demanded by one sweep of the four rules on g."""
    fires = set()
    und = sorted(g.undirected)
    # R1: a -> b, b -- c, a and c non-adjacent  =>  b -> c
    for b, c in und + [(c, b) for b, c in und]:
        for a in g.parents(b):
            if not g.is_adjacent(a, c):
                fires.add((b, c))
                break
    # R2: a -> b -> c with a -- c  =>  a -> c
    for a, c in und + [(c, a) for a, c in und]:
        for b in g.children(a):
            if g.has_directed(b, c):
                fires.add((a, c))
                break
    # R3: a -- b, a -- c, a -- d, c -> b, d -> b, c and d non-adjacent  =>  a -> b
    for a, b in und + [(b, a) for a, b in und]:
        nbrs = [c for c in g.neighbors(a) if c != b and g.has_directed(c, b)]
        done = False
        for x in range(len(nbrs)):
            for y in range(x + 1, len(nbrs)):
                if not g.is_adjacent(nbrs[x], nbrs[y]):
                    fires.add((a, b))
                    done = True
                    break
            if done:
                break
    # R4: a -- b, d -> c -> b, a adjacent to c and to d, b and d non-adjacent  =>  a -> b
    for a, b in und + [(b, a) for a, b in und]:
        done = False
        for c in g.parents(b):
            if not g.is_adjacent(a, c):
                continue
            for d in g.parents(c):
                if g.is_adjacent(a, d) and not g.is_adjacent(b, d):
                    fires.add((a, b))
                    done = True
                    break
            if done:
                break
    return fires


def apply_meek_closure(g: Pdag) -> Pdag:
    """Propagate the four standard orientation rules to a fixpoint.

    The skeleton is unchanged and the input orientations are preserved.
    Each sweep scans the current graph, collects every demanded orientation,
    and applies the batch at once, so the result is scan-order independent.
    Raises MeekInconsistencyError if a sweep demands both i -> j and j -> i.
    """
    current = g
    while True:
        fires = _rule_firings(current)
        if not fires:
            return current
        for a, b in fires:
            if (b, a) in fires:
                raise MeekInconsistencyError(
                    f"rules demand both {a} -> {b} and {b} -> {a}")
        directed = set(current.directed) | fires
        undirected = {e for e in current.undirected
                      if e not in fires and (e[1], e[0]) not in fires}
        current = Pdag(current.p, directed, undirected)


def dag_to_cpdag(g: Dag) -> Cpdag:
    """The completed PDAG of g's Markov equivalence class.

    Edges taking part in a v-structure keep their orientation, everything
    else starts undirected, and the orientation rules are closed.  Directed
    edges of the result are exactly the orientations shared by every member
    of the class (certified against a brute-force enumeration oracle in the
    test suite).
    """
    compelled = set()
    for i, j, k in v_structures(g):
        compelled.add((i, j))
        compelled.add((k, j))
    und = [(i, j) for i, j in g.directed if (i, j) not in compelled]
    closed = apply_meek_closure(Pdag(g.p, compelled, und))
    return Cpdag(g.p, closed.directed, closed.undirected)


def consistent_extension(g: Pdag) -> Dag:
    """Orient g's undirected edges into a DAG without new v-structures.

    Deterministic: repeatedly removes the lowest-index node that is a sink
    of the remaining directed edges and whose undirected neighbors are
    adjacent to all of its other remaining neighbors, orienting the
    undirected edges into it.  Raises ExtensionError when no such node
    exists, i.e. when g admits no consistent extension.

    Examples
    --------
    >>> consistent_extension(Pdag(2, undirected=[(0, 1)])).directed
    frozenset({(1, 0)})
    """
    p = g.p
    remaining = set(range(p))
    out_deg = [len(g.children(i)) for i in range(p)]
    parents = [set(g.parents(i)) for i in range(p)]
    neighbors = [set(g.neighbors(i)) for i in range(p)]
    adj = [set(g.adjacent_set(i)) for i in range(p)]
    oriented = set(g.directed)

    while remaining:
        chosen = None
        for x in sorted(remaining):
            if out_deg[x] != 0:
                continue
            ok = all(adj[x] <= adj[y] | {y}
                     for y in neighbors[x])
            if ok:
                chosen = x
                break
        if chosen is None:
            raise ExtensionError("PDAG admits no consistent extension")
        x = chosen
        for y in neighbors[x]:
            oriented.add((y, x))
        remaining.discard(x)
        for y in adj[x]:
            adj[y].discard(x)
            neighbors[y].discard(x)
            if x in parents[y]:
                parents[y].discard(x)
            elif y in parents[x]:
                out_deg[y] -= 1
        neighbors[x] = set()
        adj[x] = set()
    try:
        return Dag(p, oriented)
    except CycleError as exc:  # directed part already cyclic on entry
        raise ExtensionError("directed edges contain a cycle") from exc


def enumerate_equivalence_class(c: Cpdag, cap: int = 100_000) -> list:
    """All DAGs with c's skeleton, directed edges, and v-structures.

    For a valid CPDAG this is exactly the Markov equivalence class.  Used
    by brute-force oracles and tests; raises ClassCapError when the class
    has more than cap members.  Deterministic order: undirected edges are
    oriented per a binary counter over the sorted edge list.
    """
    und = sorted(c.undirected)
    base = sorted(c.directed)
    target = v_structures(c)
    members = []
    for bits in product((0, 1), repeat=len(und)):
        directed = list(base)
        for (a, b), bit in zip(und, bits):
            directed.append((a, b) if bit == 0 else (b, a))
        try:
            d = Dag(c.p, directed)
        except CycleError:
            continue
        if v_structures(d) == target:
            members.append(d)
            if len(members) > cap:
                raise ClassCapError(f"equivalence class exceeds cap {cap}")
    return members


def ensure_cpdag(g: Pdag) -> Cpdag:
    """Validate that g is a completed PDAG and return it as a Cpdag.

    A graph is a valid CPDAG iff it has a consistent extension whose
    completed PDAG reproduces the graph exactly.
    """
    try:
        ext = consistent_extension(g)
    except ExtensionError as exc:
        raise GraphError("not a CPDAG: no consistent extension") from exc
    c = dag_to_cpdag(ext)
    if c.directed != g.directed or c.undirected != g.undirected:
        raise GraphError("not a CPDAG: completion of an extension differs")
    return c
