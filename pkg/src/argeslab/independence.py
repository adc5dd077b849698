"""d-separation and independence-map queries on DAGs."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .graph_core import Dag, GraphError, Pdag, descendants, skeleton, v_structures


def _check_query(g: Dag, i: int, j: int, s) -> frozenset:
    s = frozenset(s)
    if i == j:
        raise GraphError("query endpoints must differ")
    if i in s or j in s:
        raise GraphError("conditioning set must exclude the endpoints")
    for x in (i, j, *s):
        if not 0 <= x < g.p:
            raise GraphError(f"node {x} out of range for p={g.p}")
    return s


def d_separated(g: Dag, i: int, j: int, s) -> bool:
    """True iff the conditioning set s blocks every path between i and j in g.

    A path is blocked when it contains a non-collider in s, or a collider
    none of whose descendants is in s.  Implemented as reachability on the
    moralized ancestral subgraph; a brute-force path-enumeration oracle
    certifies agreement in the test suite.

    Examples
    --------
    >>> g = Dag(3, [(0, 1), (2, 1)])
    >>> d_separated(g, 0, 2, set())
    True
    >>> d_separated(g, 0, 2, {1})
    False
    """
    s = _check_query(g, i, j, s)
    # ancestral node set of {i, j} | s, each node's ancestors including itself
    anc = set()
    stack = [i, j, *s]
    while stack:
        u = stack.pop()
        if u in anc:
            continue
        anc.add(u)
        stack.extend(g.parents(u))
    # moralize: connect co-parents, drop directions
    moral = [set() for _ in range(g.p)]
    for w in anc:
        pa = [u for u in g.parents(w) if u in anc]
        for u in pa:
            moral[u].add(w)
            moral[w].add(u)
        for a in range(len(pa)):
            for b in range(a + 1, len(pa)):
                moral[pa[a]].add(pa[b])
                moral[pa[b]].add(pa[a])
    # reachability avoiding s
    seen = {i}
    stack = [i]
    while stack:
        u = stack.pop()
        for v in moral[u]:
            if v == j:
                return False
            if v not in seen and v not in s:
                seen.add(v)
                stack.append(v)
    return True


def _nondescendants(h: Dag, k: int) -> list:
    de = descendants(h, k)
    return [i for i in range(h.p) if i not in de]


def is_independence_map(h: Dag, g: Dag) -> bool:
    """True iff every independence encoded by h also holds in g.

    h's constraint set is generated by its local Markov conditions, so it
    suffices that every node is d-separated in g from each non-descendant
    (in h) given its h-parents.
    """
    if h.p != g.p:
        raise GraphError("node counts differ")
    for k in range(h.p):
        pa = frozenset(h.parents(k))
        for i in _nondescendants(h, k):
            if i in pa:
                continue
            if not d_separated(g, i, k, pa):
                return False
    return True


class ViolationCondition(enum.Enum):
    """The three witness kinds, numbered as in the characterization they realize."""
    MISSING_SKELETON_EDGE = 1
    V_STRUCTURE_MISMATCH = 2
    V_STRUCTURE_DEPENDENCE = 3


@dataclass(frozen=True)
class ImapViolation:
    condition: ViolationCondition
    witness: tuple


def imap_violation(h: Dag, g: Dag):
    """A witness that h is not an independence map of g, or None.

    Scans the three conditions in order, lexicographically within each:
    (1) an adjacency of g missing from h; (2) a triple (i, j, k) with i, k
    non-adjacent in h, i-j-k a non-collider path of h, and i -> j <- k a
    v-structure of g; (3) a v-structure (i, j, k) of h where one shielding
    endpoint is a non-descendant of the other yet not d-separated from it
    in g given the h-parents.  None is returned iff is_independence_map(h, g).
    """
    if h.p != g.p:
        raise GraphError("node counts differ")
    for a, b in sorted(skeleton(g).undirected):
        if not h.is_adjacent(a, b):
            return ImapViolation(ViolationCondition.MISSING_SKELETON_EDGE, (a, b))
    g_vs = set(v_structures(g))
    for i, j, k in sorted(g_vs):
        if h.is_adjacent(i, k):
            continue
        if not (h.is_adjacent(i, j) and h.is_adjacent(j, k)):
            continue
        if h.has_directed(i, j) and h.has_directed(k, j):
            continue  # collider in h as well
        return ImapViolation(ViolationCondition.V_STRUCTURE_MISMATCH, (i, j, k))
    for i, j, k in v_structures(h):
        for a, c in ((i, k), (k, i)):
            if a in descendants(h, c):
                continue
            if not d_separated(g, a, c, frozenset(h.parents(c))):
                return ImapViolation(ViolationCondition.V_STRUCTURE_DEPENDENCE,
                                     (a, j, c))
    return None


def find_admissible_improvement(h: Dag, g: Dag, restriction: Pdag, mode: str):
    """An ordered pair (i, k) whose insertion into h is improving and admissible.

    mode is "cig" or "skeleton" and selects which shielding structure of
    CPDAG(h) grants admissibility beyond adjacency in the restriction graph.
    Returns the lexicographically first pair (i, k) with i, k non-adjacent
    in h, i a non-descendant of k, i and k dependent in g given h's parents
    of k, and i -> k admissible; returns None iff h is an independence map
    of g.
    """
    from .equivalence import dag_to_cpdag
    from .search import RestrictionPolicy, edge_admissible

    if restriction.p != h.p:
        raise GraphError("restriction node count mismatch")
    if mode not in ("cig", "skeleton"):
        raise ValueError(f"mode must be 'cig' or 'skeleton', got {mode!r}")
    policy = RestrictionPolicy(f"adaptive-{mode}", restriction)
    c = dag_to_cpdag(h)
    for i in range(h.p):
        for k in range(h.p):
            if i == k or h.is_adjacent(i, k):
                continue
            if i in descendants(h, k):
                continue
            if d_separated(g, i, k, frozenset(h.parents(k))):
                continue
            if edge_admissible(c, i, k, policy):
                return (i, k)
    return None
