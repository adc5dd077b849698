"""Shared generators and independent brute-force oracles.

The oracles here re-derive results from definitions (path enumeration,
exhaustive orientation, conceptual move walks) on purpose: tests compare
them against the package's efficient implementations, so nothing in this
file may call the code path it certifies.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np

from argeslab.equivalence import dag_to_cpdag
from argeslab.graph_core import Cpdag, Dag, Pdag

EPS_IMP = 1e-12


# ---------------------------------------------------------------- generators

def random_dag(rng, p: int, prob: float) -> Dag:
    order = rng.permutation(p)
    edges = set()
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < prob:
                edges.add((int(order[a]), int(order[b])))
    return Dag(p, edges)


def random_pdag(rng, p: int, prob: float) -> Pdag:
    """Random mixed graph whose directed part is acyclic (edges follow a
    hidden random order)."""
    order = rng.permutation(p)
    directed = set()
    undirected = set()
    for a in range(p):
        for b in range(a + 1, p):
            r = rng.random()
            if r < prob / 2:
                directed.add((int(order[a]), int(order[b])))
            elif r < prob:
                key = (int(order[a]), int(order[b]))
                undirected.add((min(key), max(key)))
    return Pdag(p, directed, undirected)


def random_state(rng, p: int, prob: float) -> Cpdag:
    return dag_to_cpdag(random_dag(rng, p, prob))


def random_sample_source(rng, p: int, n: int = 80):
    from argeslab.correlation import sample_correlation
    X = rng.standard_normal((n, p))
    # mix columns so correlations are generically nonzero
    M = rng.standard_normal((p, p)) + np.eye(p) * 1.5
    return sample_correlation(X @ M)


def covered_edge_pairs(rng, count: int, pmax: int = 8):
    """Markov-equivalent DAG pairs differing by one covered-edge reversal."""
    out = []
    while len(out) < count:
        p = int(rng.integers(3, pmax + 1))
        g = random_dag(rng, p, 0.45)
        covered = [(x, y) for (x, y) in sorted(g.directed)
                   if set(g.parents(y)) - {x} == set(g.parents(x))]
        if not covered:
            continue
        x, y = covered[int(rng.integers(len(covered)))]
        h = Dag(p, (g.directed - {(x, y)}) | {(y, x)})
        out.append((g, h))
    return out


# ------------------------------------------------- d-separation path oracle

def _local_descendants(g: Dag, v: int) -> set:
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for a, b in g.directed:
            if a == u and b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def brute_force_d_separated(g: Dag, i: int, j: int, S) -> bool:
    """Enumerate every simple path between i and j; true iff all blocked.

    A path is blocked by S iff it has a non-collider node in S or a
    collider node none of whose descendants is in S.
    """
    S = set(S)
    desc = {v: _local_descendants(g, v) for v in range(g.p)}
    adj = {v: sorted(g.adjacent_set(v)) for v in range(g.p)}
    paths = []

    def dfs(v, path):
        if v == j:
            paths.append(list(path))
            return
        for w in adj[v]:
            if w not in path:
                path.append(w)
                dfs(w, path)
                path.pop()

    dfs(i, [i])
    for path in paths:
        blocked = False
        for t in range(1, len(path) - 1):
            a, v, b = path[t - 1], path[t], path[t + 1]
            collider = (a, v) in g.directed and (b, v) in g.directed
            if collider:
                if not (desc[v] & S):
                    blocked = True
                    break
            elif v in S:
                blocked = True
                break
        if not blocked:
            return False
    return True


def all_dags(p: int):
    """Every labeled DAG on p nodes (exhaustive state space, small p only)."""
    pairs = list(combinations(range(p), 2))
    out = []
    for assignment in product((0, 1, 2), repeat=len(pairs)):
        directed = set()
        for (a, b), code in zip(pairs, assignment):
            if code == 1:
                directed.add((a, b))
            elif code == 2:
                directed.add((b, a))
        if _local_acyclic(p, directed):
            out.append(Dag(p, directed))
    return out


def random_polytree(rng, p: int) -> Dag:
    """Random DAG whose skeleton is a uniform-ish random labeled tree."""
    labels = [int(v) for v in rng.permutation(p)]
    directed = set()
    for t in range(1, p):
        u = labels[int(rng.integers(t))]
        v = labels[t]
        if rng.random() < 0.5:
            directed.add((u, v))
        else:
            directed.add((v, u))
    return Dag(p, directed)


# --------------------------------------- equivalence-class orientation oracle

def _local_v_structures(p: int, directed) -> frozenset:
    adj = {v: set() for v in range(p)}
    pa = {v: set() for v in range(p)}
    for i, j in directed:
        adj[i].add(j)
        adj[j].add(i)
        pa[j].add(i)
    out = set()
    for j in range(p):
        for i, k in combinations(sorted(pa[j]), 2):
            if k not in adj[i]:
                out.add((i, j, k))
    return frozenset(out)


def _local_acyclic(p: int, directed) -> bool:
    out = {v: [] for v in range(p)}
    indeg = {v: 0 for v in range(p)}
    for i, j in directed:
        out[i].append(j)
        indeg[j] += 1
    queue = [v for v in range(p) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == p


def _skeleton_pairs(g: Pdag):
    pairs = set(g.undirected)
    for i, j in g.directed:
        pairs.add((i, j) if i < j else (j, i))
    return sorted(pairs)


def definitional_members(c: Pdag):
    """All acyclic orientations of c's skeleton with c's v-structures.

    The same-skeleton-same-v-structures characterization of Markov
    equivalence makes this the class c represents, derived without the
    package's completion or extension code.  The target v-structures are
    read off the mixed graph directly: i -> j <- k with i, k non-adjacent
    counting undirected edges, since an undirected co-parent link shields
    the triple in every member.
    """
    pairs = _skeleton_pairs(c)
    adj = {v: set() for v in range(c.p)}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    pa = {v: set() for v in range(c.p)}
    for i, j in c.directed:
        pa[j].add(i)
    target = frozenset(
        (i, j, k)
        for j in range(c.p)
        for i, k in combinations(sorted(pa[j]), 2)
        if k not in adj[i])
    members = []
    for bits in product((0, 1), repeat=len(pairs)):
        directed = {(a, b) if bit == 0 else (b, a)
                    for (a, b), bit in zip(pairs, bits)}
        if not _local_acyclic(c.p, directed):
            continue
        if _local_v_structures(c.p, directed) != target:
            continue
        members.append(Dag(c.p, directed))
    return members


def consensus_cpdag(g: Dag):
    """(directed set, undirected set) by intersecting member orientations."""
    members = definitional_members(g)
    directed = set()
    undirected = set()
    for a, b in _skeleton_pairs(g):
        orients = {(a, b) in m.directed for m in members}
        if orients == {True}:
            directed.add((a, b))
        elif orients == {False}:
            directed.add((b, a))
        else:
            undirected.add((a, b))
    return directed, undirected


# ----------------------------------------------- conceptual move-set oracles

def _local_adjacent(c: Pdag, i: int, k: int) -> bool:
    key = (i, k) if i < k else (k, i)
    return ((i, k) in c.directed or (k, i) in c.directed
            or key in c.undirected)


def local_admissible(c: Pdag, i: int, k: int, mode: str, restriction) -> bool:
    """Re-derived admissibility: restriction adjacency, plus for the
    adaptive modes a shielding v-structure or unshielded triple in c."""
    if mode == "unrestricted":
        return True
    if _local_adjacent(restriction, i, k):
        return True
    if mode.startswith("static"):
        return False
    if mode == "adaptive-cig":
        return any((i, j) in c.directed and (k, j) in c.directed
                   for j in range(c.p))
    if mode == "adaptive-skeleton":
        return any(_local_adjacent(c, i, j) and _local_adjacent(c, k, j)
                   for j in range(c.p) if j not in (i, k))
    raise ValueError(mode)


def oracle_insert_successors(c: Cpdag, model, mode: str = "unrestricted",
                             restriction=None):
    """Improving successor classes of every admissible single-edge addition
    to every member DAG, canonicalized."""
    succ = set()
    for H in definitional_members(c):
        for i in range(c.p):
            for k in range(c.p):
                if i == k or _local_adjacent(c, i, k):
                    continue
                if not local_admissible(c, i, k, mode, restriction):
                    continue
                new_edges = H.directed | {(i, k)}
                if not _local_acyclic(c.p, new_edges):
                    continue
                pa = set(H.parents(k))
                delta = (model.local_score(k, pa | {i})
                         - model.local_score(k, pa))
                if delta < -EPS_IMP:
                    succ.add(dag_to_cpdag(Dag(c.p, new_edges)))
    return succ


def oracle_delete_successors(c: Cpdag, model):
    succ = set()
    for H in definitional_members(c):
        for x, y in sorted(H.directed):
            pa = set(H.parents(y))
            delta = (model.local_score(y, pa - {x})
                     - model.local_score(y, pa))
            if delta < -EPS_IMP:
                succ.add(dag_to_cpdag(Dag(c.p, H.directed - {(x, y)})))
    return succ


def oracle_turn_successors(c: Cpdag, model):
    succ = set()
    for H in definitional_members(c):
        for u, v in sorted(H.directed):
            new_edges = (H.directed - {(u, v)}) | {(v, u)}
            if not _local_acyclic(c.p, new_edges):
                continue
            pa_v = set(H.parents(v))
            pa_u = set(H.parents(u))
            delta = (model.local_score(v, pa_v - {u})
                     - model.local_score(v, pa_v)
                     + model.local_score(u, pa_u | {v})
                     - model.local_score(u, pa_u))
            if delta < -EPS_IMP:
                s = dag_to_cpdag(Dag(c.p, new_edges))
                if s != c:
                    succ.add(s)
    return succ


# ------------------------------------------------------ lasso reference path

def _soft(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def ista_lasso(X, y, gamma, iters: int = 200_000, tol: float = 1e-13):
    """Proximal-gradient reference solver on the standardized problem.

    Returns (coefficients on the original scale, optimal objective on the
    standardized problem)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / sd
    yc = y - y.mean()
    G = Z.T @ Z / n
    cvec = Z.T @ yc / n
    L = float(np.linalg.eigvalsh(G)[-1]) + 1e-12
    b = np.zeros(X.shape[1])
    for _ in range(iters):
        b_new = _soft(b - (G @ b - cvec) / L, gamma / L)
        if np.max(np.abs(b_new - b)) < tol:
            b = b_new
            break
        b = b_new
    obj = float(0.5 / n * np.sum((yc - Z @ b) ** 2) + gamma * np.sum(np.abs(b)))
    return b / sd, obj


def lasso_objective(X, y, beta, gamma):
    """Objective of the standardized problem at original-scale beta."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / sd
    yc = y - y.mean()
    b = np.asarray(beta, dtype=float) * sd
    return float(0.5 / n * np.sum((yc - Z @ b) ** 2) + gamma * np.sum(np.abs(b)))
