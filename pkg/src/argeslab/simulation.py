"""Random weighted DAGs, linear-SEM sampling, and monotone marginal
transforms.

All randomness flows from one seed through named child streams, one per
structural draw (topology, weights, variances, noise), so fixtures are
bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graph_core import Dag, GraphError, topological_order

GAUSSIAN = "gaussian"
UNIFORM = "uniform"
LAPLACE = "laplace"
ERROR_KINDS = (GAUSSIAN, UNIFORM, LAPLACE)

IDENTITY = "identity"
CUBIC = "cubic"
SIGNED_SQRT = "signed-sqrt"
EXP = "exp"
NPN_FAMILIES = (IDENTITY, CUBIC, SIGNED_SQRT, EXP)


@dataclass(frozen=True)
class LinearSem:
    """A linear structural equation model X = B X + eps.

    B[j, i] is the weight of edge i -> j; its nonzero pattern must be
    acyclic.  order is a causal order of the nodes, kept explicit so that
    files round-trip exactly.
    """

    p: int
    B: np.ndarray
    error_variances: np.ndarray
    error_kind: str = GAUSSIAN
    order: tuple = field(default=())

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        ev = np.asarray(self.error_variances, dtype=float)
        if B.shape != (self.p, self.p):
            raise ValueError("weight matrix shape mismatch")
        if ev.shape != (self.p,):
            raise ValueError("error variance length mismatch")
        if np.any(ev <= 0):
            raise ValueError("error variances must be positive")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "error_variances", ev)
        if self.error_kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind {self.error_kind!r}")
        if self.order:
            order = self.order
        else:
            try:
                order = topological_order(self.structure())
            except GraphError as exc:
                raise ValueError("weight pattern is cyclic") from exc
        order = tuple(int(v) for v in order)
        if sorted(order) != list(range(self.p)):
            raise ValueError("order must be a permutation of the nodes")
        pos = {v: k for k, v in enumerate(order)}
        heads, tails = np.nonzero(B)
        for j, i in zip(heads.tolist(), tails.tolist()):
            if pos[i] >= pos[j]:
                raise ValueError("weight pattern is not acyclic in the order")
        object.__setattr__(self, "order", order)
        B.setflags(write=False)
        ev.setflags(write=False)

    def structure(self) -> Dag:
        edges = {(i, j) for j in range(self.p) for i in range(self.p)
                 if self.B[j, i] != 0.0}
        return Dag(self.p, edges)

    def edges(self):
        return sorted((i, j, float(self.B[j, i]))
                      for j in range(self.p) for i in range(self.p)
                      if self.B[j, i] != 0.0)


def random_sem(p: int, expected_edges: float, seed,
               error_kind: str = GAUSSIAN) -> LinearSem:
    """A random weighted DAG as a linear SEM, fully determined by seed.

    A uniform random permutation fixes the causal order; each node pair is
    an edge independently with probability expected_edges / C(p, 2),
    oriented along the order.  Weights are uniform on (-1,-0.1) u (0.1,1),
    error variances uniform on [1, 2].
    """
    n_pairs = p * (p - 1) // 2
    if expected_edges < 0 or expected_edges > n_pairs:
        raise ValueError(f"expected_edges must lie in [0, {n_pairs}]")
    ss_topo, ss_weight, ss_var = np.random.SeedSequence(seed).spawn(4)[:3]
    rng_topo = np.random.default_rng(ss_topo)
    rng_weight = np.random.default_rng(ss_weight)
    rng_var = np.random.default_rng(ss_var)

    order = rng_topo.permutation(p)
    prob = expected_edges / n_pairs if n_pairs else 0.0
    include = rng_topo.random(n_pairs) < prob
    B = np.zeros((p, p))
    idx = 0
    for a in range(p):
        for b in range(a + 1, p):
            if include[idx]:
                i, j = int(order[a]), int(order[b])
                mag = rng_weight.uniform(0.1, 1.0)
                sign = 1.0 if rng_weight.random() < 0.5 else -1.0
                B[j, i] = sign * mag
            idx += 1
    variances = rng_var.uniform(1.0, 2.0, size=p)
    return LinearSem(p, B, variances, error_kind, tuple(int(v) for v in order))


def sem_from_dag(g: Dag, seed, error_kind: str = GAUSSIAN) -> LinearSem:
    """Attach random weights and variances to a fixed structure."""
    _, ss_weight, ss_var = np.random.SeedSequence(seed).spawn(4)[:3]
    rng_weight = np.random.default_rng(ss_weight)
    rng_var = np.random.default_rng(ss_var)
    B = np.zeros((g.p, g.p))
    for i, j in sorted(g.directed):
        mag = rng_weight.uniform(0.1, 1.0)
        sign = 1.0 if rng_weight.random() < 0.5 else -1.0
        B[j, i] = sign * mag
    variances = rng_var.uniform(1.0, 2.0, size=g.p)
    return LinearSem(g.p, B, variances, error_kind)


def _noise(rng, kind: str, variances: np.ndarray, n: int) -> np.ndarray:
    p = variances.shape[0]
    if kind == GAUSSIAN:
        return rng.standard_normal((n, p)) * np.sqrt(variances)
    if kind == UNIFORM:
        half = np.sqrt(3.0 * variances)
        return rng.uniform(-1.0, 1.0, size=(n, p)) * half
    if kind == LAPLACE:
        scale = np.sqrt(variances / 2.0)
        return rng.laplace(0.0, 1.0, size=(n, p)) * scale
    raise ValueError(f"unknown error kind {kind!r}")


def sample_sem(sem: LinearSem, n: int, seed) -> np.ndarray:
    """n i.i.d. rows of X = (I - B)^-1 eps, by substitution in causal order.

    Noise uses its own child stream of seed; the non-Gaussian kinds are
    scaled to match the configured variances.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    # child streams of one root seed: 0 topology, 1 weights, 2 variances, 3 noise
    ss_noise = np.random.SeedSequence(seed).spawn(4)[3]
    rng = np.random.default_rng(ss_noise)
    eps = _noise(rng, sem.error_kind, sem.error_variances, n)
    X = np.zeros((n, sem.p))
    for v in sem.order:
        pa = np.nonzero(sem.B[v])[0]
        X[:, v] = eps[:, v]
        if pa.size:
            X[:, v] += X[:, pa] @ sem.B[v, pa]
    return X


def nonparanormal_transform(data: np.ndarray, family: str) -> np.ndarray:
    """Apply a strictly increasing map columnwise.

    Rank correlations are exactly invariant under every family; Pearson
    correlations generally change for the non-identity families.
    """
    X = np.asarray(data, dtype=float)
    if family == IDENTITY:
        return X.copy()
    if family == CUBIC:
        return X ** 3
    if family == SIGNED_SQRT:
        return np.sign(X) * np.sqrt(np.abs(X))
    if family == EXP:
        return np.exp(X)
    raise ValueError(f"unknown transform family {family!r}")


def example1_sem() -> LinearSem:
    """The four-node fixture with a unique member in its equivalence class.

    Edges 0 -> 2 (1.4), 1 -> 2 (1.3), 1 -> 3 (1.2), 2 -> 3 (0.9) with unit
    Gaussian errors.  Its structure is its own equivalence class, both
    marginal independence (0, 1) and the conditional independence of 0 and
    3 given {1, 2} hold in the population, and the conditional independence
    graph contains every pair except {0, 3}.
    """
    B = np.zeros((4, 4))
    B[2, 0] = 1.4
    B[2, 1] = 1.3
    B[3, 1] = 1.2
    B[3, 2] = 0.9
    return LinearSem(4, B, np.ones(4), GAUSSIAN)


def sem_to_json_dict(sem: LinearSem, config: dict | None = None) -> dict:
    doc = {
        "p": sem.p,
        "edges": [{"from": i, "to": j, "weight": w} for i, j, w in sem.edges()],
        "error_variances": [float(v) for v in sem.error_variances],
        "error_kind": sem.error_kind,
        "order": list(sem.order),
    }
    if config is not None:
        doc["config"] = config
    return doc


def sem_from_json_dict(doc: dict) -> LinearSem:
    p = int(doc["p"])
    B = np.zeros((p, p))
    for e in doc["edges"]:
        B[int(e["to"]), int(e["from"])] = float(e["weight"])
    order = tuple(int(v) for v in doc.get("order", ()))
    return LinearSem(p, B, np.asarray(doc["error_variances"], dtype=float),
                     doc.get("error_kind", GAUSSIAN), order)


def write_sem(sem: LinearSem, path, config: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(sem_to_json_dict(sem, config), fh, indent=2)
        fh.write("\n")


def read_sem(path) -> LinearSem:
    with open(path) as fh:
        return sem_from_json_dict(json.load(fh))


def write_dataset(data: np.ndarray, path) -> None:
    header = ",".join(f"x{j}" for j in range(data.shape[1]))
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def read_dataset(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data
