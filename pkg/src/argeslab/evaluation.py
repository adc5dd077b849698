"""Graph-comparison metrics: structural Hamming distance, confusion
counts in skeleton and directed modes, and threshold-averaged ROC points."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .graph_core import Dag, GraphError, Pdag

SKELETON = "skeleton"
DIRECTED = "directed"


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else 1.0

    @property
    def fpr(self) -> float:
        neg = self.fp + self.tn
        return self.fp / neg if neg else 0.0


def shd(a: Pdag, b: Pdag) -> int:
    """Number of node pairs whose edge status differs.

    Status is one of absent, directed either way, or undirected, so an
    orientation flip counts 1.  Symmetric, zero only on equal graphs, and
    a metric on the status space.
    """
    if a.p != b.p:
        raise GraphError("node count mismatch")
    count = 0
    for i in range(a.p):
        for j in range(i + 1, a.p):
            if a.edge_status(i, j) != b.edge_status(i, j):
                count += 1
    return count


def confusion(est: Pdag, truth: Pdag, mode: str = SKELETON) -> Confusion:
    """Confusion counts of est against truth.

    Skeleton mode scores unordered adjacency over the C(p, 2) pairs.
    Directed mode scores ordered directed edges over the p(p - 1) pairs:
    the positives are the directed edges of the truth equivalence class
    (a DAG truth is canonicalized first), and a prediction counts as true
    only with identical orientation.  Undirected edges on either side are
    ignored in directed mode.
    """
    if est.p != truth.p:
        raise GraphError("node count mismatch")
    p = est.p
    if mode == SKELETON:
        true_pairs = {(i, j) for i in range(p) for j in range(i + 1, p)
                      if truth.is_adjacent(i, j)}
        est_pairs = {(i, j) for i in range(p) for j in range(i + 1, p)
                     if est.is_adjacent(i, j)}
        universe = p * (p - 1) // 2
    elif mode == DIRECTED:
        if isinstance(truth, Dag):
            from .equivalence import dag_to_cpdag
            truth = dag_to_cpdag(truth)
        true_pairs = set(truth.directed)
        est_pairs = set(est.directed)
        universe = p * (p - 1)
    else:
        raise ValueError(f"unknown confusion mode {mode!r}")
    tp = len(true_pairs & est_pairs)
    fp = len(est_pairs - true_pairs)
    fn = len(true_pairs - est_pairs)
    tn = universe - tp - fp - fn
    return Confusion(tp, fp, tn, fn)


def roc_average(runs) -> list:
    """Per-tuning-value means of (tpr, fpr) across replicates.

    runs is a flat list of (tuning value, Confusion); every tuning value
    must appear the same number of times.  Returns
    (tuning value, mean tpr, mean fpr) triples sorted by mean fpr.
    """
    groups = OrderedDict()
    for value, conf in runs:
        groups.setdefault(value, []).append(conf)
    if not groups:
        return []
    sizes = {len(g) for g in groups.values()}
    if len(sizes) != 1:
        raise ValueError("every tuning value needs the same replicate count")
    out = []
    for value, confs in groups.items():
        mean_tpr = sum(c.tpr for c in confs) / len(confs)
        mean_fpr = sum(c.fpr for c in confs) / len(confs)
        out.append((value, mean_tpr, mean_fpr))
    out.sort(key=lambda t: t[2])
    return out
