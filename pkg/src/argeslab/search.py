"""Move enumeration and the greedy phases over equivalence classes.

Moves are generated through an operator table: Insert(x, y, T) and
Delete(x, y, H) with clique and blocked-path validity conditions, the
standard efficient realization of single-edge modifications between
member DAGs.  The test suite certifies the reachable successor sets
against a definitional brute-force enumeration.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from itertools import chain, combinations

import numpy as np

from .correlation import NumericError
from .equivalence import (consistent_extension, dag_to_cpdag,
                          enumerate_equivalence_class)
from .graph_core import Cpdag, CycleError, Dag, GraphError, Pdag
from .scoring import ScoreModel

UNRESTRICTED = "unrestricted"
STATIC_CIG = "static-cig"
STATIC_SKELETON = "static-skeleton"
ADAPTIVE_CIG = "adaptive-cig"
ADAPTIVE_SKELETON = "adaptive-skeleton"
_MODES = (UNRESTRICTED, STATIC_CIG, STATIC_SKELETON, ADAPTIVE_CIG,
          ADAPTIVE_SKELETON)

VARIANTS = ("ges", "rges-cig", "rges-skeleton", "arges-cig", "arges-skeleton")
_VARIANT_MODE = {
    "ges": UNRESTRICTED,
    "rges-cig": STATIC_CIG,
    "rges-skeleton": STATIC_SKELETON,
    "arges-cig": ADAPTIVE_CIG,
    "arges-skeleton": ADAPTIVE_SKELETON,
}

# a move improves only if its delta clears this margin, guarding float churn
EPS_IMPROVING = 1e-12

INSERT = "insert"
DELETE = "delete"
TURN = "turn"

OPTIMAL = "optimal"
WORST_IN_WINDOW = "worst-in-window"
RANDOM_IN_WINDOW = "random-in-window"


class SearchError(Exception):
    pass


class StaleMoveError(SearchError):
    """The move was enumerated on a different graph than it is applied to."""


class SearchRunawayError(SearchError):
    """A phase exceeded its step bound, which strict improvement forbids."""


@dataclass(frozen=True)
class RestrictionPolicy:
    """Which edge insertions the forward phase may consider.

    unrestricted admits every pair; the static modes admit only pairs
    adjacent in the given undirected graph; the adaptive modes additionally
    admit pairs shielding a v-structure (cig) or an unshielded triple
    (skeleton) of the current equivalence class, re-checked every step.
    """

    mode: str
    graph: Pdag | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.mode != UNRESTRICTED and self.graph is None:
            raise ValueError(f"policy {self.mode!r} needs a restriction graph")


def edge_admissible(c: Pdag, i: int, k: int, policy: RestrictionPolicy) -> bool:
    """Whether the pair (i, k), non-adjacent in c, may be inserted."""
    if policy.mode == UNRESTRICTED:
        return True
    g = policy.graph
    if g.p != c.p:
        raise GraphError("restriction graph node count mismatch")
    if g.is_adjacent(i, k):
        return True
    if policy.mode == STATIC_CIG or policy.mode == STATIC_SKELETON:
        return False
    if c.is_adjacent(i, k):
        return False
    if policy.mode == ADAPTIVE_CIG:
        # a node j with i -> j <- k makes (i, j, k) a v-structure of c
        return any(c.has_directed(k, j) for j in c.children(i))
    # adaptive-skeleton: any common adjacency shields an unshielded triple
    return bool(c.adjacent_set(i) & c.adjacent_set(k))


@dataclass(frozen=True)
class MoveProposal:
    """One admissible improving transition between equivalence classes.

    context is the subset parameterizing the move: for inserts the
    undirected neighbors of y oriented toward y alongside the new edge,
    for deletes the shared neighbors oriented away, for turns the witness
    member's remaining parent context.
    """

    kind: str
    x: int
    y: int
    context: frozenset
    delta: object
    base: Pdag = field(repr=False, compare=False)
    successor: Pdag | None = field(default=None, repr=False, compare=False)

    def sort_key(self):
        return (self.delta.value, self.kind, self.x, self.y,
                tuple(sorted(self.context)))

    def order_key(self):
        return (self.kind, self.x, self.y, tuple(sorted(self.context)))


def _subsets(items):
    items = sorted(items)
    return chain.from_iterable(combinations(items, r)
                               for r in range(len(items) + 1))


def _is_clique(c: Pdag, nodes) -> bool:
    nodes = sorted(nodes)
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            if not c.is_adjacent(nodes[a], nodes[b]):
                return False
    return True


def _semidirected_reaches(c: Pdag, src: int, dst: int, blocked) -> bool:
    """True if a path src to dst exists along undirected or forward edges
    that avoids the blocked set."""
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        for v in chain(c.children(u), c.neighbors(u)):
            if v == dst:
                return True
            if v not in seen and v not in blocked:
                seen.add(v)
                stack.append(v)
    return False


def _skip(warnings_out, kind, x, y, exc):
    if warnings_out is not None:
        warnings_out.append(f"skipped {kind} ({x}, {y}): {exc}")


def enumerate_insertions(c: Cpdag, model: ScoreModel,
                         policy: RestrictionPolicy,
                         warnings_out: list | None = None) -> list:
    """Every strictly improving admissible insert move on c.

    For each admissible non-adjacent ordered pair (x, y) and each subset T
    of y's undirected neighbors not adjacent to x, the move is valid when
    the shared neighbors of y and x together with T form a clique that
    blocks every semi-directed path from y to x.  The score delta
    conditions on y's parents plus that clique, the parent set realized in
    a witnessing member DAG.  Deterministic order: (x, y, sorted T).
    """
    props = []
    for y in range(c.p):
        ne_y = c.neighbors(y)
        pa_y = frozenset(c.parents(y))
        for x in range(c.p):
            if x == y or c.is_adjacent(x, y):
                continue
            if not edge_admissible(c, x, y, policy):
                continue
            adj_x = c.adjacent_set(x)
            na = frozenset(t for t in ne_y if t in adj_x)
            pool = [t for t in ne_y if t not in adj_x]
            for t_tuple in _subsets(pool):
                block = na | frozenset(t_tuple)
                if not _is_clique(c, block):
                    continue
                if _semidirected_reaches(c, y, x, block):
                    continue
                try:
                    delta = model.add_edge_delta(y, pa_y | block, x)
                except NumericError as exc:
                    _skip(warnings_out, INSERT, x, y, exc)
                    continue
                if delta.value < -EPS_IMPROVING:
                    props.append(MoveProposal(INSERT, x, y,
                                              frozenset(t_tuple), delta, c))
    props.sort(key=MoveProposal.order_key)
    return props


def enumerate_deletions(c: Cpdag, model: ScoreModel,
                        warnings_out: list | None = None) -> list:
    """Every strictly improving delete move on c; never restricted.

    Directed edges x -> y propose (x, y); undirected edges propose both
    orders.  For each subset H of the shared neighbors of y and x, the
    move is valid when the remaining shared neighbors form a clique; the
    delta conditions on that remainder plus y's parents plus x.
    """
    props = []
    pairs = sorted(c.directed)
    for a, b in sorted(c.undirected):
        pairs.append((a, b))
        pairs.append((b, a))
    for x, y in pairs:
        ne_y = c.neighbors(y)
        adj_x = c.adjacent_set(x)
        na = [t for t in ne_y if t in adj_x]
        pa_y = frozenset(c.parents(y))
        for h_tuple in _subsets(na):
            keep = frozenset(na) - frozenset(h_tuple)
            if not _is_clique(c, keep):
                continue
            try:
                delta = model.delete_edge_delta(y, keep | pa_y | {x}, x)
            except NumericError as exc:
                _skip(warnings_out, DELETE, x, y, exc)
                continue
            if delta.value < -EPS_IMPROVING:
                props.append(MoveProposal(DELETE, x, y,
                                          frozenset(h_tuple), delta, c))
    props.sort(key=MoveProposal.order_key)
    return props


def enumerate_turns(c: Cpdag, model: ScoreModel, cap: int = 100_000,
                    warnings_out: list | None = None) -> list:
    """Every strictly improving single-edge-reversal move on c.

    Definitional: walks the equivalence class (bounded by cap), reverses
    each member edge that stays acyclic, and canonicalizes; one proposal
    is kept per distinct successor class, carrying that successor.  Off
    the default pipeline; meant for the optional turning phase.
    """
    props = []
    seen = set()
    for h in enumerate_equivalence_class(c, cap):
        for u, v in sorted(h.directed):
            flipped = (h.directed - {(u, v)}) | {(v, u)}
            try:
                h2 = Dag(c.p, flipped)
            except CycleError:
                continue
            succ = dag_to_cpdag(h2)
            if succ == c or succ in seen:
                continue
            pa_v = frozenset(h.parents(v))
            pa_u = frozenset(h.parents(u))
            try:
                d_del = model.delete_edge_delta(v, pa_v, u)
                d_add = model.add_edge_delta(u, pa_u, v)
            except NumericError as exc:
                _skip(warnings_out, TURN, u, v, exc)
                continue
            seen.add(succ)
            value = d_del.value + d_add.value
            if value < -EPS_IMPROVING:
                delta = type(d_add)(value, d_add.rho,
                                    d_del.regularized or d_add.regularized)
                props.append(MoveProposal(TURN, u, v, pa_v - {u}, delta, c,
                                          successor=succ))
    props.sort(key=MoveProposal.order_key)
    return props


def apply_move(c: Cpdag, mv: MoveProposal) -> Cpdag:
    """The successor equivalence class of applying mv to c.

    Inserts and deletes perform the move's local orientations on c, take a
    consistent extension, and canonicalize; turns return the successor
    computed during enumeration.  Raises StaleMoveError when mv was not
    enumerated on c.
    """
    if mv.base != c:
        raise StaleMoveError("move was enumerated on a different graph")
    directed = set(c.directed)
    undirected = set(c.undirected)

    def orient(a, b):
        key = (a, b) if a < b else (b, a)
        undirected.discard(key)
        directed.add((a, b))

    if mv.kind == INSERT:
        for t in mv.context:
            orient(t, mv.y)
        directed.add((mv.x, mv.y))
    elif mv.kind == DELETE:
        directed.discard((mv.x, mv.y))
        key = (mv.x, mv.y) if mv.x < mv.y else (mv.y, mv.x)
        undirected.discard(key)
        for h in mv.context:
            orient(mv.y, h)
            if c.has_undirected(mv.x, h):
                orient(mv.x, h)
    elif mv.kind == TURN:
        return mv.successor
    else:
        raise ValueError(f"unknown move kind {mv.kind!r}")
    ext = consistent_extension(Pdag(c.p, directed, undirected))
    return dag_to_cpdag(ext)


TraceStep = namedtuple("TraceStep", ["phase", "move", "cum_score"])
DeltaTraceStep = namedtuple("DeltaTraceStep",
                            ["move", "cum_score", "max_rho", "chosen_rho"])


def _max_steps(p: int) -> int:
    return p * p + 16


def _class_score(model: ScoreModel, c: Cpdag) -> float:
    return model.dag_score(consistent_extension(c))


def _run_phase(phase_name, c, model, enumerate_fn, warnings_out, cum):
    trace = []
    for _ in range(_max_steps(c.p)):
        props = enumerate_fn(c)
        if not props:
            return c, trace, cum
        best = min(props, key=MoveProposal.sort_key)
        c = apply_move(c, best)
        cum += best.delta.value
        trace.append(TraceStep(phase_name, best, cum))
    raise SearchRunawayError(f"{phase_name} phase exceeded its step bound")


def forward_phase(start: Cpdag, model: ScoreModel, policy: RestrictionPolicy,
                  warnings_out: list | None = None,
                  cum_score: float | None = None):
    """Greedy minimum-delta insertions until none improve.

    Admissibility is evaluated against the current class each round, which
    is what makes the adaptive policies adaptive.  Returns the final class
    and the move trace with cumulative scores.
    """
    cum = _class_score(model, start) if cum_score is None else cum_score
    c, trace, _ = _run_phase(
        "forward", start, model,
        lambda g: enumerate_insertions(g, model, policy, warnings_out),
        warnings_out, cum)
    return c, trace


def backward_phase(start: Cpdag, model: ScoreModel,
                   warnings_out: list | None = None,
                   cum_score: float | None = None):
    """Greedy minimum-delta deletions until none improve; never restricted."""
    cum = _class_score(model, start) if cum_score is None else cum_score
    c, trace, _ = _run_phase(
        "backward", start, model,
        lambda g: enumerate_deletions(g, model, warnings_out),
        warnings_out, cum)
    return c, trace


def turning_phase(start: Cpdag, model: ScoreModel,
                  warnings_out: list | None = None,
                  cum_score: float | None = None, cap: int = 100_000):
    cum = _class_score(model, start) if cum_score is None else cum_score
    c, trace, _ = _run_phase(
        "turning", start, model,
        lambda g: enumerate_turns(g, model, cap, warnings_out),
        warnings_out, cum)
    return c, trace


@dataclass
class LearnReport:
    """Final class, move trace, configuration echo, and warnings of a run."""

    final: Cpdag
    trace: list
    config: dict
    warnings: list

    def to_json_dict(self) -> dict:
        from .graph_core import serialize_graph
        moves = [{
            "phase": step.phase,
            "kind": step.move.kind,
            "x": step.move.x,
            "y": step.move.y,
            "context": sorted(step.move.context),
            "delta": step.move.delta.value,
            "cum_score": step.cum_score,
        } for step in self.trace]
        return {
            "variant": self.config.get("variant"),
            "lambda": self.config.get("lambda"),
            "score_kind": self.config.get("score_kind"),
            "config": self.config,
            "moves": moves,
            "final_graph": serialize_graph(self.final),
            "warnings": list(self.warnings),
        }


def run_learner(variant: str, model: ScoreModel, restriction: Pdag | None = None,
                start: Cpdag | None = None, turning: bool = False,
                iterate: bool = False, max_cycles: int = 100) -> LearnReport:
    """Run one full learner: forward, backward, then optionally turning,
    optionally iterated to a fixpoint.

    variant selects the forward-phase restriction policy; ges runs
    unrestricted, the others need the undirected restriction graph.
    Backward is unrestricted for every variant.  For oracle sources the
    penalty is checked against the soundness bound accumulated from the
    partial correlations seen during the run.

    Examples
    --------
    Fitting with an oracle source and a small penalty returns the
    population-optimal class; see the demo command for the worked
    four-node run.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    mode = _VARIANT_MODE[variant]
    if mode != UNRESTRICTED and restriction is None:
        raise ValueError(f"variant {variant!r} needs a restriction graph")
    policy = RestrictionPolicy(mode, restriction if mode != UNRESTRICTED else None)
    p = model.source.p
    c = Cpdag(p) if start is None else start
    warnings: list = []
    trace: list = []
    cum = _class_score(model, c)

    for _ in range(max_cycles):
        moved = len(trace)
        c, steps = forward_phase(c, model, policy, warnings, cum)
        trace.extend(steps)
        cum = steps[-1].cum_score if steps else cum
        c, steps = backward_phase(c, model, warnings, cum)
        trace.extend(steps)
        cum = steps[-1].cum_score if steps else cum
        if turning:
            c, steps = turning_phase(c, model, warnings, cum)
            trace.extend(steps)
            cum = steps[-1].cum_score if steps else cum
        if len(trace) == moved or not iterate:
            break
    else:
        warnings.append(f"iteration cap {max_cycles} reached before a fixpoint")

    if model.source.is_oracle and not model.soundness_ok():
        warnings.append(
            f"penalty {model.lam:g} is not below the bound "
            f"{model.soundness_bound:g} implied by the observed partial "
            f"correlations; population-exact recovery is not guaranteed")

    config = {
        "variant": variant,
        "lambda": model.lam,
        "score_kind": model.kind,
        "turning": turning,
        "iterate": iterate,
        "restriction_edges": (sorted(restriction.undirected)
                              if restriction is not None else None),
    }
    return LearnReport(final=c, trace=trace, config=config, warnings=warnings)


def delta_optimal_oracle_forward(start: Cpdag, model: ScoreModel,
                                 policy: RestrictionPolicy, delta: float = 0.0,
                                 selection: str = OPTIMAL,
                                 seed: int | None = None,
                                 warnings_out: list | None = None):
    """Forward phase that may pick any move within delta of the best |rho|.

    At each step the improving admissible insertions are windowed by
    |partial correlation| >= max - delta, and the selection mode picks the
    best, the worst, or a seeded-uniform member of the window.  With
    delta = 0 and the optimal selection this coincides with forward_phase.
    Requires an oracle source; the trace records the window maximum and
    the chosen |rho| for every step.
    """
    if not model.source.is_oracle:
        raise ValueError("the delta-optimal forward phase needs an oracle source")
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    if selection not in (OPTIMAL, WORST_IN_WINDOW, RANDOM_IN_WINDOW):
        raise ValueError(f"unknown selection mode {selection!r}")
    rng = np.random.default_rng(seed) if selection == RANDOM_IN_WINDOW else None
    c = start
    trace = []
    cum = _class_score(model, start)
    for _ in range(_max_steps(c.p)):
        props = enumerate_insertions(c, model, policy, warnings_out)
        if not props:
            return c, trace
        max_rho = max(abs(p_.delta.rho) for p_ in props)
        window = sorted((p_ for p_ in props
                         if abs(p_.delta.rho) >= max_rho - delta),
                        key=MoveProposal.sort_key)
        if selection == OPTIMAL:
            chosen = window[0]
        elif selection == WORST_IN_WINDOW:
            chosen = window[-1]
        else:
            chosen = window[int(rng.integers(len(window)))]
        c = apply_move(c, chosen)
        cum += chosen.delta.value
        trace.append(DeltaTraceStep(chosen, cum, max_rho,
                                    abs(chosen.delta.rho)))
    raise SearchRunawayError("delta-optimal forward phase exceeded its step bound")
