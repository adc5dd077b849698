"""Move enumeration, phase loops, learner variants, and the oracle forward
window are each checked against conceptual re-derivations from tests.util."""
import math

import numpy as np
import pytest

from argeslab.correlation import CorrSource, oracle_correlation
from argeslab.equivalence import consistent_extension, dag_to_cpdag
from argeslab.graph_core import Cpdag, Dag, GraphError, Pdag, skeleton
from argeslab.scoring import ScoreModel
from argeslab.search import (ADAPTIVE_CIG, ADAPTIVE_SKELETON, DELETE, INSERT,
                             OPTIMAL, RANDOM_IN_WINDOW, STATIC_CIG, TURN,
                             UNRESTRICTED, WORST_IN_WINDOW, MoveProposal,
                             RestrictionPolicy, SearchError, StaleMoveError,
                             apply_move, backward_phase,
                             delta_optimal_oracle_forward, edge_admissible,
                             enumerate_deletions, enumerate_insertions,
                             enumerate_turns, forward_phase, run_learner,
                             turning_phase)
from argeslab.simulation import example1_sem, random_sem

from util import (oracle_delete_successors, oracle_insert_successors,
                  oracle_turn_successors, random_dag, random_state)

G0 = Dag(4, [(0, 2), (1, 2), (1, 3), (2, 3)])
TRUE_C = dag_to_cpdag(G0)
TRUE_CIG = Pdag(4, undirected=[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])


def _oracle_model(lam=1e-6):
    return ScoreModel(oracle_correlation(example1_sem()), lam)


def _sem_model(seed, p, edges=None, lam=1e-6):
    if edges is None:
        edges = min(p, p * (p - 1) // 2)
    sem = random_sem(p, expected_edges=edges, seed=seed)
    return sem, ScoreModel(oracle_correlation(sem), lam)


def _identity_model(p, lam=0.01):
    return ScoreModel(CorrSource(np.eye(p), n=None, kind="oracle"), lam)


def _successors(moves, c):
    return {apply_move(c, mv) for mv in moves}


class TestEdgeAdmissible:
    def test_vstructure_shield_grants_cig_admissibility(self):
        c = dag_to_cpdag(Dag(3, [(0, 2), (1, 2)]))
        empty = Pdag(3)
        assert edge_admissible(c, 0, 1, RestrictionPolicy(ADAPTIVE_CIG, empty))
        assert not edge_admissible(c, 0, 1, RestrictionPolicy(STATIC_CIG, empty))

    def test_unshielded_triple_grants_skeleton_admissibility(self):
        c = dag_to_cpdag(Dag(3, [(0, 1), (1, 2)]))
        empty = Pdag(3)
        assert edge_admissible(c, 0, 2,
                               RestrictionPolicy(ADAPTIVE_SKELETON, empty))
        # the same path is no shield under the cig rule: no v-structure
        assert not edge_admissible(c, 0, 2, RestrictionPolicy(ADAPTIVE_CIG, empty))

    def test_unrestricted_always_true(self):
        c = Cpdag(3)
        assert edge_admissible(c, 0, 2, RestrictionPolicy(UNRESTRICTED))

    def test_static_uses_restriction_adjacency(self):
        c = Cpdag(3)
        rest = Pdag(3, undirected=[(0, 2)])
        assert edge_admissible(c, 0, 2, RestrictionPolicy(STATIC_CIG, rest))
        assert not edge_admissible(c, 0, 1, RestrictionPolicy(STATIC_CIG, rest))

    def test_size_mismatch(self):
        with pytest.raises(GraphError):
            edge_admissible(Cpdag(4), 0, 1,
                            RestrictionPolicy(STATIC_CIG, Pdag(3)))

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            RestrictionPolicy("nonsense")
        with pytest.raises(ValueError):
            RestrictionPolicy(STATIC_CIG)  # restricted mode needs a graph
        # a graph supplied to the unrestricted mode is simply ignored
        assert edge_admissible(Cpdag(3), 0, 1,
                               RestrictionPolicy(UNRESTRICTED, Pdag(3)))


class TestEnumerateInsertions:
    def test_empty_start_on_fixture_oracle(self):
        moves = enumerate_insertions(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(UNRESTRICTED))
        pairs = {frozenset((mv.x, mv.y)) for mv in moves}
        assert pairs == {frozenset(t) for t in
                         ((0, 2), (0, 3), (1, 2), (1, 3), (2, 3))}

    def test_truth_is_a_fixpoint(self):
        assert enumerate_insertions(TRUE_C, _oracle_model(),
                                    RestrictionPolicy(UNRESTRICTED)) == []

    def test_identity_source_no_moves(self):
        assert enumerate_insertions(Cpdag(2), _identity_model(2),
                                    RestrictionPolicy(UNRESTRICTED)) == []

    def test_sorted_by_order_key(self):
        moves = enumerate_insertions(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(UNRESTRICTED))
        keys = [mv.order_key() for mv in moves]
        assert keys == sorted(keys)
        assert all(mv.kind == INSERT and mv.delta.value < 0 for mv in moves)

    def test_restriction_filters_pairs(self):
        rest = Pdag(4, undirected=[(2, 3)])
        moves = enumerate_insertions(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(STATIC_CIG, rest))
        assert {frozenset((mv.x, mv.y)) for mv in moves} == {frozenset((2, 3))}

    def test_matches_conceptual_oracle(self):
        rng = np.random.default_rng(101)
        policies = [RestrictionPolicy(UNRESTRICTED)]
        for trial in range(140):
            p = int(rng.integers(2, 6))
            sem, model = _sem_model(3000 + trial, p)
            c = random_state(rng, p, 0.35)
            got = _successors(
                enumerate_insertions(c, model, policies[0]), c)
            want = oracle_insert_successors(c, model)
            assert got == want

    def test_matches_conceptual_oracle_restricted(self):
        rng = np.random.default_rng(103)
        for trial in range(60):
            p = int(rng.integers(3, 6))
            sem, model = _sem_model(4000 + trial, p)
            c = random_state(rng, p, 0.35)
            rest = skeleton(random_state(rng, p, 0.5))
            for mode in (STATIC_CIG, ADAPTIVE_CIG, ADAPTIVE_SKELETON):
                got = _successors(
                    enumerate_insertions(c, model, RestrictionPolicy(mode, rest)), c)
                want = oracle_insert_successors(c, model, mode, rest)
                assert got == want


class TestEnumerateDeletions:
    def test_spurious_edge_deleted_at_penalty_rate(self):
        c = dag_to_cpdag(Dag(4, G0.directed | {(0, 3)}))
        lam = 1e-6
        moves = enumerate_deletions(c, _oracle_model(lam))
        assert moves
        assert {frozenset((mv.x, mv.y)) for mv in moves} == {frozenset((0, 3))}
        for mv in moves:
            assert mv.delta.value == pytest.approx(-lam, abs=1e-15)

    def test_truth_and_empty_are_fixpoints(self):
        assert enumerate_deletions(TRUE_C, _oracle_model()) == []
        assert enumerate_deletions(Cpdag(4), _oracle_model()) == []

    def test_matches_conceptual_oracle(self):
        rng = np.random.default_rng(107)
        for trial in range(140):
            p = int(rng.integers(2, 6))
            sem, model = _sem_model(5000 + trial, p)
            c = random_state(rng, p, 0.5)
            got = _successors(enumerate_deletions(c, model), c)
            want = oracle_delete_successors(c, model)
            assert got == want


class TestEnumerateTurns:
    def test_single_undirected_edge_has_no_turn(self):
        sem, model = _sem_model(11, 2, edges=1)
        c = dag_to_cpdag(sem.structure())
        if c.undirected:
            assert enumerate_turns(c, model) == []

    def test_truth_is_a_fixpoint(self):
        assert enumerate_turns(TRUE_C, _oracle_model()) == []

    def test_misoriented_chain_turns_into_v_structure(self):
        sem = random_sem(3, expected_edges=0, seed=0)
        vsem = type(sem)(p=3, B=np.array([[0.0, 0, 0], [0, 0, 0], [0.8, 0.7, 0]]),
                         error_variances=np.ones(3))
        model = ScoreModel(oracle_correlation(vsem), 1e-6)
        # chain 0 -> 2 -> 1 encodes the wrong independence; turning repairs it
        start = dag_to_cpdag(Dag(3, [(0, 2), (2, 1)]))
        moves = enumerate_turns(start, model)
        assert moves
        best = min(moves, key=MoveProposal.sort_key)
        after = apply_move(start, best)
        assert after == dag_to_cpdag(vsem.structure())

    def test_matches_conceptual_oracle(self):
        rng = np.random.default_rng(109)
        for trial in range(100):
            p = int(rng.integers(2, 6))
            sem, model = _sem_model(6000 + trial, p)
            c = random_state(rng, p, 0.45)
            got = _successors(enumerate_turns(c, model), c)
            want = oracle_turn_successors(c, model)
            assert got == want


class TestApplyMove:
    def test_insert_on_empty_gives_one_undirected_edge(self):
        moves = enumerate_insertions(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(UNRESTRICTED))
        mv = next(m for m in moves if {m.x, m.y} == {0, 2})
        assert apply_move(Cpdag(4), mv) == Cpdag(4, undirected=[(0, 2)])

    def test_stale_move_rejected(self):
        moves = enumerate_insertions(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(UNRESTRICTED))
        staled = Cpdag(4, undirected=[(1, 3)])
        with pytest.raises(StaleMoveError):
            apply_move(staled, moves[0])

    def test_delete_inverts_insert(self):
        # removing a freshly added improving edge worsens the score, so the
        # inverse never appears in enumerate_deletions; build it by hand
        model = _oracle_model()
        moves = enumerate_insertions(Cpdag(4), model,
                                     RestrictionPolicy(UNRESTRICTED))
        mv = next(m for m in moves if {m.x, m.y} == {0, 2})
        after = apply_move(Cpdag(4), mv)
        undo = MoveProposal(kind=DELETE, x=0, y=2, context=frozenset(),
                            delta=model.delete_edge_delta(2, {0}, 0),
                            base=after)
        assert apply_move(after, undo) == Cpdag(4)

    def test_delta_matches_class_score_change(self):
        rng = np.random.default_rng(127)
        for trial in range(60):
            p = int(rng.integers(2, 6))
            sem, model = _sem_model(8000 + trial, p)
            c = random_state(rng, p, 0.4)
            before = model.dag_score(consistent_extension(c))
            all_moves = (
                enumerate_insertions(c, model, RestrictionPolicy(UNRESTRICTED))
                + enumerate_deletions(c, model) + enumerate_turns(c, model))
            for mv in all_moves:
                after = model.dag_score(consistent_extension(apply_move(c, mv)))
                assert after - before == pytest.approx(mv.delta.value, abs=1e-9)


class TestPhases:
    def test_forward_identity_source_returns_start(self):
        start = Cpdag(3, undirected=[(0, 1)])
        final, trace = forward_phase(start, _identity_model(3),
                                     RestrictionPolicy(UNRESTRICTED))
        assert final == start and trace == []

    def test_forward_output_maps_the_truth(self):
        final, trace = forward_phase(Cpdag(4), _oracle_model(),
                                     RestrictionPolicy(UNRESTRICTED))
        member = consistent_extension(final)
        from argeslab.independence import is_independence_map
        assert is_independence_map(member, G0)

    def test_backward_idempotent(self):
        fwd, _ = forward_phase(Cpdag(4), _oracle_model(),
                               RestrictionPolicy(UNRESTRICTED))
        once, _ = backward_phase(fwd, _oracle_model())
        twice, trace = backward_phase(once, _oracle_model())
        assert twice == once and trace == []
        assert once == TRUE_C

    def test_backward_on_empty(self):
        final, trace = backward_phase(Cpdag(3), _identity_model(3))
        assert final == Cpdag(3) and trace == []

    def test_trace_scores_strictly_decrease(self):
        model = _oracle_model()
        fwd, ft = forward_phase(Cpdag(4), model, RestrictionPolicy(UNRESTRICTED))
        bwd, bt = backward_phase(fwd, model, cum_score=ft[-1].cum_score)
        scores = [s.cum_score for s in ft + bt]
        assert all(b < a for a, b in zip(scores, scores[1:]))
        assert scores[0] < 0.0

    def test_trace_increments_match_deltas(self):
        model = _oracle_model()
        fwd, ft = forward_phase(Cpdag(4), model, RestrictionPolicy(UNRESTRICTED))
        prev = 0.0
        for step in ft:
            assert step.cum_score - prev == pytest.approx(step.move.delta.value,
                                                          abs=1e-9)
            assert step.phase == "forward"
            prev = step.cum_score

    def test_turning_phase_repairs_orientation(self):
        vsem = type(example1_sem())(
            p=3, B=np.array([[0.0, 0, 0], [0, 0, 0], [0.8, 0.7, 0]]),
            error_variances=np.ones(3))
        model = ScoreModel(oracle_correlation(vsem), 1e-6)
        start = dag_to_cpdag(Dag(3, [(0, 2), (2, 1)]))
        final, trace = turning_phase(start, model)
        assert final == dag_to_cpdag(vsem.structure())
        assert [s.move.kind for s in trace] == [TURN]


class TestRunLearner:
    def test_all_variants_on_fixture(self):
        cases = {
            "ges": (None, TRUE_C),
            "arges-cig": (TRUE_CIG, TRUE_C),
            "arges-skeleton": (skeleton(TRUE_C), TRUE_C),
            "rges-cig": (TRUE_CIG, Cpdag(4, directed=[(0, 1), (0, 2), (3, 1), (3, 2)],
                                         undirected=[(1, 2)])),
            "rges-skeleton": (skeleton(TRUE_C),
                              Cpdag(4, directed=[(0, 2), (2, 1), (3, 1), (3, 2)])),
        }
        for variant, (rest, want) in cases.items():
            report = run_learner(variant, _oracle_model(), restriction=rest)
            assert report.final == want, variant

    def test_restriction_required(self):
        with pytest.raises(ValueError):
            run_learner("arges-cig", _oracle_model())

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            run_learner("pc", _oracle_model())

    def test_ges_ignores_restriction(self):
        with_graph = run_learner("ges", _oracle_model(), restriction=TRUE_CIG)
        without = run_learner("ges", _oracle_model())
        assert with_graph.final == without.final == TRUE_C

    def test_soundness_warning_on_oversized_penalty(self):
        report = run_learner("ges", _oracle_model(lam=1.0))
        assert any("bound" in w for w in report.warnings)
        ok = run_learner("ges", _oracle_model())
        assert not any("bound" in w for w in ok.warnings)

    def test_iterate_with_turning_reaches_fixpoint(self):
        rng = np.random.default_rng(131)
        for trial in range(10):
            sem, model = _sem_model(9000 + trial, 5)
            report = run_learner("ges", model, turning=True, iterate=True)
            # a full extra cycle would find nothing: the trace already ended
            again = run_learner("ges", model, start=report.final,
                                turning=True, iterate=True)
            assert again.final == report.final and again.trace == []

    def test_adaptivity_witnessed_during_arges_run(self):
        # at some trace point the adaptive rule must admit a pair the static
        # rule refuses; Example 1 with the true CIG is engineered to show it
        model = _oracle_model()
        report = run_learner("arges-cig", model, restriction=TRUE_CIG)
        assert report.final == TRUE_C
        c = Cpdag(4)
        witnessed = False
        for step in report.trace:
            if step.phase == "forward":
                i, k = step.move.x, step.move.y
                adaptive = edge_admissible(c, i, k,
                                           RestrictionPolicy(ADAPTIVE_CIG, TRUE_CIG))
                static = edge_admissible(c, i, k,
                                         RestrictionPolicy(STATIC_CIG, TRUE_CIG))
                if adaptive and not static:
                    witnessed = True
                c = apply_move(c, step.move)
        assert witnessed

    def test_report_json_shape(self):
        report = run_learner("ges", _oracle_model())
        doc = report.to_json_dict()
        assert doc["variant"] == "ges"
        assert doc["score_kind"] == "oracle"
        assert doc["lambda"] == 1e-6
        assert "nodes: 4" in doc["final_graph"]
        assert doc["warnings"] == []
        for mv in doc["moves"]:
            assert set(mv) == {"phase", "kind", "x", "y", "context",
                               "delta", "cum_score"}
        cums = [m["cum_score"] for m in doc["moves"]]
        assert cums == sorted(cums, reverse=True)


class TestDeltaOptimalForward:
    def test_delta_zero_matches_forward_phase(self):
        rng = np.random.default_rng(137)
        for trial in range(12):
            p = int(rng.integers(3, 9))
            sem, model = _sem_model(10_000 + trial, p)
            policy = RestrictionPolicy(UNRESTRICTED)
            plain, _ = forward_phase(Cpdag(p), model, policy)
            windowed, trace = delta_optimal_oracle_forward(Cpdag(p), model, policy)
            assert windowed == plain
            for step in trace:
                assert step.chosen_rho == step.max_rho

    def test_window_bounds_respected(self):
        rng = np.random.default_rng(139)
        for trial in range(8):
            sem, model = _sem_model(11_000 + trial, 6)
            for delta in (0.05, 0.2):
                for sel in (OPTIMAL, WORST_IN_WINDOW, RANDOM_IN_WINDOW):
                    kw = {"seed": 7} if sel == RANDOM_IN_WINDOW else {}
                    _, trace = delta_optimal_oracle_forward(
                        Cpdag(6), model, RestrictionPolicy(UNRESTRICTED),
                        delta=delta, selection=sel, **kw)
                    for step in trace:
                        assert step.chosen_rho >= step.max_rho - delta - 1e-12

    def test_random_mode_reproducible(self):
        sem, model = _sem_model(12_345, 7)
        runs = [delta_optimal_oracle_forward(
            Cpdag(7), model, RestrictionPolicy(UNRESTRICTED),
            delta=0.3, selection=RANDOM_IN_WINDOW, seed=11) for _ in range(2)]
        assert runs[0][0] == runs[1][0]
        assert [s.move for s in runs[0][1]] == [s.move for s in runs[1][1]]

    def test_validation(self):
        model = _oracle_model()
        policy = RestrictionPolicy(UNRESTRICTED)
        with pytest.raises(ValueError):
            delta_optimal_oracle_forward(Cpdag(4), model, policy, delta=1.5)
        with pytest.raises(ValueError):
            delta_optimal_oracle_forward(Cpdag(4), model, policy,
                                         selection="best")
        sample_src = CorrSource(np.eye(4), n=50, kind="pearson")
        with pytest.raises(ValueError):
            delta_optimal_oracle_forward(Cpdag(4), ScoreModel(sample_src, 0.01),
                                         policy)
