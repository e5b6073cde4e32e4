"""Weight derivation: matrix building, eigen weights, subsets, transitivity."""

import numpy as np
import pytest

from robotability.ahp import (
    ContingencyMatrix,
    PairwiseVote,
    WeightSet,
    build_contingency_matrix,
    enumerate_pairs,
    principal_weights,
    read_votes,
    read_weights,
    subset_weights,
    transitivity_report,
    write_votes,
    write_weights,
)
from robotability.errors import ValidationError

from conftest import make_votes, random_votes
from oracles import brute_transitivity

CONSISTENT_3 = ContingencyMatrix(
    features=("f1", "f2", "f3"),
    entries=np.array([[1.0, 2.0, 4.0], [0.5, 1.0, 2.0], [0.25, 0.5, 1.0]]),
)


def consistent_matrix(weights):
    n = len(weights)
    w = np.asarray(weights, dtype=float)
    entries = w[:, None] / w[None, :]
    np.fill_diagonal(entries, 1.0)
    # exact reciprocity for off-diagonal pairs
    for i in range(n):
        for j in range(i + 1, n):
            entries[j, i] = 1.0 / entries[i, j]
    return ContingencyMatrix(
        features=tuple(f"f{i}" for i in range(n)), entries=entries
    )


class TestEnumeratePairs:
    def test_three_features(self):
        assert enumerate_pairs(["A", "B", "C"]) == [("A", "B"), ("A", "C"), ("B", "C")]

    def test_24_features_gives_276_pairs(self):
        assert len(enumerate_pairs([f"f{i}" for i in range(24)])) == 276

    def test_single_feature(self):
        assert enumerate_pairs(["A"]) == []

    def test_duplicate_id_rejected(self):
        with pytest.raises(ValidationError, match="B"):
            enumerate_pairs(["A", "B", "B"])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            enumerate_pairs([])


class TestBuildContingencyMatrix:
    def test_direct_ratio(self):
        votes = make_votes([("r1", "A", "B", 2), ("r1", "B", "A", 1)])
        m = build_contingency_matrix(votes, ["A", "B"], smoothing=0)
        assert m.entries[0, 1] == 2.0
        assert m.entries[1, 0] == 0.5

    def test_add_one_smoothing(self):
        votes = make_votes([("r1", "A", "B", 1)])
        m = build_contingency_matrix(votes, ["A", "B"], smoothing=1)
        assert m.entries[0, 1] == 2.0

    def test_neutral_fill_for_unseen_pair(self):
        votes = make_votes([("r1", "A", "B", 1), ("r1", "B", "A", 1)])
        m = build_contingency_matrix(votes, ["A", "B", "C"], smoothing=0)
        assert m.entries[0, 2] == 1.0
        assert m.entries[2, 0] == 1.0

    def test_error_mode_lists_uncomparable_pairs(self):
        votes = make_votes([("r1", "A", "B", 1), ("r1", "B", "A", 1)])
        with pytest.raises(ValidationError, match=r"\('A', 'C'\)"):
            build_contingency_matrix(votes, ["A", "B", "C"], smoothing=0,
                                     uncompared="error")

    def test_unanimous_pair_without_smoothing_fails(self):
        votes = make_votes([("r1", "A", "B", 3)])
        with pytest.raises(ValidationError, match="smoothing"):
            build_contingency_matrix(votes, ["A", "B"], smoothing=0)

    def test_unknown_feature_rejected(self):
        votes = [PairwiseVote("r1", "A", "X", "A")]
        with pytest.raises(ValidationError, match="X"):
            build_contingency_matrix(votes, ["A", "B"])

    def test_vote_invariants(self):
        with pytest.raises(ValidationError):
            PairwiseVote("r1", "A", "A", "A")
        with pytest.raises(ValidationError):
            PairwiseVote("r1", "A", "B", "C")

    def test_negative_smoothing_rejected(self):
        with pytest.raises(ValidationError):
            build_contingency_matrix([], ["A", "B"], smoothing=-1)

    def test_reciprocity_on_random_vote_sets(self, rng):
        features = [f"f{i}" for i in range(6)]
        for _ in range(50):
            votes = random_votes(rng, features, int(rng.integers(5, 120)))
            m = build_contingency_matrix(votes, features, smoothing=1)
            prod = m.entries * m.entries.T
            assert np.all(np.abs(prod - 1.0) <= 1e-12)
            assert np.all(np.diag(m.entries) == 1.0)


class TestPrincipalWeights:
    def test_consistent_matrix_recovers_column(self):
        w = principal_weights(CONSISTENT_3)
        expect = np.array([4 / 7, 2 / 7, 1 / 7])
        assert np.allclose(list(w.weights.values()), expect, atol=1e-9)

    def test_identity_preference_gives_uniform(self):
        m = ContingencyMatrix(features=("a", "b", "c", "d"), entries=np.ones((4, 4)))
        w = principal_weights(m)
        assert np.allclose(list(w.weights.values()), 0.25, atol=1e-12)

    def test_weights_sum_to_one(self, rng):
        features = [f"f{i}" for i in range(8)]
        for _ in range(20):
            votes = random_votes(rng, features, 200)
            w = principal_weights(build_contingency_matrix(votes, features))
            assert abs(sum(w.weights.values()) - 1.0) <= 1e-12
            assert all(v > 0 for v in w.weights.values())

    def test_monte_carlo_recovery_of_planted_weights(self, rng):
        planted = {"a": 0.4, "b": 0.25, "c": 0.15, "d": 0.12, "e": 0.08}
        votes = random_votes(rng, list(planted), 10_000, planted=planted)
        w = principal_weights(build_contingency_matrix(votes, list(planted)))
        recovered_rank = sorted(planted, key=lambda f: -w.weights[f])
        assert recovered_rank == sorted(planted, key=lambda f: -planted[f])
        for fid, target in planted.items():
            assert abs(w.weights[fid] - target) < 0.05

    def test_permutation_equivariance(self, rng):
        features = ["a", "b", "c", "d", "e"]
        votes = random_votes(rng, features, 150)
        m = build_contingency_matrix(votes, features)
        w = principal_weights(m)
        perm = ["d", "a", "e", "c", "b"]
        m2 = build_contingency_matrix(votes, perm)
        w2 = principal_weights(m2)
        for fid in features:
            assert w.weights[fid] == pytest.approx(w2.weights[fid], abs=1e-12)

    def test_vote_scaling_leaves_ranking_unchanged(self, rng):
        features = ["a", "b", "c", "d"]
        votes = random_votes(rng, features, 100)
        w1 = principal_weights(build_contingency_matrix(votes, features, smoothing=1))
        # scaling tallies and smoothing together reproduces the exact ratios
        w2 = principal_weights(build_contingency_matrix(votes * 3, features, smoothing=3))
        rank1 = sorted(features, key=lambda f: -w1.weights[f])
        rank2 = sorted(features, key=lambda f: -w2.weights[f])
        assert rank1 == rank2

    def test_determinism(self, rng):
        features = [f"f{i}" for i in range(6)]
        votes = random_votes(rng, features, 300)
        m = build_contingency_matrix(votes, features)
        w1 = principal_weights(m)
        w2 = principal_weights(m)
        assert w1.weights == w2.weights


class TestSubsetWeights:
    def test_consistent_subset(self):
        w = subset_weights(CONSISTENT_3, {"f1", "f2"})
        vals = list(w.weights.values())
        assert vals == pytest.approx([2 / 3, 1 / 3], abs=1e-12)

    def test_full_subset_equals_principal(self):
        full = principal_weights(CONSISTENT_3)
        sub = subset_weights(CONSISTENT_3, set(CONSISTENT_3.features))
        assert sub.weights == full.weights

    def test_matches_manual_submatrix_extraction(self, rng):
        features = [f"f{i}" for i in range(6)]
        votes = random_votes(rng, features, 400)
        m = build_contingency_matrix(votes, features)
        keep = ["f0", "f2", "f3", "f5"]
        # oracle: manual row/column extraction, then the same eigen routine
        idx = [features.index(f) for f in keep]
        manual = ContingencyMatrix(
            features=tuple(keep), entries=m.entries[np.ix_(idx, idx)].copy()
        )
        expected = principal_weights(manual)
        got = subset_weights(m, keep)
        assert got.weights == expected.weights

    def test_too_small_subset_rejected(self):
        with pytest.raises(ValidationError):
            subset_weights(CONSISTENT_3, {"f1"})

    def test_unknown_id_rejected(self):
        with pytest.raises(ValidationError, match="zzz"):
            subset_weights(CONSISTENT_3, {"f1", "zzz"})


class TestConsistentRecovery:
    def test_planted_weight_vectors(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 11))
            w = rng.uniform(0.05, 1.0, size=n)
            m = consistent_matrix(w)
            got = np.array(list(principal_weights(m).weights.values()))
            assert np.allclose(got, w / w.sum(), atol=1e-9)


class TestTransitivity:
    def test_transitive_chain(self):
        votes = make_votes([("r1", "A", "B", 1), ("r1", "B", "C", 1), ("r1", "A", "C", 1)])
        rep = transitivity_report(votes, ["A", "B", "C"])
        assert rep.intra_rater == {"r1": 0}
        assert rep.inter_rater_violations == 0
        assert rep.triples_evaluated == 1

    def test_three_cycle(self):
        votes = make_votes([("r1", "A", "B", 1), ("r1", "B", "C", 1), ("r1", "C", "A", 1)])
        rep = transitivity_report(votes, ["A", "B", "C"])
        assert rep.intra_rater == {"r1": 1}
        assert rep.inter_rater_violations == 1
        assert rep.triples_evaluated == 1
        assert rep.violation_fraction == 1.0

    def test_pooled_majority_cycle(self):
        votes = make_votes([
            ("r1", "A", "B", 2), ("r2", "B", "A", 1),
            ("r1", "B", "C", 2), ("r2", "C", "B", 1),
            ("r1", "C", "A", 2), ("r2", "A", "C", 1),
        ])
        rep = transitivity_report(votes, ["A", "B", "C"])
        assert rep.inter_rater_violations == 1
        assert rep.triples_evaluated == 1

    def test_tied_pair_skips_triple(self):
        votes = make_votes([
            ("r1", "A", "B", 1), ("r1", "B", "A", 1),  # tie
            ("r1", "B", "C", 1), ("r1", "A", "C", 1),
        ])
        rep = transitivity_report(votes, ["A", "B", "C"])
        assert rep.triples_evaluated == 0
        assert rep.inter_rater_violations == 0

    def test_matches_brute_force_on_random_sets(self, rng):
        for _ in range(40):
            n = int(rng.integers(3, 9))
            features = [f"f{i}" for i in range(n)]
            votes = random_votes(rng, features, int(rng.integers(10, 150)), n_raters=4)
            rep = transitivity_report(votes, features)
            tuples = [(v.rater_id, v.feature_a, v.feature_b, v.chosen) for v in votes]
            intra, inter, evaluated = brute_transitivity(tuples, features)
            assert rep.inter_rater_violations == inter
            assert rep.triples_evaluated == evaluated
            for rater, count in intra.items():
                assert rep.intra_rater[rater] == count


class TestFiles:
    def test_votes_round_trip(self, tmp_path):
        votes = make_votes([("r1", "A", "B", 2), ("r2", "B", "C", 1)])
        path = tmp_path / "votes.csv"
        write_votes(votes, path)
        assert read_votes(path) == votes

    def test_vote_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "votes.csv"
        path.write_text("rater_id,feature_a,feature_b,chosen\nr1,A,B,C\n")
        with pytest.raises(ValidationError, match=":2"):
            read_votes(path)

    def test_weights_round_trip(self, tmp_path):
        w = WeightSet(weights={"a": 1 / 3, "b": 1 / 3, "c": 1 - 2 / 3}, source="full")
        path = tmp_path / "w.csv"
        write_weights(w, path, smoothing=1.0)
        back = read_weights(path)
        assert back.weights == w.weights
        assert back.source == "full"
        assert "# smoothing: 1.0" in path.read_text()

    def test_matrix_invariant_validation(self):
        with pytest.raises(ValidationError, match="reciprocity"):
            ContingencyMatrix(features=("a", "b"),
                              entries=np.array([[1.0, 2.0], [0.4, 1.0]]))
        with pytest.raises(ValidationError, match="positive"):
            ContingencyMatrix(features=("a", "b"),
                              entries=np.array([[1.0, -2.0], [-0.5, 1.0]]))
