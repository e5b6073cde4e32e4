"""Score computation, aggregation, ranking, profiles."""

import numpy as np
import pytest

from robotability.ahp import WeightSet
from robotability.catalog import FeatureCatalog, FeatureDef
from robotability.errors import AggregationError, ValidationError
from robotability.extraction import FeatureMatrix
from robotability.fixtures import TRASHBOT_EXCLUDED, fixture_catalog, fixture_weights
from robotability.scoring import (
    RobotProfile,
    ScoreField,
    aggregate_graph,
    aggregate_zones,
    apply_profile,
    rank_zones,
    score_points,
    zone_score_ratio,
)
from robotability.zones import Zone

from oracles import brute_score, brute_zone_means
from test_ahp import consistent_matrix


def matrix_of(values, missing=None, feature_ids=None):
    values = np.asarray(values, dtype=float)
    if missing is None:
        missing = np.isnan(values)
    else:
        missing = np.asarray(missing, dtype=bool)
    values = np.where(missing, np.nan, values)
    n, m = values.shape
    if feature_ids is None:
        feature_ids = tuple(f"f{i}" for i in range(m))
    return FeatureMatrix(
        point_ids=np.arange(n, dtype=np.int64),
        feature_ids=tuple(feature_ids),
        values=values,
        missing=missing,
    )


def rect(zone_id, x0, y0, x1, y1):
    return Zone(zone_id=zone_id,
                rings=(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]),))


class TestScorePoints:
    def test_single_feature(self):
        m = matrix_of([[0.7]])
        field = score_points(m, WeightSet(weights={"f0": 1.0}), {"f0": 1})
        assert field.scores[0] == pytest.approx(0.7)

    def test_two_features_with_polarity(self):
        m = matrix_of([[1.0, 0.5]])
        field = score_points(
            m, WeightSet(weights={"f0": 0.6, "f1": 0.4}), {"f0": 1, "f1": -1}
        )
        assert field.scores[0] == pytest.approx(0.4)

    def test_renormalize_on_missing(self):
        m = matrix_of([[1.0, np.nan]])
        field = score_points(
            m, WeightSet(weights={"f0": 0.6, "f1": 0.4}), {"f0": 1, "f1": -1}
        )
        assert field.scores[0] == pytest.approx(1.0)
        assert field.coverage[0] == pytest.approx(0.5)

    def test_zero_fill_policy(self):
        m = matrix_of([[1.0, np.nan]])
        field = score_points(
            m, WeightSet(weights={"f0": 0.6, "f1": 0.4}), {"f0": 1, "f1": -1},
            missing_policy="zero_fill",
        )
        assert field.scores[0] == pytest.approx(0.6)

    def test_propagate_policy(self):
        m = matrix_of([[1.0, np.nan], [1.0, 1.0]])
        field = score_points(
            m, WeightSet(weights={"f0": 0.6, "f1": 0.4}), {"f0": 1, "f1": 1},
            missing_policy="propagate",
        )
        assert np.isnan(field.scores[0])
        assert field.scores[1] == pytest.approx(1.0)

    def test_weight_mismatch_lists_difference(self):
        m = matrix_of([[0.5]])
        with pytest.raises(ValidationError, match="extra"):
            score_points(m, WeightSet(weights={"f0": 0.5, "extra": 0.5}),
                         {"f0": 1, "extra": 1})

    def test_score_bound_random(self, rng):
        for _ in range(30):
            n, k = int(rng.integers(1, 40)), int(rng.integers(1, 6))
            vals = rng.uniform(0, 1, size=(n, k))
            miss = rng.uniform(size=(n, k)) < 0.3
            if miss.all():
                continue
            w = rng.uniform(0.1, 1.0, size=k)
            w /= w.sum()
            ws = WeightSet(weights={f"f{i}": w[i] for i in range(k)})
            pol = {f"f{i}": (1 if rng.uniform() < 0.5 else -1) for i in range(k)}
            field = score_points(matrix_of(vals, miss), ws, pol)
            scored = field.scores[~np.isnan(field.scores)]
            assert np.all(np.abs(scored) <= 1.0 + 1e-12)

    def test_linearity_without_missingness(self, rng):
        vals = rng.uniform(0, 1, size=(20, 4))
        w = rng.uniform(0.1, 1, size=4)
        w /= w.sum()
        ws = WeightSet(weights={f"f{i}": w[i] for i in range(4)})
        pol = {f"f{i}": (-1) ** i for i in range(4)}
        alpha = 0.37
        f1 = score_points(matrix_of(vals), ws, pol)
        f2 = score_points(matrix_of(alpha * vals), ws, pol)
        assert np.allclose(f2.scores, alpha * f1.scores, atol=1e-12)

    def test_polarity_flip_negates_exactly(self, rng):
        vals = rng.uniform(0, 1, size=(25, 3))
        miss = rng.uniform(size=vals.shape) < 0.2
        w = np.array([0.5, 0.3, 0.2])
        ws = WeightSet(weights={f"f{i}": w[i] for i in range(3)})
        pol = {"f0": 1, "f1": -1, "f2": 1}
        anti = {k: -v for k, v in pol.items()}
        f1 = score_points(matrix_of(vals, miss), ws, pol)
        f2 = score_points(matrix_of(vals, miss), ws, anti)
        ok = ~np.isnan(f1.scores)
        assert np.array_equal(f2.scores[ok], -f1.scores[ok])

    def test_monotone_in_positive_feature(self):
        base = matrix_of([[0.4, 0.5]])
        bumped = matrix_of([[0.6, 0.5]])
        ws = WeightSet(weights={"f0": 0.5, "f1": 0.5})
        pol = {"f0": 1, "f1": -1}
        assert (score_points(bumped, ws, pol).scores[0]
                > score_points(base, ws, pol).scores[0])
        # negative-polarity feature increase never raises the score
        bumped_neg = matrix_of([[0.4, 0.9]])
        assert (score_points(bumped_neg, ws, pol).scores[0]
                <= score_points(base, ws, pol).scores[0])

    def test_matches_brute_force(self, rng):
        for policy in ("renormalize", "zero_fill", "propagate"):
            vals = rng.uniform(0, 1, size=(50, 5))
            miss = rng.uniform(size=vals.shape) < 0.25
            w = rng.uniform(0.1, 1, size=5)
            w /= w.sum()
            ws = WeightSet(weights={f"f{i}": w[i] for i in range(5)})
            pol_list = [(-1) ** i for i in range(5)]
            pol = {f"f{i}": pol_list[i] for i in range(5)}
            field = score_points(matrix_of(vals, miss), ws, pol, policy)
            expected = brute_score(vals.tolist(), miss.tolist(), list(w), pol_list, policy)
            for i, exp in enumerate(expected):
                if exp is None:
                    assert np.isnan(field.scores[i])
                else:
                    assert field.scores[i] == pytest.approx(exp, abs=1e-12)


class TestAggregates:
    def test_graph_mean(self):
        field = ScoreField(np.arange(3), np.array([0.2, 0.4, 0.6]), np.ones(3))
        assert aggregate_graph(field) == pytest.approx(0.4)

    def test_single_point(self):
        field = ScoreField(np.arange(1), np.array([0.9]), np.ones(1))
        assert aggregate_graph(field) == pytest.approx(0.9)

    def test_uniform_field(self):
        field = ScoreField(np.arange(5), np.full(5, 0.123), np.ones(5))
        assert aggregate_graph(field) == pytest.approx(0.123)

    def test_all_unscored_is_error(self):
        field = ScoreField(np.arange(2), np.array([np.nan, np.nan]), np.zeros(2))
        with pytest.raises(AggregationError):
            aggregate_graph(field)

    def test_zone_means_and_ranks(self):
        xy = np.array([[1.0, 1.0], [2.0, 2.0], [11.0, 1.0]])
        field = ScoreField(np.arange(3), np.array([0.2, 0.4, 0.8]), np.ones(3))
        zones = [rect("a", 0, 0, 10, 10), rect("b", 10, 0, 20, 10)]
        aggs = aggregate_zones(field, xy, zones)
        assert aggs[0].mean_score == pytest.approx(0.3)
        assert aggs[1].mean_score == pytest.approx(0.8)
        assert aggs[0].percentile_rank == 0.0
        assert aggs[1].percentile_rank == 1.0

    def test_empty_zone_is_no_data(self):
        xy = np.array([[1.0, 1.0]])
        field = ScoreField(np.arange(1), np.array([0.5]), np.ones(1))
        zones = [rect("a", 0, 0, 10, 10), rect("empty", 50, 50, 60, 60)]
        aggs = aggregate_zones(field, xy, zones)
        assert aggs[1].mean_score is None
        assert aggs[1].point_count == 0
        assert aggs[1].percentile_rank is None

    def test_unscored_points_do_not_count(self):
        xy = np.array([[1.0, 1.0], [2.0, 2.0]])
        field = ScoreField(np.arange(2), np.array([0.5, np.nan]),
                           np.array([1.0, 0.0]))
        aggs = aggregate_zones(field, xy, [rect("a", 0, 0, 10, 10)])
        assert aggs[0].point_count == 1
        assert aggs[0].mean_score == pytest.approx(0.5)

    def test_matches_brute_force(self, rng):
        shapely = pytest.importorskip("shapely")
        xy = rng.uniform(0, 100, size=(400, 2))
        scores = rng.uniform(-1, 1, size=400)
        scores[rng.uniform(size=400) < 0.1] = np.nan
        field = ScoreField(np.arange(400), scores, np.ones(400))
        zones = [rect("a", 0, 0, 50, 50), rect("b", 50, 0, 100, 50),
                 rect("c", 0, 50, 100, 100)]
        aggs = aggregate_zones(field, xy, zones)
        rings = [[z.rings[0].tolist()] for z in zones]
        s = [None if np.isnan(v) else v for v in scores]
        expected = brute_zone_means(xy.tolist(), s, rings)
        for agg, (mean, count) in zip(aggs, expected):
            assert agg.point_count == count
            if mean is None:
                assert agg.mean_score is None
            else:
                assert agg.mean_score == pytest.approx(mean, abs=1e-12)


class TestRankZones:
    def agg(self, zone_id, mean, rank):
        from robotability.scoring import ZoneAggregate

        return ZoneAggregate(zone_id, mean, 5, rank)

    def ranked_set(self, means):
        from robotability.scoring import ZoneAggregate

        order = sorted(range(len(means)), key=lambda i: (means[i], f"z{i}"))
        aggs = []
        for pos, i in enumerate(order):
            aggs.append(ZoneAggregate(f"z{i}", means[i], 3,
                                      pos / (len(means) - 1)))
        return aggs

    def test_ten_zones_band_10pct(self):
        aggs = self.ranked_set([0.1 * i for i in range(10)])
        top, bottom = rank_zones(aggs, 0.1)
        assert [a.zone_id for a in top] == ["z9"]
        assert [a.zone_id for a in bottom] == ["z0"]

    def test_band_half_partitions_all_zones(self):
        for n in (4, 5, 9, 10):
            aggs = self.ranked_set([0.05 * i for i in range(n)])
            top, bottom = rank_zones(aggs, 0.5)
            ids = [a.zone_id for a in top] + [a.zone_id for a in bottom]
            assert sorted(ids) == sorted(a.zone_id for a in aggs)
            assert len(set(ids)) == n

    def test_no_data_zones_ignored(self):
        from robotability.scoring import ZoneAggregate

        aggs = self.ranked_set([0.1, 0.2, 0.3])
        aggs.append(ZoneAggregate("empty", None, 0, None))
        top, bottom = rank_zones(aggs, 0.5)
        assert "empty" not in [a.zone_id for a in top + bottom]

    def test_ratio(self):
        aggs = self.ranked_set([0.2, 0.6])
        assert zone_score_ratio(aggs) == pytest.approx(3.0)
        aggs2 = self.ranked_set([-0.2, 0.6])
        assert zone_score_ratio(aggs2) is None

    def test_bad_band(self):
        with pytest.raises(ValidationError):
            rank_zones([], 0.0)


class TestApplyProfile:
    def test_full_profile_matches_base(self):
        m = consistent_matrix([0.5, 0.3, 0.2])
        catalog = FeatureCatalog(features=tuple(
            FeatureDef(f"f{i}", f"F{i}", 1, "uniform", {"value": 1.0})
            for i in range(3)
        ))
        profile = RobotProfile(name="full", included_features=("f0", "f1", "f2"))
        weights, pol = apply_profile(profile, catalog, matrix=m)
        from robotability.ahp import principal_weights

        assert weights.weights == principal_weights(m).weights

    def test_excluded_feature_rejected(self):
        catalog = FeatureCatalog(
            features=(
                FeatureDef("a", "A", 1, "uniform", {"value": 1.0}),
                FeatureDef("b", "B", 1, "uniform", {"value": 1.0}),
                FeatureDef("c", "C", 1),
            ),
            excluded={"c": "data unavailable"},
        )
        profile = RobotProfile(name="bad", included_features=("a", "c"))
        with pytest.raises(ValidationError, match="excluded"):
            apply_profile(profile, catalog, base_weights=WeightSet(
                weights={"a": 0.5, "b": 0.5}))

    def test_polarity_override_flips_one_term(self):
        m = matrix_of([[0.8, 0.6]])
        ws = WeightSet(weights={"f0": 0.5, "f1": 0.5})
        base = score_points(m, ws, {"f0": 1, "f1": 1}).scores[0]
        flipped = score_points(m, ws, {"f0": 1, "f1": -1}).scores[0]
        assert base - flipped == pytest.approx(2 * 0.5 * 0.6, abs=1e-12)

    def test_trashbot_fixture_rescaling(self):
        catalog = fixture_catalog()
        base = fixture_weights("nyc_poc")
        included = tuple(f for f in base.weights if f not in TRASHBOT_EXCLUDED)
        profile = RobotProfile(name="trashbot", included_features=included,
                               weight_source="weights")
        weights, _ = apply_profile(profile, catalog, base_weights=base)
        assert abs(sum(weights.weights.values()) - 1.0) <= 1e-12
        assert not set(weights.weights) & set(TRASHBOT_EXCLUDED)
        assert weights.source.startswith("subset-of:")
