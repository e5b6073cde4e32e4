"""Extractor kinds, normalization chain, matrix assembly."""

import numpy as np
import pytest

from robotability.catalog import FeatureCatalog, FeatureDef
from robotability.elevation import ElevationGrid, read_ascii_grid, write_ascii_grid
from robotability.errors import DataError, ValidationError
from robotability.extraction import (
    FeatureSource,
    assemble_feature_matrix,
    knn_slope,
    layer_presence,
    load_feature_matrix,
    minmax_normalize,
    nearest_facility_distance,
    observation_mean,
    read_point_data,
    save_feature_matrix,
    threshold_binary,
    uniform_value,
    weighted_density,
)
from robotability.graph import SegmentizedGraph

from oracles import brute_knn_slope


def line_points(coords):
    xy = np.asarray(coords, dtype=float)
    return SegmentizedGraph(
        xy=xy,
        source_edge=np.full(len(xy), "e0", dtype=object),
        offsets=np.zeros(len(xy)),
        threshold=15.0,
    )


def flat_grid(value=0.0, size=1000.0, cell=50.0):
    n = int(size / cell) + 2
    return ElevationGrid(
        values=np.full((n, n), value), x_origin=-cell, y_origin=-cell, cell_size=cell
    )


class TestMinMax:
    def test_basic(self):
        norm, (lo, hi) = minmax_normalize(np.array([2.0, 4.0, 6.0]))
        assert list(norm) == [0.0, 0.5, 1.0]
        assert (lo, hi) == (2.0, 6.0)

    def test_degenerate_constant_maps_to_half(self):
        with pytest.warns(UserWarning, match="degenerate"):
            norm, (lo, hi) = minmax_normalize(np.array([5.0, 5.0, 5.0]))
        assert list(norm) == [0.5, 0.5, 0.5]
        assert lo == hi == 5.0

    def test_missing_passthrough(self):
        raw = np.array([0.0, np.nan, 10.0])
        norm, _ = minmax_normalize(raw)
        assert norm[0] == 0.0
        assert np.isnan(norm[1])
        assert norm[2] == 1.0

    def test_all_missing_rejected(self):
        with pytest.raises(DataError):
            minmax_normalize(np.array([np.nan, np.nan]))


class TestWeightedDensity:
    def test_single_item_weight(self):
        g = line_points([[0.0, 0.0]])
        val = weighted_density(
            g, np.array([[5.0, 0.0]]), np.array(["trash_can"], dtype=object),
            {"trash_can": 0.5}, radius=7.5,
        )
        assert val[0] == 0.5

    def test_sums_class_weights(self):
        g = line_points([[0.0, 0.0]])
        val = weighted_density(
            g,
            np.array([[3.0, 0.0], [-2.0, 1.0]]),
            np.array(["bus_stop_shelter", "tree"], dtype=object),
            {"bus_stop_shelter": 2.0, "tree": 0.15},
            radius=7.5,
        )
        assert val[0] == pytest.approx(2.15)

    def test_nothing_in_radius(self):
        g = line_points([[0.0, 0.0]])
        val = weighted_density(g, np.array([[100.0, 0.0]]),
                               np.array(["tree"], dtype=object), {"tree": 1.0}, 7.5)
        assert val[0] == 0.0

    def test_unknown_class_rejected(self):
        g = line_points([[0.0, 0.0]])
        with pytest.raises(ValidationError, match="mailbox"):
            weighted_density(g, np.array([[1.0, 0.0]]),
                             np.array(["mailbox"], dtype=object), {"tree": 1.0}, 7.5)

    def test_additive_over_disjoint_item_sets(self, rng):
        g = line_points(rng.uniform(0, 100, size=(40, 2)))
        items1 = rng.uniform(0, 100, size=(30, 2))
        items2 = rng.uniform(0, 100, size=(25, 2))
        w = {"a": 1.25}
        cls1 = np.full(len(items1), "a", dtype=object)
        cls2 = np.full(len(items2), "a", dtype=object)
        both = weighted_density(g, np.vstack([items1, items2]),
                                np.concatenate([cls1, cls2]), w, 12.0)
        separate = weighted_density(g, items1, cls1, w, 12.0) + weighted_density(
            g, items2, cls2, w, 12.0)
        assert np.allclose(both, separate, atol=1e-12)


class TestObservationMean:
    def test_mean_of_two(self):
        g = line_points([[0.0, 0.0], [100.0, 0.0]])
        vals, missing = observation_mean(
            g, np.array([[1.0, 0.0], [2.0, 0.0]]), np.array([3.0, 5.0])
        )
        assert vals[0] == 4.0
        assert missing[1]

    def test_single_observation(self):
        g = line_points([[0.0, 0.0]])
        vals, missing = observation_mean(g, np.array([[0.5, 0.0]]), np.array([7.0]))
        assert vals[0] == 7.0
        assert not missing[0]

    def test_point_without_observations_is_missing(self):
        g = line_points([[0.0, 0.0], [50.0, 0.0]])
        vals, missing = observation_mean(g, np.array([[1.0, 0.0]]), np.array([2.0]))
        assert missing[1] and not missing[0]
        assert np.isnan(vals[1])

    def test_identity_when_one_observation_per_point(self, rng):
        pts = rng.uniform(0, 500, size=(60, 2))
        g = line_points(pts)
        counts = rng.uniform(0, 20, size=len(pts))
        vals, missing = observation_mean(g, pts, counts)
        assert not missing.any()
        assert np.allclose(vals, counts, atol=0)


class TestNearestFacility:
    def test_monotone_proximity_on_a_line(self):
        g = line_points([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
        d = nearest_facility_distance(g, np.array([[0.0, 0.0]]))
        norm, _ = minmax_normalize(d)
        proximity = 1.0 - norm
        assert proximity[0] == 1.0
        assert proximity[2] == 0.0
        assert proximity[0] > proximity[1] > proximity[2]

    def test_empty_facilities_rejected(self):
        g = line_points([[0.0, 0.0]])
        with pytest.raises(DataError):
            nearest_facility_distance(g, np.empty((0, 2)))


class TestThresholdBinary:
    def test_conjunction_passes(self):
        out = threshold_binary(np.array([[12.0, 11.0]]), 10.0)
        assert out[0] == 1.0

    def test_conjunction_fails(self):
        out = threshold_binary(np.array([[12.0, 9.0]]), 10.0)
        assert out[0] == 0.0

    def test_exactly_at_threshold_is_zero(self):
        out = threshold_binary(np.array([10.0]), 10.0)
        assert out[0] == 0.0

    def test_missing_channel_propagates(self):
        out = threshold_binary(np.array([[12.0, np.nan]]), 10.0)
        assert np.isnan(out[0])


class TestLayerPresence:
    def test_two_of_six(self):
        g = line_points([[0.0, 0.0]])
        layers = [np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]])] + [
            np.array([[99.0, 99.0]]) for _ in range(4)
        ]
        assert layer_presence(g, layers, 7.5)[0] == 2.0

    def test_all_six(self):
        g = line_points([[0.0, 0.0]])
        layers = [np.array([[1.0, 0.0], [2.0, 0.0]])] * 6  # duplicates count once
        assert layer_presence(g, layers, 7.5)[0] == 6.0

    def test_none(self):
        g = line_points([[0.0, 0.0]])
        assert layer_presence(g, [np.array([[99.0, 99.0]])] * 6, 7.5)[0] == 0.0


class TestSlope:
    def test_flat_terrain_is_zero(self):
        g = line_points([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
        vals, missing = knn_slope(g, flat_grid(5.0), k=2, max_distance=15.0)
        assert not missing.any()
        assert np.all(vals == 0.0)

    def test_colinear_hand_computation(self):
        # elevations 0, 1, 2 at x = 0, 10, 20; middle point averages
        # |(0-1)/10| and |(2-1)/10| = 0.1
        g = line_points([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
        grid = ElevationGrid(
            values=np.array([[0.0, 1.0, 2.0]]), x_origin=-2.5, y_origin=-5.0,
            cell_size=10.0,
        )
        vals, missing = knn_slope(g, grid, k=2, max_distance=15.0)
        assert vals[1] == pytest.approx(0.1, abs=1e-12)
        # endpoints see only the middle neighbor within 15 m
        assert vals[0] == pytest.approx(0.1, abs=1e-12)

    def test_uphill_downhill_symmetric(self):
        g = line_points([[0.0, 0.0], [10.0, 0.0]])
        up = ElevationGrid(np.array([[0.0, 4.0]]), -2.5, -5.0, 10.0)
        down = ElevationGrid(np.array([[4.0, 0.0]]), -2.5, -5.0, 10.0)
        v_up, _ = knn_slope(g, up, k=1, max_distance=15.0)
        v_down, _ = knn_slope(g, down, k=1, max_distance=15.0)
        assert np.array_equal(v_up, v_down)

    def test_offset_invariance(self, rng):
        pts = rng.uniform(10, 490, size=(80, 2))
        g = line_points(pts)
        base = rng.uniform(0, 30, size=(40, 40))
        g1 = ElevationGrid(base, -100.0, -100.0, 20.0)
        g2 = ElevationGrid(base + 57.0, -100.0, -100.0, 20.0)
        v1, m1 = knn_slope(g, g1, k=4, max_distance=60.0)
        v2, m2 = knn_slope(g, g2, k=4, max_distance=60.0)
        assert np.array_equal(m1, m2)
        assert np.allclose(v1[~m1], v2[~m2], atol=1e-12)

    def test_elevation_scaling_is_linear(self, rng):
        pts = rng.uniform(10, 490, size=(60, 2))
        g = line_points(pts)
        base = rng.uniform(0, 30, size=(40, 40))
        v1, m = knn_slope(g, ElevationGrid(base, -100.0, -100.0, 20.0), 4, 60.0)
        v3, _ = knn_slope(g, ElevationGrid(base * 3.0, -100.0, -100.0, 20.0), 4, 60.0)
        assert np.allclose(v3[~m], 3.0 * v1[~m], rtol=1e-12)

    def test_isolated_point_is_missing(self):
        g = line_points([[0.0, 0.0], [500.0, 500.0]])
        vals, missing = knn_slope(g, flat_grid(cell=100.0), k=3, max_distance=30.0)
        assert missing.all()

    def test_matches_brute_force(self, rng):
        pts = rng.uniform(0, 300, size=(120, 2))
        g = line_points(pts)
        grid_vals = rng.uniform(0, 50, size=(20, 20))
        grid = ElevationGrid(grid_vals, -10.0, -10.0, 20.0)
        vals, missing = knn_slope(g, grid, k=5, max_distance=45.0)
        elev = grid.sample(pts)
        expected = brute_knn_slope(pts.tolist(), elev.tolist(), 5, 45.0)
        for i, exp in enumerate(expected):
            if exp is None:
                assert missing[i]
            else:
                assert vals[i] == pytest.approx(exp, abs=1e-12)

    def test_nodata_elevation_names_point(self):
        g = line_points([[0.0, 0.0], [10.0, 0.0]])
        grid = ElevationGrid(np.array([[np.nan, 1.0]]), -2.5, -5.0, 10.0)
        with pytest.raises(DataError, match="point 0"):
            knn_slope(g, grid, k=1, max_distance=15.0)


class TestUniform:
    def test_citywide_one(self):
        assert np.all(uniform_value(5, 1.0) == 1.0)

    def test_half(self):
        assert np.all(uniform_value(3, 0.5) == 0.5)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            uniform_value(3, 1.2)


class TestElevationGrid:
    def test_out_of_bounds_clamps_with_warning(self):
        grid = ElevationGrid(np.array([[1.0, 2.0], [3.0, 4.0]]), 0.0, 0.0, 10.0)
        with pytest.warns(UserWarning, match="clamped"):
            v = grid.sample(np.array([[-5.0, 5.0]]))
        assert v[0] == 3.0  # bottom-left cell

    def test_out_of_bounds_error_mode(self):
        grid = ElevationGrid(np.array([[1.0]]), 0.0, 0.0, 10.0, out_of_bounds="error")
        with pytest.raises(DataError):
            grid.sample(np.array([[99.0, 0.0]]))

    def test_ascii_grid_round_trip(self, tmp_path):
        grid = ElevationGrid(
            values=np.array([[1.5, np.nan], [2.25, 4.0]]),
            x_origin=10.0, y_origin=20.0, cell_size=5.0,
        )
        write_ascii_grid(grid, tmp_path / "g.asc")
        back = read_ascii_grid(tmp_path / "g.asc")
        assert back.cell_size == 5.0
        assert back.x_origin == 10.0
        assert np.isnan(back.values[0, 1])
        assert back.values[1, 1] == 4.0

    def test_row_order_north_to_south(self):
        # row 0 is the northern row
        grid = ElevationGrid(np.array([[9.0, 9.0], [1.0, 1.0]]), 0.0, 0.0, 10.0)
        assert grid.sample(np.array([[5.0, 15.0]]))[0] == 9.0
        assert grid.sample(np.array([[5.0, 5.0]]))[0] == 1.0


class TestAssembly:
    def make_catalog(self):
        return FeatureCatalog(
            features=(
                FeatureDef("density", "Density", -1, "weighted_density",
                           {"radius": 10.0, "class_weights": {"x": 1.0}}),
                FeatureDef("steady", "Steady", +1, "uniform", {"value": 0.5}),
            ),
        )

    def test_shape_and_range(self, rng):
        g = line_points(rng.uniform(0, 50, size=(3, 2)))
        catalog = self.make_catalog()
        sources = {
            "density": FeatureSource(
                xy=rng.uniform(0, 50, size=(10, 2)),
                classes=np.full(10, "x", dtype=object),
            ),
        }
        m = assemble_feature_matrix(g, catalog, sources)
        assert m.values.shape == (3, 2)
        present = m.values[~m.missing]
        assert np.all((present >= 0) & (present <= 1))

    def test_uniform_column_constant(self, rng):
        g = line_points(rng.uniform(0, 50, size=(4, 2)))
        sources = {
            "density": FeatureSource(
                xy=rng.uniform(0, 50, size=(6, 2)),
                classes=np.full(6, "x", dtype=object),
            ),
        }
        m = assemble_feature_matrix(g, self.make_catalog(), sources)
        col = m.values[:, m.feature_ids.index("steady")]
        assert np.all(col == 0.5)

    def test_missing_source_names_feature(self, rng):
        g = line_points(rng.uniform(0, 50, size=(3, 2)))
        with pytest.raises(DataError, match="density.*excluded"):
            assemble_feature_matrix(g, self.make_catalog(), {})

    def test_save_load_round_trip(self, rng, tmp_path):
        g = line_points(rng.uniform(0, 50, size=(5, 2)))
        sources = {
            "density": FeatureSource(
                xy=rng.uniform(0, 50, size=(12, 2)),
                classes=np.full(12, "x", dtype=object),
            ),
        }
        m = assemble_feature_matrix(g, self.make_catalog(), sources)
        save_feature_matrix(m, tmp_path / "features")
        m2 = load_feature_matrix(tmp_path / "features")
        assert m2.feature_ids == m.feature_ids
        assert np.array_equal(m2.values, m.values, equal_nan=True)
        assert np.array_equal(m2.missing, m.missing)


class TestPointDataFiles:
    def test_xy_count(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y,count\n1.0,2.0,3.5\n4.0,5.0,6.0\n")
        src = read_point_data(p)
        assert src.xy.shape == (2, 2)
        assert list(src.counts) == [3.5, 6.0]

    def test_xy_class(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y,class\n1.0,2.0,tree\n")
        src = read_point_data(p)
        assert list(src.classes) == ["tree"]

    def test_xy_channels(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y,download,upload\n1.0,2.0,12.0,11.0\n")
        src = read_point_data(p)
        assert src.channels["download"][0] == 12.0

    def test_geojson_points(self, tmp_path):
        p = tmp_path / "d.geojson"
        p.write_text(
            '{"type":"FeatureCollection","features":[{"type":"Feature",'
            '"geometry":{"type":"Point","coordinates":[1.0,2.0]},'
            '"properties":{"count":4}}]}'
        )
        src = read_point_data(p)
        assert src.xy[0, 0] == 1.0
        assert src.counts[0] == 4.0
