"""Packaged reference data: weight columns and the indicator register."""

import pytest

from robotability.errors import ValidationError
from robotability.fixtures import (
    TRASHBOT_EXCLUDED,
    WEIGHT_FIXTURES,
    fixture_catalog,
    fixture_weights,
    fixture_weights_raw,
)


class TestWeightColumns:
    def test_column_sizes(self):
        sizes = {name: len(fixture_weights_raw(name)) for name in WEIGHT_FIXTURES}
        assert sizes == {
            "all": 24, "academia": 24, "industry": 24, "other": 24,
            "nyc_poc": 19, "trashbot": 15,
        }

    def test_published_spot_values(self):
        assert fixture_weights_raw("all")["pedestrian_density"] == 0.111
        assert fixture_weights_raw("nyc_poc")["pedestrian_density"] == 0.147
        assert fixture_weights_raw("trashbot")["pedestrian_density"] == 0.173
        assert fixture_weights_raw("all")["shade_existence"] == 0.008

    def test_normalized_sums(self):
        for name in WEIGHT_FIXTURES:
            ws = fixture_weights(name)
            assert abs(sum(ws.weights.values()) - 1.0) <= 1e-12
            assert ws.source == f"fixture:{name}"

    def test_pedestrian_density_tops_every_cohort_aggregate(self):
        for name in ("all", "nyc_poc", "trashbot"):
            ws = fixture_weights_raw(name)
            assert max(ws, key=ws.get) == "pedestrian_density"

    def test_unknown_fixture(self):
        with pytest.raises(ValidationError):
            fixture_weights("nope")


class TestCatalog:
    def test_24_entries_19_active(self):
        cat = fixture_catalog()
        assert len(cat.features) == 24
        assert len(cat.active()) == 19

    def test_excluded_reasons_present(self):
        cat = fixture_catalog()
        assert cat.excluded["street_lighting"] == "data unavailable"
        assert "real time" in cat.excluded["weather_conditions"]

    def test_trashbot_exclusions_exist_in_catalog(self):
        cat = fixture_catalog()
        ids = set(cat.ids())
        assert set(TRASHBOT_EXCLUDED) <= ids
        assert len(TRASHBOT_EXCLUDED) == 6

    def test_nyc_poc_column_matches_active_set(self):
        cat = fixture_catalog()
        assert set(fixture_weights_raw("nyc_poc")) == set(cat.active_ids())
