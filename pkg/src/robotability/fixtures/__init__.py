"""Packaged reference data.

Weight columns from the published expert survey (overall and per cohort,
plus the two deployment-specific sets) ship as CSV files. The published
values are rounded to three decimals and do not sum to exactly one, so
the loader rescales them; the raw values stay available for comparisons.
"""

from __future__ import annotations

from importlib import resources

from ..ahp import WeightSet
from ..catalog import FeatureCatalog, FeatureDef
from ..errors import ValidationError

WEIGHT_FIXTURES = ("all", "academia", "industry", "other", "nyc_poc", "trashbot")

#: Factors deliberately excluded for the trash-barrel robot deployment: it
#: stays on sidewalks and plazas, never crossing intersections or riding
#: with car traffic.
TRASHBOT_EXCLUDED = (
    "traffic_management",
    "zoning_regulation",
    "shade_existence",
    "intersection_safety",
    "vehicle_traffic",
    "bike_lane_availability",
)


def fixture_weights_raw(name: str) -> dict[str, float]:
    """Published weight column exactly as printed (three decimals)."""
    if name not in WEIGHT_FIXTURES:
        raise ValidationError(f"unknown weight fixture {name!r}; pick from {WEIGHT_FIXTURES}")
    text = resources.files(__package__).joinpath(f"weights_{name}.csv").read_text("utf-8")
    out: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fid, val = line.split(",")
        out[fid] = float(val)
    return out


def fixture_weights(name: str) -> WeightSet:
    """Published column rescaled to sum to one (rounding drift removed)."""
    raw = fixture_weights_raw(name)
    total = sum(raw.values())
    return WeightSet(
        weights={fid: v / total for fid, v in raw.items()},
        source=f"fixture:{name}",
    )


def base_feature_defs() -> tuple[FeatureDef, ...]:
    """The full 24-indicator register with polarities and extractor kinds."""
    d = FeatureDef
    return (
        d("pedestrian_density", "Pedestrian density", -1, "observation_mean"),
        d("crowd_dynamics", "Crowd dynamics", -1, "observation_mean"),
        d("pedestrian_flow", "Pedestrian flow", -1),
        d("surface_condition", "Surface condition", +1, "observation_mean"),
        d("sidewalk_width", "Sidewalk width", +1, "observation_mean"),
        d("street_furniture_density", "Density of street furniture", -1, "weighted_density"),
        d("intersection_safety", "Intersection safety", +1, "weighted_density"),
        d("weather_conditions", "Weather conditions", +1),
        d("curb_ramp_availability", "Curb ramp availability", +1, "weighted_density"),
        d("wireless_infrastructure", "Wireless communication infrastructure", +1,
          "threshold_binary"),
        d("digital_map_coverage", "Existence of detailed digital maps", +1, "uniform",
          {"value": 1.0}),
        d("surface_roughness", "Sidewalk / surface roughness", -1, "uniform", {"value": 1.0}),
        d("gps_signal_strength", "GPS signal strength", +1, "uniform", {"value": 1.0}),
        d("local_attitudes", "Local attitudes towards robots", +1),
        d("vehicle_traffic", "Vehicle traffic", -1, "observation_mean"),
        d("traffic_management", "Traffic management systems", +1, "layer_presence"),
        d("slope_gradient", "Slope gradient", -1, "knn_slope"),
        d("zoning_regulation", "Zoning laws and regulation", +1, "observation_mean"),
        d("street_lighting", "Street lighting", +1),
        d("bicycle_traffic", "Bicycle traffic", -1, "observation_mean"),
        d("charging_station_proximity", "Proximity to charging stations", +1,
          "nearest_facility"),
        d("bike_lane_availability", "Bike lane availability", +1, "weighted_density"),
        d("surveillance_coverage", "Surveillance coverage (CCTV)", +1, "weighted_density"),
        d("shade_existence", "Existence of shade", +1),
    )


def fixture_catalog() -> FeatureCatalog:
    """The register with the five data-unavailable indicators excluded."""
    return FeatureCatalog(
        features=base_feature_defs(),
        excluded={
            "street_lighting": "data unavailable",
            "shade_existence": "data unavailable",
            "pedestrian_flow": "data unavailable",
            "local_attitudes": "data unavailable",
            "weather_conditions": "determined in real time at deployment",
        },
    )
