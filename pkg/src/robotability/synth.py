"""Synthetic city generation for tests, demos and benchmarks.

Builds a grid sidewalk network with planted spatial structure: a
"downtown" focus where pedestrian activity, street furniture and traffic
are dense (driving scores down), plus item scatters, wireless speed
samples, a smooth elevation surface, rectangular zones, and a vote file
sampled from a planted importance vector. All randomness flows from one
seed; the planting parameters are recorded so tests can assert that the
recovered spatial structure matches what was planted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ahp import PairwiseVote, enumerate_pairs, write_votes
from .catalog import FeatureCatalog, FeatureDef, save_catalog
from .elevation import ElevationGrid, write_ascii_grid
from .errors import ValidationError
from .extraction import FeatureSource
from .graph import SidewalkGraph, build_graph, write_edges_csv, write_nodes_csv
from .zones import Zone, write_zones_geojson

FURNITURE_WEIGHTS = {
    "bus_stop_shelter": 2.0,
    "trash_can": 0.5,
    "kiosk": 2.0,
    "bench": 1.5,
    "bicycle_rack": 1.5,
    "tree": 0.15,
    "newsstand": 3.0,
    "parking_meter": 0.15,
    "scaffolding": 2.0,
    "fire_hydrant": 0.25,
    "street_sign": 0.05,
}

BIKE_LANE_WEIGHTS = {"shared": 1.0, "buffered": 2.0, "protected": 3.0}

TRAFFIC_LAYER_NAMES = (
    "slow_zones",
    "turn_calming",
    "improvement_corridors",
    "improvement_intersections",
    "all_way_crossings",
    "leading_intervals",
)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    blocks: int = 10           # blocks per side; nodes form a (blocks+1)^2 grid
    block_m: float = 100.0     # block edge length in meters
    zone_blocks: int = 2       # blocks per zone side
    downtown_radius: float = 160.0
    votes: int = 6000
    raters: int = 40

    def __post_init__(self):
        if self.blocks < 2 or self.block_m <= 0 or self.zone_blocks < 1:
            raise ValidationError("bad synthetic city dimensions")


@dataclass
class SynthCity:
    config: SynthConfig
    graph: SidewalkGraph
    catalog: FeatureCatalog
    sources: dict[str, FeatureSource]
    zones: list[Zone]
    votes: list[PairwiseVote]
    planted_weights: dict[str, float]
    downtown_zone_ids: list[str]
    elevation: ElevationGrid | None = field(repr=False, default=None)


def _grid_graph(blocks: int, block_m: float) -> SidewalkGraph:
    side = blocks + 1
    nodes = []
    for j in range(side):
        for i in range(side):
            nodes.append((f"n{j * side + i}", i * block_m, j * block_m))
    edges = []
    eid = 0
    for j in range(side):
        for i in range(blocks):
            edges.append((f"e{eid}", f"n{j * side + i}", f"n{j * side + i + 1}", None))
            eid += 1
    for j in range(blocks):
        for i in range(side):
            edges.append((f"e{eid}", f"n{j * side + i}", f"n{(j + 1) * side + i}", None))
            eid += 1
    return build_graph(nodes, edges)


def _catalog(cfg: SynthConfig) -> FeatureCatalog:
    slope_params = {"k": 8, "max_distance": 30.0}
    feats = [
        FeatureDef("pedestrian_density", "Pedestrian density", -1,
                   "observation_mean", {}, "data/pedestrian_density.csv"),
        FeatureDef("crowd_dynamics", "Crowd dynamics", -1,
                   "observation_mean", {}, "data/crowd_dynamics.csv"),
        FeatureDef("surface_condition", "Surface condition", +1,
                   "observation_mean", {}, "data/surface_condition.csv"),
        FeatureDef("sidewalk_width", "Sidewalk width", +1,
                   "observation_mean", {}, "data/sidewalk_width.csv"),
        FeatureDef("street_furniture_density", "Density of street furniture", -1,
                   "weighted_density",
                   {"radius": 7.5, "class_weights": dict(FURNITURE_WEIGHTS)},
                   "data/street_furniture.csv"),
        FeatureDef("intersection_safety", "Intersection safety", +1,
                   "weighted_density", {"radius": 7.5, "class_weights": {"safety": 1.0}},
                   "data/intersection_safety.csv"),
        FeatureDef("curb_ramp_availability", "Curb ramp availability", +1,
                   "weighted_density", {"radius": 7.5, "class_weights": {"ramp": 1.0}},
                   "data/curb_ramps.csv"),
        FeatureDef("wireless_infrastructure", "Wireless communication infrastructure", +1,
                   "threshold_binary",
                   {"threshold": 10.0, "channels": ["download", "upload"]},
                   "data/wireless.csv"),
        FeatureDef("digital_map_coverage", "Existence of detailed digital maps", +1,
                   "uniform", {"value": 1.0}),
        FeatureDef("surface_roughness", "Sidewalk / surface roughness", -1,
                   "uniform", {"value": 0.2}),
        FeatureDef("gps_signal_strength", "GPS signal strength", +1,
                   "uniform", {"value": 1.0}),
        FeatureDef("vehicle_traffic", "Vehicle traffic", -1,
                   "observation_mean", {}, "data/vehicle_traffic.csv"),
        FeatureDef("traffic_management", "Traffic management systems", +1,
                   "layer_presence", {"radius": 7.5}, "data/traffic_layers"),
        FeatureDef("slope_gradient", "Slope gradient", -1,
                   "knn_slope", slope_params, "elevation.asc"),
        FeatureDef("zoning_regulation", "Zoning laws and regulation", +1,
                   "observation_mean", {}, "data/zoning_regulation.csv"),
        FeatureDef("bicycle_traffic", "Bicycle traffic", -1,
                   "observation_mean", {}, "data/bicycle_traffic.csv"),
        FeatureDef("charging_station_proximity", "Proximity to charging stations", +1,
                   "nearest_facility", {}, "data/charging_stations.csv"),
        FeatureDef("bike_lane_availability", "Bike lane availability", +1,
                   "weighted_density",
                   {"radius": 7.5, "class_weights": dict(BIKE_LANE_WEIGHTS)},
                   "data/bike_lanes.csv"),
        FeatureDef("surveillance_coverage", "Surveillance coverage (CCTV)", +1,
                   "weighted_density", {"radius": 7.5, "class_weights": {"camera": 1.0}},
                   "data/surveillance.csv"),
        FeatureDef("street_lighting", "Street lighting", +1),
        FeatureDef("shade_existence", "Existence of shade", +1),
        FeatureDef("pedestrian_flow", "Pedestrian flow", -1),
        FeatureDef("local_attitudes", "Local attitudes towards robots", +1),
        FeatureDef("weather_conditions", "Weather conditions", +1),
    ]
    excluded = {
        "street_lighting": "data unavailable",
        "shade_existence": "data unavailable",
        "pedestrian_flow": "data unavailable",
        "local_attitudes": "data unavailable",
        "weather_conditions": "determined in real time at deployment",
    }
    return FeatureCatalog(features=tuple(feats), excluded=excluded)


#: Planted importance over the active features; heavy on the indicators that
#: are dense downtown so the planted downtown scores lowest.
PLANTED_WEIGHTS = {
    "pedestrian_density": 0.28,
    "street_furniture_density": 0.11,
    "crowd_dynamics": 0.08,
    "vehicle_traffic": 0.07,
    "surface_condition": 0.06,
    "sidewalk_width": 0.06,
    "bicycle_traffic": 0.05,
    "curb_ramp_availability": 0.04,
    "wireless_infrastructure": 0.04,
    "intersection_safety": 0.03,
    "slope_gradient": 0.03,
    "digital_map_coverage": 0.03,
    "surface_roughness": 0.02,
    "gps_signal_strength": 0.02,
    "traffic_management": 0.02,
    "zoning_regulation": 0.02,
    "charging_station_proximity": 0.02,
    "bike_lane_availability": 0.01,
    "surveillance_coverage": 0.01,
}


def _scatter(rng: np.random.Generator, n: int, extent: float, focus: np.ndarray | None,
             decay: float | None) -> np.ndarray:
    """n random locations; with a focus, density decays away from it."""
    if focus is None:
        return rng.uniform(0.0, extent, size=(n, 2))
    pts = []
    while len(pts) < n:
        cand = rng.uniform(0.0, extent, size=(4 * (n - len(pts)), 2))
        d = np.hypot(cand[:, 0] - focus[0], cand[:, 1] - focus[1])
        keep = rng.uniform(size=len(cand)) < np.exp(-d / decay)
        pts.extend(cand[keep].tolist())
    return np.array(pts[:n])


def generate(cfg: SynthConfig) -> SynthCity:
    """Build the whole synthetic city in memory."""
    rng = np.random.default_rng(cfg.seed)
    graph = _grid_graph(cfg.blocks, cfg.block_m)
    catalog = _catalog(cfg)
    extent = cfg.blocks * cfg.block_m
    center = np.array([extent / 2.0, extent / 2.0])
    decay = extent / 4.0

    def gradient(xy: np.ndarray, base: float, amp: float) -> np.ndarray:
        d = np.hypot(xy[:, 0] - center[0], xy[:, 1] - center[1])
        return base + amp * np.exp(-d / decay)

    sources: dict[str, FeatureSource] = {}

    def obs(name: str, n: int, base: float, amp: float, noise: float) -> None:
        xy = rng.uniform(0.0, extent, size=(n, 2))
        lam = gradient(xy, base, amp)
        counts = np.maximum(rng.normal(lam, noise), 0.0)
        sources[name] = FeatureSource(xy=xy, counts=counts)

    # caps keep benchmark-size cities (hundreds of blocks) generable
    n_obs = min(max(40 * cfg.blocks * cfg.blocks, 400), 300_000)
    obs("pedestrian_density", n_obs, 1.0, 30.0, 1.0)
    obs("crowd_dynamics", n_obs // 2, 1.0, 8.0, 1.0)
    obs("vehicle_traffic", n_obs // 2, 2.0, 12.0, 2.0)
    obs("bicycle_traffic", n_obs // 2, 0.5, 4.0, 0.5)
    # positive-polarity observations: better away from downtown
    xy = rng.uniform(0.0, extent, size=(n_obs // 2, 2))
    quality = 8.0 - gradient(xy, 0.0, 5.0) + rng.normal(0.0, 0.5, size=len(xy))
    sources["surface_condition"] = FeatureSource(xy=xy, counts=np.maximum(quality, 0.0))
    xy = rng.uniform(0.0, extent, size=(n_obs // 2, 2))
    width = 4.0 - gradient(xy, 0.0, 1.5) + rng.normal(0.0, 0.3, size=len(xy))
    sources["sidewalk_width"] = FeatureSource(xy=xy, counts=np.maximum(width, 0.5))
    xy = rng.uniform(0.0, extent, size=(n_obs // 4, 2))
    sources["zoning_regulation"] = FeatureSource(
        xy=xy, counts=rng.integers(0, 3, size=len(xy)).astype(float)
    )

    n_furniture = min(max(8 * cfg.blocks * cfg.blocks, 80), 120_000)
    furn_xy = _scatter(rng, n_furniture, extent, center, decay)
    furn_classes = rng.choice(sorted(FURNITURE_WEIGHTS), size=n_furniture)
    sources["street_furniture_density"] = FeatureSource(
        xy=furn_xy, classes=furn_classes.astype(object)
    )

    node_jitter = rng.normal(0.0, 3.0, size=graph.node_xy.shape)
    ramp_keep = rng.uniform(size=len(graph.node_xy)) < 0.7
    sources["curb_ramp_availability"] = FeatureSource(
        xy=(graph.node_xy + node_jitter)[ramp_keep]
    )
    sources["curb_ramp_availability"].classes = np.full(ramp_keep.sum(), "ramp", dtype=object)

    safety_xy = _scatter(rng, min(max(3 * cfg.blocks * cfg.blocks, 30), 60_000),
                         extent, None, None)
    sources["intersection_safety"] = FeatureSource(
        xy=safety_xy, classes=np.full(len(safety_xy), "safety", dtype=object)
    )

    cam_xy = _scatter(rng, min(max(2 * cfg.blocks * cfg.blocks, 20), 40_000),
                      extent, center, decay * 2)
    sources["surveillance_coverage"] = FeatureSource(
        xy=cam_xy, classes=np.full(len(cam_xy), "camera", dtype=object)
    )

    lane_xy = _scatter(rng, min(max(3 * cfg.blocks * cfg.blocks, 30), 60_000),
                       extent, None, None)
    sources["bike_lane_availability"] = FeatureSource(
        xy=lane_xy,
        classes=rng.choice(sorted(BIKE_LANE_WEIGHTS), size=len(lane_xy)).astype(object),
    )

    wifi_xy = rng.uniform(
        0.0, extent, size=(min(max(6 * cfg.blocks * cfg.blocks, 60), 60_000), 2)
    )
    sources["wireless_infrastructure"] = FeatureSource(
        xy=wifi_xy,
        channels={
            "download": np.maximum(rng.normal(13.0, 3.0, size=len(wifi_xy)), 0.0),
            "upload": np.maximum(rng.normal(12.0, 3.0, size=len(wifi_xy)), 0.0),
        },
    )

    sources["charging_station_proximity"] = FeatureSource(
        xy=rng.uniform(0.0, extent, size=(max(cfg.blocks + 5, 10), 2))
    )

    layers = [
        _scatter(rng, min(max(cfg.blocks * cfg.blocks // 2, 8), 20_000),
                 extent, None, None)
        for _ in TRAFFIC_LAYER_NAMES
    ]
    sources["traffic_management"] = FeatureSource(layers=layers)

    # smooth elevation: rolling hills plus a gentle tilt
    cell = max(10.0, extent / 1000.0)
    margin = 2  # cells beyond the city bounds
    ncells = int(np.ceil(extent / cell)) + 2 * margin
    gx = (np.arange(ncells) + 0.5) * cell - margin * cell
    gy = (np.arange(ncells) + 0.5) * cell - margin * cell
    xx, yy = np.meshgrid(gx, gy[::-1])  # row 0 = north
    elev_values = (
        6.0 * np.sin(xx / (extent / 6.0)) * np.cos(yy / (extent / 7.0)) + 0.004 * xx
    )
    elevation = ElevationGrid(
        values=elev_values,
        x_origin=-margin * cell,
        y_origin=-margin * cell,
        cell_size=cell,
    )
    sources["slope_gradient"] = FeatureSource(elevation=elevation)

    # rectangular zones of zone_blocks x zone_blocks city blocks
    zones = []
    zone_m = cfg.zone_blocks * cfg.block_m
    per_side = int(np.ceil(cfg.blocks / cfg.zone_blocks))
    downtown_ids = []
    for j in range(per_side):
        for i in range(per_side):
            x0, y0 = i * zone_m, j * zone_m
            x1 = min(x0 + zone_m, extent)
            y1 = min(y0 + zone_m, extent)
            zid = f"z{j * per_side + i}"
            ring = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
            zones.append(Zone(zone_id=zid, rings=(ring,)))
            zc = np.array([(x0 + x1) / 2.0, (y0 + y1) / 2.0])
            if np.hypot(*(zc - center)) <= cfg.downtown_radius:
                downtown_ids.append(zid)

    votes = _sample_votes(rng, catalog.active_ids(), PLANTED_WEIGHTS, cfg.votes, cfg.raters)

    return SynthCity(
        config=cfg,
        graph=graph,
        catalog=catalog,
        sources=sources,
        zones=zones,
        votes=votes,
        planted_weights=dict(PLANTED_WEIGHTS),
        downtown_zone_ids=downtown_ids,
        elevation=elevation,
    )


def _sample_votes(
    rng: np.random.Generator,
    features: list[str],
    planted: dict[str, float],
    n_votes: int,
    n_raters: int,
) -> list[PairwiseVote]:
    """Votes drawn pair-uniformly with win odds planted[i] : planted[j]."""
    pairs = enumerate_pairs(features)
    pair_idx = rng.integers(0, len(pairs), size=n_votes)
    raters = rng.integers(0, n_raters, size=n_votes)
    u = rng.uniform(size=n_votes)
    votes = []
    for k in range(n_votes):
        a, b = pairs[pair_idx[k]]
        wa, wb = planted[a], planted[b]
        chosen = a if u[k] < wa / (wa + wb) else b
        votes.append(PairwiseVote(f"r{raters[k]}", a, b, chosen))
    return votes


def write_city(city: SynthCity, out_dir: str | Path) -> None:
    """Write every artifact of the synthetic city to disk."""
    out = Path(out_dir)
    (out / "data").mkdir(parents=True, exist_ok=True)
    write_nodes_csv(city.graph, out / "nodes.csv")
    write_edges_csv(city.graph, out / "edges.csv")
    save_catalog(city.catalog, out / "catalog.yaml")
    write_zones_geojson(city.zones, out / "zones.geojson")
    write_votes(city.votes, out / "votes.csv")
    write_ascii_grid(city.elevation, out / "elevation.asc")

    for fdef in city.catalog.active():
        src = city.sources.get(fdef.id)
        if src is None or fdef.extractor == "uniform":
            continue
        if fdef.extractor == "knn_slope":
            continue  # elevation.asc written above
        if fdef.extractor == "layer_presence":
            layer_dir = out / fdef.source
            layer_dir.mkdir(parents=True, exist_ok=True)
            for name, layer in zip(TRAFFIC_LAYER_NAMES, src.layers):
                _write_xy_csv(layer_dir / f"{name}.csv", layer)
            continue
        path = out / fdef.source
        if src.channels:
            _write_xy_csv(path, src.xy, channels=src.channels)
        elif src.counts is not None:
            _write_xy_csv(path, src.xy, counts=src.counts)
        elif src.classes is not None:
            _write_xy_csv(path, src.xy, classes=src.classes)
        else:
            _write_xy_csv(path, src.xy)

    plant = {
        "seed": city.config.seed,
        "blocks": city.config.blocks,
        "block_m": city.config.block_m,
        "zone_blocks": city.config.zone_blocks,
        "downtown_radius": city.config.downtown_radius,
        "downtown_zone_ids": city.downtown_zone_ids,
        "planted_weights": city.planted_weights,
    }
    (out / "plant.json").write_text(json.dumps(plant, indent=1, sort_keys=True),
                                    encoding="utf-8")


def _write_xy_csv(path: Path, xy: np.ndarray, classes=None, counts=None, channels=None) -> None:
    header = "x,y"
    cols: list[np.ndarray] = []
    if classes is not None:
        header += ",class"
    if counts is not None:
        header += ",count"
        cols.append(counts)
    if channels:
        for name in sorted(channels):
            header += f",{name}"
            cols.append(channels[name])
    lines = [header]
    for i in range(len(xy)):
        row = f"{float(xy[i, 0])!r},{float(xy[i, 1])!r}"
        if classes is not None:
            row += f",{classes[i]}"
        for col in cols:
            row += f",{float(col[i])!r}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
