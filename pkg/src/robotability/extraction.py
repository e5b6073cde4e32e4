"""Per-point raw feature extraction and the normalized feature matrix.

Every indicator is computed by one of a small set of extractor kinds, all
oriented so that "more of the phenomenon" gives a larger raw value (more
pedestrians, more furniture, steeper slope); polarity alone decides the
sign of the contribution at scoring time. Raw columns are then brought
into [0, 1]: min-max for continuous kinds, inverted min-max for
nearest-facility distances (larger = closer), identity for binary and
uniform kinds. Missing data stays masked through the whole chain.

Extraction is data-parallel: extractors are pure functions of the
immutable point set plus source snapshots, and `workers` only splits tree
traversal, never the result.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .catalog import FeatureCatalog, FeatureDef
from .elevation import ElevationGrid, read_ascii_grid
from .errors import DataError, ValidationError
from .graph import SegmentizedGraph

DEFAULT_JOIN_RADIUS = 7.5
DEFAULT_SLOPE_K = 8
DEFAULT_SLOPE_MAX_DISTANCE = 30.0


@dataclass
class FeatureSource:
    """In-memory snapshot of one indicator's input data."""

    xy: np.ndarray | None = None
    classes: np.ndarray | None = None  # object array of class labels
    counts: np.ndarray | None = None
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    layers: list[np.ndarray] = field(default_factory=list)
    elevation: ElevationGrid | None = None


@dataclass
class FeatureMatrix:
    """Normalized per-point values with an explicit missing-data mask."""

    point_ids: np.ndarray
    feature_ids: tuple[str, ...]
    values: np.ndarray  # (n_points, n_features), NaN where missing
    missing: np.ndarray  # same shape, bool
    raw_stats: dict[str, dict] = field(default_factory=dict)  # id -> {min, max, transform}

    def __post_init__(self):
        n, m = self.values.shape
        if self.missing.shape != (n, m) or len(self.feature_ids) != m:
            raise ValidationError("feature matrix shapes are inconsistent")
        present = self.values[~self.missing]
        if present.size and (np.any(present < 0) or np.any(present > 1)):
            raise ValidationError("non-missing feature values must lie in [0, 1]")

    def column(self, feature_id: str) -> int:
        try:
            return self.feature_ids.index(feature_id)
        except ValueError:
            raise ValidationError(f"feature {feature_id!r} is not in the matrix") from None

    def select(self, feature_ids: Sequence[str]) -> "FeatureMatrix":
        cols = [self.column(f) for f in feature_ids]
        return FeatureMatrix(
            point_ids=self.point_ids,
            feature_ids=tuple(feature_ids),
            values=self.values[:, cols],
            missing=self.missing[:, cols],
            raw_stats={f: self.raw_stats[f] for f in feature_ids if f in self.raw_stats},
        )

    def with_column(self, feature_id: str, values: np.ndarray, missing: np.ndarray,
                    stats: dict) -> "FeatureMatrix":
        """Copy with one column replaced (used for parameter re-extraction)."""
        col = self.column(feature_id)
        new_values = self.values.copy()
        new_missing = self.missing.copy()
        new_values[:, col] = values
        new_missing[:, col] = missing
        new_stats = dict(self.raw_stats)
        new_stats[feature_id] = stats
        return FeatureMatrix(
            point_ids=self.point_ids,
            feature_ids=self.feature_ids,
            values=new_values,
            missing=new_missing,
            raw_stats=new_stats,
        )


# ---------------------------------------------------------------------------
# Normalization


def minmax_normalize(
    raw: np.ndarray, missing: np.ndarray | None = None
) -> tuple[np.ndarray, tuple[float, float]]:
    """Scale non-missing values to [0, 1]; a constant column maps to 0.5."""
    raw = np.asarray(raw, dtype=float)
    if missing is None:
        missing = ~np.isfinite(raw)
    present = raw[~missing]
    if present.size == 0 or not np.all(np.isfinite(present)):
        raise DataError("min-max normalization needs at least one finite non-missing value")
    lo, hi = float(present.min()), float(present.max())
    out = np.full(raw.shape, np.nan)
    if lo == hi:
        warnings.warn(
            f"degenerate range (all values {lo!r}); mapping to 0.5", stacklevel=2
        )
        out[~missing] = 0.5
    else:
        out[~missing] = (raw[~missing] - lo) / (hi - lo)
    return out, (lo, hi)


# ---------------------------------------------------------------------------
# Extractor kinds


def weighted_density(
    graph: SegmentizedGraph,
    items_xy: np.ndarray,
    item_classes: Sequence[str] | None,
    class_weights: Mapping[str, float] | None,
    radius: float = DEFAULT_JOIN_RADIUS,
    workers: int = 1,
) -> np.ndarray:
    """Sum of class weights over items within `radius` of each point."""
    if radius <= 0:
        raise ValidationError(f"join radius must be positive, got {radius}")
    n = len(graph)
    out = np.zeros(n)
    items_xy = np.asarray(items_xy, dtype=float).reshape(-1, 2)
    if len(items_xy) == 0:
        return out
    if item_classes is None:
        weights = np.ones(len(items_xy))
    else:
        if class_weights is None:
            raise ValidationError("item classes given without class weights")
        unknown = sorted(set(map(str, item_classes)) - set(class_weights))
        if unknown:
            raise ValidationError(f"unknown item classes: {unknown}")
        weights = np.array([class_weights[str(c)] for c in item_classes], dtype=float)
    hits = graph.index.within_bulk(items_xy, radius, workers=workers)
    lengths = [len(h) for h in hits]
    if sum(lengths):
        flat_ids = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
        flat_w = np.repeat(weights, lengths)
        out += np.bincount(flat_ids, weights=flat_w, minlength=n)
    return out


def observation_mean(
    graph: SegmentizedGraph,
    obs_xy: np.ndarray,
    counts: np.ndarray,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean of observation counts joined to their nearest point.

    Points receiving no observation are missing; that is expected (sensor
    coverage is never complete) and flows into the matrix mask.
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValidationError("observation counts must be non-negative")
    n = len(graph)
    sums = np.zeros(n)
    hits = np.zeros(n)
    obs_xy = np.asarray(obs_xy, dtype=float).reshape(-1, 2)
    if len(obs_xy):
        nearest = graph.index.nearest_bulk(obs_xy, workers=workers)
        sums += np.bincount(nearest, weights=counts, minlength=n)
        hits += np.bincount(nearest, minlength=n)
    missing = hits == 0
    out = np.full(n, np.nan)
    out[~missing] = sums[~missing] / hits[~missing]
    return out, missing


def nearest_facility_distance(
    graph: SegmentizedGraph, facilities_xy: np.ndarray, workers: int = 1
) -> np.ndarray:
    """Euclidean distance from each point to the closest facility."""
    facilities_xy = np.asarray(facilities_xy, dtype=float).reshape(-1, 2)
    if len(facilities_xy) == 0:
        raise DataError("facility list is empty")
    from scipy.spatial import cKDTree

    tree = cKDTree(facilities_xy)
    d, _ = tree.query(graph.xy, k=1, workers=workers)
    return np.asarray(d, dtype=float)


def threshold_binary(
    raw: np.ndarray, threshold: float, missing: np.ndarray | None = None
) -> np.ndarray:
    """1 where raw strictly exceeds the threshold, else 0.

    A (n, c) input is a multi-channel variant: all channels must exceed
    the threshold (conjunction). Missing entries yield NaN.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw.reshape(-1, 1)
    if missing is None:
        missing = ~np.isfinite(raw)
    if missing.ndim == 1:
        missing = missing.reshape(-1, 1)
    any_missing = missing.any(axis=1)
    ok = np.where(missing, False, raw > threshold).all(axis=1)
    out = np.where(ok, 1.0, 0.0)
    out[any_missing] = np.nan
    return out


def layer_presence(
    graph: SegmentizedGraph,
    layers: Sequence[np.ndarray],
    radius: float = DEFAULT_JOIN_RADIUS,
    workers: int = 1,
) -> np.ndarray:
    """Number of layers with at least one item within `radius` of the point."""
    if radius <= 0:
        raise ValidationError(f"join radius must be positive, got {radius}")
    out = np.zeros(len(graph))
    for layer_xy in layers:
        layer_xy = np.asarray(layer_xy, dtype=float).reshape(-1, 2)
        if len(layer_xy) == 0:
            continue
        hits = graph.index.within_bulk(layer_xy, radius, workers=workers)
        present = np.zeros(len(graph), dtype=bool)
        for h in hits:
            present[np.asarray(h, dtype=np.int64)] = True
        out += present
    return out


def knn_slope(
    graph: SegmentizedGraph,
    sampler: ElevationGrid,
    k: int = DEFAULT_SLOPE_K,
    max_distance: float = DEFAULT_SLOPE_MAX_DISTANCE,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean absolute elevation gradient to the k closest in-range neighbors.

    For each point: take its neighbors within `max_distance`, keep the k
    closest (all of them if fewer), and average |Δelevation / distance|.
    Uphill and downhill count equally. Points with no in-range neighbor
    are missing. Zero-distance neighbors (coincident points) carry no
    defined gradient and are skipped.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if max_distance <= 0:
        raise ValidationError(f"max distance must be positive, got {max_distance}")
    elev = sampler.sample(graph.xy)
    bad = ~np.isfinite(elev)
    if np.any(bad):
        pid = int(np.nonzero(bad)[0][0])
        raise DataError(
            f"non-finite elevation sample at point {pid} "
            f"({graph.xy[pid, 0]}, {graph.xy[pid, 1]})"
        )
    # k+1 because each point finds itself at distance 0 first.
    d, ids = graph.index.knn_within(graph.xy, k + 1, max_distance, workers=workers)
    own = ids == np.arange(len(graph))[:, None]
    usable = (ids >= 0) & ~own & (d > 0)
    # Drop the self column, then keep at most k neighbors per row (the query
    # returns them sorted by distance).
    keep = np.cumsum(usable, axis=1) <= k
    usable &= keep
    safe_ids = np.where(usable, ids, 0)
    safe_d = np.where(usable, d, 1.0)
    grads = np.abs(elev[safe_ids] - elev[:, None]) / safe_d
    grads[~usable] = 0.0
    counts = usable.sum(axis=1)
    missing = counts == 0
    out = np.full(len(graph), np.nan)
    out[~missing] = grads.sum(axis=1)[~missing] / counts[~missing]
    return out, missing


def uniform_value(n: int, value: float) -> np.ndarray:
    """The same value at every point (bypasses normalization)."""
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"uniform feature value must be in [0, 1], got {value}")
    return np.full(n, float(value))


# ---------------------------------------------------------------------------
# Assembly


def extract_feature(
    graph: SegmentizedGraph,
    fdef: FeatureDef,
    source: FeatureSource,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Run one feature's extractor + normalization chain.

    Returns (normalized values, missing mask, stats record).
    """
    params = dict(fdef.params)
    kind = fdef.extractor
    n = len(graph)

    if kind == "weighted_density":
        raw = weighted_density(
            graph,
            source.xy if source.xy is not None else np.empty((0, 2)),
            source.classes,
            params.get("class_weights"),
            radius=float(params.get("radius", DEFAULT_JOIN_RADIUS)),
            workers=workers,
        )
        missing = np.zeros(n, dtype=bool)
        norm, (lo, hi) = minmax_normalize(raw, missing)
        return norm, missing, {"min": lo, "max": hi, "transform": "minmax"}

    if kind == "observation_mean":
        if source.xy is None or source.counts is None:
            raise DataError(f"feature {fdef.id!r}: observation source needs x,y,count data")
        raw, missing = observation_mean(graph, source.xy, source.counts, workers=workers)
        norm, (lo, hi) = minmax_normalize(raw, missing)
        return norm, missing, {"min": lo, "max": hi, "transform": "minmax"}

    if kind == "nearest_facility":
        if source.xy is None:
            raise DataError(f"feature {fdef.id!r}: facility source needs x,y data")
        raw = nearest_facility_distance(graph, source.xy, workers=workers)
        missing = np.zeros(n, dtype=bool)
        norm, (lo, hi) = minmax_normalize(raw, missing)
        # proximity convention: larger value = closer facility
        norm[~missing] = 1.0 - norm[~missing]
        return norm, missing, {"min": lo, "max": hi, "transform": "inverted_minmax"}

    if kind == "threshold_binary":
        names = params.get("channels") or sorted(source.channels)
        if not names:
            raise DataError(f"feature {fdef.id!r}: no channels in source")
        for name in names:
            if name not in source.channels:
                raise DataError(f"feature {fdef.id!r}: channel {name!r} missing from source")
        if source.xy is None:
            raise DataError(f"feature {fdef.id!r}: channel source needs x,y data")
        chans = []
        chan_missing = []
        for name in names:
            vals, miss = observation_mean(graph, source.xy, source.channels[name], workers=workers)
            chans.append(vals)
            chan_missing.append(miss)
        raw = np.column_stack(chans)
        miss2 = np.column_stack(chan_missing)
        out = threshold_binary(raw, float(params.get("threshold", 10.0)), miss2)
        missing = ~np.isfinite(out)
        lo = float(out[~missing].min()) if not missing.all() else None
        hi = float(out[~missing].max()) if not missing.all() else None
        return out, missing, {"min": lo, "max": hi, "transform": "identity"}

    if kind == "layer_presence":
        raw = layer_presence(
            graph,
            source.layers,
            radius=float(params.get("radius", DEFAULT_JOIN_RADIUS)),
            workers=workers,
        )
        missing = np.zeros(n, dtype=bool)
        norm, (lo, hi) = minmax_normalize(raw, missing)
        return norm, missing, {"min": lo, "max": hi, "transform": "minmax"}

    if kind == "knn_slope":
        if source.elevation is None:
            raise DataError(f"feature {fdef.id!r}: no elevation grid in source")
        raw, missing = knn_slope(
            graph,
            source.elevation,
            k=int(params.get("k", DEFAULT_SLOPE_K)),
            max_distance=float(params.get("max_distance", DEFAULT_SLOPE_MAX_DISTANCE)),
            workers=workers,
        )
        norm, (lo, hi) = minmax_normalize(raw, missing)
        return norm, missing, {"min": lo, "max": hi, "transform": "minmax"}

    if kind == "uniform":
        if "value" not in params:
            raise DataError(f"feature {fdef.id!r}: uniform extractor needs a 'value' param")
        vals = uniform_value(n, float(params["value"]))
        missing = np.zeros(n, dtype=bool)
        return vals, missing, {
            "min": float(params["value"]), "max": float(params["value"]),
            "transform": "identity",
        }

    raise ValidationError(f"feature {fdef.id!r}: unknown extractor kind {kind!r}")


def assemble_feature_matrix(
    graph: SegmentizedGraph,
    catalog: FeatureCatalog,
    sources: Mapping[str, FeatureSource],
    workers: int = 1,
) -> FeatureMatrix:
    """Run every active feature's pipeline into one matrix."""
    active = catalog.active()
    unsourced = [
        f.id for f in active
        if f.id not in sources and f.extractor not in ("uniform",)
    ]
    if unsourced:
        raise DataError(
            f"no data source for active feature(s) {unsourced}; "
            "provide data or move them to the catalog's excluded list"
        )
    n = len(graph)
    values = np.empty((n, len(active)))
    missing = np.empty((n, len(active)), dtype=bool)
    stats: dict[str, dict] = {}
    for j, fdef in enumerate(active):
        src = sources.get(fdef.id, FeatureSource())
        col, miss, st = extract_feature(graph, fdef, src, workers=workers)
        values[:, j] = col
        missing[:, j] = miss
        stats[fdef.id] = st
    return FeatureMatrix(
        point_ids=graph.point_ids,
        feature_ids=tuple(f.id for f in active),
        values=values,
        missing=missing,
        raw_stats=stats,
    )


# ---------------------------------------------------------------------------
# Source files and matrix persistence


def read_point_data(path: str | Path) -> FeatureSource:
    """Delimited point data: header x,y[,class|,count|,<channel>...]."""
    path = Path(path)
    if path.suffix.lower() in (".geojson", ".json"):
        return _read_point_geojson(path)
    with path.open(encoding="utf-8") as fh:
        header = [c.strip() for c in fh.readline().split(",")]
    if len(header) < 2 or header[0] != "x" or header[1] != "y":
        raise ValidationError(f"{path}: expected header starting 'x,y'")
    extra = header[2:]
    if extra == ["class"]:
        rows = np.genfromtxt(
            path, delimiter=",", skip_header=1, dtype=None, encoding="utf-8",
            names=["x", "y", "cls"], ndmin=1,
        )
        xy = np.column_stack([rows["x"].astype(float), rows["y"].astype(float)])
        return FeatureSource(xy=xy, classes=rows["cls"].astype(object))
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    if data.shape[1] != len(header):
        raise ValidationError(f"{path}: column count does not match header")
    src = FeatureSource(xy=data[:, :2])
    if extra == ["count"]:
        src.counts = data[:, 2]
    else:
        for j, name in enumerate(extra):
            src.channels[name] = data[:, 2 + j]
    return src


def _read_point_geojson(path: Path) -> FeatureSource:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a FeatureCollection")
    xy = []
    classes = []
    counts = []
    channels: dict[str, list] = {}
    for feat in doc.get("features", []):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Point":
            raise ValidationError(f"{path}: only Point features are supported")
        xy.append([float(c) for c in geom["coordinates"][:2]])
        props = feat.get("properties") or {}
        if "class" in props:
            classes.append(str(props["class"]))
        if "count" in props:
            counts.append(float(props["count"]))
        for key, val in props.items():
            if key not in ("class", "count") and isinstance(val, (int, float)):
                channels.setdefault(key, []).append(float(val))
    src = FeatureSource(xy=np.array(xy, dtype=float).reshape(-1, 2))
    if classes:
        src.classes = np.array(classes, dtype=object)
    if counts:
        src.counts = np.array(counts, dtype=float)
    for key, vals in channels.items():
        src.channels[key] = np.array(vals, dtype=float)
    return src


def load_source(fdef: FeatureDef, base_dir: str | Path) -> FeatureSource:
    """Resolve one feature's source path into arrays."""
    base_dir = Path(base_dir)
    if fdef.extractor == "uniform":
        return FeatureSource()
    if fdef.source is None:
        raise DataError(
            f"active feature {fdef.id!r} has no source path; "
            "provide one or move it to the excluded list"
        )
    path = base_dir / fdef.source
    if not path.exists():
        raise DataError(f"feature {fdef.id!r}: source {path} does not exist")
    if fdef.extractor == "knn_slope":
        return FeatureSource(elevation=read_ascii_grid(path))
    if fdef.extractor == "layer_presence":
        if not path.is_dir():
            raise DataError(f"feature {fdef.id!r}: layer source {path} must be a directory")
        layers = []
        for layer_file in sorted(path.iterdir()):
            if layer_file.suffix.lower() in (".csv", ".geojson", ".json"):
                layers.append(read_point_data(layer_file).xy)
        if not layers:
            raise DataError(f"feature {fdef.id!r}: no layer files in {path}")
        return FeatureSource(layers=layers)
    return read_point_data(path)


def load_sources(catalog: FeatureCatalog, base_dir: str | Path) -> dict[str, FeatureSource]:
    return {f.id: load_source(f, base_dir) for f in catalog.active()}


def save_feature_matrix(matrix: FeatureMatrix, out_dir: str | Path) -> None:
    """Write the matrix as raw .npy arrays plus a JSON sidecar (byte-stable)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "values.npy", matrix.values)
    np.save(out / "missing.npy", matrix.missing)
    np.save(out / "point_ids.npy", matrix.point_ids.astype(np.int64))
    meta = {
        "feature_ids": list(matrix.feature_ids),
        "raw_stats": matrix.raw_stats,
        "point_count": int(len(matrix.point_ids)),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True),
                                   encoding="utf-8")


def load_feature_matrix(in_dir: str | Path) -> FeatureMatrix:
    src = Path(in_dir)
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    return FeatureMatrix(
        point_ids=np.load(src / "point_ids.npy"),
        feature_ids=tuple(meta["feature_ids"]),
        values=np.load(src / "values.npy"),
        missing=np.load(src / "missing.npy"),
        raw_stats=meta["raw_stats"],
    )
