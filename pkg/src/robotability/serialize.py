"""Canonical wire formats shared by the batch pipeline and the service.

Every number in service-facing documents is rounded to 9 significant
digits before serialization so re-runs and independent code paths produce
byte-identical JSON. The profile-response builder here is the single code
path behind both `POST /profile` and the pipeline's profile export.
"""

from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from .ahp import WeightSet
from .scoring import ScoreField, ZoneAggregate, zone_score_ratio
from .zones import Zone, zone_geometry


def sig9(x: float) -> float:
    """Round to 9 significant digits (stable across code paths)."""
    return float(f"{float(x):.9g}")


def to_json_bytes(doc) -> bytes:
    return json.dumps(doc, separators=(",", ":"), allow_nan=False).encode("utf-8")


def weights_doc(ws: WeightSet) -> dict:
    return {
        "source": ws.source,
        "weights": {fid: sig9(w) for fid, w in ws.weights.items()},
    }


def zone_aggregate_properties(agg: ZoneAggregate) -> dict:
    return {
        "zone_id": agg.zone_id,
        "mean_score": sig9(agg.mean_score) if agg.mean_score is not None else None,
        "point_count": agg.point_count,
        "percentile_rank": (
            sig9(agg.percentile_rank) if agg.percentile_rank is not None else None
        ),
    }


def zone_aggregates_geojson(
    aggregates: Sequence[ZoneAggregate], zones: Sequence[Zone]
) -> dict:
    by_id = {z.zone_id: z for z in zones}
    features = []
    for agg in aggregates:
        geom = zone_geometry(by_id[agg.zone_id])
        geom = {
            "type": "Polygon",
            "coordinates": [
                [[sig9(x), sig9(y)] for x, y in ring] for ring in geom["coordinates"]
            ],
        }
        features.append(
            {
                "type": "Feature",
                "geometry": geom,
                "properties": zone_aggregate_properties(agg),
            }
        )
    return {"type": "FeatureCollection", "features": features}


def point_percentiles(field: ScoreField) -> np.ndarray:
    """Ordinal percentile rank of each scored point's score (NaN unscored)."""
    scored = field.scored_mask()
    out = np.full(len(field.scores), np.nan)
    idx = np.nonzero(scored)[0]
    if len(idx) == 1:
        out[idx[0]] = 0.5
        return out
    if len(idx):
        order = idx[np.lexsort((field.point_ids[idx], field.scores[idx]))]
        out[order] = np.arange(len(order)) / (len(order) - 1)
    return out


def score_points_geojson(
    field: ScoreField,
    xy: np.ndarray,
    percentiles: np.ndarray,
    selection: np.ndarray | None = None,
) -> list[dict]:
    """GeoJSON point features for (a selection of) the score field."""
    ids = field.point_ids if selection is None else field.point_ids[selection]
    rows = np.arange(len(field.scores)) if selection is None else np.nonzero(selection)[0]
    features = []
    for pid, row in zip(ids, rows):
        score = field.scores[row]
        pct = percentiles[row]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [sig9(xy[row, 0]), sig9(xy[row, 1])],
                },
                "properties": {
                    "point_id": int(pid),
                    "score": sig9(score) if not np.isnan(score) else None,
                    "coverage": sig9(field.coverage[row]),
                    "percentile": sig9(pct) if not np.isnan(pct) else None,
                },
            }
        )
    return features


def write_scores_csv(field: ScoreField, xy: np.ndarray, path) -> None:
    """Lossless delimited export: point_id,x,y,score,coverage (blank = no data)."""
    lines = ["point_id,x,y,score,coverage"]
    scores = field.scores
    cov = field.coverage
    for row, pid in enumerate(field.point_ids):
        s = "" if np.isnan(scores[row]) else repr(float(scores[row]))
        lines.append(
            f"{int(pid)},{float(xy[row, 0])!r},{float(xy[row, 1])!r},{s},"
            f"{float(cov[row])!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def canonical_profile_doc(profile) -> dict:
    """Stable dictionary form of a RobotProfile for hashing and echoing."""
    return {
        "name": profile.name,
        "included_features": list(profile.included_features),
        "polarity_overrides": {
            k: int(v) for k, v in sorted(profile.polarity_overrides.items())
        },
        "extractor_param_overrides": {
            k: {pk: profile.extractor_param_overrides[k][pk]
                for pk in sorted(profile.extractor_param_overrides[k])}
            for k in sorted(profile.extractor_param_overrides)
        },
        "weight_source": profile.weight_source,
    }


def profile_token(profile) -> str:
    payload = json.dumps(
        canonical_profile_doc(profile), separators=(",", ":"), sort_keys=True
    ).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def profile_response_doc(
    profile,
    weights: WeightSet,
    aggregates: Sequence[ZoneAggregate],
    graph_score: float,
    scored_points: int,
    missing_policy: str,
) -> dict:
    """The recompute result document (shared by the service and the CLI)."""
    ratio = zone_score_ratio(aggregates)
    return {
        "profile_token": profile_token(profile),
        "profile": canonical_profile_doc(profile),
        "missing_policy": missing_policy,
        "weights": weights_doc(weights),
        "zones": [zone_aggregate_properties(a) for a in aggregates],
        "summary": {
            "graph_score": sig9(graph_score),
            "scored_points": scored_points,
            "max_min_zone_ratio": sig9(ratio) if ratio is not None else None,
        },
    }
