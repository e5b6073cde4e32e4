"""Batch pipeline stages behind the CLI.

Each stage reads its inputs from disk and writes artifacts that later
stages (or the service) consume, so partial re-runs skip the expensive
extraction work. Scoring runs write a manifest with a digest of every
input file and every parameter; given identical inputs and configuration
the outputs are byte-identical, with all randomness confined to the
synthetic-city generator behind its explicit seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import yaml

from . import __version__
from .ahp import (
    ContingencyMatrix,
    WeightSet,
    build_contingency_matrix,
    principal_weights,
    read_votes,
    read_weights,
    transitivity_report,
    write_matrix,
    write_weights,
)
from .catalog import FeatureCatalog, load_catalog
from .errors import DataError, ValidationError
from .extraction import (
    FeatureMatrix,
    assemble_feature_matrix,
    extract_feature,
    load_feature_matrix,
    load_source,
    load_sources,
    save_feature_matrix,
)
from .fixtures import fixture_weights
from .graph import (
    SegmentizedGraph,
    load_graph,
    read_points_csv,
    segmentize,
    write_edges_csv,
    write_nodes_csv,
    write_points_csv,
)
from .scoring import (
    RobotProfile,
    aggregate_graph,
    aggregate_zones,
    apply_profile,
    rank_zones,
    score_points,
)
from .serialize import (
    point_percentiles,
    profile_response_doc,
    score_points_geojson,
    sig9,
    to_json_bytes,
    write_scores_csv,
    zone_aggregates_geojson,
)
from .zones import read_zones_geojson


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def digest_tree(path: Path) -> dict[str, str]:
    """Digests for a file, or every file under a directory."""
    if path.is_dir():
        return {
            str(p.relative_to(path.parent)): file_digest(p)
            for p in sorted(path.rglob("*"))
            if p.is_file()
        }
    return {path.name: file_digest(path)}


def write_manifest(out_dir: Path, inputs: Mapping[str, Path], parameters: Mapping) -> None:
    digests: dict[str, str] = {}
    for label, path in sorted(inputs.items()):
        for name, dig in digest_tree(Path(path)).items():
            digests[f"{label}:{name}"] = dig
    doc = {
        "version": __version__,
        "parameters": dict(sorted(parameters.items())),
        "inputs": digests,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8"
    )


def resolve_weights(spec: str) -> WeightSet:
    """A weight source: 'fixture:<name>' or a weights file path."""
    if spec.startswith("fixture:"):
        return fixture_weights(spec.split(":", 1)[1])
    return read_weights(spec)


def read_profile(path: str | Path) -> RobotProfile:
    """Profile document (YAML or JSON) into a RobotProfile."""
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    return profile_from_doc(doc)


def profile_from_doc(doc: Mapping) -> RobotProfile:
    if not isinstance(doc, Mapping):
        raise ValidationError("profile document must be a mapping")
    unknown = set(doc) - {
        "name", "included_features", "polarity_overrides",
        "extractor_param_overrides", "weight_source",
    }
    if unknown:
        raise ValidationError(f"unknown profile field(s): {sorted(unknown)}")
    try:
        included = tuple(str(f) for f in doc["included_features"])
    except KeyError:
        raise ValidationError("profile is missing 'included_features'") from None
    return RobotProfile(
        name=str(doc.get("name", "custom")),
        included_features=included,
        polarity_overrides={
            str(k): int(v) for k, v in (doc.get("polarity_overrides") or {}).items()
        },
        extractor_param_overrides={
            str(k): dict(v)
            for k, v in (doc.get("extractor_param_overrides") or {}).items()
        },
        weight_source=str(doc.get("weight_source", "auto")),
    )


# ---------------------------------------------------------------------------
# Stages


def stage_derive_weights(
    votes_path: Path,
    out_dir: Path,
    smoothing: float = 1.0,
    uncompared: str = "neutral",
    features: list[str] | None = None,
    catalog_path: Path | None = None,
) -> WeightSet:
    """Votes -> weights + contingency matrix + transitivity report."""
    out_dir.mkdir(parents=True, exist_ok=True)
    votes = read_votes(votes_path)
    if features is None:
        if catalog_path is not None:
            features = load_catalog(catalog_path).active_ids()
        else:
            seen: list[str] = []
            for v in votes:
                for f in (v.feature_a, v.feature_b):
                    if f not in seen:
                        seen.append(f)
            features = seen
    matrix = build_contingency_matrix(votes, features, smoothing, uncompared)
    weights = principal_weights(matrix)
    report = transitivity_report(votes, features)

    write_weights(weights, out_dir / "weights.csv", smoothing=smoothing)
    write_matrix(matrix, out_dir / "matrix.json")
    (out_dir / "transitivity.json").write_text(
        json.dumps(
            {
                "intra_rater": report.intra_rater,
                "inter_rater_violations": report.inter_rater_violations,
                "triples_evaluated": report.triples_evaluated,
                "violation_fraction": sig9(report.violation_fraction),
            },
            indent=1,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    return weights


def stage_build_graph(graph_source: Path, out_dir: Path):
    """Validate and canonicalize a graph into nodes/edges CSVs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = load_graph(graph_source)
    write_nodes_csv(graph, out_dir / "nodes.csv")
    write_edges_csv(graph, out_dir / "edges.csv")
    return graph


def stage_segmentize(graph_source: Path, threshold: float, out_path: Path) -> SegmentizedGraph:
    graph = load_graph(graph_source)
    seg = segmentize(graph, threshold)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_points_csv(seg, out_path)
    return seg


def stage_extract(
    points_path: Path,
    catalog_path: Path,
    out_dir: Path,
    data_dir: Path | None = None,
    workers: int = 1,
) -> FeatureMatrix:
    """Run every active extractor over the point set."""
    seg = read_points_csv(points_path)
    catalog = load_catalog(catalog_path)
    base = data_dir if data_dir is not None else catalog_path.parent
    sources = load_sources(catalog, base)
    matrix = assemble_feature_matrix(seg, catalog, sources, workers=workers)
    save_feature_matrix(matrix, out_dir)
    return matrix


def make_recompute(
    catalog: FeatureCatalog, data_dir: Path | None
) -> Callable[[str, Mapping], tuple]:
    """Column re-extraction hook for profiles that override extractor params."""

    def recompute(feature_id: str, params: Mapping, seg: SegmentizedGraph):
        fdef = catalog.get(feature_id)
        if data_dir is None:
            raise DataError(
                f"cannot re-extract {feature_id!r}: no data directory configured"
            )
        merged = replace(fdef, params={**fdef.params, **params})
        source = load_source(merged, data_dir)
        return extract_feature(seg, merged, source)

    return recompute


def apply_param_overrides(
    matrix: FeatureMatrix,
    profile: RobotProfile,
    seg: SegmentizedGraph,
    recompute: Callable | None,
) -> FeatureMatrix:
    """Replace columns whose extractor parameters the profile overrides."""
    for fid, params in sorted(profile.extractor_param_overrides.items()):
        if not params:
            continue
        if recompute is None:
            raise DataError(
                f"profile overrides extractor params for {fid!r} but "
                "re-extraction is not available here"
            )
        values, missing, stats = recompute(fid, params, seg)
        matrix = matrix.with_column(fid, values, missing, stats)
    return matrix


def compute_profile_response(
    profile: RobotProfile,
    catalog: FeatureCatalog,
    matrix: FeatureMatrix,
    seg_xy: np.ndarray,
    zones,
    contingency: ContingencyMatrix | None,
    base_weights: WeightSet | None,
    missing_policy: str = "renormalize",
    seg: SegmentizedGraph | None = None,
    recompute: Callable | None = None,
    zone_idx: np.ndarray | None = None,
):
    """One profile run: weights, scores, zone aggregates, response document.

    This is the single code path behind the service's recompute endpoint
    and the pipeline's profile export, so the two stay byte-equal.
    """
    weights, polarities = apply_profile(
        profile, catalog, matrix=contingency, base_weights=base_weights
    )
    missing_features = [f for f in profile.included_features if f not in matrix.feature_ids]
    if missing_features:
        raise DataError(
            f"included feature(s) have no data in the feature matrix: {missing_features}"
        )
    if profile.extractor_param_overrides:
        if seg is None:
            seg = SegmentizedGraph(
                xy=seg_xy,
                source_edge=np.full(len(seg_xy), "", dtype=object),
                offsets=np.zeros(len(seg_xy)),
                threshold=0.0,
            )
        matrix = apply_param_overrides(matrix, profile, seg, recompute)
    sub = matrix.select(list(profile.included_features))
    field = score_points(sub, weights, polarities, missing_policy, profile.name)
    aggregates = aggregate_zones(field, seg_xy, zones, zone_idx=zone_idx)
    graph_score = aggregate_graph(field)
    doc = profile_response_doc(
        profile,
        weights,
        aggregates,
        graph_score,
        scored_points=int(field.scored_mask().sum()),
        missing_policy=missing_policy,
    )
    return doc, weights, field, aggregates


def stage_score(
    points_path: Path,
    features_dir: Path,
    catalog_path: Path,
    zones_path: Path,
    out_dir: Path,
    votes_path: Path | None = None,
    weights_spec: str | None = None,
    profile_path: Path | None = None,
    missing_policy: str = "renormalize",
    smoothing: float = 1.0,
    uncompared: str = "neutral",
    data_dir: Path | None = None,
    workers: int = 1,
):
    """Score the point set and export every downstream artifact."""
    if (votes_path is None) == (weights_spec is None):
        raise ValidationError("provide exactly one of: a vote file, a weight source")
    out_dir.mkdir(parents=True, exist_ok=True)

    seg = read_points_csv(points_path)
    catalog = load_catalog(catalog_path)
    matrix = load_feature_matrix(features_dir)

    contingency = None
    base_weights = None
    if votes_path is not None:
        votes = read_votes(votes_path)
        contingency = build_contingency_matrix(
            votes, list(matrix.feature_ids), smoothing, uncompared
        )
        base_weights = principal_weights(contingency)
    else:
        base_weights = resolve_weights(weights_spec)

    zones = read_zones_geojson(zones_path)

    if profile_path is not None:
        profile = read_profile(profile_path)
    else:
        profile = RobotProfile(
            name="base",
            included_features=tuple(matrix.feature_ids),
            weight_source="matrix" if contingency is not None else "weights",
        )

    recompute = make_recompute(catalog, data_dir)
    doc, weights, field, aggregates = compute_profile_response(
        profile,
        catalog,
        matrix,
        seg.xy,
        zones,
        contingency,
        base_weights,
        missing_policy,
        seg=seg,
        recompute=recompute,
    )

    percentiles = point_percentiles(field)
    write_scores_csv(field, seg.xy, out_dir / "scores.csv")
    scores_fc = {
        "type": "FeatureCollection",
        "features": score_points_geojson(field, seg.xy, percentiles),
    }
    (out_dir / "scores.geojson").write_bytes(to_json_bytes(scores_fc))
    (out_dir / "zones_scored.geojson").write_bytes(
        to_json_bytes(zone_aggregates_geojson(aggregates, zones))
    )
    (out_dir / "profile_response.json").write_bytes(to_json_bytes(doc))
    write_weights(weights, out_dir / "weights_used.csv")

    inputs = {
        "points": points_path,
        "features": features_dir,
        "catalog": catalog_path,
        "zones": zones_path,
    }
    if votes_path is not None:
        inputs["votes"] = votes_path
    elif not weights_spec.startswith("fixture:"):
        inputs["weights"] = Path(weights_spec)
    if profile_path is not None:
        inputs["profile"] = profile_path
    write_manifest(
        out_dir,
        inputs,
        parameters={
            "missing_policy": missing_policy,
            "smoothing": smoothing,
            "uncompared": uncompared,
            "weights_spec": weights_spec or "derived-from-votes",
            "profile": profile.name,
            "included_features": list(profile.included_features),
            "workers": workers,
        },
    )
    return doc, field, aggregates


def stage_aggregate(
    points_path: Path, scores_path: Path, zones_path: Path, out_path: Path
):
    """Re-aggregate an existing score export over a zone file."""
    seg = read_points_csv(points_path)
    field = read_scores_csv(scores_path)
    zones = read_zones_geojson(zones_path)
    aggregates = aggregate_zones(field, seg.xy, zones)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(to_json_bytes(zone_aggregates_geojson(aggregates, zones)))
    return aggregates


def read_scores_csv(path: str | Path):
    """Parse a scores.csv export back into a ScoreField."""
    from .scoring import ScoreField

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or [c.strip() for c in lines[0].split(",")] != [
        "point_id", "x", "y", "score", "coverage",
    ]:
        raise ValidationError(f"{path}: expected header 'point_id,x,y,score,coverage'")
    ids = []
    scores = []
    coverage = []
    for line in lines[1:]:
        if not line.strip():
            continue
        pid, _x, _y, s, cov = line.split(",")
        ids.append(int(pid))
        scores.append(float(s) if s else np.nan)
        coverage.append(float(cov))
    return ScoreField(
        point_ids=np.array(ids, dtype=np.int64),
        scores=np.array(scores, dtype=float),
        coverage=np.array(coverage, dtype=float),
    )


def stage_rank(zones_scored_path: Path, band: float, out_path: Path | None = None):
    """Top/bottom percentile bands from a scored-zones export."""
    from .scoring import ZoneAggregate, zone_score_ratio

    doc = json.loads(zones_scored_path.read_text(encoding="utf-8"))
    aggregates = [
        ZoneAggregate(
            zone_id=f["properties"]["zone_id"],
            mean_score=f["properties"]["mean_score"],
            point_count=f["properties"]["point_count"],
            percentile_rank=f["properties"]["percentile_rank"],
        )
        for f in doc["features"]
    ]
    top, bottom = rank_zones(aggregates, band)
    ratio = zone_score_ratio(aggregates)
    result = {
        "band": band,
        "top": [a.zone_id for a in top],
        "bottom": [a.zone_id for a in bottom],
        "max_min_zone_ratio": sig9(ratio) if ratio is not None else None,
    }
    if out_path is not None:
        out_path.write_bytes(to_json_bytes(result))
    return result, top, bottom
