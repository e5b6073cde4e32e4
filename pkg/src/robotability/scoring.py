"""Per-point scores, graph and zone aggregates, and robot profiles.

A point's score is the polarity-signed weighted sum of its normalized
feature values. Weights sum to one and values live in [0, 1], so scores
are bounded by [-1, 1]. Per-point data gaps are handled by a missingness
policy; the default renormalizes weights over the features available at
each point so scores stay comparable across coverage levels, and the
coverage fraction is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ahp import ContingencyMatrix, WeightSet, subset_weights
from .catalog import FeatureCatalog
from .errors import AggregationError, ValidationError
from .extraction import FeatureMatrix
from .zones import Zone, assign_zones

MISSING_POLICIES = ("renormalize", "zero_fill", "propagate")


@dataclass(frozen=True)
class RobotProfile:
    """A robot-specific scoring configuration."""

    name: str
    included_features: tuple[str, ...]
    polarity_overrides: Mapping[str, int] = field(default_factory=dict)
    extractor_param_overrides: Mapping[str, Mapping] = field(default_factory=dict)
    weight_source: str = "auto"  # auto | matrix | weights

    def __post_init__(self):
        if len(set(self.included_features)) != len(self.included_features):
            raise ValidationError("profile includes a feature twice")
        if len(self.included_features) < 2:
            raise ValidationError("profile must include at least 2 features")
        for fid, pol in self.polarity_overrides.items():
            if pol not in (+1, -1):
                raise ValidationError(f"polarity override for {fid!r} must be +1 or -1")
        if self.weight_source not in ("auto", "matrix", "weights"):
            raise ValidationError(f"unknown weight source {self.weight_source!r}")


@dataclass
class ScoreField:
    """Signed scores and coverage per point; NaN score means no data."""

    point_ids: np.ndarray
    scores: np.ndarray
    coverage: np.ndarray
    profile: str = "base"

    def scored_mask(self) -> np.ndarray:
        return ~np.isnan(self.scores)


@dataclass
class ZoneAggregate:
    zone_id: str
    mean_score: float | None
    point_count: int
    percentile_rank: float | None


def score_points(
    matrix: FeatureMatrix,
    weights: WeightSet,
    polarities: Mapping[str, int],
    missing_policy: str = "renormalize",
    profile_name: str = "base",
) -> ScoreField:
    """Polarity-controlled weighted sum over each point's feature row.

    Policies for per-point gaps: "renormalize" rescales weights over the
    non-missing features of each point; "zero_fill" keeps weights and lets
    missing values contribute nothing; "propagate" marks any point with a
    gap as unscored. Zero-coverage points are unscored under every policy.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValidationError(
            f"unknown missing policy {missing_policy!r}; pick one of {MISSING_POLICIES}"
        )
    matrix_set = set(matrix.feature_ids)
    weight_set = set(weights.weights)
    if matrix_set != weight_set:
        only_m = sorted(matrix_set - weight_set)
        only_w = sorted(weight_set - matrix_set)
        raise ValidationError(
            f"weights do not cover the matrix features exactly; "
            f"matrix-only: {only_m}, weights-only: {only_w}"
        )
    missing_pol = sorted(matrix_set - set(polarities))
    if missing_pol:
        raise ValidationError(f"no polarity for feature(s): {missing_pol}")

    w = weights.vector(matrix.feature_ids)
    p = np.array([polarities[f] for f in matrix.feature_ids], dtype=float)
    present = ~matrix.missing
    x = np.where(present, matrix.values, 0.0)

    contrib = x * (w * p)  # (n points, m features)
    raw_sum = contrib.sum(axis=1)
    avail_w = present @ w
    n_features = len(matrix.feature_ids)
    coverage = present.sum(axis=1) / n_features

    scores = np.full(len(raw_sum), np.nan)
    if missing_policy == "renormalize":
        ok = avail_w > 0
        scores[ok] = raw_sum[ok] / avail_w[ok]
    elif missing_policy == "zero_fill":
        ok = coverage > 0
        scores[ok] = raw_sum[ok]
    else:  # propagate
        ok = coverage == 1.0
        scores[ok] = raw_sum[ok]

    return ScoreField(
        point_ids=matrix.point_ids,
        scores=scores,
        coverage=coverage,
        profile=profile_name,
    )


def aggregate_graph(field: ScoreField) -> float:
    """Mean score over all scored points."""
    scored = field.scores[field.scored_mask()]
    if scored.size == 0:
        raise AggregationError("no scored points to aggregate (all coverage is zero)")
    return float(scored.mean())


def _ordinal_ranks(values: np.ndarray, ids: Sequence[str]) -> np.ndarray:
    """Ranks in [0, 1]: sort by (value, id), rank i maps to i/(n-1)."""
    order = sorted(range(len(values)), key=lambda i: (values[i], ids[i]))
    ranks = np.empty(len(values))
    if len(values) == 1:
        ranks[order[0]] = 0.5
        return ranks
    for pos, i in enumerate(order):
        ranks[i] = pos / (len(values) - 1)
    return ranks


def aggregate_zones(
    field: ScoreField,
    points_xy: np.ndarray,
    zones: Sequence[Zone],
    zone_idx: np.ndarray | None = None,
) -> list[ZoneAggregate]:
    """Mean score per zone, with percentile ranks over zones that have data.

    Points are assigned to the first zone covering them (input order);
    unscored points do not count. Zones without scored points carry no
    mean and no rank (rendered as no-data). A precomputed point-to-zone
    assignment may be passed to skip the polygon tests.
    """
    if zone_idx is None:
        zone_idx = assign_zones(points_xy, zones)
    scored = field.scored_mask()
    usable = scored & (zone_idx >= 0)
    sums = np.bincount(zone_idx[usable], weights=field.scores[usable], minlength=len(zones))
    counts = np.bincount(zone_idx[usable], minlength=len(zones))

    means: list[float | None] = [
        (sums[i] / counts[i]) if counts[i] > 0 else None for i in range(len(zones))
    ]
    has_data = [i for i in range(len(zones)) if counts[i] > 0]
    ranks: dict[int, float] = {}
    if has_data:
        vals = np.array([means[i] for i in has_data], dtype=float)
        ids = [zones[i].zone_id for i in has_data]
        for i, r in zip(has_data, _ordinal_ranks(vals, ids)):
            ranks[i] = float(r)

    return [
        ZoneAggregate(
            zone_id=zones[i].zone_id,
            mean_score=(float(means[i]) if means[i] is not None else None),
            point_count=int(counts[i]),
            percentile_rank=ranks.get(i),
        )
        for i in range(len(zones))
    ]


def rank_zones(
    aggregates: Sequence[ZoneAggregate], band: float
) -> tuple[list[ZoneAggregate], list[ZoneAggregate]]:
    """Top and bottom percentile bands of the data zones.

    Top: rank >= 1 - band, best first. Bottom: rank <= band, worst first.
    A zone qualifying for both (only possible at band = 0.5 with an odd
    zone count) goes to the top list. Ties break by zone_id.
    """
    if not 0 < band <= 0.5:
        raise ValidationError(f"band must be in (0, 0.5], got {band}")
    data = [a for a in aggregates if a.percentile_rank is not None]
    top = sorted(
        (a for a in data if a.percentile_rank >= 1 - band),
        key=lambda a: (-a.mean_score, a.zone_id),
    )
    top_ids = {a.zone_id for a in top}
    bottom = sorted(
        (a for a in data if a.percentile_rank <= band and a.zone_id not in top_ids),
        key=lambda a: (a.mean_score, a.zone_id),
    )
    return top, bottom


def zone_score_ratio(aggregates: Sequence[ZoneAggregate]) -> float | None:
    """Max/min zone mean ratio; None when undefined (no data or min <= 0)."""
    means = [a.mean_score for a in aggregates if a.mean_score is not None]
    if not means:
        return None
    lo, hi = min(means), max(means)
    if lo <= 0:
        return None
    return hi / lo


def apply_profile(
    profile: RobotProfile,
    catalog: FeatureCatalog,
    matrix: ContingencyMatrix | None = None,
    base_weights: WeightSet | None = None,
) -> tuple[WeightSet, dict[str, int]]:
    """Resolve a profile into its weight set and polarity map.

    With a contingency matrix available the weights come from a true eigen
    recomputation on the restricted matrix; otherwise the base weight set
    is rescaled over the included features. Both paths are labeled via the
    weight set's source tag.
    """
    active = set(catalog.active_ids())
    for fid in profile.included_features:
        if fid in catalog.excluded:
            raise ValidationError(
                f"profile {profile.name!r} includes excluded feature {fid!r} "
                f"({catalog.excluded[fid]})"
            )
        if fid not in active:
            raise ValidationError(f"profile {profile.name!r}: unknown feature {fid!r}")
    for fid in list(profile.polarity_overrides) + list(profile.extractor_param_overrides):
        if fid not in active:
            raise ValidationError(f"profile {profile.name!r}: unknown feature {fid!r}")

    source = profile.weight_source
    if source == "auto":
        source = "matrix" if matrix is not None else "weights"
    if source == "matrix":
        if matrix is None:
            raise ValidationError("profile wants matrix-based weights but no matrix is loaded")
        weights = subset_weights(matrix, profile.included_features)
    else:
        if base_weights is None:
            raise ValidationError("profile wants rescaled weights but no base weight set is loaded")
        weights = base_weights.renormalized(profile.included_features)

    polarities = catalog.polarities()
    polarities.update(profile.polarity_overrides)
    return weights, polarities
