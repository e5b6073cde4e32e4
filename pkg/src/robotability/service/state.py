"""Immutable artifacts behind the recompute service.

Everything is loaded once at startup and never mutated; requests compute
pure functions of (state, request). Startup fails fast on missing or
mutually inconsistent artifacts. The only synchronized structure is the
bounded profile cache, guarded by a lock.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dataclasses import replace as _replace

from ..ahp import ContingencyMatrix, WeightSet, principal_weights, read_matrix, read_weights
from ..catalog import FeatureCatalog, load_catalog
from ..elevation import read_ascii_grid
from ..errors import DataError
from ..extraction import FeatureMatrix, extract_feature, load_feature_matrix
from ..graph import SegmentizedGraph, read_points_csv
from ..pipeline import compute_profile_response
from ..scoring import RobotProfile, ZoneAggregate
from ..serialize import point_percentiles, profile_token, to_json_bytes
from ..zones import Zone, assign_zones, read_zones_geojson


@dataclass
class ProfileResult:
    token: str
    body: bytes
    scores: np.ndarray
    coverage: np.ndarray
    percentiles: np.ndarray
    aggregates: list[ZoneAggregate]


class ProfileCache:
    """Bounded LRU keyed by profile content hash; linearizable via one lock."""

    def __init__(self, capacity: int = 32):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._entries: OrderedDict[str, ProfileResult] = OrderedDict()

    def get(self, token: str) -> ProfileResult | None:
        with self._lock:
            result = self._entries.get(token)
            if result is not None:
                self._entries.move_to_end(token)
            return result

    def put(self, result: ProfileResult) -> None:
        with self._lock:
            self._entries[result.token] = result
            self._entries.move_to_end(result.token)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)


@dataclass
class ServiceState:
    artifact_dir: Path
    catalog: FeatureCatalog
    seg: SegmentizedGraph
    matrix: FeatureMatrix
    zones: list[Zone]
    zone_idx: np.ndarray
    contingency: ContingencyMatrix | None
    base_weights: WeightSet
    missing_policy: str
    base: ProfileResult | None = field(repr=False, default=None)
    cache: ProfileCache = field(default_factory=ProfileCache)
    recompute_elevation: object = None  # ElevationGrid when slope re-extraction works

    @classmethod
    def load(cls, artifact_dir: str | Path, missing_policy: str = "renormalize",
             cache_size: int = 32) -> "ServiceState":
        root = Path(artifact_dir)
        if not root.is_dir():
            raise DataError(f"artifact directory {root} does not exist")

        def need(name: str) -> Path:
            p = root / name
            if not p.exists():
                raise DataError(f"missing artifact {name!r} in {root}")
            return p

        catalog = load_catalog(need("catalog.yaml"))
        seg = read_points_csv(need("points.csv"))
        matrix = load_feature_matrix(need("features"))
        zones = read_zones_geojson(need("zones.geojson"))

        if len(matrix.point_ids) != len(seg):
            raise DataError(
                f"feature matrix covers {len(matrix.point_ids)} points but the "
                f"point set has {len(seg)}"
            )
        active = set(catalog.active_ids())
        stray = [f for f in matrix.feature_ids if f not in active]
        if stray:
            raise DataError(f"feature matrix has columns not active in the catalog: {stray}")

        contingency = None
        base_weights = None
        if (root / "matrix.json").exists():
            contingency = read_matrix(root / "matrix.json")
            base_weights = principal_weights(
                contingency.restrict(matrix.feature_ids)
                if set(matrix.feature_ids) != set(contingency.features)
                else contingency
            )
        if (root / "weights.csv").exists() and base_weights is None:
            base_weights = read_weights(root / "weights.csv")
        if base_weights is None:
            raise DataError(f"no weight source in {root}: need matrix.json or weights.csv")
        missing_w = [f for f in matrix.feature_ids if f not in base_weights.weights]
        if missing_w:
            raise DataError(f"base weights lack feature(s): {missing_w}")
        if set(base_weights.weights) != set(matrix.feature_ids):
            base_weights = base_weights.renormalized(matrix.feature_ids)

        elevation = None
        if (root / "elevation.asc").exists():
            elevation = read_ascii_grid(root / "elevation.asc")

        state = cls(
            artifact_dir=root,
            catalog=catalog,
            seg=seg,
            matrix=matrix,
            zones=zones,
            zone_idx=assign_zones(seg.xy, zones),
            contingency=contingency,
            base_weights=base_weights,
            missing_policy=missing_policy,
            cache=ProfileCache(cache_size),
            recompute_elevation=elevation,
        )
        state.base = state._compute(state.base_profile())
        return state

    def base_profile(self) -> RobotProfile:
        return RobotProfile(
            name="base",
            included_features=tuple(self.matrix.feature_ids),
            weight_source="matrix" if self.contingency is not None else "weights",
        )

    def _recompute_hook(self, feature_id: str, params, seg):
        fdef = self.catalog.get(feature_id)
        if fdef.extractor != "knn_slope" or self.recompute_elevation is None:
            raise DataError(
                f"cannot re-extract {feature_id!r} here: only slope parameters can be "
                "recomputed, and only when the artifact directory has elevation.asc"
            )
        from ..extraction import FeatureSource

        merged = _replace(fdef, params={**fdef.params, **params})
        return extract_feature(seg, merged, FeatureSource(elevation=self.recompute_elevation))

    def _compute(self, profile: RobotProfile) -> ProfileResult:
        doc, weights, fieldr, aggregates = compute_profile_response(
            profile,
            self.catalog,
            self.matrix,
            self.seg.xy,
            self.zones,
            self.contingency,
            self.base_weights,
            self.missing_policy,
            seg=self.seg,
            recompute=self._recompute_hook,
            zone_idx=self.zone_idx,
        )
        return ProfileResult(
            token=profile_token(profile),
            body=to_json_bytes(doc),
            scores=fieldr.scores,
            coverage=fieldr.coverage,
            percentiles=point_percentiles(fieldr),
            aggregates=aggregates,
        )

    def profile_result(self, profile: RobotProfile) -> ProfileResult:
        token = profile_token(profile)
        cached = self.cache.get(token)
        if cached is not None:
            return cached
        result = self._compute(profile)
        self.cache.put(result)
        return result

    def result_for_token(self, token: str | None) -> ProfileResult | None:
        """Base result for no token; None for an unknown/evicted token."""
        if token is None or token == "":
            return self.base
        if token == self.base.token:
            return self.base
        return self.cache.get(token)
