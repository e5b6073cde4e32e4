"""Feature catalog: the registry of scoring indicators.

A catalog lists every indicator the engine knows about, in a stable order.
Each indicator carries a polarity (+1 adds to the score, -1 subtracts), an
extractor kind naming how its raw per-point value is computed, extractor
parameters, and an optional data-source path. Indicators without usable
data stay registered but excluded, with a reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ValidationError

#: Extractor kinds understood by the extraction stage.
EXTRACTOR_KINDS = (
    "weighted_density",
    "observation_mean",
    "nearest_facility",
    "threshold_binary",
    "layer_presence",
    "knn_slope",
    "uniform",
)


@dataclass(frozen=True)
class FeatureDef:
    """One scoring indicator: identity, polarity and extraction recipe."""

    id: str
    display_name: str
    polarity: int
    extractor: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    source: str | None = None

    def __post_init__(self):
        if self.polarity not in (+1, -1):
            raise ValidationError(
                f"feature {self.id!r}: polarity must be +1 or -1, got {self.polarity!r}"
            )
        if self.extractor is not None and self.extractor not in EXTRACTOR_KINDS:
            raise ValidationError(
                f"feature {self.id!r}: unknown extractor kind {self.extractor!r}"
            )


@dataclass(frozen=True)
class FeatureCatalog:
    """Ordered feature list plus the excluded subset with reasons."""

    features: tuple[FeatureDef, ...]
    excluded: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for f in self.features:
            if f.id in seen:
                raise ValidationError(f"duplicate feature id {f.id!r} in catalog")
            seen.add(f.id)
        for fid in self.excluded:
            if fid not in seen:
                raise ValidationError(f"excluded id {fid!r} is not in the catalog")
        for f in self.active():
            if f.extractor is None:
                raise ValidationError(
                    f"active feature {f.id!r} has no registered extractor kind"
                )

    def ids(self) -> list[str]:
        return [f.id for f in self.features]

    def active(self) -> list[FeatureDef]:
        return [f for f in self.features if f.id not in self.excluded]

    def active_ids(self) -> list[str]:
        return [f.id for f in self.active()]

    def get(self, feature_id: str) -> FeatureDef:
        for f in self.features:
            if f.id == feature_id:
                return f
        raise ValidationError(f"unknown feature id {feature_id!r}")

    def polarities(self) -> dict[str, int]:
        return {f.id: f.polarity for f in self.features}


def load_catalog(path: str | Path) -> FeatureCatalog:
    """Read a catalog from its YAML configuration file."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ValidationError(f"catalog {path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "features" not in doc:
        raise ValidationError(f"catalog {path}: expected a mapping with a 'features' list")

    features = []
    for entry in doc["features"]:
        try:
            features.append(
                FeatureDef(
                    id=str(entry["id"]),
                    display_name=str(entry.get("display_name", entry["id"])),
                    polarity=int(entry["polarity"]),
                    extractor=entry.get("extractor"),
                    params=dict(entry.get("params") or {}),
                    source=entry.get("source"),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"catalog {path}: feature entry missing {exc}") from exc

    excluded = {}
    for entry in doc.get("excluded") or []:
        if isinstance(entry, str):
            excluded[entry] = "excluded"
        else:
            excluded[str(entry["id"])] = str(entry.get("reason", "excluded"))

    return FeatureCatalog(features=tuple(features), excluded=excluded)


def save_catalog(catalog: FeatureCatalog, path: str | Path) -> None:
    """Write a catalog back to YAML (round-trips through load_catalog)."""
    doc: dict[str, Any] = {
        "features": [
            {
                "id": f.id,
                "display_name": f.display_name,
                "polarity": f.polarity,
                **({"extractor": f.extractor} if f.extractor else {}),
                **({"params": dict(f.params)} if f.params else {}),
                **({"source": f.source} if f.source else {}),
            }
            for f in catalog.features
        ],
    }
    if catalog.excluded:
        doc["excluded"] = [
            {"id": fid, "reason": reason} for fid, reason in catalog.excluded.items()
        ]
    Path(path).write_text(
        yaml.safe_dump(doc, sort_keys=False, allow_unicode=True), encoding="utf-8"
    )
