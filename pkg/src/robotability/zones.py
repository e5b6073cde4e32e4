"""Zone polygons and point-to-zone assignment.

Zones are simple polygons (outer ring plus optional holes). Membership is
even-odd with an explicit boundary rule: a point exactly on any ring edge
belongs to the zone. When zones overlap or share edges, a point goes to
the first matching zone in input order, which keeps assignment
deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Zone:
    zone_id: str
    rings: tuple[np.ndarray, ...]  # first ring is the outer boundary

    def __post_init__(self):
        if not self.rings:
            raise ValidationError(f"zone {self.zone_id!r} has no rings")
        for ring in self.rings:
            if ring.ndim != 2 or ring.shape[1] != 2 or len(ring) < 3:
                raise ValidationError(
                    f"zone {self.zone_id!r}: a ring needs at least 3 distinct vertices"
                )
            if not np.all(np.isfinite(ring)):
                raise ValidationError(f"zone {self.zone_id!r}: non-finite ring coordinate")


def _close_ring(coords: Sequence[Sequence[float]]) -> np.ndarray:
    ring = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(ring) >= 2 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    return ring


def covers(zone: Zone, points: np.ndarray) -> np.ndarray:
    """Boolean mask of points inside or on the boundary of the zone."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    boundary = np.zeros(len(points), dtype=bool)

    for ring in zone.rings:
        x1, y1 = ring[:, 0], ring[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        for k in range(len(ring)):
            ax, ay, bx, by = x1[k], y1[k], x2[k], y2[k]
            cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
            on_seg = (
                (cross == 0.0)
                & (px >= min(ax, bx)) & (px <= max(ax, bx))
                & (py >= min(ay, by)) & (py <= max(ay, by))
            )
            boundary |= on_seg
            # even-odd ray cast toward +x (horizontal edges never cross)
            with np.errstate(divide="ignore", invalid="ignore"):
                crosses = ((ay > py) != (by > py)) & (
                    px < (bx - ax) * (py - ay) / (by - ay) + ax
                )
            inside ^= crosses
    return inside | boundary


def assign_zones(points: np.ndarray, zones: Sequence[Zone]) -> np.ndarray:
    """Index of the first covering zone per point, -1 where none covers."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.full(len(points), -1, dtype=np.int64)
    unassigned = np.arange(len(points))
    for zi, zone in enumerate(zones):
        if len(unassigned) == 0:
            break
        hit = covers(zone, points[unassigned])
        out[unassigned[hit]] = zi
        unassigned = unassigned[~hit]
    return out


# ---------------------------------------------------------------------------
# GeoJSON


def read_zones_geojson(path: str | Path) -> list[Zone]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a FeatureCollection")
    zones = []
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ValidationError(f"{path}: feature {i} is not a Polygon")
        props = feat.get("properties") or {}
        zid = str(props.get("zone_id", f"z{i}"))
        rings = tuple(_close_ring(r) for r in geom.get("coordinates", []))
        zones.append(Zone(zone_id=zid, rings=rings))
    if not zones:
        raise ValidationError(f"{path}: no zones found")
    return zones


def zone_geometry(zone: Zone) -> dict:
    return {
        "type": "Polygon",
        "coordinates": [
            [[float(x), float(y)] for x, y in ring] + [[float(ring[0, 0]), float(ring[0, 1])]]
            for ring in zone.rings
        ],
    }


def write_zones_geojson(zones: Sequence[Zone], path: str | Path) -> None:
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": zone_geometry(z),
                "properties": {"zone_id": z.zone_id},
            }
            for z in zones
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
