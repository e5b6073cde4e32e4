"""Sidewalk network representation and segmentization.

Edges are polylines in a planar projected coordinate system in meters (no
geodetic math happens here; reproject before ingesting). Segmentizing an
edge of length L at threshold T places ceil(L/T)+1 evenly spaced points
along the arc, endpoints included; endpoints shared between incident edges
are deduplicated by node id so corners are scored once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .spatial import SpatialIndex

LENGTH_ATOL = 1e-6


def polyline_length(coords: np.ndarray) -> float:
    """Arc length of a polyline given as an (k, 2) array."""
    if len(coords) < 2:
        return 0.0
    return float(np.sum(np.hypot(np.diff(coords[:, 0]), np.diff(coords[:, 1]))))


@dataclass(frozen=True)
class Edge:
    edge_id: str
    endpoint_a: str
    endpoint_b: str
    polyline: np.ndarray  # (k, 2), first/last rows at the endpoints
    length: float


@dataclass(frozen=True)
class SidewalkGraph:
    node_ids: tuple[str, ...]
    node_xy: np.ndarray  # (n, 2)
    edges: tuple[Edge, ...]

    def node_index(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.node_ids)}


def build_graph(
    nodes: Sequence[tuple[str, float, float]],
    edges: Sequence[tuple[str, str, str, Sequence[tuple[float, float]] | None]],
) -> SidewalkGraph:
    """Validate raw node/edge records into a SidewalkGraph.

    Each edge is (edge_id, endpoint_a, endpoint_b, polyline); a None or
    empty polyline means the straight segment between its endpoints. Edge
    lengths are always recomputed from the polyline.
    """
    node_ids = []
    xy = []
    seen = set()
    for nid, x, y in nodes:
        nid = str(nid)
        if nid in seen:
            raise ValidationError(f"duplicate node id {nid!r}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"node {nid!r} has non-finite coordinate ({x}, {y})")
        seen.add(nid)
        node_ids.append(nid)
        xy.append((float(x), float(y)))
    node_xy = np.array(xy, dtype=float).reshape(len(node_ids), 2)
    pos = {nid: i for i, nid in enumerate(node_ids)}

    out_edges = []
    seen_edges = set()
    for eid, a, b, polyline in edges:
        eid, a, b = str(eid), str(a), str(b)
        if eid in seen_edges:
            raise ValidationError(f"duplicate edge id {eid!r}")
        seen_edges.add(eid)
        for endpoint in (a, b):
            if endpoint not in pos:
                raise ValidationError(f"edge {eid!r} references missing node {endpoint!r}")
        if polyline is None or len(polyline) == 0:
            coords = np.array([node_xy[pos[a]], node_xy[pos[b]]], dtype=float)
        else:
            coords = np.asarray(polyline, dtype=float).reshape(-1, 2)
            if not np.all(np.isfinite(coords)):
                raise ValidationError(f"edge {eid!r} has a non-finite polyline coordinate")
            for endpoint, row in ((a, coords[0]), (b, coords[-1])):
                if not np.allclose(row, node_xy[pos[endpoint]], atol=LENGTH_ATOL):
                    raise ValidationError(
                        f"edge {eid!r}: polyline does not start/end at node {endpoint!r}"
                    )
        length = polyline_length(coords)
        if length <= 0:
            raise ValidationError(f"edge {eid!r} has zero length")
        out_edges.append(Edge(eid, a, b, coords, length))

    return SidewalkGraph(node_ids=tuple(node_ids), node_xy=node_xy, edges=tuple(out_edges))


@dataclass
class SegmentizedGraph:
    """Computation points sampled along every edge, with a spatial index."""

    xy: np.ndarray  # (n, 2); row index == point_id
    source_edge: np.ndarray  # object array of edge ids
    offsets: np.ndarray  # arc offset in meters along the source edge
    threshold: float
    node_points: dict[str, int] = field(default_factory=dict)  # node id -> point_id
    _index: SpatialIndex | None = None

    def __len__(self) -> int:
        return len(self.xy)

    @property
    def point_ids(self) -> np.ndarray:
        return np.arange(len(self.xy), dtype=np.int64)

    @property
    def index(self) -> SpatialIndex:
        if self._index is None:
            self._index = SpatialIndex(self.xy)
        return self._index


def _interpolate_along(coords: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Points at the given arc offsets along a polyline."""
    seg = np.hypot(np.diff(coords[:, 0]), np.diff(coords[:, 1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    x = np.interp(offsets, cum, coords[:, 0])
    y = np.interp(offsets, cum, coords[:, 1])
    return np.column_stack([x, y])


def segmentize(graph: SidewalkGraph, threshold: float) -> SegmentizedGraph:
    """Sample evenly spaced points along every edge at max arc gap `threshold`."""
    if threshold <= 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")

    node_points: dict[str, int] = {}
    xs: list[np.ndarray] = []
    edge_ids: list[np.ndarray] = []
    offs: list[np.ndarray] = []
    next_id = 0

    # Node endpoints first so they get one shared point each, in node order.
    first_edge: dict[str, Edge] = {}
    for e in graph.edges:
        first_edge.setdefault(e.endpoint_a, e)
        first_edge.setdefault(e.endpoint_b, e)
    idx = graph.node_index()
    for nid in graph.node_ids:
        if nid not in first_edge:
            continue  # isolated node: not a computation point
        e = first_edge[nid]
        node_points[nid] = next_id
        next_id += 1
        xs.append(graph.node_xy[idx[nid]].reshape(1, 2))
        edge_ids.append(np.array([e.edge_id], dtype=object))
        offs.append(np.array([0.0 if e.endpoint_a == nid else e.length]))

    # Interior points per edge, in edge order.
    for e in graph.edges:
        k = math.ceil(e.length / threshold)
        if k < 2:
            continue
        interior = (e.length / k) * np.arange(1, k)
        pts = _interpolate_along(e.polyline, interior)
        xs.append(pts)
        edge_ids.append(np.full(len(pts), e.edge_id, dtype=object))
        offs.append(interior)
        next_id += len(pts)

    if next_id == 0:
        raise ValidationError("graph has no edges to segmentize")
    return SegmentizedGraph(
        xy=np.vstack(xs),
        source_edge=np.concatenate(edge_ids),
        offsets=np.concatenate(offs),
        threshold=float(threshold),
        node_points=node_points,
    )


def edge_point_count(length: float, threshold: float) -> int:
    """Points on one edge before endpoint dedup: ceil(L/T) + 1."""
    return math.ceil(length / threshold) + 1


# ---------------------------------------------------------------------------
# File formats


def read_nodes_csv(path: str | Path) -> list[tuple[str, float, float]]:
    rows = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or [c.strip() for c in lines[0].split(",")] != ["node_id", "x", "y"]:
        raise ValidationError(f"{path}: expected header 'node_id,x,y'")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 fields")
        rows.append((parts[0].strip(), float(parts[1]), float(parts[2])))
    return rows


def read_edges_csv(
    path: str | Path,
) -> list[tuple[str, str, str, list[tuple[float, float]] | None]]:
    """Edges as 'edge_id,node_a,node_b,polyline'; polyline is 'x y;x y;...' or empty."""
    rows = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or [c.strip() for c in lines[0].split(",")] != [
        "edge_id", "node_a", "node_b", "polyline",
    ]:
        raise ValidationError(f"{path}: expected header 'edge_id,node_a,node_b,polyline'")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 fields")
        poly = None
        if parts[3].strip():
            poly = []
            for pair in parts[3].split(";"):
                xy = pair.split()
                if len(xy) != 2:
                    raise ValidationError(f"{path}:{lineno}: bad polyline vertex {pair!r}")
                poly.append((float(xy[0]), float(xy[1])))
        rows.append((parts[0].strip(), parts[1].strip(), parts[2].strip(), poly))
    return rows


def write_nodes_csv(graph: SidewalkGraph, path: str | Path) -> None:
    lines = ["node_id,x,y"]
    for nid, (x, y) in zip(graph.node_ids, graph.node_xy):
        lines.append(f"{nid},{float(x)!r},{float(y)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_edges_csv(graph: SidewalkGraph, path: str | Path) -> None:
    lines = ["edge_id,node_a,node_b,polyline"]
    for e in graph.edges:
        poly = ";".join(f"{float(x)!r} {float(y)!r}" for x, y in e.polyline)
        lines.append(f"{e.edge_id},{e.endpoint_a},{e.endpoint_b},{poly}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph_geojson(path: str | Path) -> SidewalkGraph:
    """Graph from a FeatureCollection of LineString features.

    Nodes are synthesized from distinct endpoint coordinates when the
    features carry no node ids.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a FeatureCollection")
    nodes: dict[tuple[float, float], str] = {}
    node_rows: list[tuple[str, float, float]] = []
    edge_rows = []

    def node_for(coord: Sequence[float]) -> str:
        key = (float(coord[0]), float(coord[1]))
        if key not in nodes:
            nid = f"n{len(nodes)}"
            nodes[key] = nid
            node_rows.append((nid, key[0], key[1]))
        return nodes[key]

    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "LineString":
            raise ValidationError(f"{path}: feature {i} is not a LineString")
        coords = geom.get("coordinates") or []
        if len(coords) < 2:
            raise ValidationError(f"{path}: feature {i} has fewer than 2 vertices")
        props = feat.get("properties") or {}
        eid = str(props.get("edge_id", f"e{i}"))
        a = node_for(coords[0])
        b = node_for(coords[-1])
        edge_rows.append((eid, a, b, [(float(x), float(y)) for x, y in coords]))

    return build_graph(node_rows, edge_rows)


def load_graph(path: str | Path) -> SidewalkGraph:
    """Load a graph from a GeoJSON file or a directory of nodes/edges CSVs."""
    path = Path(path)
    if path.is_dir():
        return build_graph(
            read_nodes_csv(path / "nodes.csv"), read_edges_csv(path / "edges.csv")
        )
    return read_graph_geojson(path)


def write_points_csv(seg: SegmentizedGraph, path: str | Path) -> None:
    lines = ["point_id,x,y,edge_id,offset"]
    for pid in range(len(seg)):
        x, y = seg.xy[pid]
        lines.append(
            f"{pid},{float(x)!r},{float(y)!r},{seg.source_edge[pid]},"
            f"{float(seg.offsets[pid])!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_points_csv(path: str | Path, threshold: float = 0.0) -> SegmentizedGraph:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or [c.strip() for c in lines[0].split(",")] != [
        "point_id", "x", "y", "edge_id", "offset",
    ]:
        raise ValidationError(f"{path}: expected header 'point_id,x,y,edge_id,offset'")
    xy = []
    edge_ids = []
    offsets = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValidationError(f"{path}:{lineno}: expected 5 fields")
        if int(parts[0]) != len(xy):
            raise ValidationError(f"{path}:{lineno}: point ids must be consecutive from 0")
        xy.append((float(parts[1]), float(parts[2])))
        edge_ids.append(parts[3])
        offsets.append(float(parts[4]))
    return SegmentizedGraph(
        xy=np.array(xy, dtype=float),
        source_edge=np.array(edge_ids, dtype=object),
        offsets=np.array(offsets, dtype=float),
        threshold=float(threshold),
    )
