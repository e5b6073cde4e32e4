"""Command-line entry points: thin wrappers over the pipeline stages.

A config file (YAML) can supply any option; explicit flags override it.
Exit codes: 0 success, 2 validation error, 3 data/extraction error,
4 numerical error.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import yaml

from .errors import RobotabilityError
from . import pipeline
from .serialize import sig9
from .synth import SynthCity, SynthConfig, generate, write_city


def _fail(exc: RobotabilityError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(exc.exit_code)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RobotabilityError as exc:
            _fail(exc)

    return wrapper


def config_option(fn):
    return click.option(
        "--config", type=click.Path(exists=True, path_type=Path), default=None,
        help="YAML config file; explicit flags override its values.",
    )(fn)


def merge_config(config: Path | None, **flags):
    """File values fill in flags the user left at None."""
    merged = dict(flags)
    if config is not None:
        doc = yaml.safe_load(config.read_text(encoding="utf-8")) or {}
        for key, value in doc.items():
            key = key.replace("-", "_")
            if merged.get(key) is None:
                merged[key] = value
    return merged


@click.group()
def main():
    """Robotability scoring engine."""


@main.command("derive-weights")
@config_option
@click.option("--votes", type=click.Path(path_type=Path), help="Vote CSV file.")
@click.option("--catalog", type=click.Path(path_type=Path), default=None,
              help="Catalog fixing the feature order (optional).")
@click.option("--out", type=click.Path(path_type=Path), help="Output directory.")
@click.option("--smoothing", type=float, default=None, show_default="1.0")
@click.option("--uncompared", type=click.Choice(["neutral", "error"]), default=None,
              show_default="neutral")
@handles_errors
def derive_weights(config, votes, catalog, out, smoothing, uncompared):
    """Votes -> weights, contingency matrix, transitivity report."""
    cfg = merge_config(config, votes=votes, catalog=catalog, out=out,
                       smoothing=smoothing, uncompared=uncompared)
    if not cfg.get("votes") or not cfg.get("out"):
        raise click.UsageError("--votes and --out are required")
    weights = pipeline.stage_derive_weights(
        Path(cfg["votes"]),
        Path(cfg["out"]),
        smoothing=cfg.get("smoothing") if cfg.get("smoothing") is not None else 1.0,
        uncompared=cfg.get("uncompared") or "neutral",
        catalog_path=Path(cfg["catalog"]) if cfg.get("catalog") else None,
    )
    click.echo("feature,weight")
    for fid, w in sorted(weights.weights.items(), key=lambda kv: -kv[1]):
        click.echo(f"{fid},{sig9(w)}")


@main.command("build-graph")
@config_option
@click.option("--graph", "graph_source", type=click.Path(path_type=Path),
              help="GeoJSON file or directory with nodes.csv/edges.csv.")
@click.option("--out", type=click.Path(path_type=Path), help="Output directory.")
@handles_errors
def build_graph_cmd(config, graph_source, out):
    """Validate a sidewalk graph and write its canonical form."""
    cfg = merge_config(config, graph=graph_source, out=out)
    if not cfg.get("graph") or not cfg.get("out"):
        raise click.UsageError("--graph and --out are required")
    graph = pipeline.stage_build_graph(Path(cfg["graph"]), Path(cfg["out"]))
    click.echo(f"nodes: {len(graph.node_ids)}  edges: {len(graph.edges)}")


@main.command("segmentize")
@config_option
@click.option("--graph", "graph_source", type=click.Path(path_type=Path))
@click.option("--threshold", type=float, default=None, show_default="15.0",
              help="Max arc spacing between computation points, meters.")
@click.option("--out", type=click.Path(path_type=Path), help="Points CSV to write.")
@handles_errors
def segmentize_cmd(config, graph_source, threshold, out):
    """Sample computation points along every edge."""
    cfg = merge_config(config, graph=graph_source, threshold=threshold, out=out)
    if not cfg.get("graph") or not cfg.get("out"):
        raise click.UsageError("--graph and --out are required")
    seg = pipeline.stage_segmentize(
        Path(cfg["graph"]),
        cfg.get("threshold") if cfg.get("threshold") is not None else 15.0,
        Path(cfg["out"]),
    )
    click.echo(f"points: {len(seg)}")


@main.command("extract")
@config_option
@click.option("--points", type=click.Path(path_type=Path))
@click.option("--catalog", type=click.Path(path_type=Path))
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Base directory for catalog source paths (default: catalog's).")
@click.option("--out", type=click.Path(path_type=Path), help="Feature matrix directory.")
@click.option("--workers", type=int, default=None, show_default="1")
@handles_errors
def extract_cmd(config, points, catalog, data_dir, out, workers):
    """Compute the normalized per-point feature matrix."""
    cfg = merge_config(config, points=points, catalog=catalog, data_dir=data_dir,
                       out=out, workers=workers)
    for key in ("points", "catalog", "out"):
        if not cfg.get(key):
            raise click.UsageError(f"--{key.replace('_', '-')} is required")
    matrix = pipeline.stage_extract(
        Path(cfg["points"]),
        Path(cfg["catalog"]),
        Path(cfg["out"]),
        data_dir=Path(cfg["data_dir"]) if cfg.get("data_dir") else None,
        workers=cfg.get("workers") or 1,
    )
    click.echo(f"matrix: {matrix.values.shape[0]} points x {matrix.values.shape[1]} features")


@main.command("score")
@config_option
@click.option("--points", type=click.Path(path_type=Path))
@click.option("--features", type=click.Path(path_type=Path), help="Feature matrix directory.")
@click.option("--catalog", type=click.Path(path_type=Path))
@click.option("--zones", type=click.Path(path_type=Path))
@click.option("--votes", type=click.Path(path_type=Path), default=None,
              help="Derive weights from this vote file.")
@click.option("--weights", "weights_spec", default=None,
              help="Weight file path or 'fixture:<name>'.")
@click.option("--profile", type=click.Path(path_type=Path), default=None)
@click.option("--missing-policy", type=click.Choice(["renormalize", "zero_fill", "propagate"]),
              default=None, show_default="renormalize")
@click.option("--smoothing", type=float, default=None, show_default="1.0")
@click.option("--uncompared", type=click.Choice(["neutral", "error"]), default=None)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Needed when a profile overrides extractor params.")
@click.option("--out", type=click.Path(path_type=Path))
@click.option("--workers", type=int, default=None, show_default="1")
@handles_errors
def score_cmd(config, points, features, catalog, zones, votes, weights_spec, profile,
              missing_policy, smoothing, uncompared, data_dir, out, workers):
    """Score every point, aggregate zones, export everything."""
    cfg = merge_config(
        config, points=points, features=features, catalog=catalog, zones=zones,
        votes=votes, weights=weights_spec, profile=profile,
        missing_policy=missing_policy, smoothing=smoothing, uncompared=uncompared,
        data_dir=data_dir, out=out, workers=workers,
    )
    for key in ("points", "features", "catalog", "zones", "out"):
        if not cfg.get(key):
            raise click.UsageError(f"--{key} is required")
    doc, field, _ = pipeline.stage_score(
        Path(cfg["points"]),
        Path(cfg["features"]),
        Path(cfg["catalog"]),
        Path(cfg["zones"]),
        Path(cfg["out"]),
        votes_path=Path(cfg["votes"]) if cfg.get("votes") else None,
        weights_spec=cfg.get("weights"),
        profile_path=Path(cfg["profile"]) if cfg.get("profile") else None,
        missing_policy=cfg.get("missing_policy") or "renormalize",
        smoothing=cfg.get("smoothing") if cfg.get("smoothing") is not None else 1.0,
        uncompared=cfg.get("uncompared") or "neutral",
        data_dir=Path(cfg["data_dir"]) if cfg.get("data_dir") else None,
        workers=cfg.get("workers") or 1,
    )
    click.echo(
        f"scored {doc['summary']['scored_points']} of {len(field.scores)} points; "
        f"graph score {doc['summary']['graph_score']}"
    )


@main.command("aggregate")
@config_option
@click.option("--points", type=click.Path(path_type=Path))
@click.option("--scores", type=click.Path(path_type=Path), help="scores.csv export.")
@click.option("--zones", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Scored-zones GeoJSON to write.")
@handles_errors
def aggregate_cmd(config, points, scores, zones, out):
    """Re-aggregate an existing score export over zones."""
    cfg = merge_config(config, points=points, scores=scores, zones=zones, out=out)
    for key in ("points", "scores", "zones", "out"):
        if not cfg.get(key):
            raise click.UsageError(f"--{key} is required")
    aggs = pipeline.stage_aggregate(
        Path(cfg["points"]), Path(cfg["scores"]), Path(cfg["zones"]), Path(cfg["out"])
    )
    with_data = sum(1 for a in aggs if a.mean_score is not None)
    click.echo(f"zones: {len(aggs)} ({with_data} with data)")


@main.command("rank")
@config_option
@click.option("--zones-scored", type=click.Path(path_type=Path),
              help="Scored-zones GeoJSON (from score/aggregate).")
@click.option("--band", type=float, default=None, show_default="0.1",
              help="Percentile band fraction, e.g. 0.1 for top/bottom 10%.")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@handles_errors
def rank_cmd(config, zones_scored, band, out):
    """Report the top and bottom zone bands."""
    cfg = merge_config(config, zones_scored=zones_scored, band=band, out=out)
    if not cfg.get("zones_scored"):
        raise click.UsageError("--zones-scored is required")
    result, top, bottom = pipeline.stage_rank(
        Path(cfg["zones_scored"]),
        cfg.get("band") if cfg.get("band") is not None else 0.1,
        Path(cfg["out"]) if cfg.get("out") else None,
    )
    click.echo("top:")
    for a in top:
        click.echo(f"  {a.zone_id}  mean={sig9(a.mean_score)}  points={a.point_count}")
    click.echo("bottom:")
    for a in bottom:
        click.echo(f"  {a.zone_id}  mean={sig9(a.mean_score)}  points={a.point_count}")
    if result["max_min_zone_ratio"] is not None:
        click.echo(f"max/min zone ratio: {result['max_min_zone_ratio']}")


@main.command("synth-city")
@config_option
@click.option("--seed", type=int, default=None, show_default="42")
@click.option("--blocks", type=int, default=None, show_default="10")
@click.option("--block-m", type=float, default=None, show_default="100.0")
@click.option("--zone-blocks", type=int, default=None, show_default="2")
@click.option("--votes", "n_votes", type=int, default=None, show_default="6000")
@click.option("--out", type=click.Path(path_type=Path))
@handles_errors
def synth_city_cmd(config, seed, blocks, block_m, zone_blocks, n_votes, out):
    """Generate a synthetic city with planted spatial structure."""
    cfg = merge_config(config, seed=seed, blocks=blocks, block_m=block_m,
                       zone_blocks=zone_blocks, votes=n_votes, out=out)
    if not cfg.get("out"):
        raise click.UsageError("--out is required")
    synth_cfg = SynthConfig(
        seed=cfg.get("seed") if cfg.get("seed") is not None else 42,
        blocks=cfg.get("blocks") if cfg.get("blocks") is not None else 10,
        block_m=cfg.get("block_m") if cfg.get("block_m") is not None else 100.0,
        zone_blocks=cfg.get("zone_blocks") if cfg.get("zone_blocks") is not None else 2,
        votes=cfg.get("votes") if cfg.get("votes") is not None else 6000,
    )
    city: SynthCity = generate(synth_cfg)
    write_city(city, Path(cfg["out"]))
    click.echo(
        f"city: {len(city.graph.edges)} edges, {len(city.zones)} zones, "
        f"downtown zones {city.downtown_zone_ids}"
    )


@main.command("serve")
@config_option
@click.option("--artifacts", type=click.Path(path_type=Path), default=None,
              help="Artifact directory (or ROBOTABILITY_ARTIFACT_DIR).")
@click.option("--addr", default=None, help="host:port (or ROBOTABILITY_ADDR).")
@click.option("--missing-policy", type=click.Choice(["renormalize", "zero_fill", "propagate"]),
              default=None)
@click.option("--cache-size", type=int, default=None, show_default="32")
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="Static frontend bundle to mount at /ui.")
@handles_errors
def serve_cmd(config, artifacts, addr, missing_policy, cache_size, ui_dir):
    """Run the recompute service."""
    import os

    import uvicorn

    from .service import create_app

    cfg = merge_config(config, artifacts=artifacts, addr=addr,
                       missing_policy=missing_policy, cache_size=cache_size,
                       ui_dir=ui_dir)
    addr = cfg.get("addr") or os.environ.get("ROBOTABILITY_ADDR", "127.0.0.1:8000")
    host, _, port = addr.rpartition(":")
    app = create_app(
        cfg.get("artifacts"),
        missing_policy=cfg.get("missing_policy") or "renormalize",
        cache_size=cfg.get("cache_size") or 32,
        ui_dir=cfg.get("ui_dir"),
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
