"""Record service responses from the synthetic fixture city for UI tests.

Run from the repository root (needs the Python package installed):

    python frontend/scripts/make_fixtures.py

Writes JSON documents under frontend/test/fixtures/. Regenerate whenever
wire formats change; the vitest suite replays these documents instead of
driving a live server.
"""

import json
import shutil
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from robotability import pipeline
from robotability.service import create_app
from robotability.synth import SynthConfig, generate, write_city

OUT = Path(__file__).parent.parent / "test" / "fixtures"
SEED = 4242


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        city_dir = root / "city"
        run = root / "run"
        write_city(generate(SynthConfig(seed=SEED, blocks=6)), city_dir)

        # append one far-away zone with no sidewalks: renders as no-data
        zones_doc = json.loads((city_dir / "zones.geojson").read_text())
        zones_doc["features"].append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [[
                [2000.0, 2000.0], [2100.0, 2000.0], [2100.0, 2100.0],
                [2000.0, 2100.0], [2000.0, 2000.0],
            ]]},
            "properties": {"zone_id": "offgrid"},
        })
        (city_dir / "zones.geojson").write_text(json.dumps(zones_doc, indent=1))

        pipeline.stage_build_graph(city_dir, run / "graph")
        pipeline.stage_segmentize(run / "graph", 15.0, run / "points.csv")
        pipeline.stage_extract(run / "points.csv", city_dir / "catalog.yaml",
                               run / "features")
        pipeline.stage_derive_weights(city_dir / "votes.csv", run / "w",
                                      catalog_path=city_dir / "catalog.yaml")
        art = root / "artifacts"
        art.mkdir()
        shutil.copy(city_dir / "catalog.yaml", art / "catalog.yaml")
        shutil.copy(run / "points.csv", art / "points.csv")
        shutil.copytree(run / "features", art / "features")
        shutil.copy(run / "w" / "matrix.json", art / "matrix.json")
        shutil.copy(city_dir / "zones.geojson", art / "zones.geojson")
        shutil.copy(city_dir / "elevation.asc", art / "elevation.asc")

        client = TestClient(create_app(art))

        def dump(name: str, response):
            (OUT / name).write_bytes(response.content)
            print(f"wrote {name}")

        dump("catalog.json", client.get("/catalog"))
        dump("weights.json", client.get("/weights"))
        dump("zones_base.json", client.get("/zones"))

        catalog = client.get("/catalog").json()["features"]
        active = [f["id"] for f in catalog if not f["excluded"] and f["has_data"]]

        full = client.post("/profile", json={"name": "full",
                                             "included_features": active})
        dump("profile_full.json", full)

        excl = [f for f in active if f != "pedestrian_density"]
        excl_resp = client.post("/profile", json={"name": "excl",
                                                  "included_features": excl})
        dump("profile_excl.json", excl_resp)
        dump("zones_excl.json",
             client.get("/zones",
                        params={"profile": excl_resp.json()["profile_token"]}))

        # service-side ranking oracle for the shortlist parity check
        base_zones = client.get("/zones").json()
        from robotability.scoring import ZoneAggregate, rank_zones

        aggs = [
            ZoneAggregate(
                zone_id=f["properties"]["zone_id"],
                mean_score=f["properties"]["mean_score"],
                point_count=f["properties"]["point_count"],
                percentile_rank=f["properties"]["percentile_rank"],
            )
            for f in base_zones["features"]
        ]
        ranks = {}
        for band in (0.1, 0.25, 0.5):
            top, bottom = rank_zones(aggs, band)
            ranks[str(band)] = {
                "top": [a.zone_id for a in top],
                "bottom": [a.zone_id for a in bottom],
            }
        (OUT / "rank_bands.json").write_text(json.dumps(ranks, indent=1))
        print("wrote rank_bands.json")


if __name__ == "__main__":
    main()
