"""HTTP facade over precomputed scoring artifacts.

Stateless with respect to requests: every response is a pure function of
the loaded artifacts and the request. Profile recomputations are cached by
content hash (bounded LRU) so the what-if loop can page score tiles for
the active profile without recomputing.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import ValidationError as PydanticValidationError

from ..errors import DataError, ValidationError
from ..pipeline import profile_from_doc
from ..serialize import sig9, to_json_bytes, weights_doc, zone_aggregates_geojson
from .schemas import ProfileRequest
from .state import ServiceState

DEFAULT_PAGE_SIZE = 1000
MAX_PAGE_SIZE = 10_000


def create_app(artifact_dir: str | Path | None = None, missing_policy: str = "renormalize",
               cache_size: int = 32, ui_dir: str | Path | None = None) -> FastAPI:
    if artifact_dir is None:
        artifact_dir = os.environ.get("ROBOTABILITY_ARTIFACT_DIR")
    if artifact_dir is None:
        raise DataError(
            "no artifact directory: pass one or set ROBOTABILITY_ARTIFACT_DIR"
        )
    state = ServiceState.load(artifact_dir, missing_policy=missing_policy,
                              cache_size=cache_size)
    app = FastAPI(title="robotability", version="0.1.0")
    app.state.engine = state

    def json_bytes(payload: bytes) -> Response:
        return Response(content=payload, media_type="application/json")

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "points": int(len(state.seg)),
            "features": len(state.matrix.feature_ids),
            "zones": len(state.zones),
        }

    @app.get("/catalog")
    def get_catalog():
        entries = []
        for f in state.catalog.features:
            entries.append(
                {
                    "id": f.id,
                    "display_name": f.display_name,
                    "polarity": f.polarity,
                    "extractor": f.extractor,
                    "excluded": f.id in state.catalog.excluded,
                    "exclusion_reason": state.catalog.excluded.get(f.id),
                    "has_data": f.id in state.matrix.feature_ids,
                }
            )
        return {"features": entries}

    @app.get("/weights")
    def get_weights():
        return json_bytes(to_json_bytes(weights_doc(state.base_weights)))

    @app.post("/profile")
    async def post_profile(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"errors": [{"field": "", "message": "invalid JSON body"}]},
                                status_code=400)
        try:
            parsed = ProfileRequest.model_validate(body)
        except PydanticValidationError as exc:
            errors = [
                {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
                for e in exc.errors()
            ]
            return JSONResponse({"errors": errors}, status_code=400)
        try:
            profile = profile_from_doc(parsed.model_dump())
            result = state.profile_result(profile)
        except ValidationError as exc:
            return JSONResponse(
                {"errors": [{"field": "included_features", "message": str(exc)}]},
                status_code=400,
            )
        except DataError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        return json_bytes(result.body)

    @app.get("/zones")
    def get_zones(profile: str | None = Query(default=None)):
        result = state.result_for_token(profile)
        if result is None:
            return JSONResponse({"detail": f"unknown profile token {profile!r}"},
                                status_code=404)
        return json_bytes(to_json_bytes(zone_aggregates_geojson(result.aggregates,
                                                                state.zones)))

    @app.get("/scores")
    def get_scores(
        bbox: str = Query(...),
        profile: str | None = Query(default=None),
        cursor: str | None = Query(default=None),
        limit: int = Query(default=DEFAULT_PAGE_SIZE, ge=1, le=MAX_PAGE_SIZE),
    ):
        parts = bbox.split(",")
        if len(parts) != 4:
            return JSONResponse(
                {"detail": "bbox must be 'min_x,min_y,max_x,max_y'"}, status_code=400
            )
        try:
            min_x, min_y, max_x, max_y = (float(p) for p in parts)
        except ValueError:
            return JSONResponse({"detail": "bbox values must be numbers"}, status_code=400)
        if not (min_x < max_x and min_y < max_y):
            return JSONResponse(
                {"detail": "bbox must satisfy min < max on both axes"}, status_code=400
            )
        result = state.result_for_token(profile)
        if result is None:
            return JSONResponse({"detail": f"unknown profile token {profile!r}"},
                                status_code=404)
        try:
            start = int(cursor) if cursor else 0
            if start < 0:
                raise ValueError
        except ValueError:
            return JSONResponse({"detail": f"bad cursor {cursor!r}"}, status_code=400)

        xy = state.seg.xy
        mask = (
            (xy[:, 0] >= min_x) & (xy[:, 0] <= max_x)
            & (xy[:, 1] >= min_y) & (xy[:, 1] <= max_y)
        )
        rows = np.nonzero(mask)[0]  # ascending point_id
        page = rows[start:start + limit]
        features = []
        for row in page:
            score = result.scores[row]
            pct = result.percentiles[row]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        "coordinates": [sig9(xy[row, 0]), sig9(xy[row, 1])],
                    },
                    "properties": {
                        "point_id": int(row),
                        "score": sig9(score) if not np.isnan(score) else None,
                        "coverage": sig9(result.coverage[row]),
                        "percentile": sig9(pct) if not np.isnan(pct) else None,
                    },
                }
            )
        doc = {"type": "FeatureCollection", "features": features}
        next_start = start + limit
        if next_start < len(rows):
            doc["next_cursor"] = str(next_start)
        return json_bytes(to_json_bytes(doc))

    if ui_dir is None:
        ui_dir = os.environ.get("ROBOTABILITY_UI_DIR")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
