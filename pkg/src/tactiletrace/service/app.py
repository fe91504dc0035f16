"""HTTP service exposing the codec, pipeline, simulator and tracer.

All endpoints are stateless and deterministic given the request (every
random draw is seeded from the request's sensor model), so the service can
be scaled or replayed freely.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__
from ..frame_codec import (
    BadChecksum,
    BadMagic,
    BadVersion,
    Frame,
    FrameLength,
    TruncatedLog,
    complement,
    decode,
    encode,
    uncomplement,
    FRAME_SIZE,
)
from ..hexgrid import AddressRange, ZeroDimension, build_grid
from ..pipeline import features_to_dict, process
from ..scenes import BUILTIN_SCENES, SceneFormatError, load_scene, parse_scene, scene_text
from ..simulator import Pose2D, Scene, material_sweep, render, scene_at_pose, simulate_stream
from ..tracer import BadTemplate, trace, result_to_dicts, events_to_dicts
from ..viz import ascii_frame, svg_frame, svg_trace
from . import schemas

DATA_ERRORS = (
    SceneFormatError,
    TruncatedLog,
    FrameLength,
    BadMagic,
    BadVersion,
    BadChecksum,
    AddressRange,
    ZeroDimension,
    BadTemplate,
    ValueError,
)


def _scene_from(ref) -> Scene:
    if ref.scene_name is not None:
        return load_scene(ref.scene_name)
    return parse_scene(ref.scene_text, source="<inline>")


def _resolve_setpoint(request: schemas.TraceRequest, template, grid, model, params) -> float:
    if request.controller.setpoint_y is not None:
        return request.controller.setpoint_y
    start = render(scene_at_pose(template, Pose2D()), grid, model)
    feats = process(start, grid, params)
    if feats.centroid is None:
        raise BadTemplate("start frame sees nothing traceable")
    return feats.centroid[1]


def create_app() -> FastAPI:
    app = FastAPI(title="tactiletrace", version=__version__)

    async def _data_error(_request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    for exc_type in DATA_ERRORS:
        app.add_exception_handler(exc_type, _data_error)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/scenes")
    def list_scenes() -> dict:
        return {"builtin": list(BUILTIN_SCENES)}

    @app.get("/scenes/{name}")
    def get_scene(name: str) -> PlainTextResponse:
        return PlainTextResponse(scene_text(name))

    @app.post("/simulate")
    def simulate(request: schemas.SimulateRequest) -> Response:
        """Render a frame log (.tfl bytes) of a static scene at 55 Hz."""
        scene = _scene_from(request)
        grid = build_grid(request.grid.to_spec())
        frames = simulate_stream(scene, grid, request.sensor.to_model(), request.frames)
        payload = b"".join(encode(uncomplement(f, grid.spec)) for f in frames)
        return Response(content=payload, media_type="application/octet-stream")

    @app.post("/process")
    async def process_log(
        request: Request,
        min_gap: int = Query(default=8, ge=1),
        max_segments: int = Query(default=2, ge=1, le=2),
        corner_residual_ratio: float = Query(default=0.5, gt=0),
        min_corner_angle_deg: float = Query(default=20.0, ge=0),
        band_side_tol_mm: float = Query(default=1.0, ge=0),
        band_min_side_markers: int = Query(default=2, ge=1),
    ) -> PlainTextResponse:
        """Run the pipeline over a raw .tfl body; one JSONL line per frame."""
        body = await request.body()
        if len(body) % FRAME_SIZE:
            raise TruncatedLog(
                f"{len(body)} octets is not a multiple of the {FRAME_SIZE}-octet frame size"
            )
        params = schemas.PipelineParamsModel(
            min_gap=min_gap,
            max_segments=max_segments,
            corner_residual_ratio=corner_residual_ratio,
            min_corner_angle_deg=min_corner_angle_deg,
            band_side_tol_mm=band_side_tol_mm,
            band_min_side_markers=band_min_side_markers,
        ).to_params()
        lines = []
        for i in range(0, len(body), FRAME_SIZE):
            frame = complement(decode(body[i : i + FRAME_SIZE]))
            feats = process(frame, params=params)
            row = features_to_dict(feats, params)
            row["seq"] = frame.seq
            row["timestamp_ms"] = frame.timestamp_ms
            lines.append(json.dumps(row))
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""), media_type="application/x-ndjson")

    @app.post("/process/frame", response_model=schemas.FeaturesModel)
    def process_frame(request: schemas.ProcessFrameRequest) -> schemas.FeaturesModel:
        grid = build_grid(request.grid.to_spec())
        params = request.params.to_params()
        feats = process(Frame(values=tuple(request.values)), grid, params)
        return schemas.FeaturesModel.model_validate(features_to_dict(feats, params))

    @app.post("/trace", response_model=schemas.TraceResponse)
    def run_trace(request: schemas.TraceRequest) -> schemas.TraceResponse:
        template = _scene_from(request)
        grid = build_grid(request.grid.to_spec())
        model = request.sensor.to_model()
        params = request.params.to_params()
        setpoint = _resolve_setpoint(request, template, grid, model, params)
        config = request.controller.to_config(setpoint)
        result = trace(request.task, template, config, grid, model, params)
        steps = [
            schemas.TraceStepModel.model_validate(row)
            for row in result_to_dicts(result, params)
        ]
        events = [schemas.TraceEventModel.model_validate(row) for row in events_to_dicts(result)]
        svg = svg_trace(result, template, grid) if request.include_svg else None
        return schemas.TraceResponse(steps=steps, events=events, setpoint_y=setpoint, svg=svg)

    @app.post("/render")
    def render_view(request: schemas.RenderRequest) -> Response:
        grid = build_grid(request.grid.to_spec())
        params = request.params.to_params()
        if request.values is not None:
            frame = Frame(values=tuple(request.values))
        else:
            ref = schemas.SceneRef(scene_name=request.scene_name, scene_text=request.scene_text)
            frame = render(_scene_from(ref), grid, request.sensor.to_model())
        feats = process(frame, grid, params)
        if request.format == "ascii":
            return PlainTextResponse(ascii_frame(frame, grid, feats))
        return Response(content=svg_frame(frame, grid, feats), media_type="image/svg+xml")

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(request: schemas.SweepRequest) -> schemas.SweepResponse:
        materials = None
        if request.materials is not None:
            materials = [m.to_material() for m in request.materials]
        grid = build_grid(request.grid.to_spec())
        rows = material_sweep(materials, grid, request.sensor.to_model())
        return schemas.SweepResponse(
            materials=[schemas.SweepEntry(name=name, mean_value=mean) for name, mean in rows]
        )

    return app


app = create_app()
