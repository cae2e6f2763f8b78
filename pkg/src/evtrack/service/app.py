"""FastAPI service wrapping the pipeline: run, synth, score, calibrate,
and a direct classification endpoint.

Requests reference files on the service host's filesystem; every operation
is deterministic given its inputs, and independent requests may run
concurrently (each builds its own pipeline state).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..calibration import CalibrationSpec, calibrate_th_gains
from ..config import load_config
from ..errors import EvtrackError, ModelShapeMismatch
from ..events import (SensorGeometry, generate_linear_motion, parse_ground_truth,
                      write_events, write_ground_truth)
from ..isp import ClassifierInput, InputKind
from ..metrics import score_tracking
from ..npu.model import default_model
from ..npu.program import classify
from ..pipeline import report_metrics, run_pipeline
from ..tracker import parse_records
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="evtrack service", version=__version__)

    @app.exception_handler(EvtrackError)
    async def domain_error(_: Request, exc: EvtrackError) -> JSONResponse:
        return JSONResponse(status_code=400, content=_error_body(exc))

    @app.exception_handler(FileNotFoundError)
    async def missing_file(_: Request, exc: FileNotFoundError) -> JSONResponse:
        return JSONResponse(status_code=400, content=_error_body(exc))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse()

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest) -> schemas.RunResponse:
        config = load_config(req.config_path)
        if req.gating is not None:
            config.gating = req.gating
        if req.seed is not None:
            config.seed = req.seed
        if req.output_dir is not None:
            config.output_dir = req.output_dir
        report = run_pipeline(config)
        files = report_metrics(report, config.output_dir)
        return schemas.RunResponse(report=report.to_dict(),
                                   output_dir=config.output_dir,
                                   files=[str(f) for f in files])

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        geometry = SensorGeometry(req.width, req.height)
        events, truth = generate_linear_motion(
            geometry, object_size=req.object_size, speed=req.speed,
            duration=req.duration, event_rate=req.event_rate, seed=req.seed,
            direction=(req.direction_x, req.direction_y), noise_rate=req.noise_rate)
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        events_path = out / "events.csv"
        truth_path = out / "truth.csv"
        write_events(events, events_path)
        write_ground_truth(truth, truth_path)
        return schemas.SynthResponse(events_path=str(events_path),
                                     truth_path=str(truth_path),
                                     n_events=len(events), n_boxes=len(truth))

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(req: schemas.ScoreRequest) -> schemas.ScoreResponse:
        records = parse_records(req.results_path)
        truth = parse_ground_truth(req.truth_path)
        result = score_tracking(records, truth, iou_threshold=req.iou_threshold)
        return schemas.ScoreResponse(accuracy=result.accuracy, mean_iou=result.mean_iou,
                                     n_samples=result.n_samples,
                                     iou_threshold=result.iou_threshold)

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        spec = CalibrationSpec(
            sizes=tuple(req.sizes), speeds=tuple(req.speeds),
            gain_size_grid=tuple(req.gain_size_grid),
            gain_speed_grid=tuple(req.gain_speed_grid),
            duration=req.duration, event_rate=req.event_rate,
            noise_rate=req.noise_rate, seed=req.seed,
            geometry=SensorGeometry(req.width, req.height))
        result = calibrate_th_gains(spec)
        return schemas.CalibrateResponse(
            th_gain_size=result.th_gain_size, th_gain_speed=result.th_gain_speed,
            mean_iou=result.mean_iou, baseline_mean_iou=result.baseline_mean_iou,
            grid=[[gs, gv, iou] for gs, gv, iou in result.grid])

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify_input(req: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
        pixels = np.array(req.pixels, dtype=np.int64)
        if pixels.shape != (32, 32) or pixels.min() < 0 or pixels.max() > 255:
            raise ModelShapeMismatch("pixels must be 32x32 values in 0..255")
        kind = (InputKind.TRAJECTORY_RASTER if req.kind == "trajectory_raster"
                else InputKind.PATCH)
        ci = ClassifierInput(kind=kind, pixels=pixels.astype(np.uint8),
                             object_id=req.object_id)
        label, confidence = classify(ci, default_model())
        return schemas.ClassifyResponse(label=label, confidence=confidence,
                                        kind=kind.value)

    return app


def _error_body(exc: Exception) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


app = create_app()
