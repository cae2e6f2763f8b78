"""Pydantic request/response models for the service API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .. import __version__


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


class RunRequest(BaseModel):
    config_path: str
    gating: bool | None = None
    seed: int | None = None
    output_dir: str | None = None


class RunResponse(BaseModel):
    report: dict
    output_dir: str
    files: list[str]


class SynthRequest(BaseModel):
    out_dir: str
    width: int = Field(346, ge=1)
    height: int = Field(260, ge=1)
    object_size: int = Field(7, ge=1)
    speed: float = Field(50.0, ge=0)
    duration: float = Field(1.0, gt=0)
    event_rate: float = Field(3.0, gt=0)
    noise_rate: float = Field(0.05, ge=0)
    seed: int = 0
    direction_x: float = 1.0
    direction_y: float = 0.0


class SynthResponse(BaseModel):
    events_path: str
    truth_path: str
    n_events: int
    n_boxes: int


class ScoreRequest(BaseModel):
    results_path: str
    truth_path: str
    iou_threshold: float = Field(0.65, ge=0, le=1)


class ScoreResponse(BaseModel):
    accuracy: float
    mean_iou: float
    n_samples: int
    iou_threshold: float


class CalibrateRequest(BaseModel):
    sizes: list[int] = [5, 7, 10]
    speeds: list[float] = [5.0, 50.0, 200.0]
    gain_size_grid: list[float] = [0.0, 1.0, 2.0, 3.0]
    gain_speed_grid: list[float] = [0.0, 0.05, 0.1]
    duration: float = Field(0.4, gt=0)
    event_rate: float = Field(3.0, gt=0)
    noise_rate: float = Field(0.05, ge=0)
    seed: int = 0
    width: int = Field(160, ge=1)
    height: int = Field(120, ge=1)


class CalibrateResponse(BaseModel):
    th_gain_size: float
    th_gain_speed: float
    mean_iou: float
    baseline_mean_iou: float
    grid: list[list[float]]


class ClassifyRequest(BaseModel):
    pixels: list[list[int]]  # 32 rows of 32 values in 0..255
    kind: str = "patch"      # "patch" or "trajectory_raster"
    object_id: int = 0


class ClassifyResponse(BaseModel):
    label: str
    confidence: float
    kind: str
