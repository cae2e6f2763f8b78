"""Grayscale preprocessing: patch extraction and trajectory rasterization.

Both operations produce the fixed 32x32 8-bit classifier input. Pure and
deterministic: identical inputs give identical rasters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .boxes import Box
from .errors import EmptyBox, TooFewPoints
from .events import SensorGeometry
from .fotu import Trajectory

CLASSIFIER_INPUT_SIZE = 32


@dataclass(frozen=True)
class GrayFrame:
    geometry: SensorGeometry
    t: int
    pixels: np.ndarray = field(repr=False)  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        if self.pixels.shape != (self.geometry.height, self.geometry.width):
            raise ValueError(f"pixel shape {self.pixels.shape} does not match geometry")


class InputKind(str, Enum):
    PATCH = "patch"
    TRAJECTORY_RASTER = "trajectory_raster"


@dataclass(frozen=True)
class ClassifierInput:
    kind: InputKind
    pixels: np.ndarray = field(repr=False)  # uint8, (32, 32)
    object_id: int = 0

    def __post_init__(self) -> None:
        if self.pixels.shape != (CLASSIFIER_INPUT_SIZE, CLASSIFIER_INPUT_SIZE):
            raise ValueError(f"classifier input must be 32x32, got {self.pixels.shape}")


def nearest_resample(src: np.ndarray, out_size: int) -> np.ndarray:
    """Nearest-neighbor resample with source index floor(i * src / out)."""
    h, w = src.shape
    rows = (np.arange(out_size) * h) // out_size
    cols = (np.arange(out_size) * w) // out_size
    return src[np.ix_(rows, cols)]


def minmax_normalize(pixels: np.ndarray) -> np.ndarray:
    """Stretch to the full 8-bit range; constant inputs map to zero."""
    lo = int(pixels.min())
    hi = int(pixels.max())
    if hi == lo:
        return np.zeros_like(pixels, dtype=np.uint8)
    scaled = np.rint((pixels.astype(np.float64) - lo) * 255.0 / (hi - lo))
    return scaled.astype(np.uint8)


def extract_patch(gray_frame: GrayFrame, rp_bbox: Box, pad_ratio: float = 0.25,
                  object_id: int = 0) -> ClassifierInput:
    """Crop the box dilated by pad_ratio, resample to 32x32, normalize.

    Raises EmptyBox if the box is degenerate after clamping to the frame.
    """
    x0, y0, x1, y1 = rp_bbox
    pad_x = int(round((x1 - x0 + 1) * pad_ratio))
    pad_y = int(round((y1 - y0 + 1) * pad_ratio))
    x0 = max(0, x0 - pad_x)
    y0 = max(0, y0 - pad_y)
    x1 = min(gray_frame.geometry.width - 1, x1 + pad_x)
    y1 = min(gray_frame.geometry.height - 1, y1 + pad_y)
    if x0 > x1 or y0 > y1:
        raise EmptyBox(f"box {rp_bbox} degenerate after clamping")
    crop = gray_frame.pixels[y0:y1 + 1, x0:x1 + 1]
    patch = minmax_normalize(nearest_resample(crop, CLASSIFIER_INPUT_SIZE))
    return ClassifierInput(kind=InputKind.PATCH, pixels=patch, object_id=object_id)


def _round_half_up_div(num: int, den: int) -> int:
    # floor(num/den + 1/2) for den > 0; exact for negative num too
    return (2 * num + den) // (2 * den)


def line_pixels(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer line raster: max(|dx|,|dy|)+1 samples, half-up rounding."""
    n = max(abs(x1 - x0), abs(y1 - y0))
    if n == 0:
        return [(x0, y0)]
    dx, dy = x1 - x0, y1 - y0
    return [(x0 + _round_half_up_div(k * dx, n), y0 + _round_half_up_div(k * dy, n))
            for k in range(n + 1)]


def segment_intensity(index: int, n_segments: int) -> int:
    """Time-order intensity ramp: first segment 64, last 255, linear in index."""
    if n_segments <= 1:
        return 255
    return round(64 + (255 - 64) * index / (n_segments - 1))


def rasterize_trajectory(trajectory: Trajectory,
                         out_size: int = CLASSIFIER_INPUT_SIZE) -> ClassifierInput:
    """Fit the trajectory's bounding square into the raster and draw segments.

    Aspect-preserving, centered placement; segment brightness ramps with
    point index so the raster encodes direction of travel. Later segments
    overdraw earlier ones. Translation-invariant. Raises TooFewPoints below
    two points.
    """
    pts = trajectory.points
    if len(pts) < 2:
        raise TooFewPoints(f"trajectory {trajectory.object_id} has {len(pts)} point(s)")
    xs = [p[1] for p in pts]
    ys = [p[2] for p in pts]
    min_x, min_y = min(xs), min(ys)
    span_x = max(xs) - min_x
    span_y = max(ys) - min_y
    span = max(span_x, span_y)

    def to_pixel(cx: float, cy: float) -> tuple[int, int]:
        if span == 0:
            return (out_size // 2, out_size // 2)
        off_x = (span - span_x) / 2.0
        off_y = (span - span_y) / 2.0
        scale = (out_size - 1) / span
        px = int(math.floor((cx - min_x + off_x) * scale + 0.5))
        py = int(math.floor((cy - min_y + off_y) * scale + 0.5))
        return px, py

    raster = np.zeros((out_size, out_size), dtype=np.uint8)
    mapped = [to_pixel(x, y) for x, y in zip(xs, ys)]
    n_segments = len(mapped) - 1
    for i in range(n_segments):
        value = segment_intensity(i, n_segments)
        for px, py in line_pixels(*mapped[i], *mapped[i + 1]):
            raster[py, px] = value
    return ClassifierInput(kind=InputKind.TRAJECTORY_RASTER, pixels=raster,
                           object_id=trajectory.object_id)
