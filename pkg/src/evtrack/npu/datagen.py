"""Synthetic two-class desk data: drone-like vs bird-like patches and
trajectories, plus motion-blur fixtures for the speed-routing comparison.

Class index 0 is "uav" (quad silhouette, straight flight path), class 1 is
"non_uav" (bird silhouette, erratic zigzag path). All generators are
deterministic given their RNG.
"""

from __future__ import annotations

import math

import numpy as np

from ..fotu import Trajectory
from ..isp import CLASSIFIER_INPUT_SIZE, line_pixels, minmax_normalize, rasterize_trajectory

SIDE = CLASSIFIER_INPUT_SIZE


def _stamp_disk(img: np.ndarray, cx: float, cy: float, radius: float, value: int) -> None:
    yy, xx = np.ogrid[:img.shape[0], :img.shape[1]]
    mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2
    img[mask] = value


def _stamp_line(img: np.ndarray, x0: int, y0: int, x1: int, y1: int,
                value: int, thick: bool = False) -> None:
    h, w = img.shape
    for px, py in line_pixels(x0, y0, x1, y1):
        for dy, dx in ((0, 0), (0, 1), (1, 0)) if thick else ((0, 0),):
            x, y = px + dx, py + dy
            if 0 <= x < w and 0 <= y < h:
                img[y, x] = value


def _finish(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noisy = img.astype(np.float64) + rng.normal(0.0, 10.0, img.shape)
    return minmax_normalize(np.clip(noisy, 0, 255).astype(np.uint8))


def draw_uav_patch(rng: np.random.Generator) -> np.ndarray:
    """Quadrotor silhouette: center body, four diagonal arms with rotor disks."""
    bg = int(rng.integers(10, 60))
    fg = int(rng.integers(170, 255))
    img = np.full((SIDE, SIDE), bg, dtype=np.uint8)
    cx = SIDE / 2 + rng.uniform(-2.5, 2.5)
    cy = SIDE / 2 + rng.uniform(-2.5, 2.5)
    arm = rng.uniform(6.0, 9.0)
    rotor_r = rng.uniform(1.5, 2.6)
    tilt = rng.uniform(-0.3, 0.3)
    _stamp_disk(img, cx, cy, rng.uniform(2.0, 3.0), fg)
    for k in range(4):
        angle = math.pi / 4 + k * math.pi / 2 + tilt
        ex = cx + arm * math.cos(angle)
        ey = cy + arm * math.sin(angle)
        _stamp_line(img, round(cx), round(cy), round(ex), round(ey), fg)
        _stamp_disk(img, ex, ey, rotor_r, fg)
    return _finish(img, rng)


def draw_bird_patch(rng: np.random.Generator) -> np.ndarray:
    """Bird silhouette: small body with two swept, kinked wings."""
    bg = int(rng.integers(10, 60))
    fg = int(rng.integers(170, 255))
    img = np.full((SIDE, SIDE), bg, dtype=np.uint8)
    cx = SIDE / 2 + rng.uniform(-2.5, 2.5)
    cy = SIDE / 2 + rng.uniform(-1.5, 3.5)
    span = rng.uniform(9.0, 13.0)
    lift = rng.uniform(4.0, 7.0)
    kink = rng.uniform(0.35, 0.6)
    _stamp_disk(img, cx, cy, rng.uniform(1.2, 1.9), fg)
    for side in (-1.0, 1.0):
        mid_x = cx + side * span * kink
        mid_y = cy - lift * rng.uniform(0.8, 1.1)
        tip_x = cx + side * span
        tip_y = cy - lift * rng.uniform(0.1, 0.45)
        _stamp_line(img, round(cx), round(cy), round(mid_x), round(mid_y), fg, thick=True)
        _stamp_line(img, round(mid_x), round(mid_y), round(tip_x), round(tip_y), fg, thick=True)
    return _finish(img, rng)


def make_uav_trajectory(rng: np.random.Generator, object_id: int = 0) -> Trajectory:
    """Straight flight path with sub-pixel wobble; steps clear the 4 px gate."""
    heading = rng.uniform(0, 2 * math.pi)
    n_points = int(rng.integers(10, 22))
    step = rng.uniform(5.0, 8.0)
    x, y = rng.uniform(40, 260), rng.uniform(40, 200)
    t = 0
    points = []
    for _ in range(n_points):
        points.append((t, x, y))
        t += int(rng.integers(15_000, 25_000))
        x += step * math.cos(heading) + rng.uniform(-0.4, 0.4)
        y += step * math.sin(heading) + rng.uniform(-0.4, 0.4)
    return Trajectory(object_id=object_id, points=points)


def make_bird_trajectory(rng: np.random.Generator, object_id: int = 0) -> Trajectory:
    """Erratic zigzag: sharp heading changes every segment."""
    heading = rng.uniform(0, 2 * math.pi)
    n_points = int(rng.integers(10, 22))
    x, y = rng.uniform(40, 260), rng.uniform(40, 200)
    t = 0
    points = []
    for _ in range(n_points):
        points.append((t, x, y))
        t += int(rng.integers(15_000, 25_000))
        step = rng.uniform(5.0, 12.0)
        x += step * math.cos(heading)
        y += step * math.sin(heading)
        heading += rng.choice((-1.0, 1.0)) * rng.uniform(0.9, 2.3)
    return Trajectory(object_id=object_id, points=points)


def trajectory_raster(kind: int, rng: np.random.Generator) -> np.ndarray:
    traj = make_uav_trajectory(rng) if kind == 0 else make_bird_trajectory(rng)
    return rasterize_trajectory(traj).pixels


def make_dataset(n_per_class_per_kind: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Balanced patch + trajectory-raster dataset, shuffled. Labels: 0 uav, 1 non_uav."""
    rng = np.random.default_rng(seed)
    images = []
    labels = []
    for _ in range(n_per_class_per_kind):
        images.append(draw_uav_patch(rng))
        labels.append(0)
        images.append(draw_bird_patch(rng))
        labels.append(1)
        images.append(trajectory_raster(0, rng))
        labels.append(0)
        images.append(trajectory_raster(1, rng))
        labels.append(1)
    order = rng.permutation(len(images))
    return np.stack(images)[order], np.array(labels)[order]


def motion_blur(patch: np.ndarray, length: int) -> np.ndarray:
    """Horizontal uniform blur of the given length, renormalized."""
    if length <= 1:
        return patch.copy()
    kernel = np.ones(length) / length
    blurred = np.apply_along_axis(lambda row: np.convolve(row, kernel, mode="same"),
                                  1, patch.astype(np.float64))
    return minmax_normalize(np.clip(blurred, 0, 255).astype(np.uint8))


def blur_length_for_speed(speed: float, exposure_s: float = 0.2) -> int:
    """Streak length in patch pixels for an object at the given speed."""
    return max(1, int(round(speed * exposure_s)))
