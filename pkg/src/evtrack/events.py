"""Event stream parsing, serialization, and synthetic motion generation.

The event CSV format is ``t,x,y,p`` with microsecond integer timestamps;
ground truth is ``t,object_id,x_min,y_min,x_max,y_max,label``. Everything
here is a pure function over immutable inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .boxes import Box
from .errors import MalformedLine, NonMonotonicTime, ObjectLeavesFrame, OutOfBounds

EVENT_HEADER = "t,x,y,p"
TRUTH_HEADER = "t,object_id,x_min,y_min,x_max,y_max,label"


@dataclass(frozen=True, slots=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"geometry must be at least 1x1, got {self.width}x{self.height}")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


#: 346 columns by 260 rows, the resolution of the reference sensor.
DEFAULT_GEOMETRY = SensorGeometry(width=346, height=260)


@dataclass(frozen=True, slots=True)
class Event:
    """One sensor datum: microsecond timestamp, pixel position, polarity."""

    t: int
    x: int
    y: int
    polarity: bool


@dataclass(frozen=True, slots=True)
class GroundTruthBox:
    t: int
    object_id: int
    x_min: int
    y_min: int
    x_max: int
    y_max: int
    label: str = "uav"

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate ground-truth box {self.bbox}")

    @property
    def bbox(self) -> Box:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def _iter_lines(source: str | Path | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="ascii") as fh:
            yield from fh
    else:
        yield from source


def parse_events(source: str | Path | IO[str] | Iterable[str],
                 geometry: SensorGeometry = DEFAULT_GEOMETRY) -> list[Event]:
    """Parse ``t,x,y,p`` rows into events, validating geometry and time order.

    An optional header line is skipped. Raises MalformedLine, OutOfBounds, or
    NonMonotonicTime with the offending 1-based line number.
    """
    events: list[Event] = []
    last_t = -1
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line_no == 1 and line.lower().replace(" ", "") == EVENT_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise MalformedLine(line_no, f"expected 4 fields, got {len(parts)}")
        try:
            t, x, y, p = (int(part) for part in parts)
        except ValueError:
            raise MalformedLine(line_no, "non-integer field") from None
        if t < 0 or p not in (0, 1):
            raise MalformedLine(line_no, "negative time or polarity not in {0,1}")
        if not geometry.contains(x, y):
            raise OutOfBounds(line_no, f"({x},{y}) outside {geometry.width}x{geometry.height}")
        if t < last_t:
            raise NonMonotonicTime(line_no)
        last_t = t
        events.append(Event(t=t, x=x, y=y, polarity=bool(p)))
    return events


def serialize_events(events: Iterable[Event]) -> str:
    lines = [EVENT_HEADER]
    lines.extend(f"{e.t},{e.x},{e.y},{int(e.polarity)}" for e in events)
    return "\n".join(lines) + "\n"


def write_events(events: Iterable[Event], path: str | Path) -> None:
    Path(path).write_text(serialize_events(events), encoding="ascii")


def parse_ground_truth(source: str | Path | IO[str] | Iterable[str]) -> list[GroundTruthBox]:
    boxes: list[GroundTruthBox] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line_no == 1 and line.lower().replace(" ", "") == TRUTH_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise MalformedLine(line_no, f"expected 7 fields, got {len(parts)}")
        try:
            t, oid, x0, y0, x1, y1 = (int(p) for p in parts[:6])
        except ValueError:
            raise MalformedLine(line_no, "non-integer field") from None
        boxes.append(GroundTruthBox(t=t, object_id=oid, x_min=x0, y_min=y0,
                                    x_max=x1, y_max=y1, label=parts[6]))
    return boxes


def serialize_ground_truth(boxes: Iterable[GroundTruthBox]) -> str:
    lines = [TRUTH_HEADER]
    lines.extend(f"{b.t},{b.object_id},{b.x_min},{b.y_min},{b.x_max},{b.y_max},{b.label}"
                 for b in boxes)
    return "\n".join(lines) + "\n"


def write_ground_truth(boxes: Iterable[GroundTruthBox], path: str | Path) -> None:
    Path(path).write_text(serialize_ground_truth(boxes), encoding="ascii")


def _border_pixels(size: int) -> np.ndarray:
    """Relative (dx, dy) offsets of the outline pixels of a size x size square."""
    if size == 1:
        return np.array([[0, 0]], dtype=np.int64)
    coords = []
    for dx in range(size):
        coords.append((dx, 0))
        coords.append((dx, size - 1))
    for dy in range(1, size - 1):
        coords.append((0, dy))
        coords.append((size - 1, dy))
    return np.array(coords, dtype=np.int64)


def generate_linear_motion(
    geometry: SensorGeometry,
    object_size: int,
    speed: float,
    duration: float,
    event_rate: float,
    seed: int,
    *,
    direction: tuple[float, float] = (1.0, 0.0),
    start: tuple[int, int] | None = None,
    noise_rate: float = 0.0,
    frame_interval_us: int = 10_000,
    object_id: int = 0,
    label: str = "uav",
) -> tuple[list[Event], list[GroundTruthBox]]:
    """Synthesize events from a square object translating at constant velocity.

    Object events fire on the silhouette (outline pixels) of the box
    interpolated at each event's own timestamp, so every object event lies
    inside the ground-truth box at that instant. ``event_rate`` is the
    expected number of events per outline pixel per frame interval;
    ``noise_rate`` scales uniform background noise relative to the object
    event rate. Ground truth is sampled at each frame-interval start.
    Deterministic given ``seed``.
    """
    if object_size < 1:
        raise ValueError("object_size must be >= 1")
    if duration <= 0:
        raise ValueError("duration must be positive")
    norm = math.hypot(*direction)
    if norm == 0 and speed != 0:
        raise ValueError("direction must be nonzero for a moving object")
    vx = speed * direction[0] / norm if norm else 0.0
    vy = speed * direction[1] / norm if norm else 0.0
    total_dx = vx * duration
    total_dy = vy * duration

    if start is None:
        x0 = (geometry.width - object_size - total_dx) / 2.0
        y0 = (geometry.height - object_size - total_dy) / 2.0
    else:
        x0, y0 = float(start[0]), float(start[1])

    def box_at(t_us: int) -> Box:
        bx = int(math.floor(x0 + vx * t_us / 1e6 + 0.5))
        by = int(math.floor(y0 + vy * t_us / 1e6 + 0.5))
        return (bx, by, bx + object_size - 1, by + object_size - 1)

    duration_us = int(round(duration * 1e6))
    for t_probe in (0, duration_us):
        b = box_at(t_probe)
        if b[0] < 0 or b[1] < 0 or b[2] >= geometry.width or b[3] >= geometry.height:
            raise ObjectLeavesFrame(f"object box {b} at t={t_probe}us outside "
                                    f"{geometry.width}x{geometry.height}")

    rng = np.random.default_rng(seed)
    border = _border_pixels(object_size)
    n_windows = max(1, duration_us // frame_interval_us)

    truth: list[GroundTruthBox] = []
    ts_parts: list[np.ndarray] = []
    xs_parts: list[np.ndarray] = []
    ys_parts: list[np.ndarray] = []
    for k in range(n_windows):
        w_start = k * frame_interval_us
        gt = box_at(w_start)
        truth.append(GroundTruthBox(t=w_start, object_id=object_id, x_min=gt[0],
                                    y_min=gt[1], x_max=gt[2], y_max=gt[3], label=label))

        n_obj = rng.poisson(event_rate * len(border))
        if n_obj:
            t_obj = np.sort(rng.integers(w_start, w_start + frame_interval_us, size=n_obj))
            picks = border[rng.integers(0, len(border), size=n_obj)]
            bx = np.floor(x0 + vx * t_obj / 1e6 + 0.5).astype(np.int64)
            by = np.floor(y0 + vy * t_obj / 1e6 + 0.5).astype(np.int64)
            ts_parts.append(t_obj)
            xs_parts.append(bx + picks[:, 0])
            ys_parts.append(by + picks[:, 1])

        n_noise = rng.poisson(noise_rate * event_rate * len(border))
        if n_noise:
            ts_parts.append(rng.integers(w_start, w_start + frame_interval_us, size=n_noise))
            xs_parts.append(rng.integers(0, geometry.width, size=n_noise))
            ys_parts.append(rng.integers(0, geometry.height, size=n_noise))

    if ts_parts:
        ts = np.concatenate(ts_parts)
        xs = np.concatenate(xs_parts)
        ys = np.concatenate(ys_parts)
        order = np.argsort(ts, kind="stable")
        pol = rng.integers(0, 2, size=len(ts))
        events = [Event(t=int(ts[i]), x=int(xs[i]), y=int(ys[i]), polarity=bool(pol[i]))
                  for i in order]
    else:
        events = []
    return events, truth


def merge_event_streams(
    *streams: tuple[Sequence[Event], Sequence[GroundTruthBox]],
) -> tuple[list[Event], list[GroundTruthBox]]:
    """Merge per-object streams into one time-ordered stream with joint truth."""
    events = sorted((e for evts, _ in streams for e in evts), key=lambda e: e.t)
    truth = sorted((b for _, boxes in streams for b in boxes), key=lambda b: (b.t, b.object_id))
    return events, truth
