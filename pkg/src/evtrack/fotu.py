"""Fast Object Tracking Unit: adaptive thresholds, trajectories, routing.

Per-object monitors recalibrate the RP update threshold TH from object size
and velocity after every event-mode commit, record displacement-gated
trajectory points for fast objects, and route each object to patch-based or
trajectory-based classification by speed. Monitor state belongs to the same
single-writer loop as the tracker.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import NonMonotonicTime

logger = logging.getLogger(__name__)


@dataclass
class FotuConfig:
    speed_route_threshold: float = 20.0  # px/s; at or above -> trajectory route
    trajectory_step: float = 4.0         # record only displacement steps beyond this
    th_gain_size: float = 2.0
    th_gain_speed: float = 0.05
    monitors: int = 32

    def __post_init__(self) -> None:
        if self.monitors < 1:
            raise ValueError("monitors must be >= 1")
        if self.speed_route_threshold <= 0 or self.trajectory_step <= 0:
            raise ValueError("thresholds must be positive")


@dataclass
class Trajectory:
    object_id: int
    points: list[tuple[int, float, float]] = field(default_factory=list)  # (t_us, cx, cy)


class Route(str, Enum):
    PATCH = "patch"
    TRAJECTORY = "trajectory"


def adapt_threshold(rp_size: int, speed: float, config: FotuConfig,
                    th_min: int = 4, th_max: int = 64) -> int:
    """TH = clamp(round(gain_size * sqrt(size) + gain_speed * speed)).

    Monotone non-decreasing in both arguments; the sqrt keeps TH commensurate
    with perimeter-scale event counts.
    """
    if rp_size < 1:
        raise ValueError("rp_size must be >= 1")
    if speed < 0:
        raise ValueError("speed must be >= 0")
    raw = config.th_gain_size * math.sqrt(rp_size) + config.th_gain_speed * speed
    return max(th_min, min(th_max, round(raw)))


def append_trajectory_point(trajectory: Trajectory, t: int, cx: float, cy: float,
                            config: FotuConfig) -> Trajectory:
    """Append (t, cx, cy) iff displaced more than the step gate from the last point.

    Euclidean distance, strict inequality. Candidates inside the gate leave
    the trajectory unchanged (and do not advance its clock).
    """
    if trajectory.points:
        lt, lx, ly = trajectory.points[-1]
        if t <= lt:
            raise NonMonotonicTime(detail=f"t={t} not after last recorded t={lt}")
        if math.hypot(cx - lx, cy - ly) <= config.trajectory_step:
            return trajectory
    trajectory.points.append((t, cx, cy))
    return trajectory


def route_classification(speed: float, config: FotuConfig) -> Route:
    """Patch route below the speed threshold, trajectory route at or above it."""
    if speed < 0:
        raise ValueError("speed must be >= 0")
    return Route.PATCH if speed < config.speed_route_threshold else Route.TRAJECTORY


class MonitorBank:
    """Fixed pool of trajectory monitors; overflow objects go unrecorded."""

    def __init__(self, config: FotuConfig):
        self.config = config
        self.trajectories: dict[int, Trajectory] = {}
        self._overflowed: set[int] = set()

    def get(self, object_id: int) -> Trajectory | None:
        traj = self.trajectories.get(object_id)
        if traj is not None:
            return traj
        if len(self.trajectories) >= self.config.monitors:
            if object_id not in self._overflowed:
                self._overflowed.add(object_id)
                logger.warning("monitor pool full (%d): object %d tracked without "
                               "trajectory recording", self.config.monitors, object_id)
            return None
        traj = Trajectory(object_id=object_id)
        self.trajectories[object_id] = traj
        return traj

    def observe(self, object_id: int, t: int, cx: float, cy: float) -> Trajectory | None:
        """Record a gated trajectory point for the object, if it holds a monitor."""
        traj = self.get(object_id)
        if traj is None:
            return None
        if traj.points and t <= traj.points[-1][0]:
            # simultaneous commits collapse to the first observation
            return traj
        return append_trajectory_point(traj, t, cx, cy, self.config)

    def release(self, object_id: int) -> None:
        self.trajectories.pop(object_id, None)
