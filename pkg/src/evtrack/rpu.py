"""Region Proposal Unit: hybrid frame/event tracking primitives.

Frame mode merges RLE slices into region proposals with a single linear
pass and union-find (8-connectivity: rows adjacent, column ranges within
one pixel). Event mode matches events against each proposal's dilated box
and commits a coordinate update from the outermost matched positions once
the match counter reaches the proposal's adaptive threshold TH.

The tracker state is a single logical state machine: apply events in
timestamp order from one writer. The functions below mutate the proposals
they are given and are deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from .boxes import Box, box_center, box_contains, box_dilate, box_union, boxes_intersect
from .errors import PrematureCommit
from .events import Event
from .rle import Slice

logger = logging.getLogger(__name__)

#: Smoothing factor for the exponentially averaged velocity estimate.
VELOCITY_ALPHA = 0.5


class RpMode(str, Enum):
    FRAME = "frame"
    EVENT = "event"


@dataclass
class RpuConfig:
    validity_min_pixels: int = 10       # "exceeds nine pixels" -> at least 10
    margin: int = 4                     # search-window dilation for event matching
    rescan_period_s: float = 5.0        # periodic frame-mode re-scan, 5..30 s
    max_proposals: int = 32
    th_min: int = 4
    th_max: int = 64
    velocity_dt_floor_us: int = 50_000  # min baseline between velocity samples
    retire_after_rescans: float = 2.0   # drop a track idle for this many rescan periods

    def __post_init__(self) -> None:
        if not (5.0 <= self.rescan_period_s <= 30.0):
            raise ValueError(f"rescan_period_s {self.rescan_period_s} outside [5, 30]")
        if self.max_proposals < 1:
            raise ValueError("max_proposals must be >= 1")
        if self.th_min < 1 or self.th_max < self.th_min:
            raise ValueError(f"bad TH clamp bounds [{self.th_min}, {self.th_max}]")

    @property
    def rescan_period_us(self) -> int:
        return int(round(self.rescan_period_s * 1e6))


@dataclass
class RegionProposal:
    """Tracked object state shared by frame and event modes."""

    id: int
    bbox: Box
    mode: RpMode = RpMode.FRAME
    active_pixels: int = 0
    match_count: int = 0
    th: int = 4
    matched_extent: Box | None = None
    last_update_t: int = 0
    velocity: tuple[float, float] = (0.0, 0.0)
    # bookkeeping beyond the committed state
    last_match_t: int = 0
    velocity_anchor_t: int = 0
    velocity_anchor_center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bbox
        if x0 > x1 or y0 > y1:
            raise ValueError(f"degenerate bbox {self.bbox}")

    @property
    def speed(self) -> float:
        return float((self.velocity[0] ** 2 + self.velocity[1] ** 2) ** 0.5)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def merge_slices_to_rps(slices: list[Slice], config: RpuConfig,
                        id_start: int = 0) -> list[RegionProposal]:
    """Group slices into frame-mode proposals under 8-connectivity.

    Slices connect when their rows differ by at most one and their column
    ranges overlap after dilating by one pixel (diagonal touch counts).
    One linear pass over the row-ordered input with union-find on open
    components. If components exceed ``config.max_proposals`` the largest
    by active pixel count are kept and the rest logged as dropped.
    """
    if not slices:
        return []
    uf = _UnionFind(len(slices))
    prev_row = -2
    prev_range: tuple[int, int] = (0, 0)  # [start, end) indices of previous row's slices
    row_start = 0
    i = 0
    n = len(slices)
    while i < n:
        row = slices[i].row
        row_start = i
        while i < n and slices[i].row == row:
            i += 1
        if row == prev_row + 1:
            # two-pointer sweep over the previous row's slices
            j = prev_range[0]
            for k in range(row_start, i):
                s = slices[k]
                lo, hi = s.x_start - 1, s.x_end + 1
                while j < prev_range[1] and slices[j].x_end < lo:
                    j += 1
                jj = j
                while jj < prev_range[1] and slices[jj].x_start <= hi:
                    uf.union(k, jj)
                    jj += 1
        prev_row = row
        prev_range = (row_start, i)

    groups: dict[int, list[Slice]] = {}
    for idx, s in enumerate(slices):
        groups.setdefault(uf.find(idx), []).append(s)

    components = []
    for root in sorted(groups):
        members = groups[root]
        bbox: Box = (min(s.x_start for s in members), members[0].row,
                     max(s.x_end for s in members), members[-1].row)
        components.append((bbox, sum(s.length for s in members)))

    if len(components) > config.max_proposals:
        logger.warning("capacity exceeded: %d components, keeping the %d largest",
                       len(components), config.max_proposals)
        keep = sorted(range(len(components)), key=lambda c: -components[c][1])
        keep = sorted(keep[:config.max_proposals])
        components = [components[c] for c in keep]

    return [RegionProposal(id=id_start + k, bbox=bbox, mode=RpMode.FRAME,
                           active_pixels=pixels, th=config.th_min)
            for k, (bbox, pixels) in enumerate(components)]


def filter_valid_rps(rps: list[RegionProposal], config: RpuConfig) -> list[RegionProposal]:
    """Keep proposals of at least ``validity_min_pixels`` and switch them to event mode."""
    valid = []
    for rp in rps:
        if rp.active_pixels >= config.validity_min_pixels:
            rp.mode = RpMode.EVENT
            valid.append(rp)
    return valid


def match_event(rp: RegionProposal, event: Event, config: RpuConfig) -> bool:
    """True iff the event lies in the proposal's box dilated by the margin.

    On a match the counter increments and the event position folds into the
    running matched extent; the box itself only moves at commit time.
    """
    if not box_contains(box_dilate(rp.bbox, config.margin), event.x, event.y):
        return False
    rp.match_count += 1
    rp.last_match_t = event.t
    p: Box = (event.x, event.y, event.x, event.y)
    rp.matched_extent = p if rp.matched_extent is None else box_union(rp.matched_extent, p)
    return True


def commit_rp_update(rp: RegionProposal, now: int,
                     velocity_dt_floor_us: int = 50_000) -> RegionProposal:
    """Move the box to the extent of the matched events and refresh velocity.

    Velocity is the finite difference of box centers across commits,
    exponentially smoothed with ``VELOCITY_ALPHA``; samples closer together
    than ``velocity_dt_floor_us`` keep the previous anchor so pixel
    quantization does not swamp the estimate. Raises PrematureCommit below
    TH.
    """
    if rp.match_count < rp.th:
        raise PrematureCommit(f"rp {rp.id}: {rp.match_count} matches < TH {rp.th}")
    assert rp.matched_extent is not None
    rp.bbox = rp.matched_extent
    cx, cy = box_center(rp.bbox)
    dt_us = now - rp.velocity_anchor_t
    if dt_us >= velocity_dt_floor_us and dt_us > 0:
        ax, ay = rp.velocity_anchor_center
        inst = ((cx - ax) * 1e6 / dt_us, (cy - ay) * 1e6 / dt_us)
        rp.velocity = (VELOCITY_ALPHA * inst[0] + (1 - VELOCITY_ALPHA) * rp.velocity[0],
                       VELOCITY_ALPHA * inst[1] + (1 - VELOCITY_ALPHA) * rp.velocity[1])
        rp.velocity_anchor_t = now
        rp.velocity_anchor_center = (cx, cy)
    rp.match_count = 0
    rp.matched_extent = None
    rp.last_update_t = now
    return rp


def merge_rps(rps: list[RegionProposal], config: RpuConfig) -> list[RegionProposal]:
    """Union proposals whose margin-dilated boxes intersect, to fixpoint.

    The lowest id survives each group (existing tracks absorb re-scan
    proposals), keeps its velocity and threshold, widens to the union
    bound, and sums active pixels and pending match counts. A group
    containing any event-mode member stays in event mode.
    """
    if len(rps) <= 1:
        return list(rps)
    uf = _UnionFind(len(rps))
    dilated = [box_dilate(rp.bbox, config.margin) for rp in rps]
    for i in range(len(rps)):
        for j in range(i + 1, len(rps)):
            if boxes_intersect(dilated[i], dilated[j]):
                uf.union(i, j)
    groups: dict[int, list[RegionProposal]] = {}
    for idx, rp in enumerate(rps):
        groups.setdefault(uf.find(idx), []).append(rp)

    merged: list[RegionProposal] = []
    for members in groups.values():
        members.sort(key=lambda rp: rp.id)
        survivor = members[0]
        for other in members[1:]:
            survivor.bbox = box_union(survivor.bbox, other.bbox)
            survivor.active_pixels += other.active_pixels
            survivor.match_count += other.match_count
            if other.matched_extent is not None:
                survivor.matched_extent = (other.matched_extent
                                           if survivor.matched_extent is None
                                           else box_union(survivor.matched_extent,
                                                          other.matched_extent))
            if other.mode is RpMode.EVENT:
                survivor.mode = RpMode.EVENT
            survivor.last_match_t = max(survivor.last_match_t, other.last_match_t)
        merged.append(survivor)
    merged.sort(key=lambda rp: rp.id)
    return merged


class TrackerAction(Enum):
    BUILD_FRAME = "build_frame"
    STAY_EVENT_MODE = "stay_event_mode"


def mode_scheduler(tracker_state, now: int) -> list[TrackerAction]:
    """BUILD_FRAME on cold start or when the re-scan period elapsed.

    ``tracker_state`` exposes ``event_rps`` (live event-mode proposals),
    ``last_rescan_t`` (microseconds), and ``config`` (RpuConfig).
    """
    if not tracker_state.event_rps:
        return [TrackerAction.BUILD_FRAME]
    if now - tracker_state.last_rescan_t >= tracker_state.config.rescan_period_us:
        return [TrackerAction.BUILD_FRAME]
    return [TrackerAction.STAY_EVENT_MODE]
