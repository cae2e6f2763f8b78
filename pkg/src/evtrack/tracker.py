"""Hybrid tracker state machine: wires frame building, RLE, the RPU, and
the FOTU monitors into a windowed event-stream replay.

One instance is a single-writer state machine; feed windows in time order.
Snapshots (records, trajectories) may be read concurrently between calls.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .boxes import Box, box_area, box_center
from .errors import MalformedLine
from .events import Event, SensorGeometry
from .fotu import FotuConfig, MonitorBank, Trajectory, adapt_threshold
from .frames import BinaryEventFrame, build_frame, denoise_frame
from .rle import encode_frame
from .rpu import (RegionProposal, RpMode, RpuConfig, TrackerAction,
                  commit_rp_update, filter_valid_rps, match_event, merge_rps,
                  merge_slices_to_rps, mode_scheduler)

TRACKS_HEADER = "t,object_id,x_min,y_min,x_max,y_max,mode"


@dataclass(frozen=True)
class TrackRecord:
    """One emitted tracker row: a commit or a frame-mode pass."""

    t: int
    object_id: int
    bbox: Box
    mode: str  # "frame" or "event"
    speed: float = 0.0  # estimate at emission; not serialized


def serialize_records(records: Iterable[TrackRecord]) -> str:
    lines = [TRACKS_HEADER]
    lines.extend(f"{r.t},{r.object_id},{r.bbox[0]},{r.bbox[1]},{r.bbox[2]},{r.bbox[3]},{r.mode}"
                 for r in records)
    return "\n".join(lines) + "\n"


def parse_records(source: str | Path | IO[str] | Iterable[str]) -> list[TrackRecord]:
    if isinstance(source, (str, Path)):
        lines: Iterable[str] = Path(source).read_text(encoding="ascii").splitlines()
    else:
        lines = source
    records = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line_no == 1 and line.lower().replace(" ", "") == TRACKS_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise MalformedLine(line_no, f"expected 7 fields, got {len(parts)}")
        try:
            t, oid, x0, y0, x1, y1 = (int(p) for p in parts[:6])
        except ValueError:
            raise MalformedLine(line_no, "non-integer field") from None
        records.append(TrackRecord(t=t, object_id=oid, bbox=(x0, y0, x1, y1), mode=parts[6]))
    return records


class HybridTracker:
    """Frame-mode detection plus event-mode tracking over fixed windows."""

    def __init__(self, geometry: SensorGeometry, rpu_config: RpuConfig | None = None,
                 fotu_config: FotuConfig | None = None):
        self.geometry = geometry
        self.config = rpu_config or RpuConfig()
        self.fotu_config = fotu_config or FotuConfig()
        self.event_rps: list[RegionProposal] = []
        self.last_rescan_t = 0
        self.monitors = MonitorBank(self.fotu_config)
        self.archived_trajectories: dict[int, Trajectory] = {}
        self.commit_counts: dict[int, int] = {}
        self.detected_t: dict[int, int] = {}
        self.frames_built = 0
        self.events_processed = 0
        self.last_frame: BinaryEventFrame | None = None
        self._next_id = 0

    def process_window(self, events: Sequence[Event], t_start: int,
                       t_end: int) -> list[TrackRecord]:
        """Consume one frame interval of events; returns the rows it emitted."""
        records: list[TrackRecord] = []
        self.events_processed += len(events)
        actions = mode_scheduler(self, t_start)
        if TrackerAction.BUILD_FRAME in actions:
            self._frame_pass(events, t_start, t_end, records)
        else:
            self._event_pass(events, records)
        self._retire(t_end)
        return records

    def trajectories(self) -> dict[int, Trajectory]:
        """Live and archived trajectories by object id."""
        out = dict(self.archived_trajectories)
        out.update(self.monitors.trajectories)
        return out

    # internal

    def _frame_pass(self, events: Sequence[Event], t_start: int, t_end: int,
                    records: list[TrackRecord]) -> None:
        frame = denoise_frame(build_frame(events, self.geometry, t_start, t_end))
        self.last_frame = frame
        self.frames_built += 1
        slices = encode_frame(frame)
        fresh = merge_slices_to_rps(slices, self.config, id_start=self._next_id)
        self._next_id += len(fresh)
        valid = filter_valid_rps(fresh, self.config)
        for rp in valid:
            rp.last_update_t = t_end
            rp.last_match_t = t_end
            rp.velocity_anchor_t = t_end
            rp.velocity_anchor_center = box_center(rp.bbox)
            rp.th = adapt_threshold(rp.active_pixels, 0.0, self.fotu_config,
                                    self.config.th_min, self.config.th_max)
        before_ids = {rp.id for rp in self.event_rps}
        self.event_rps = merge_rps(self.event_rps + valid, self.config)
        after_ids = {rp.id for rp in self.event_rps}
        for oid in before_ids - after_ids:
            self._archive_monitor(oid)
        for rp in self.event_rps:
            if rp.id not in self.detected_t:
                self.detected_t[rp.id] = t_end
            records.append(TrackRecord(t=t_end, object_id=rp.id, bbox=rp.bbox,
                                       mode="frame", speed=rp.speed))
        self.last_rescan_t = t_start

    def _event_pass(self, events: Sequence[Event], records: list[TrackRecord]) -> None:
        for ev in events:
            matched = [rp for rp in self.event_rps if match_event(rp, ev, self.config)]
            if not matched:
                continue
            if len(matched) > 1:
                # several monitors answered one event: their RPs merge
                survivors = merge_rps(matched, self.config)
                absorbed = {rp.id for rp in matched} - {rp.id for rp in survivors}
                self.event_rps = [rp for rp in self.event_rps if rp.id not in absorbed]
                for oid in absorbed:
                    self._archive_monitor(oid)
                targets = survivors
            else:
                targets = matched
            for rp in targets:
                if rp.match_count >= rp.th:
                    commit_rp_update(rp, ev.t, self.config.velocity_dt_floor_us)
                    self._on_commit(rp, ev.t, records)

    def _on_commit(self, rp: RegionProposal, t: int, records: list[TrackRecord]) -> None:
        self.commit_counts[rp.id] = self.commit_counts.get(rp.id, 0) + 1
        records.append(TrackRecord(t=t, object_id=rp.id, bbox=rp.bbox,
                                   mode="event", speed=rp.speed))
        cx, cy = box_center(rp.bbox)
        self.monitors.observe(rp.id, t, cx, cy)
        rp.th = adapt_threshold(box_area(rp.bbox), rp.speed, self.fotu_config,
                                self.config.th_min, self.config.th_max)

    def _retire(self, now: int) -> None:
        horizon = int(self.config.retire_after_rescans * self.config.rescan_period_us)
        keep: list[RegionProposal] = []
        for rp in self.event_rps:
            if now - rp.last_match_t <= horizon:
                keep.append(rp)
            else:
                self._archive_monitor(rp.id)
        self.event_rps = keep

    def _archive_monitor(self, object_id: int) -> None:
        traj = self.monitors.trajectories.get(object_id)
        if traj is not None:
            self.archived_trajectories[object_id] = traj
        self.monitors.release(object_id)


def iter_windows(events: Sequence[Event], frame_interval_us: int,
                 t_end: int | None = None) -> Iterator[tuple[int, int, list[Event]]]:
    """Split a time-ordered event stream into consecutive frame intervals."""
    if not events and t_end is None:
        return
    last_t = events[-1].t if events else 0
    horizon = t_end if t_end is not None else last_t + 1
    i = 0
    t0 = 0
    while t0 < horizon:
        t1 = t0 + frame_interval_us
        chunk: list[Event] = []
        while i < len(events) and events[i].t < t1:
            chunk.append(events[i])
            i += 1
        yield t0, t1, chunk
        t0 = t1


def run_tracker(events: Sequence[Event], geometry: SensorGeometry,
                rpu_config: RpuConfig | None = None,
                fotu_config: FotuConfig | None = None,
                frame_interval_us: int = 10_000) -> tuple[HybridTracker, list[TrackRecord]]:
    """Replay a whole stream through a fresh tracker; returns it with all rows."""
    tracker = HybridTracker(geometry, rpu_config, fotu_config)
    records: list[TrackRecord] = []
    for t0, t1, chunk in iter_windows(events, frame_interval_us):
        records.extend(tracker.process_window(chunk, t0, t1))
    return tracker, records
