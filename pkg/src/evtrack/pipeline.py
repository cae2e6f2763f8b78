"""End-to-end orchestrator: replay events through the hybrid tracker, gate
the NPU to one classification per tracked object, score against ground
truth, and emit deterministic reports.

One run is single-writer over its tracker state; independent runs can
execute in parallel (one pipeline instance each).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import EvtrackError, TooFewPoints
from .events import parse_events, parse_ground_truth
from .fotu import Route, route_classification
from .frames import load_pgm
from .isp import ClassifierInput, GrayFrame, InputKind, extract_patch, rasterize_trajectory
from .metrics import TrackingScore, compute_iou, evaluate_tracking, score_tracking
from .npu.model import CnnModel, default_model, load_blob
from .npu.program import NpuProgram, build_program, run_program
from .tracker import HybridTracker, TrackRecord, iter_windows, serialize_records

__all__ = ["run_pipeline", "RunReport", "report_metrics", "compute_iou",
           "evaluate_tracking"]


@dataclass
class ObjectReport:
    object_id: int
    route: str | None = None
    label: str | None = None
    confidence: float = 0.0
    classify_invocations: int = 0
    commits: int = 0
    detected_t: int = 0
    classified_t: int | None = None

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "route": self.route,
            "label": self.label,
            "confidence": round(self.confidence, 6),
            "classify_invocations": self.classify_invocations,
            "commits": self.commits,
            "detected_t": self.detected_t,
            "classified_t": self.classified_t,
        }


@dataclass
class RunReport:
    config: dict
    objects: list[ObjectReport] = field(default_factory=list)
    events_processed: int = 0
    frames_built: int = 0
    commits_total: int = 0
    npu_invocations: int = 0
    npu_invocations_ungated_baseline: int = 0
    mac_dense: int = 0
    mac_executed: int = 0
    mac_skipped: int = 0
    tracking: TrackingScore | None = None
    records: list[TrackRecord] = field(default_factory=list, repr=False)
    trajectories: dict[int, list[tuple[int, float, float]]] = field(default_factory=dict,
                                                                    repr=False)

    @property
    def npu_reduction(self) -> float:
        if self.npu_invocations_ungated_baseline == 0:
            return 0.0
        return 1.0 - self.npu_invocations / self.npu_invocations_ungated_baseline

    def to_dict(self) -> dict:
        out = {
            "config": self.config,
            "objects": [o.to_dict() for o in sorted(self.objects, key=lambda o: o.object_id)],
            "events_processed": self.events_processed,
            "frames_built": self.frames_built,
            "commits_total": self.commits_total,
            "npu_invocations": self.npu_invocations,
            "npu_invocations_ungated_baseline": self.npu_invocations_ungated_baseline,
            "npu_reduction": round(self.npu_reduction, 6),
            "mac_dense": self.mac_dense,
            "mac_executed": self.mac_executed,
            "mac_skipped": self.mac_skipped,
            "tracking": None,
        }
        if self.tracking is not None:
            out["tracking"] = {
                "accuracy": round(self.tracking.accuracy, 6),
                "mean_iou": round(self.tracking.mean_iou, 6),
                "n_samples": self.tracking.n_samples,
                "iou_threshold": self.tracking.iou_threshold,
                "objects": [{
                    "object_id": o.object_id,
                    "track_id": o.track_id,
                    "mean_iou": round(o.mean_iou, 6),
                    "n_samples": o.n_samples,
                    "gt_speed": round(o.gt_speed, 3),
                } for o in self.tracking.objects],
            }
        return out


def _load_gray_frames(gray_dir: str, geometry) -> list[GrayFrame]:
    """PGM files named <t_us>.pgm (an optional prefix before the integer is
    allowed), sorted by timestamp."""
    frames = []
    for path in sorted(Path(gray_dir).glob("*.pgm")):
        match = re.search(r"(\d+)\.pgm$", path.name)
        if not match:
            continue
        frames.append(GrayFrame(geometry=geometry, t=int(match.group(1)),
                                pixels=load_pgm(path)))
    frames.sort(key=lambda f: f.t)
    return frames


class _NpuRuntime:
    """Caches the built program and accumulates MAC statistics."""

    def __init__(self, model: CnnModel):
        self.model = model
        self.program: NpuProgram = build_program(model)
        self.invocations = 0
        self.mac_dense = 0
        self.mac_executed = 0

    def classify(self, classifier_input: ClassifierInput) -> tuple[str, float]:
        result = run_program(self.program, classifier_input)
        self.invocations += 1
        self.mac_dense += result.mac_report.dense
        self.mac_executed += result.mac_report.executed
        assert result.label is not None
        return result.label, result.confidence


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Replay the configured event stream end to end. Deterministic."""
    events = parse_events(config.events_path, config.geometry)
    truth = parse_ground_truth(config.truth_path) if config.truth_path else []
    gray_frames = (_load_gray_frames(config.gray_dir, config.geometry)
                   if config.gray_dir else [])
    model = load_blob(config.model_path) if config.model_path else default_model()
    npu = _NpuRuntime(model)
    tracker = HybridTracker(config.geometry, config.rpu, config.fotu)

    report = RunReport(config=config.to_dict())
    objects: dict[int, ObjectReport] = {}
    all_records: list[TrackRecord] = []
    gray_idx = 0
    current_gray: GrayFrame | None = None

    for t0, t1, window_events in iter_windows(events, config.frame_interval_us):
        while gray_idx < len(gray_frames) and gray_frames[gray_idx].t < t1:
            current_gray = gray_frames[gray_idx]
            gray_idx += 1
        records = tracker.process_window(window_events, t0, t1)
        all_records.extend(records)
        for rec in records:
            obj = objects.get(rec.object_id)
            if obj is None:
                obj = ObjectReport(object_id=rec.object_id,
                                   detected_t=tracker.detected_t.get(rec.object_id, rec.t))
                objects[rec.object_id] = obj
            if rec.mode != "event":
                continue
            obj.commits += 1
            if config.gating:
                stable = (obj.classified_t is None
                          and rec.t - obj.detected_t >= config.classify_min_age_us)
                if stable:
                    done = _classify_object(npu, tracker, config, obj, rec, current_gray)
                    if done:
                        obj.classified_t = rec.t
            else:
                _classify_object(npu, tracker, config, obj, rec, current_gray,
                                 allow_patch_fallback=True)

    report.records = all_records
    report.objects = list(objects.values())
    report.events_processed = tracker.events_processed
    report.frames_built = tracker.frames_built
    report.commits_total = sum(o.commits for o in objects.values())
    report.npu_invocations = npu.invocations
    report.npu_invocations_ungated_baseline = report.commits_total
    report.mac_dense = npu.mac_dense
    report.mac_executed = npu.mac_executed
    report.mac_skipped = npu.mac_dense - npu.mac_executed
    report.trajectories = {oid: list(traj.points)
                           for oid, traj in sorted(tracker.trajectories().items())}
    if truth and all_records:
        report.tracking = score_tracking(all_records, truth, iou_threshold=0.65)
    return report


def _classify_object(npu: _NpuRuntime, tracker: HybridTracker, config: PipelineConfig,
                     obj: ObjectReport, rec: TrackRecord, gray: GrayFrame | None,
                     allow_patch_fallback: bool = False) -> bool:
    """Build the routed classifier input and invoke the NPU.

    Returns False when the trajectory route has too few points yet (the
    gated pipeline waits for the next commit in that case).
    """
    route = route_classification(rec.speed, config.fotu)
    classifier_input: ClassifierInput | None = None
    if route is Route.TRAJECTORY:
        traj = tracker.trajectories().get(rec.object_id)
        if traj is not None and len(traj.points) >= 2:
            classifier_input = rasterize_trajectory(traj)
        elif not allow_patch_fallback:
            return False
    if classifier_input is None:
        classifier_input = _patch_input(tracker, config, rec, gray)
    label, confidence = npu.classify(classifier_input)
    obj.classify_invocations += 1
    if obj.route is None:
        obj.route = route.value
        obj.label = label
        obj.confidence = confidence
    return True


def _patch_input(tracker: HybridTracker, config: PipelineConfig, rec: TrackRecord,
                 gray: GrayFrame | None) -> ClassifierInput:
    """Patch from the synchronized grayscale frame, or from the last binary
    event frame rendered to grayscale when no gray source is configured."""
    if gray is None:
        if tracker.last_frame is not None:
            pixels = tracker.last_frame.bits.astype(np.uint8) * 255
        else:
            pixels = np.zeros((config.geometry.height, config.geometry.width), dtype=np.uint8)
        gray = GrayFrame(geometry=config.geometry, t=rec.t, pixels=pixels)
    return extract_patch(gray, rec.bbox, object_id=rec.object_id)


def report_metrics(report: RunReport, output_dir: str | Path) -> list[Path]:
    """Write report.json, tracks.csv, trajectories.csv, and iou_vs_speed.csv.

    Byte-identical across reruns on identical inputs.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                           encoding="ascii")
    written.append(report_path)

    tracks_path = out / "tracks.csv"
    tracks_path.write_text(serialize_records(report.records), encoding="ascii")
    written.append(tracks_path)

    traj_path = out / "trajectories.csv"
    lines = ["object_id,t,cx,cy"]
    for oid, points in sorted(report.trajectories.items()):
        lines.extend(f"{oid},{t},{cx!r},{cy!r}" for t, cx, cy in points)
    traj_path.write_text("\n".join(lines) + "\n", encoding="ascii")
    written.append(traj_path)

    iou_path = out / "iou_vs_speed.csv"
    lines = ["object_id,gt_speed,mean_iou"]
    if report.tracking is not None:
        lines.extend(f"{o.object_id},{o.gt_speed!r},{o.mean_iou!r}"
                     for o in report.tracking.objects)
    iou_path.write_text("\n".join(lines) + "\n", encoding="ascii")
    written.append(iou_path)
    return written


def run_and_report(config: PipelineConfig) -> tuple[RunReport, list[Path]]:
    report = run_pipeline(config)
    files = report_metrics(report, config.output_dir)
    return report, files
