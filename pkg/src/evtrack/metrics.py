"""Tracking-quality metrics: IoU and ground-truth scoring."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .boxes import Box, box_area, box_intersection_area
from .errors import NoGroundTruth
from .events import GroundTruthBox


def compute_iou(box_a: Box, box_b: Box) -> float:
    """Intersection over union with inclusive integer pixel areas."""
    inter = box_intersection_area(box_a, box_b)
    if inter == 0:
        return 0.0
    union = box_area(box_a) + box_area(box_b) - inter
    return inter / union


@dataclass
class ObjectScore:
    object_id: int
    track_id: int | None
    mean_iou: float
    n_samples: int
    gt_speed: float  # px/s from ground-truth path length


@dataclass
class TrackingScore:
    accuracy: float
    mean_iou: float
    n_samples: int
    iou_threshold: float
    objects: list[ObjectScore] = field(default_factory=list)


def _nearest_record(times: Sequence[int], t: int) -> int:
    """Index of the record temporally nearest to t (earlier wins ties)."""
    i = bisect_left(times, t)
    if i == 0:
        return 0
    if i == len(times):
        return len(times) - 1
    return i - 1 if t - times[i - 1] <= times[i] - t else i


def _gt_speed(samples: list[GroundTruthBox]) -> float:
    if len(samples) < 2:
        return 0.0
    path = 0.0
    for a, b in zip(samples, samples[1:]):
        ax, ay = (a.x_min + a.x_max) / 2, (a.y_min + a.y_max) / 2
        bx, by = (b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2
        path += ((bx - ax) ** 2 + (by - ay) ** 2) ** 0.5
    dt = (samples[-1].t - samples[0].t) / 1e6
    return path / dt if dt > 0 else 0.0


def score_tracking(results, ground_truth: Iterable[GroundTruthBox],
                   iou_threshold: float = 0.65) -> TrackingScore:
    """Score emitted track records against ground truth.

    Tracks are assigned to ground-truth objects greedily by the mean IoU of
    temporally-nearest pairs; per ground-truth sample, the assigned track's
    nearest record scores it. Unmatched objects score zero on every sample.
    ``results`` is any iterable of records with t, object_id, and bbox.
    """
    truth = sorted(ground_truth, key=lambda b: (b.object_id, b.t))
    if not truth:
        raise NoGroundTruth("ground truth is empty")

    by_object: dict[int, list[GroundTruthBox]] = {}
    for b in truth:
        by_object.setdefault(b.object_id, []).append(b)

    by_track: dict[int, list] = {}
    for r in sorted(results, key=lambda r: r.t):
        by_track.setdefault(r.object_id, []).append(r)
    track_times = {tid: [r.t for r in recs] for tid, recs in by_track.items()}

    def sample_ious(oid: int, tid: int) -> list[float]:
        recs = by_track[tid]
        times = track_times[tid]
        return [compute_iou(gt.bbox, recs[_nearest_record(times, gt.t)].bbox)
                for gt in by_object[oid]]

    pairs = sorted(
        ((sum(ious) / len(ious), oid, tid)
         for oid in by_object for tid in by_track
         for ious in [sample_ious(oid, tid)]),
        key=lambda p: (-p[0], p[1], p[2]))
    assigned: dict[int, int] = {}
    used_tracks: set[int] = set()
    for mean_iou, oid, tid in pairs:
        if oid in assigned or tid in used_tracks or mean_iou <= 0.0:
            continue
        assigned[oid] = tid
        used_tracks.add(tid)

    total = 0
    hits = 0
    iou_sum = 0.0
    objects: list[ObjectScore] = []
    for oid, samples in sorted(by_object.items()):
        tid = assigned.get(oid)
        ious = sample_ious(oid, tid) if tid is not None else [0.0] * len(samples)
        total += len(ious)
        hits += sum(1 for v in ious if v >= iou_threshold)
        iou_sum += sum(ious)
        objects.append(ObjectScore(object_id=oid, track_id=tid,
                                   mean_iou=sum(ious) / len(ious),
                                   n_samples=len(ious), gt_speed=_gt_speed(samples)))
    return TrackingScore(accuracy=hits / total, mean_iou=iou_sum / total,
                         n_samples=total, iou_threshold=iou_threshold, objects=objects)


def evaluate_tracking(results, ground_truth: Iterable[GroundTruthBox],
                      iou_threshold: float = 0.65) -> float:
    """Fraction of ground-truth samples tracked at or above the IoU threshold."""
    results = list(results)
    if not results:
        if not list(ground_truth):
            raise NoGroundTruth("ground truth is empty")
        return 0.0
    return score_tracking(results, ground_truth, iou_threshold).accuracy
