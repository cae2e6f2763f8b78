import numpy as np
import pytest

from evtrack.errors import NoGroundTruth
from evtrack.events import GroundTruthBox
from evtrack.metrics import compute_iou, evaluate_tracking, score_tracking
from evtrack.tracker import TrackRecord


def gt(t, oid, box):
    return GroundTruthBox(t=t, object_id=oid, x_min=box[0], y_min=box[1],
                          x_max=box[2], y_max=box[3])


class TestComputeIou:
    def test_identical(self):
        assert compute_iou((0, 0, 9, 9), (0, 0, 9, 9)) == 1.0

    def test_disjoint(self):
        assert compute_iou((0, 0, 9, 9), (20, 20, 29, 29)) == 0.0

    def test_half_overlap_inclusive_areas(self):
        # 10x10 boxes overlapping in a 5x10 strip: 50 / (100+100-50) = 1/3
        assert compute_iou((0, 0, 9, 9), (5, 0, 14, 9)) == pytest.approx(1 / 3)

    def test_single_pixel(self):
        assert compute_iou((3, 3, 3, 3), (3, 3, 3, 3)) == 1.0
        assert compute_iou((3, 3, 3, 3), (4, 3, 4, 3)) == 0.0


class TestEvaluateTracking:
    def test_perfect_tracker(self):
        truth = [gt(k * 10_000, 0, (10 + k, 10, 14 + k, 14)) for k in range(20)]
        records = [TrackRecord(t=b.t, object_id=5, bbox=b.bbox, mode="event")
                   for b in truth]
        for threshold in (0.3, 0.65, 0.99):
            assert evaluate_tracking(records, truth, threshold) == 1.0

    def test_empty_results(self):
        truth = [gt(0, 0, (0, 0, 4, 4))]
        assert evaluate_tracking([], truth, 0.65) == 0.0

    def test_no_ground_truth(self):
        with pytest.raises(NoGroundTruth):
            evaluate_tracking([], [], 0.65)
        with pytest.raises(NoGroundTruth):
            score_tracking([TrackRecord(0, 0, (0, 0, 1, 1), "event")], [])

    def test_temporally_nearest_match(self):
        truth = [gt(10_000, 0, (10, 10, 14, 14)), gt(20_000, 0, (20, 10, 24, 14))]
        records = [TrackRecord(t=11_000, object_id=0, bbox=(10, 10, 14, 14), mode="event"),
                   TrackRecord(t=19_000, object_id=0, bbox=(20, 10, 24, 14), mode="event")]
        assert evaluate_tracking(records, truth, 0.9) == 1.0

    def test_multi_object_greedy_assignment(self):
        truth = ([gt(k * 10_000, 0, (10, 10, 14, 14)) for k in range(5)]
                 + [gt(k * 10_000, 1, (100, 100, 109, 109)) for k in range(5)])
        records = ([TrackRecord(k * 10_000, 7, (10, 10, 14, 14), "event") for k in range(5)]
                   + [TrackRecord(k * 10_000, 9, (101, 100, 110, 109), "event")
                      for k in range(5)])
        score = score_tracking(records, truth, 0.65)
        assert score.accuracy == 1.0
        by_oid = {o.object_id: o for o in score.objects}
        assert by_oid[0].track_id == 7
        assert by_oid[1].track_id == 9
        assert by_oid[0].mean_iou == 1.0

    def test_unmatched_object_scores_zero(self):
        truth = ([gt(0, 0, (10, 10, 14, 14))] + [gt(0, 1, (200, 200, 204, 204))])
        records = [TrackRecord(0, 3, (10, 10, 14, 14), "event")]
        score = score_tracking(records, truth, 0.5)
        assert score.accuracy == 0.5
        assert score.n_samples == 2

    def test_gt_speed_estimate(self):
        truth = [gt(k * 100_000, 0, (10 * k, 10, 10 * k + 4, 14)) for k in range(5)]
        score = score_tracking([TrackRecord(0, 0, (0, 10, 4, 14), "event")], truth, 0.65)
        assert score.objects[0].gt_speed == pytest.approx(100.0)


def test_duplicate_scorer_oracle_agrees():
    # independently-coded scorer over the same data: nearest record by |dt|,
    # single object, straightforward counting
    rng = np.random.default_rng(0)
    truth = [gt(k * 10_000, 0, (int(10 + 2.5 * k), 10, int(14 + 2.5 * k), 14))
             for k in range(40)]
    records = []
    t = 3_000
    x = 10.0
    for _ in range(120):
        records.append(TrackRecord(t=t, object_id=0,
                                   bbox=(int(x), 10, int(x) + 4, 14 + int(rng.integers(0, 2))),
                                   mode="event"))
        t += int(rng.integers(2_000, 5_000))
        x += 0.25 * (t % 7)  # drifting, imperfect track

    def oracle_accuracy(threshold):
        hits = 0
        for b in truth:
            nearest = min(records, key=lambda r: (abs(r.t - b.t), r.t))
            xa = max(b.x_min, nearest.bbox[0])
            xb = min(b.x_max, nearest.bbox[2])
            ya = max(b.y_min, nearest.bbox[1])
            yb = min(b.y_max, nearest.bbox[3])
            inter = max(0, xb - xa + 1) * max(0, yb - ya + 1)
            area_a = (b.x_max - b.x_min + 1) * (b.y_max - b.y_min + 1)
            area_b = ((nearest.bbox[2] - nearest.bbox[0] + 1)
                      * (nearest.bbox[3] - nearest.bbox[1] + 1))
            if inter / (area_a + area_b - inter) >= threshold:
                hits += 1
        return hits / len(truth)

    for threshold in (0.3, 0.5, 0.65, 0.9):
        assert evaluate_tracking(records, truth, threshold) == pytest.approx(
            oracle_accuracy(threshold))
