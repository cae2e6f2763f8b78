import copy

import numpy as np
import pytest

from evtrack.errors import PrematureCommit
from evtrack.events import Event, SensorGeometry
from evtrack.frames import BinaryEventFrame
from evtrack.rle import Slice, encode_bits
from evtrack.rpu import (RegionProposal, RpMode, RpuConfig, TrackerAction,
                         commit_rp_update, filter_valid_rps, match_event,
                         merge_rps, merge_slices_to_rps, mode_scheduler)
from oracles import box_components, flood_fill_components

CFG = RpuConfig()


def rp(bbox, **kw):
    return RegionProposal(id=kw.pop("id", 0), bbox=bbox, **kw)


class TestMergeSlices:
    def test_adjacent_rows_overlapping_columns(self):
        rps = merge_slices_to_rps([Slice(3, 2, 4), Slice(4, 3, 6)], CFG)
        assert len(rps) == 1
        assert rps[0].bbox == (2, 3, 6, 4)
        assert rps[0].active_pixels == 7
        assert rps[0].mode is RpMode.FRAME

    def test_row_gap_of_two_separates(self):
        rps = merge_slices_to_rps([Slice(3, 2, 4), Slice(5, 2, 4)], CFG)
        assert len(rps) == 2

    def test_diagonal_touch_connects(self):
        # columns 0-2 then 3-5 on the next row: diagonal contact at (2,3)
        rps = merge_slices_to_rps([Slice(0, 0, 2), Slice(1, 3, 5)], CFG)
        assert len(rps) == 1

    def test_one_pixel_gap_in_columns_separates(self):
        rps = merge_slices_to_rps([Slice(0, 0, 2), Slice(1, 4, 5)], CFG)
        assert len(rps) == 2

    def test_empty(self):
        assert merge_slices_to_rps([], CFG) == []

    def test_matches_flood_fill_oracle_random(self):
        rng = np.random.default_rng(5)
        for density in (0.05, 0.15, 0.35):
            for _ in range(30):
                bits = rng.random((64, 64)) < density
                rps = merge_slices_to_rps(encode_bits(bits), CFG, id_start=0)
                got = {(rp.bbox, rp.active_pixels) for rp in rps}
                expected = flood_fill_components(bits)
                if len(expected) > CFG.max_proposals:
                    continue
                assert got == expected

    def test_capacity_keeps_largest(self, caplog):
        # 40 isolated components, sizes 1 and 3
        slices = []
        for i in range(40):
            row = 3 * i
            length = 3 if i % 2 == 0 else 1
            slices.append(Slice(row, 0, length - 1))
        cfg = RpuConfig(max_proposals=20)
        rps = merge_slices_to_rps(slices, cfg)
        assert len(rps) == 20
        assert all(r.active_pixels == 3 for r in rps)

    def test_u_shape_merges_arms(self):
        # two arms joined at the bottom: one component despite the top gap
        bits = np.zeros((5, 7), dtype=bool)
        bits[0:4, 1] = True
        bits[0:4, 5] = True
        bits[4, 1:6] = True
        rps = merge_slices_to_rps(encode_bits(bits), CFG)
        assert len(rps) == 1
        assert rps[0].active_pixels == int(bits.sum())


class TestValidity:
    def test_nine_pixels_discarded(self):
        assert filter_valid_rps([rp((0, 0, 2, 2), active_pixels=9)], CFG) == []

    def test_ten_pixels_promoted(self):
        out = filter_valid_rps([rp((0, 0, 3, 2), active_pixels=10)], CFG)
        assert len(out) == 1 and out[0].mode is RpMode.EVENT

    def test_empty(self):
        assert filter_valid_rps([], CFG) == []

    def test_exhaustive_boundary(self):
        for pixels in range(1, 25):
            promoted = filter_valid_rps(
                [rp((0, 0, 4, 4), active_pixels=pixels, mode=RpMode.FRAME)], CFG)
            assert bool(promoted) == (pixels >= 10)


class TestMatchEvent:
    def test_inside_dilation(self):
        cfg = RpuConfig(margin=2)
        p = rp((10, 10, 14, 14), mode=RpMode.EVENT)
        assert match_event(p, Event(t=1, x=16, y=12, polarity=True), cfg)
        assert p.match_count == 1
        assert p.matched_extent == (16, 12, 16, 12)

    def test_outside_dilation(self):
        cfg = RpuConfig(margin=2)
        p = rp((10, 10, 14, 14), mode=RpMode.EVENT)
        assert not match_event(p, Event(t=1, x=17, y=12, polarity=True), cfg)
        assert p.match_count == 0 and p.matched_extent is None

    def test_below_threshold_keeps_bbox(self):
        cfg = RpuConfig(margin=2)
        p = rp((10, 10, 14, 14), mode=RpMode.EVENT, th=8)
        rng = np.random.default_rng(2)
        k = 5
        for i in range(k):
            ev = Event(t=i, x=int(rng.integers(10, 15)), y=int(rng.integers(10, 15)),
                       polarity=True)
            assert match_event(p, ev, cfg)
        assert p.match_count == k
        assert p.bbox == (10, 10, 14, 14)


class TestCommit:
    def test_bbox_moves_to_extent(self):
        p = rp((10, 10, 14, 14), mode=RpMode.EVENT, th=5, match_count=5,
               matched_extent=(11, 11, 15, 15))
        commit_rp_update(p, now=10_000)
        assert p.bbox == (11, 11, 15, 15)
        assert p.match_count == 0 and p.matched_extent is None
        assert p.last_update_t == 10_000

    def test_premature_commit(self):
        p = rp((10, 10, 14, 14), th=5, match_count=4, matched_extent=(10, 10, 14, 14))
        with pytest.raises(PrematureCommit):
            commit_rp_update(p, now=10_000)

    def test_velocity_converges_to_finite_difference(self):
        # +1 px per commit at 10 ms spacing is 100 px/s along x
        p = rp((10, 10, 14, 14), mode=RpMode.EVENT, th=1)
        p.velocity_anchor_center = (12.0, 12.0)
        for k in range(1, 101):
            x0 = 10 + k
            p.match_count = 1
            p.matched_extent = (x0, 10, x0 + 4, 14)
            commit_rp_update(p, now=k * 10_000, velocity_dt_floor_us=50_000)
        assert abs(p.velocity[0] - 100.0) < 5.0
        assert abs(p.velocity[1]) < 1e-9
        assert abs(p.speed - 100.0) < 5.0


class TestMergeRps:
    def test_disjoint_unchanged(self):
        a, b = rp((0, 0, 4, 4), id=0), rp((100, 100, 104, 104), id=1)
        out = merge_rps([a, b], CFG)
        assert {r.id for r in out} == {0, 1}

    def test_overlapping_union(self):
        a = rp((10, 10, 14, 14), id=0, active_pixels=10)
        b = rp((13, 13, 20, 20), id=1, active_pixels=20)
        out = merge_rps([a, b], CFG)
        assert len(out) == 1
        assert out[0].id == 0
        assert out[0].bbox == (10, 10, 20, 20)
        assert out[0].active_pixels == 30

    def test_event_mode_wins(self):
        a = rp((10, 10, 14, 14), id=0, mode=RpMode.EVENT)
        b = rp((12, 12, 16, 16), id=1, mode=RpMode.FRAME)
        out = merge_rps([b, a], CFG)
        assert out[0].mode is RpMode.EVENT

    def test_fixpoint_matches_transitive_closure_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(1, 12))
            boxes = []
            for _ in range(n):
                x0 = int(rng.integers(0, 80))
                y0 = int(rng.integers(0, 80))
                boxes.append((x0, y0, x0 + int(rng.integers(0, 15)),
                              y0 + int(rng.integers(0, 15))))
            rps = [rp(b, id=i) for i, b in enumerate(boxes)]
            out = merge_rps(rps, CFG)
            groups = box_components(boxes, CFG.margin)
            assert len(out) == len(groups)
            expected_ids = sorted(min(g) for g in groups)
            assert sorted(r.id for r in out) == expected_ids


class FakeState:
    def __init__(self, event_rps, last_rescan_t, config=CFG):
        self.event_rps = event_rps
        self.last_rescan_t = last_rescan_t
        self.config = config


class TestModeScheduler:
    def test_cold_start(self):
        assert mode_scheduler(FakeState([], 0), 0) == [TrackerAction.BUILD_FRAME]

    def test_rescan_period_elapsed(self):
        state = FakeState([rp((0, 0, 4, 4), mode=RpMode.EVENT)], last_rescan_t=0)
        assert mode_scheduler(state, 5_100_000) == [TrackerAction.BUILD_FRAME]

    def test_stays_in_event_mode(self):
        state = FakeState([rp((0, 0, 4, 4), mode=RpMode.EVENT)], last_rescan_t=0)
        assert mode_scheduler(state, 4_900_000) == [TrackerAction.STAY_EVENT_MODE]


def test_event_processing_deterministic():
    cfg = RpuConfig(margin=3)
    rng = np.random.default_rng(12)
    events = [Event(t=int(t), x=int(x), y=int(y), polarity=True)
              for t, x, y in zip(np.sort(rng.integers(0, 100_000, 300)),
                                 rng.integers(5, 25, 300), rng.integers(5, 25, 300))]

    def run_once():
        p = rp((8, 8, 20, 20), mode=RpMode.EVENT, th=6)
        history = []
        for ev in events:
            if match_event(p, ev, cfg) and p.match_count >= p.th:
                commit_rp_update(p, ev.t)
                history.append(copy.deepcopy(p))
        return history

    a, b = run_once(), run_once()
    assert a == b


def test_rpu_config_validation():
    with pytest.raises(ValueError):
        RpuConfig(rescan_period_s=4.0)
    with pytest.raises(ValueError):
        RpuConfig(rescan_period_s=31.0)
    with pytest.raises(ValueError):
        RpuConfig(max_proposals=0)
    with pytest.raises(ValueError):
        RpuConfig(th_min=5, th_max=4)
