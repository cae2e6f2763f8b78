import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evtrack.errors import NonMonotonicTime
from evtrack.fotu import (FotuConfig, MonitorBank, Route, Trajectory,
                          adapt_threshold, append_trajectory_point,
                          route_classification)

CFG = FotuConfig()


class TestAdaptThreshold:
    def test_size_25_speed_0(self):
        # 2.0 * sqrt(25) + 0.05 * 0 = 10
        assert adapt_threshold(25, 0.0, CFG) == 10

    def test_clamp_floor(self):
        assert adapt_threshold(1, 0.0, CFG) == 4

    def test_clamp_ceiling(self):
        assert adapt_threshold(10_000, 500.0, CFG) == 64

    def test_speed_term(self):
        # 2.0 * sqrt(25) + 0.05 * 100 = 15
        assert adapt_threshold(25, 100.0, CFG) == 15

    @given(st.integers(1, 4096), st.integers(1, 4096),
           st.floats(0, 500), st.floats(0, 500))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_both_arguments(self, s1, s2, v1, v2):
        lo_s, hi_s = sorted((s1, s2))
        lo_v, hi_v = sorted((v1, v2))
        assert adapt_threshold(lo_s, lo_v, CFG) <= adapt_threshold(hi_s, lo_v, CFG)
        assert adapt_threshold(lo_s, lo_v, CFG) <= adapt_threshold(lo_s, hi_v, CFG)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            adapt_threshold(0, 0.0, CFG)
        with pytest.raises(ValueError):
            adapt_threshold(1, -1.0, CFG)


class TestTrajectoryGate:
    def test_first_point_always_appended(self):
        traj = Trajectory(object_id=0)
        append_trajectory_point(traj, 1000, 100.0, 100.0, CFG)
        assert traj.points == [(1000, 100.0, 100.0)]

    def test_distance_three_not_recorded(self):
        traj = Trajectory(object_id=0, points=[(0, 100.0, 100.0)])
        append_trajectory_point(traj, 1000, 103.0, 100.0, CFG)
        assert len(traj.points) == 1

    def test_distance_exactly_four_not_recorded(self):
        traj = Trajectory(object_id=0, points=[(0, 100.0, 100.0)])
        append_trajectory_point(traj, 1000, 104.0, 100.0, CFG)
        assert len(traj.points) == 1

    def test_distance_five_recorded(self):
        traj = Trajectory(object_id=0, points=[(0, 100.0, 100.0)])
        append_trajectory_point(traj, 1000, 103.0, 104.0, CFG)
        assert traj.points[-1] == (1000, 103.0, 104.0)

    def test_non_monotonic_time(self):
        traj = Trajectory(object_id=0, points=[(1000, 0.0, 0.0)])
        with pytest.raises(NonMonotonicTime):
            append_trajectory_point(traj, 1000, 50.0, 50.0, CFG)

    def test_gate_invariant_over_random_walk(self):
        import numpy as np
        rng = np.random.default_rng(0)
        traj = Trajectory(object_id=0)
        x = y = 0.0
        t = 0
        path_length = 0.0
        for _ in range(500):
            t += int(rng.integers(1, 2000))
            step = rng.uniform(0, 3.0)
            angle = rng.uniform(0, 2 * math.pi)
            nx, ny = x + step * math.cos(angle), y + step * math.sin(angle)
            if traj.points:
                path_length += math.hypot(nx - x, ny - y)
            x, y = nx, ny
            append_trajectory_point(traj, t, x, y, CFG)
        for (t0, x0, y0), (t1, x1, y1) in zip(traj.points, traj.points[1:]):
            assert math.hypot(x1 - x0, y1 - y0) > CFG.trajectory_step
            assert t1 > t0
        # memory bound: stored points cannot exceed path length / step + 1
        assert len(traj.points) <= path_length / CFG.trajectory_step + 1


class TestRouting:
    def test_slow_object_patch(self):
        assert route_classification(5.0, CFG) is Route.PATCH

    def test_fast_object_trajectory(self):
        assert route_classification(80.0, CFG) is Route.TRAJECTORY

    def test_tie_goes_to_trajectory(self):
        assert route_classification(20.0, CFG) is Route.TRAJECTORY

    def test_pure_threshold_function(self):
        for speed in [x / 4 for x in range(0, 200)]:
            expected = Route.PATCH if speed < CFG.speed_route_threshold else Route.TRAJECTORY
            assert route_classification(speed, CFG) is expected


class TestMonitorBank:
    def test_capacity(self, caplog):
        bank = MonitorBank(FotuConfig(monitors=2))
        assert bank.get(0) is not None
        assert bank.get(1) is not None
        assert bank.get(2) is None  # pool exhausted
        assert bank.get(0) is bank.get(0)

    def test_observe_gates_points(self):
        bank = MonitorBank(CFG)
        bank.observe(7, 0, 0.0, 0.0)
        bank.observe(7, 1000, 2.0, 0.0)   # inside gate, dropped
        bank.observe(7, 2000, 10.0, 0.0)  # recorded
        bank.observe(7, 2000, 50.0, 0.0)  # simultaneous, ignored
        assert bank.trajectories[7].points == [(0, 0.0, 0.0), (2000, 10.0, 0.0)]

    def test_release(self):
        bank = MonitorBank(CFG)
        bank.observe(1, 0, 0.0, 0.0)
        bank.release(1)
        assert 1 not in bank.trajectories


def test_config_validation():
    with pytest.raises(ValueError):
        FotuConfig(monitors=0)
    with pytest.raises(ValueError):
        FotuConfig(trajectory_step=0.0)
