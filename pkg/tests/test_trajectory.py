import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapsteer.dynamics import VehicleState
from hapsteer.trajectory import (
    LaneGeometry,
    PreviewErrorEstimator,
    plan_lane_change,
    plan_lane_keep,
)

DT = 1.0 / 60.0


def _de_casteljau(points, u):
    """Independent Bezier oracle: repeated linear interpolation."""
    pts = [list(p) for p in points]
    while len(pts) > 1:
        pts = [
            [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
            for a, b in zip(pts, pts[1:])
        ]
    return pts[0]


class TestPlanLaneChange:
    def test_length_from_speed_and_duration(self):
        v_x = 70.0 / 3.6
        plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), v_x, 6.0)
        assert plan.length == v_x * 6.0
        assert plan.length == pytest.approx(116.67, abs=0.005)

    def test_homogeneity_in_speed(self):
        geom = LaneGeometry()
        a = plan_lane_change(0.0, 1.75, 1, geom, 15.0, 6.0)
        b = plan_lane_change(0.0, 1.75, 1, geom, 30.0, 6.0)
        assert b.length == 2.0 * a.length

    def test_midpoint_symmetry(self):
        plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), 20.0, 6.0)
        y_mid, _, _ = plan.eval(plan.length / 2.0)
        assert y_mid == pytest.approx((plan.y_start + plan.y_end) / 2.0, abs=1e-12)

    def test_boundary_conditions(self):
        rng = random.Random(11)
        for _ in range(100):
            geom = LaneGeometry(lane_width=rng.uniform(2.5, 4.5))
            v_x = rng.uniform(8.0, 40.0)
            dt_lc = rng.uniform(2.0, 10.0)
            y0 = rng.uniform(0.0, geom.lane_width)
            plan = plan_lane_change(50.0, y0, 1, geom, v_x, dt_lc)
            assert plan.length == v_x * dt_lc
            for x, y_want in ((50.0, y0), (50.0 + plan.length, plan.y_end)):
                y, heading, curv = plan.eval(x)
                assert abs(y - y_want) <= 1e-9
                assert abs(heading) <= 1e-9
                assert abs(curv) <= 1e-9

    def test_matches_de_casteljau_oracle(self):
        plan = plan_lane_change(10.0, 1.0, 1, LaneGeometry(), 22.0, 5.0)
        for u in np.linspace(0.001, 0.999, 57):
            x_o, y_o = _de_casteljau(plan.control_points, u)
            y, _, _ = plan.eval(x_o)
            assert y == pytest.approx(y_o, abs=1e-10)

    def test_monotone_lateral_progress(self):
        plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), 20.0, 6.0)
        ys = [plan.eval(x)[0] for x in np.linspace(0.0, plan.length, 500)]
        assert all(b >= a - 1e-12 for a, b in zip(ys, ys[1:]))

    def test_derivative_against_finite_differences(self):
        plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), 19.444, 6.0)
        xs = np.linspace(plan.length * 1e-3, plan.length * (1 - 1e-3), 1000)
        h = plan.length * 1e-5
        for x in xs:
            y_p, heading, _ = plan.eval(x)
            dy_dx = math.tan(heading)
            fd = (plan.eval(x + h)[0] - plan.eval(x - h)[0]) / (2 * h)
            assert dy_dx == pytest.approx(fd, abs=1e-6)

    def test_degrades_to_lane_keep_past_end(self):
        plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), 20.0, 6.0)
        y, heading, curv = plan.eval(plan.length + 500.0)
        assert (y, heading, curv) == (plan.y_end, 0.0, 0.0)
        assert plan.completed(plan.length + 0.1)

    def test_noop_when_already_on_target_centerline(self):
        geom = LaneGeometry()
        plan = plan_lane_change(0.0, geom.lane_center(1), 1, geom, 20.0, 6.0)
        assert not plan.is_lane_change

    def test_contract_violations(self):
        geom = LaneGeometry()
        with pytest.raises(ValueError):
            plan_lane_change(0.0, 1.75, 1, geom, 0.0, 6.0)
        with pytest.raises(ValueError):
            plan_lane_change(0.0, 1.75, 1, geom, 20.0, -1.0)


class TestPlanLaneKeep:
    def test_centerline_convention(self):
        # lane 0 of a 2-lane road, 3.5 m wide: center is 1.75 m from the right edge
        plan = plan_lane_keep(0, LaneGeometry())
        assert plan.y_end == pytest.approx(1.75)

    def test_flat_everywhere(self):
        plan = plan_lane_keep(1, LaneGeometry())
        for x in (0.0, 123.4, 8000.0):
            y, heading, curv = plan.eval(x)
            assert (y, heading, curv) == (plan.y_end, 0.0, 0.0)

    def test_invalid_lane(self):
        with pytest.raises(ValueError):
            plan_lane_keep(5, LaneGeometry())


class TestLaneGeometry:
    def test_lane_of(self):
        geom = LaneGeometry()
        assert geom.lane_of(1.0) == 0
        assert geom.lane_of(5.0) == 1
        assert geom.lane_of(-2.0) == 0
        assert geom.lane_of(100.0) == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            LaneGeometry(lane_count=1).validate()


@given(v_x=st.floats(5.0, 50.0), dt_lc=st.floats(1.0, 12.0))
@settings(max_examples=50, deadline=None)
def test_length_scales_exactly(v_x, dt_lc):
    plan = plan_lane_change(0.0, 1.75, 1, LaneGeometry(), v_x, dt_lc)
    assert plan.length == v_x * dt_lc


class TestPreviewErrors:
    def test_zero_on_centerline(self):
        geom = LaneGeometry()
        est = PreviewErrorEstimator(1.0, DT)
        v = VehicleState(y=geom.lane_center(0))
        e = est.update(v, plan_lane_keep(0, geom))
        assert e.e_y == pytest.approx(0.0, abs=1e-12)
        assert e.e_theta == 0.0
        assert e.e_theta_dot == 0.0

    def test_sign_positive_when_right_of_centerline(self):
        geom = LaneGeometry()
        est = PreviewErrorEstimator(1.0, DT)
        v = VehicleState(y=geom.lane_center(0) - 0.5)  # 0.5 m to the right
        e = est.update(v, plan_lane_keep(0, geom))
        assert e.e_y == pytest.approx(0.5)

    def test_zero_for_perfect_tracking_straight(self):
        geom = LaneGeometry()
        est = PreviewErrorEstimator(1.0, DT)
        plan = plan_lane_keep(1, geom)
        v = VehicleState(x=100.0, y=geom.lane_center(1), psi=0.0)
        e = est.update(v, plan)
        assert abs(e.e_y) <= 1e-12 and abs(e.e_theta) <= 1e-12

    def test_perfect_tracking_on_curve_bounded_by_chord_offset(self):
        # the preview point is projected along the heading, so on a curved
        # reference a perfectly tracking vehicle still sees up to ~kappa*Lp^2/2
        geom = LaneGeometry()
        plan = plan_lane_change(0.0, geom.lane_center(0), 1, geom, 19.444, 6.0)
        est = PreviewErrorEstimator(1.0, DT)
        kappa_max = 5.7735 * geom.lane_width / plan.length**2
        lookahead = 19.444 * 1.0
        e_y_bound = 0.75 * kappa_max * lookahead**2   # chord term with margin
        e_th_bound = 1.1 * kappa_max * lookahead      # tangent swing over the preview
        for x in np.linspace(0.0, plan.length, 40):
            y, heading, _ = plan.eval(x)
            v = VehicleState(x=x, y=y, psi=heading)
            e = est.update(v, plan)
            assert abs(e.e_theta) <= e_th_bound
            assert abs(e.e_y) <= e_y_bound

    def test_e_theta_dot_backward_difference_vs_central_oracle(self):
        # drive a sinusoidal heading against a straight target; compare the
        # (unfiltered) backward difference with a central-difference oracle
        geom = LaneGeometry()
        est = PreviewErrorEstimator(1.0, DT, lowpass_hz=None)
        plan = plan_lane_keep(0, geom)
        e_thetas, e_dots = [], []
        for i in range(400):
            t = i * DT
            v = VehicleState(x=t * 19.444, y=geom.lane_center(0), psi=0.02 * math.sin(2.0 * t))
            e = est.update(v, plan)
            e_thetas.append(e.e_theta)
            e_dots.append(e.e_theta_dot)
        # max |second derivative| of e_theta = 0.02 * 4  (psi = 0.02 sin 2t)
        bound = 2.0 * DT * 0.08 + 1e-12
        for i in range(2, 399):
            central = (e_thetas[i + 1] - e_thetas[i - 1]) / (2 * DT)
            assert abs(e_dots[i] - central) <= bound

    def test_plan_change_notification_drops_derivative_spike(self):
        geom = LaneGeometry()
        est = PreviewErrorEstimator(1.0, DT)
        v = VehicleState(y=geom.lane_center(0))
        est.update(v, plan_lane_keep(0, geom))
        plan = plan_lane_change(v.x, v.y, 1, geom, v.v_x, 6.0)
        est.notify_plan_change()
        e = est.update(v, plan)
        assert e.e_theta_dot == 0.0

    def test_requires_positive_speed(self):
        est = PreviewErrorEstimator(1.0, DT)
        with pytest.raises(ValueError):
            est.update(VehicleState(v_x=0.0), plan_lane_keep(0, LaneGeometry()))
