import random

import numpy as np

import pytest

from hapsteer.driver import DriverParams, IntentEvent, IntentSchedule, SimDriver
from hapsteer.dynamics import SteeringState, VehicleState
from hapsteer.trajectory import LaneGeometry, plan_lane_keep

DT = 1.0 / 60.0


def _driver(params=None, schedule=None, seed=5, lane=0):
    geom = LaneGeometry()
    return (
        SimDriver(
            params or DriverParams(noise_std=0.0),
            schedule or IntentSchedule([]),
            geom,
            lane,
            random.Random(seed),
            dt=DT,
        ),
        geom,
    )


class TestTorqueLaw:
    def test_zero_on_own_centerline(self):
        drv, geom = _driver()
        v = VehicleState(y=geom.lane_center(0))
        s = SteeringState()
        for _ in range(30):
            tau, _ = drv.step(v, s, plan_lane_keep(0, geom), False, False)
        assert tau == 0.0

    def test_steers_left_when_right_of_centerline(self):
        drv, geom = _driver()
        v = VehicleState(y=geom.lane_center(0) - 0.5)
        s = SteeringState()
        tau = 0.0
        for _ in range(30):  # flush the reaction-delay line
            tau, _ = drv.step(v, s, plan_lane_keep(0, geom), False, False)
        assert tau > 0.0

    def test_grip_resists_wheel_displacement(self):
        p = DriverParams(noise_std=0.0)
        drv, geom = _driver(p)
        v = VehicleState(y=geom.lane_center(0))
        s = SteeringState(theta_sw=0.2, theta_sw_dot=0.0)
        tau, _ = drv.step(v, s, plan_lane_keep(0, geom), False, False)
        assert tau == pytest.approx(-p.grip_stiffness * 0.2)

    def test_seeded_determinism_bit_identical(self):
        taus = []
        for _ in range(2):
            drv, geom = _driver(DriverParams(noise_std=0.3), seed=42)
            v = VehicleState(y=geom.lane_center(0) - 0.2)
            s = SteeringState()
            seq = [drv.step(v, s, plan_lane_keep(0, geom), False, False)[0] for _ in range(100)]
            taus.append(seq)
        assert taus[0] == taus[1]

    def test_reaction_delay_length(self):
        p = DriverParams(noise_std=0.0, reaction_delay=0.2)
        drv, geom = _driver(p)
        v = VehicleState(y=geom.lane_center(0) - 1.0)
        s = SteeringState()
        outs = [drv.step(v, s, plan_lane_keep(0, geom), False, False)[0] for _ in range(20)]
        n_delay = round(0.2 / DT)
        assert all(t == 0.0 for t in outs[:n_delay])
        assert outs[n_delay] != 0.0


class TestResist:
    def test_stiffen_factor_one_is_noop(self):
        p = DriverParams(noise_std=0.0, stiffen_factor=1.0)
        drv, geom = _driver(p)
        v = VehicleState(y=geom.lane_center(0) - 0.5)
        s = SteeringState()
        base = [drv.step(v, s, plan_lane_keep(0, geom), False, False)[0] for _ in range(30)]
        drv2, _ = _driver(p)
        drv2.set_resist(True)
        resisting = [drv2.step(v, s, plan_lane_keep(0, geom), False, False)[0] for _ in range(30)]
        assert base == resisting

    def test_stiffen_scales_tracking(self):
        p = DriverParams(noise_std=0.0, stiffen_factor=4.0)
        drv, geom = _driver(p)
        drv.set_resist(True)
        v = VehicleState(y=geom.lane_center(0) - 0.5)
        s = SteeringState()
        tau = 0.0
        for _ in range(30):
            tau, _ = drv.step(v, s, plan_lane_keep(0, geom), False, False)
        drv2, _ = _driver(DriverParams(noise_std=0.0))
        tau_base = 0.0
        for _ in range(30):
            tau_base, _ = drv2.step(v, s, plan_lane_keep(0, geom), False, False)
        assert tau == pytest.approx(4.0 * tau_base)

    def test_validation(self):
        with pytest.raises(ValueError):
            DriverParams(stiffen_factor=0.5).validate()
        with pytest.raises(ValueError):
            DriverParams(noise_std=-0.1).validate()


class TestScheduleAndGlance:
    def test_schedule_validation(self):
        sched = IntentSchedule([IntentEvent(500.0, 1), IntentEvent(400.0, 0)])
        with pytest.raises(ValueError):
            sched.validate(8000.0)
        with pytest.raises(ValueError):
            IntentSchedule([IntentEvent(9000.0, 1)]).validate(8000.0)

    def test_glance_precedes_own_steering_onset(self):
        p = DriverParams(noise_std=0.0, glance_lead=1.0)
        sched = IntentSchedule([IntentEvent(400.0, 1)])
        drv, geom = _driver(p, sched)
        v = VehicleState(y=geom.lane_center(0))
        s = SteeringState()
        head_onset_x = None
        plan_onset_x = None
        x = 0.0
        while x < 600.0:
            v.x = x
            _, head = drv.step(v, s, plan_lane_keep(0, geom), False, False)
            if head_onset_x is None and abs(head) > 0.0:
                head_onset_x = x
            if plan_onset_x is None and drv.own_plan.is_lane_change:
                plan_onset_x = x
            x += v.v_x * DT
        assert head_onset_x is not None and plan_onset_x is not None
        lead_s = (plan_onset_x - head_onset_x) / v.v_x
        assert lead_s == pytest.approx(p.glance_lead, abs=2 * DT)

    def test_glance_direction_and_amplitude(self):
        p = DriverParams(noise_std=0.0)
        sched = IntentSchedule([IntentEvent(100.0, 1)])
        drv, geom = _driver(p, sched)
        v = VehicleState(x=99.9, y=geom.lane_center(0))
        s = SteeringState()
        drv.step(v, s, plan_lane_keep(0, geom), False, False)
        v.x = 100.5
        _, head = drv.step(v, s, plan_lane_keep(0, geom), False, False)
        assert head == pytest.approx(0.7)  # leftward change -> positive glance

    def test_own_plan_progression(self):
        p = DriverParams(noise_std=0.0, delta_t_lc=6.0)
        sched = IntentSchedule([IntentEvent(100.0, 1)])
        drv, geom = _driver(p, sched)
        s = SteeringState()
        v = VehicleState(x=101.0, y=geom.lane_center(0))
        drv.step(v, s, plan_lane_keep(0, geom), False, False)
        assert drv.own_plan.is_lane_change
        assert drv.own_plan.length == pytest.approx(v.v_x * 6.0)
        v2 = VehicleState(x=101.0 + drv.own_plan.length + 1.0, y=geom.lane_center(1))
        drv.step(v2, s, plan_lane_keep(0, geom), False, False)
        assert not drv.own_plan.is_lane_change
        assert drv.own_plan.lane_id == 1


def test_glance_precedes_every_scripted_change_in_log(manual_log):
    from hapsteer.metrics import segment_lc

    head = manual_log["head_yaw"]
    t = manual_log["t"]
    for seg in segment_lc(manual_log):
        start_i = seg.start_idx
        zeros_before = np.where(head[:start_i] == 0.0)[0]
        assert len(zeros_before) > 0
        head_onset_t = t[zeros_before[-1]]
        # glance begins (default 1 s) before the driver's own steering onset,
        # which itself precedes the yaw-threshold segment start
        assert seg.start_t - head_onset_t >= 0.8
        assert abs(head[start_i]) >= 0.5


class TestComply:
    def test_adopts_completed_assisted_change(self):
        p = DriverParams(noise_std=0.0, comply_with_assist=True, delta_t_lc=7.5)
        sched = IntentSchedule([IntentEvent(100.0, 1)])
        drv, geom = _driver(p, sched)
        s = SteeringState()
        v = VehicleState(x=101.0, y=geom.lane_center(0))
        drv.step(v, s, plan_lane_keep(0, geom), False, True)
        assert drv.own_plan.is_lane_change
        # the system's (faster) change completed: plan is LK in the target lane
        v2 = VehicleState(x=200.0, y=geom.lane_center(1))
        drv.step(v2, s, plan_lane_keep(1, geom), False, True)
        assert not drv.own_plan.is_lane_change
        assert drv.own_plan.lane_id == 1

    def test_manual_driver_ignores_system_plans(self):
        p = DriverParams(noise_std=0.0, comply_with_assist=True, delta_t_lc=7.5)
        sched = IntentSchedule([IntentEvent(100.0, 1)])
        drv, geom = _driver(p, sched)
        s = SteeringState()
        v = VehicleState(x=101.0, y=geom.lane_center(0))
        drv.step(v, s, plan_lane_keep(0, geom), False, False)
        v2 = VehicleState(x=200.0, y=geom.lane_center(1))
        drv.step(v2, s, plan_lane_keep(1, geom), False, False)  # assist inactive
        assert drv.own_plan.is_lane_change  # keeps its own slower plan
