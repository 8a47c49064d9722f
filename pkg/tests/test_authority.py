import math
import random

import pytest

from hapsteer.authority import (
    LC,
    LK,
    AuthorityConfig,
    AuthorityState,
    gain_drop,
    gain_recover,
    step_gain,
    step_mode,
)
from hapsteer.consistency import Verdict
from hapsteer.dynamics import VehicleState
from hapsteer.trajectory import LaneGeometry, plan_lane_keep

DT = 1.0 / 60.0


class TestGainCurves:
    def test_half_gain_at_curve_midpoint(self):
        rng = random.Random(1)
        for _ in range(200):
            ks = rng.uniform(1e-6, 1.0 - 1e-6)
            assert abs(gain_drop(ks, 1.0) - ks / 2.0) <= 1e-12

    def test_start_points_near_captured_gain(self):
        # tanh(-4) endpoint: both curves start within 3.36e-4 of K_shifting
        # (relative for the drop curve, absolute for the recovery curve)
        rng = random.Random(2)
        for _ in range(200):
            ks = rng.uniform(1e-6, 1.0 - 1e-6)
            assert abs(gain_drop(ks, 0.0) - ks) <= ks * 3.36e-4
            assert abs(gain_recover(ks, 0.0) - ks) <= 3.36e-4

    def test_limits(self):
        assert gain_drop(0.7, 100.0) == pytest.approx(0.0, abs=1e-12)
        assert gain_recover(0.7, 100.0) == pytest.approx(1.0, abs=1e-12)

    def test_monotone(self):
        ts = [k * 0.05 for k in range(200)]
        drops = [gain_drop(0.8, t) for t in ts]
        recs = [gain_recover(0.2, t) for t in ts]
        assert all(b <= a for a, b in zip(drops, drops[1:]))
        assert all(b >= a for a, b in zip(recs, recs[1:]))


class TestStepGain:
    def test_capture_and_clock_reset_on_switch(self):
        a = AuthorityState()
        cfg = AuthorityConfig()
        step_gain(a, Verdict.CONSISTENT, DT, cfg)
        k_before = a.k_h
        step_gain(a, Verdict.INCONSISTENT, DT, cfg)
        assert a.k_shifting == pytest.approx(min(k_before, 1.0 - 1e-6))
        assert a.t_in_state == pytest.approx(DT)
        assert a.verdict == Verdict.INCONSISTENT

    def test_continuity_at_switch(self):
        a = AuthorityState()
        cfg = AuthorityConfig()
        for _ in range(30):
            step_gain(a, Verdict.CONSISTENT, DT, cfg)
        k_before = a.k_h
        step_gain(a, Verdict.INCONSISTENT, DT, cfg)
        slope = 0.5 * cfg.lam / math.cosh(cfg.lam * (DT - cfg.gamma)) ** 2 * DT
        assert abs(a.k_h - k_before) <= (1.0 - math.tanh(cfg.lam)) / 2.0 + slope

    def test_capture_hook_disabled_creates_jump(self):
        a = AuthorityState()
        cfg = AuthorityConfig()
        for _ in range(200):
            step_gain(a, Verdict.INCONSISTENT, DT, cfg)
        assert a.k_h < 0.01
        k_before = a.k_h
        step_gain(a, Verdict.CONSISTENT, DT, cfg, capture=False)
        # stale K_shifting (captured at ~1) makes the recovery start near 1
        assert abs(a.k_h - k_before) > 0.5

    def test_range_collapse_and_recovery(self):
        a = AuthorityState()
        cfg = AuthorityConfig()
        for _ in range(600):
            step_gain(a, Verdict.INCONSISTENT, DT, cfg)
            assert 0.0 <= a.k_h <= 1.0
        assert a.k_h < 1e-3
        for _ in range(600):
            step_gain(a, Verdict.CONSISTENT, DT, cfg)
            assert 0.0 <= a.k_h <= 1.0
        assert a.k_h > 0.999

    def test_monotone_within_episode(self):
        a = AuthorityState()
        cfg = AuthorityConfig()
        prev = a.k_h
        for _ in range(400):
            step_gain(a, Verdict.INCONSISTENT, DT, cfg)
            assert a.k_h <= prev + 1e-15
            prev = a.k_h
        for _ in range(400):
            step_gain(a, Verdict.CONSISTENT, DT, cfg)
            assert a.k_h >= prev - 1e-15
            prev = a.k_h


def _vehicle_in_lane(geom, lane, drift=0.0):
    v = VehicleState()
    v.y = geom.lane_center(lane)
    v.psi = drift
    return v


class TestStepMode:
    def test_intent_edge_starts_lane_change(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        plan = plan_lane_keep(0, geom)
        veh = _vehicle_in_lane(geom, 0, drift=0.01)  # drifting left
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert a.mode == LC
        assert plan.is_lane_change
        assert plan.lane_id == 1
        assert plan.length == pytest.approx(veh.v_x * 6.0)

    def test_direction_right_from_drift(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        plan = plan_lane_keep(1, geom)
        veh = _vehicle_in_lane(geom, 1, drift=-0.01)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert a.mode == LC and plan.lane_id == 0

    def test_pending_waits_for_drift_then_uses_default(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        plan = plan_lane_keep(0, geom)
        veh = _vehicle_in_lane(geom, 0, drift=0.0)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert a.mode == LK and a.pending_intent
        # after the timeout the configured default direction (left) fires
        steps = int(cfg.pending_timeout / DT) + 2
        for _ in range(steps):
            a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert a.mode == LC and plan.lane_id == 1

    def test_intent_ignored_during_lane_change(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        veh = _vehicle_in_lane(geom, 0, drift=0.01)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan_lane_keep(0, geom), veh, geom, 6.0, DT, cfg)
        assert a.mode == LC
        first_plan = plan
        a, plan = step_mode(a, 0, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert plan is first_plan

    def test_intent_ignored_while_inconsistent(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        veh = _vehicle_in_lane(geom, 0, drift=0.01)
        a, plan = step_mode(a, 1, Verdict.INCONSISTENT, plan_lane_keep(0, geom), veh, geom, 6.0, DT, cfg)
        assert a.mode == LK and not plan.is_lane_change and not a.pending_intent

    def test_completion_reverts_to_lane_keep(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        veh = _vehicle_in_lane(geom, 0, drift=0.01)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan_lane_keep(0, geom), veh, geom, 6.0, DT, cfg)
        veh2 = VehicleState(x=plan.start_x + plan.length + 1.0)
        veh2.y = geom.lane_center(1)
        a, plan = step_mode(a, 0, Verdict.CONSISTENT, plan, veh2, geom, 6.0, DT, cfg)
        assert a.mode == LK
        assert not plan.is_lane_change and plan.lane_id == 1

    def test_collapse_triggers_single_replan(self):
        geom = LaneGeometry()
        a = AuthorityState()
        cfg = AuthorityConfig()
        veh = _vehicle_in_lane(geom, 0, drift=0.01)
        a, plan = step_mode(a, 1, Verdict.CONSISTENT, plan_lane_keep(0, geom), veh, geom, 6.0, DT, cfg)
        assert a.mode == LC
        replans = 0
        verdict = Verdict.INCONSISTENT
        for _ in range(300):
            step_gain(a, verdict, DT, cfg)
            before = plan
            a, plan = step_mode(a, 0, verdict, plan, veh, geom, 6.0, DT, cfg)
            if plan is not before and not plan.is_lane_change:
                replans += 1
        assert replans == 1
        assert a.mode == LK and plan.lane_id == 0
        # returning consistent clears the latch
        step_gain(a, Verdict.CONSISTENT, DT, cfg)
        a, plan = step_mode(a, 0, Verdict.CONSISTENT, plan, veh, geom, 6.0, DT, cfg)
        assert not a.replanned

    def test_derived_replan_time_from_drop_curve(self):
        # K_h falls below 0.01 * K_shifting when tanh(4(t-1)) > 0.98, t ~ 1.57 s
        a = AuthorityState()
        cfg = AuthorityConfig()
        steps = 0
        while a.k_h >= cfg.k_replant:
            step_gain(a, Verdict.INCONSISTENT, DT, cfg)
            steps += 1
        t = steps * DT
        t_pred = cfg.gamma + math.atanh(1.0 - 2.0 * cfg.k_replant) / cfg.lam
        assert t == pytest.approx(t_pred, abs=2 * DT)
