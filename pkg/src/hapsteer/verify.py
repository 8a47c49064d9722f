"""Canned verification scenarios and invariant checks.

These power both the `verify` CLI command and the acceptance tests. The
centerpiece is the false-trigger overrule episode: guidance starts an
unwanted lane change, the driver fights it, the detector flags the conflict,
authority collapses along the gain schedule, the trajectory is re-planned to
the occupied lane exactly once, and full authority returns once driver and
system agree again.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .authority import gain_drop, gain_recover
from .config import SimConfig, default_config
from .consistency import Verdict, classify
from .driver import IntentSchedule
from .dynamics import VehicleParams, VehicleState, step_vehicle
from .scenario import DriveLog, run_trial
from .trajectory import LaneGeometry, plan_lane_change

FALSE_LC_PULSE_T = 20.0   # s, forced intention pulse start
FALSE_LC_PULSE_LEN = 3.0  # s, matches the prediction horizon
FALSE_LC_SEED = 7


def false_lc_config(base: SimConfig | None = None) -> SimConfig:
    """Configuration of the canned false-trigger overrule scenario.

    Short empty course (no scripted events, so any lane-change intention is
    false by construction) and an attentive, assertively overruling driver:
    firmer tracking than the default matrix driver and a 6x stiffening while
    resisting. Detector and controller settings are taken from `base`, so a
    misconfigured threshold makes the scenario fail visibly.
    """
    cfg = copy.deepcopy(base) if base is not None else default_config()
    cfg.scenario.geometry.course_length = 1600.0
    cfg.scenario.events = []
    cfg.driver.overrule = True
    cfg.driver.gain_y = 3.5
    cfg.driver.gain_psi = 21.0
    cfg.driver.stiffen_factor = 6.0
    cfg.driver.noise_std = 0.1
    return cfg


@dataclass
class EpisodeResult:
    log: DriveLog
    onset_t: float | None = None          # guidance (false LC) start
    detect_delay: float | None = None     # onset -> verdict Inconsistent
    collapse_delay: float | None = None   # switch -> K_h < 0.02
    replan_count: int = 0                 # re-plans before the plan would end
    relax_t: float | None = None          # driver stops resisting (re-plan time)
    consistent_delay: float | None = None  # relax -> verdict Consistent
    recover_delay: float | None = None    # relax -> K_h > 0.99
    episodes: int = 0
    k_h_min: float = 1.0
    switch_jumps: list = field(default_factory=list)  # (t, |dK_h|, bound)


def run_false_lc_episode(
    cfg: SimConfig | None = None, seed: int = FALSE_LC_SEED
) -> EpisodeResult:
    """Run the canned episode and measure the full handling sequence."""
    cfg = false_lc_config(cfg)

    def pulse(t: float) -> int:
        return 1 if FALSE_LC_PULSE_T <= t < FALSE_LC_PULSE_T + FALSE_LC_PULSE_LEN else 0

    log = run_trial(
        "strong-normal", cfg, seed=seed,
        intent_override=pulse, schedule=IntentSchedule([]),
    )
    res = EpisodeResult(log=log)
    t = log["t"]
    verdict = log["verdict"]
    k_h = log["k_h"]
    mode = log["mode"]
    res.k_h_min = float(np.min(k_h))

    lc_on = np.where((mode[1:] == 1) & (mode[:-1] == 0))[0] + 1
    if len(lc_on) == 0:
        return res
    onset = int(lc_on[0])
    res.onset_t = float(t[onset])

    sw_in = np.where((verdict[1:] == 1) & (verdict[:-1] == 0))[0] + 1
    res.episodes = len(sw_in)
    if len(sw_in) == 0:
        return res
    first_in = int(sw_in[0])
    res.detect_delay = float(t[first_in] - t[onset])

    below = np.where(k_h[first_in:] < 0.02)[0]
    if len(below):
        res.collapse_delay = float(below[0] * log.dt)

    # a re-plan shows as LC -> LK before the (6 s) false plan would complete
    lk_back = np.where((mode[1:] == 0) & (mode[:-1] == 1))[0] + 1
    replans = [i for i in lk_back if t[i] - t[onset] < 5.9]
    res.replan_count = len(replans)
    if replans:
        relax = int(replans[0])
        res.relax_t = float(t[relax])
        consistent = np.where(verdict[relax:] == 0)[0]
        if len(consistent):
            res.consistent_delay = float(consistent[0] * log.dt)
        above = np.where(k_h[relax:] > 0.99)[0]
        if len(above):
            res.recover_delay = float(above[0] * log.dt)

    # single-step gain change at every verdict switch, against the endpoint
    # offset plus the local curve slope over one step
    lam, gamma, dt = cfg.authority.lam, cfg.authority.gamma, cfg.dt
    switch_steps = np.where(verdict[1:] != verdict[:-1])[0] + 1
    slope = 0.5 * lam * (1.0 / math.cosh(lam * (dt - gamma))) ** 2 * dt
    bound = (1.0 - math.tanh(lam)) / 2.0 + slope
    for i in switch_steps:
        res.switch_jumps.append((float(t[i]), float(abs(k_h[i] - k_h[i - 1])), bound))
    return res


@dataclass(slots=True)
class Check:
    name: str
    passed: bool
    detail: str


def _check_gain_curve_endpoints(rng: random.Random) -> Check:
    worst_half = 0.0
    worst_drop0 = 0.0
    worst_rec0 = 0.0
    for _ in range(1000):
        ks = rng.uniform(1e-6, 1.0 - 1e-6)
        worst_half = max(worst_half, abs(gain_drop(ks, 1.0) - ks / 2.0))
        worst_drop0 = max(worst_drop0, abs(gain_drop(ks, 0.0) - ks) / ks)
        worst_rec0 = max(worst_rec0, abs(gain_recover(ks, 0.0) - ks))
    ok = worst_half <= 1e-12 and worst_drop0 <= 3.36e-4 and worst_rec0 <= 3.36e-4
    return Check(
        "gain curve endpoints",
        ok,
        f"half-gain err {worst_half:.2e}, drop t=0 rel {worst_drop0:.3e}, "
        f"recover t=0 abs {worst_rec0:.3e}",
    )


def _check_bezier_boundaries(rng: random.Random) -> Check:
    geom = LaneGeometry()
    worst = 0.0
    for _ in range(100):
        v_x = rng.uniform(10.0, 35.0)
        dt_lc = rng.uniform(3.0, 10.0)
        y0 = rng.uniform(0.0, geom.lane_width)
        plan = plan_lane_change(0.0, y0, 1, geom, v_x, dt_lc)
        if plan.length != v_x * dt_lc:
            return Check("bezier boundaries", False, "L != v_x * dT_LC")
        for x_end, y_end in ((0.0, y0), (plan.length, plan.y_end)):
            y, heading, curv = plan.eval(x_end)
            worst = max(worst, abs(y - y_end), abs(heading), abs(curv))
    return Check("bezier boundaries", worst <= 1e-9, f"worst endpoint residual {worst:.2e}")


def _check_truth_table() -> Check:
    delta = 0.05
    cases = [
        (-1.0, 2 * delta, Verdict.INCONSISTENT),
        (-1.0, delta, Verdict.CONSISTENT),
        (-1.0, delta / 2, Verdict.CONSISTENT),
        (0.0, 2 * delta, Verdict.CONSISTENT),
        (0.0, delta, Verdict.CONSISTENT),
        (0.0, delta / 2, Verdict.CONSISTENT),
        (1.0, 2 * delta, Verdict.CONSISTENT),
        (1.0, delta, Verdict.CONSISTENT),
        (1.0, delta / 2, Verdict.CONSISTENT),
    ]
    bad = [(s, b) for s, b, want in cases if classify(s, b, delta) != want]
    return Check("consistency truth table", not bad, f"mismatches: {bad}" if bad else "9/9")


def _check_steady_state_yaw() -> Check:
    p = VehicleParams()
    delta_f = 0.01
    v = VehicleState()
    dt = 1.0 / 60.0
    for _ in range(int(20.0 / dt)):
        v = step_vehicle(v, delta_f, dt, p)
    wheelbase = p.l_f + p.l_r
    k_us = p.m * (p.l_r * p.c_r - p.l_f * p.c_f) / (wheelbase * p.c_f * p.c_r)
    r_ref = v.v_x * delta_f / (wheelbase + k_us * v.v_x**2)
    rel = abs(v.r - r_ref) / abs(r_ref)
    return Check("steady-state yaw rate", rel <= 0.005, f"relative error {rel:.2e}")


def _check_pseudo_work_oracle(cfg: SimConfig) -> Check:
    sub = copy.deepcopy(cfg)
    sub.scenario.geometry.course_length = 1500.0
    sub.scenario.events = [e for e in sub.scenario.events if e.trigger_x < 1300.0][:1]
    log = run_trial("strong-normal", sub, seed=3)
    n_int = round(cfg.consistency.window_s / log.dt)
    f_h = log["tau_hapi"] * log["e_theta_dot"]
    f_d = log["tau_driver"] * log["e_theta_dot"]
    worst = 0.0
    for i in range(0, len(log), 97):
        a = max(i - n_int, 0)
        if i - a < 1:
            continue
        w_h = np.trapezoid(f_h[a:i + 1], dx=log.dt) / cfg.consistency.window_s
        w_d = np.trapezoid(f_d[a:i + 1], dx=log.dt) / cfg.consistency.window_s
        worst = max(worst, abs(w_h - log["w_hapi"][i]), abs(w_d - log["w_dr"][i]))
    return Check("pseudo-work window vs oracle", worst <= 1e-9, f"worst |diff| {worst:.2e}")


def _check_false_lc(cfg: SimConfig) -> list[Check]:
    res = run_false_lc_episode(cfg)
    checks = [
        Check(
            "false LC: detection <= 1.5 s",
            res.detect_delay is not None and res.detect_delay <= 1.5,
            f"detect delay {res.detect_delay}",
        ),
        Check(
            "false LC: gain collapse <= 2 s",
            res.collapse_delay is not None and res.collapse_delay <= 2.0,
            f"collapse delay {res.collapse_delay}",
        ),
        Check(
            "false LC: exactly one re-plan",
            res.replan_count == 1,
            f"re-plans {res.replan_count}",
        ),
        Check(
            "false LC: recovery <= 3 s",
            res.recover_delay is not None and res.recover_delay <= 3.0,
            f"recover delay {res.recover_delay}",
        ),
    ]
    jumps_ok = all(jump <= bound for _, jump, bound in res.switch_jumps)
    worst = max((jump for _, jump, _ in res.switch_jumps), default=0.0)
    checks.append(
        Check(
            "false LC: gain continuity at switches",
            bool(res.switch_jumps) and jumps_ok,
            f"worst switch step {worst:.2e} vs bound "
            f"{res.switch_jumps[0][2]:.2e}" if res.switch_jumps else "no switches",
        )
    )
    k_h = res.log["k_h"]
    checks.append(
        Check(
            "false LC: K_h within [0, 1]",
            bool(np.all((k_h >= 0.0) & (k_h <= 1.0))),
            f"range [{k_h.min():.4f}, {k_h.max():.4f}]",
        )
    )
    return checks


def run_all_checks(cfg: SimConfig | None = None) -> list[Check]:
    """Execute every canned scenario and invariant check."""
    cfg = cfg if cfg is not None else default_config()
    rng = random.Random(2024)
    checks = [
        _check_gain_curve_endpoints(rng),
        _check_bezier_boundaries(rng),
        _check_truth_table(),
        _check_steady_state_yaw(),
        _check_pseudo_work_oracle(cfg),
    ]
    checks.extend(_check_false_lc(cfg))
    return checks
