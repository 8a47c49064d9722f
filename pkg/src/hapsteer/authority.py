"""Authority gain scheduling and the assist-mode state machine.

The gain K_h scales the applied haptic torque between manual (0) and fully
automated (1). While the verdict says Inconsistent the gain slides down a
tanh curve toward 0; while Consistent it slides up a mirrored curve toward 1.
Both curves start within a tanh(-4) offset of the gain captured at the
verdict switch, so authority transfers without torque jumps. When the gain
has collapsed, the guidance trajectory is re-planned once to the lane the
vehicle currently occupies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .consistency import Verdict
from .dynamics import VehicleState
from .trajectory import LaneGeometry, TrajectoryPlan, plan_lane_change, plan_lane_keep

LK = 0
LC = 1

_SHIFT_EPS = 1e-6


@dataclass(slots=True)
class AuthorityConfig:
    lam: float = 4.0             # tanh steepness
    gamma: float = 1.0           # s, curve midpoint after a switch
    k_replant: float = 0.01      # gain threshold that fires the re-plan
    drift_threshold: float = 0.02  # m/s, lateral drift resolving LC direction
    pending_timeout: float = 0.5   # s, wait for drift before falling back
    default_direction: int = 1     # +1 = left


@dataclass(slots=True)
class AuthorityState:
    k_h: float = 1.0
    k_shifting: float = 1.0 - _SHIFT_EPS  # gain captured at the last verdict switch
    t_in_state: float = 5.0               # s since last switch; starts settled
    verdict: Verdict = Verdict.CONSISTENT
    mode: int = LK
    replanned: bool = False   # one re-plan per inconsistent episode
    prev_intent: int = 0
    pending_intent: bool = False
    pending_timer: float = 0.0


def gain_drop(k_shifting: float, t: float, lam: float = 4.0, gamma: float = 1.0) -> float:
    """Authority decay curve active while Inconsistent; K_h -> 0 as t grows."""
    return -0.5 * k_shifting * math.tanh(lam * (t - gamma)) + 0.5 * k_shifting


def gain_recover(k_shifting: float, t: float, lam: float = 4.0, gamma: float = 1.0) -> float:
    """Authority recovery curve active while Consistent; K_h -> 1 as t grows."""
    return 0.5 * (1.0 - k_shifting) * math.tanh(lam * (t - gamma)) + 0.5 * (1.0 + k_shifting)


def step_gain(
    a: AuthorityState,
    verdict_now: Verdict,
    dt: float,
    cfg: AuthorityConfig,
    capture: bool = True,
) -> AuthorityState:
    """Advance the gain schedule by one step (mutates and returns `a`).

    On a verdict switch the current gain is captured (clamped into (0, 1) so
    the curves stay well formed at the spectrum endpoints) and the in-state
    clock restarts. `capture=False` is a test hook that freezes the captured
    gain to let continuity checks detect the resulting jump.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if verdict_now != a.verdict:
        if capture:
            a.k_shifting = min(max(a.k_h, _SHIFT_EPS), 1.0 - _SHIFT_EPS)
        a.t_in_state = 0.0
        a.verdict = verdict_now
    a.t_in_state += dt
    if a.verdict == Verdict.INCONSISTENT:
        k = gain_drop(a.k_shifting, a.t_in_state, cfg.lam, cfg.gamma)
    else:
        k = gain_recover(a.k_shifting, a.t_in_state, cfg.lam, cfg.gamma)
    a.k_h = min(max(k, 0.0), 1.0)
    return a


def _resolve_direction(a: AuthorityState, vehicle: VehicleState, cfg: AuthorityConfig) -> int:
    """LC direction from lateral drift, falling back to heading then default.

    Returns +1 (left), -1 (right) or 0 (not resolvable yet). The predictor
    only signals a boundary crossing, not its direction, so the scheduler
    waits briefly for the vehicle itself to reveal it.
    """
    drift = vehicle.v_x * math.sin(vehicle.psi) + vehicle.v_y * math.cos(vehicle.psi)
    if abs(drift) > cfg.drift_threshold:
        return 1 if drift > 0.0 else -1
    if a.pending_timer < cfg.pending_timeout:
        return 0
    if vehicle.psi != 0.0:
        return 1 if vehicle.psi > 0.0 else -1
    return cfg.default_direction


def step_mode(
    a: AuthorityState,
    intent: int,
    verdict: Verdict,
    plan: TrajectoryPlan,
    vehicle: VehicleState,
    geometry: LaneGeometry,
    delta_t_lc: float,
    dt: float,
    cfg: AuthorityConfig,
) -> tuple[AuthorityState, TrajectoryPlan]:
    """Advance the assist-mode state machine; may replace the active plan.

    Transitions: a completed LC plan reverts to lane keeping in the target
    lane; a freshly detected intention (rising edge) while consistent and
    lane keeping starts an LC toward the adjacent lane once the direction is
    resolvable; a collapsed gain during an inconsistent episode re-plans to
    the currently occupied lane exactly once. Intent during LC or while
    inconsistent is ignored.
    """
    new_plan = plan

    if a.mode == LC and plan.completed(vehicle.x):
        a.mode = LK
        new_plan = plan_lane_keep(plan.lane_id, geometry)

    if verdict == Verdict.INCONSISTENT:
        a.pending_intent = False
        if a.k_h < cfg.k_replant and not a.replanned:
            current = geometry.lane_of(vehicle.y)
            new_plan = plan_lane_keep(current, geometry)
            a.mode = LK
            a.replanned = True
    else:
        a.replanned = False
        if intent == 1 and a.prev_intent == 0 and a.mode == LK:
            a.pending_intent = True
            a.pending_timer = 0.0
        if a.pending_intent and a.mode == LK:
            a.pending_timer += dt
            direction = _resolve_direction(a, vehicle, cfg)
            if direction != 0:
                target = geometry.lane_of(vehicle.y) + direction
                if not 0 <= target < geometry.lane_count:
                    target = geometry.lane_of(vehicle.y) - direction
                if 0 <= target < geometry.lane_count:
                    new_plan = plan_lane_change(
                        vehicle.x, vehicle.y, target, geometry, vehicle.v_x, delta_t_lc
                    )
                    a.mode = LC
                a.pending_intent = False
        if a.pending_intent and intent == 0:
            a.pending_intent = False

    a.prev_intent = intent
    return a, new_plan
