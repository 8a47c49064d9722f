"""Guidance target trajectories and single preview-point tracking errors.

Lateral coordinate convention (fixed for the whole package): y = 0 at the
right road edge and y increases leftward. Lane 0 is the lane adjacent to the
right edge, so lane i has its centerline at (i + 0.5) * lane_width. A lane
change to the left therefore increases y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dynamics import VehicleState

_COMB5 = (1.0, 5.0, 10.0, 10.0, 5.0, 1.0)


@dataclass(slots=True)
class LaneGeometry:
    lane_width: float = 3.5    # m
    lane_count: int = 2
    course_length: float = 8000.0  # m

    def validate(self) -> None:
        if self.lane_width <= 0.0:
            raise ValueError("lane_width must be positive")
        if self.lane_count < 2:
            raise ValueError("lane_count must be at least 2")

    def lane_center(self, lane_id: int) -> float:
        if not 0 <= lane_id < self.lane_count:
            raise ValueError(f"lane_id {lane_id} out of range")
        return (lane_id + 0.5) * self.lane_width

    def lane_of(self, y: float) -> int:
        """Index of the lane containing lateral position y (clamped to road)."""
        i = int(y // self.lane_width)
        return min(max(i, 0), self.lane_count - 1)


@dataclass(frozen=True)
class TrajectoryPlan:
    """Active guidance target: lane centerline (LK) or quintic Bezier (LC).

    For LC plans the curve runs from (start_x, y_start) to (start_x + length,
    y_end) with zero first and second lateral derivatives at both ends
    (control-point ordinates [y0, y0, y0, y1, y1, y1], abscissae evenly
    spaced). Past the end of the curve the plan degrades to lane keeping in
    the target lane.
    """

    lane_id: int            # target lane (LK: the kept lane)
    is_lane_change: bool
    start_x: float
    length: float           # L = v_x * delta_T_LC; 0.0 for LK plans
    y_start: float
    y_end: float
    control_points: tuple = ()          # 6 (x, y) pairs, LC only
    _poly: tuple = field(default=())    # power-basis coeffs of y(u), ascending

    def eval(self, x: float) -> tuple[float, float, float]:
        """Reference (y, heading, d2y/dx2) at longitudinal position x.

        heading = atan(dy/dx). x outside [start_x, start_x + length] clamps
        to the nearest endpoint, which for the far end equals lane keeping in
        the target lane (the boundary derivatives vanish).
        """
        if not self.is_lane_change:
            return self.y_end, 0.0, 0.0
        u = (x - self.start_x) / self.length
        if u <= 0.0:
            return self.y_start, 0.0, 0.0
        if u >= 1.0:
            return self.y_end, 0.0, 0.0
        c0, c1, c2, c3, c4, c5 = self._poly
        y = c0 + u * (c1 + u * (c2 + u * (c3 + u * (c4 + u * c5))))
        dy_du = c1 + u * (2.0 * c2 + u * (3.0 * c3 + u * (4.0 * c4 + u * 5.0 * c5)))
        d2y_du2 = 2.0 * c2 + u * (6.0 * c3 + u * (12.0 * c4 + u * 20.0 * c5))
        inv_l = 1.0 / self.length
        dy_dx = dy_du * inv_l
        return y, math.atan(dy_dx), d2y_du2 * inv_l * inv_l

    def completed(self, x: float) -> bool:
        return self.is_lane_change and x >= self.start_x + self.length


def _bernstein_to_power(ordinates: tuple[float, ...]) -> tuple[float, ...]:
    # c_k = C(5,k) * sum_i (-1)^(k-i) C(k,i) b_i
    coeffs = []
    for k in range(6):
        acc = 0.0
        for i in range(k + 1):
            acc += (-1.0) ** (k - i) * math.comb(k, i) * ordinates[i]
        coeffs.append(_COMB5[k] * acc)
    return tuple(coeffs)


def plan_lane_keep(lane_id: int, geometry: LaneGeometry) -> TrajectoryPlan:
    """Constant-centerline plan for the given lane."""
    center = geometry.lane_center(lane_id)
    return TrajectoryPlan(
        lane_id=lane_id,
        is_lane_change=False,
        start_x=0.0,
        length=0.0,
        y_start=center,
        y_end=center,
    )


def plan_lane_change(
    x_now: float,
    y_now: float,
    target_lane: int,
    geometry: LaneGeometry,
    v_x: float,
    delta_t_lc: float,
) -> TrajectoryPlan:
    """Quintic Bezier plan from the current position to the target lane center.

    The curve length follows from the lane-change duration: L = v_x *
    delta_t_lc. A target equal to the current position (already centered in
    the target lane) is rejected as a no-op and a lane-keep plan is returned
    instead.
    """
    if v_x <= 0.0:
        raise ValueError("plan_lane_change requires v_x > 0")
    if delta_t_lc <= 0.0:
        raise ValueError("delta_t_lc must be positive")
    y_end = geometry.lane_center(target_lane)
    if abs(y_end - y_now) < 1e-9:
        return plan_lane_keep(target_lane, geometry)

    length = v_x * delta_t_lc
    ordinates = (y_now, y_now, y_now, y_end, y_end, y_end)
    points = tuple((x_now + i * length / 5.0, ordinates[i]) for i in range(6))
    return TrajectoryPlan(
        lane_id=target_lane,
        is_lane_change=True,
        start_x=x_now,
        length=length,
        y_start=y_now,
        y_end=y_end,
        control_points=points,
        _poly=_bernstein_to_power(ordinates),
    )


@dataclass(slots=True)
class PreviewErrors:
    e_y: float          # lateral deviation at the preview point (m), +: target left
    e_theta: float      # heading error vs target tangent (rad), in (-pi, pi]
    e_theta_dot: float  # rate of e_theta (rad/s)


class PreviewErrorEstimator:
    """Single preview-point error tracker with one-sample derivative memory.

    The preview point sits v_x * t_preview ahead along the vehicle heading.
    e_theta_dot is a backward difference of e_theta, optionally smoothed by a
    first-order low-pass (10 Hz cutoff by default) because it feeds both the
    torque law and the pseudo-work integrals.
    """

    def __init__(self, t_preview: float = 1.0, dt: float = 1.0 / 60.0,
                 lowpass_hz: float | None = 10.0):
        if t_preview < 0.0:
            raise ValueError("t_preview must be non-negative")
        self.t_preview = t_preview
        self.dt = dt
        if lowpass_hz:
            rc = 1.0 / (2.0 * math.pi * lowpass_hz)
            self._alpha = dt / (dt + rc)
        else:
            self._alpha = 1.0
        self._prev_e_theta: float | None = None
        self._e_theta_dot = 0.0

    def reset(self) -> None:
        self._prev_e_theta = None
        self._e_theta_dot = 0.0

    def notify_plan_change(self) -> None:
        """Drop the derivative memory across a re-plan.

        Differencing e_theta across a reference switch would inject a
        one-sample spike (the reference heading jumps, the vehicle does not)
        into the torque law and the pseudo-work window.
        """
        self._prev_e_theta = None

    def update(self, v: VehicleState, plan: TrajectoryPlan) -> PreviewErrors:
        if v.v_x <= 0.0:
            raise ValueError("preview errors require v_x > 0")
        lookahead = v.v_x * self.t_preview
        x_p = v.x + lookahead * math.cos(v.psi)
        y_p = v.y + lookahead * math.sin(v.psi)
        y_ref, heading_ref, _ = plan.eval(x_p)

        e_y = y_ref - y_p
        e_theta = math.remainder(heading_ref - v.psi, math.tau)

        if self._prev_e_theta is None:
            self._e_theta_dot = 0.0
        else:
            raw = (e_theta - self._prev_e_theta) / self.dt
            self._e_theta_dot += self._alpha * (raw - self._e_theta_dot)
        self._prev_e_theta = e_theta
        return PreviewErrors(e_y=e_y, e_theta=e_theta, e_theta_dot=self._e_theta_dot)
