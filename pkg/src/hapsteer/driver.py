"""Simulated drivers that close the steering loop.

The driver tracks its OWN target trajectory with a delayed, noise-perturbed
preview law. The own target evolves from a schedule of lane-change events, so
it can differ from the guidance system's plan; that divergence is exactly
what the consistency detector is meant to catch. A head-yaw glance precedes
every scheduled change, feeding the intention features. An overruling driver
stiffens its tracking gains to fight guidance toward a target it does not
share.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .dynamics import SteeringState, VehicleState
from .trajectory import (
    LaneGeometry,
    PreviewErrorEstimator,
    TrajectoryPlan,
    plan_lane_change,
    plan_lane_keep,
)

HEAD_AMPLITUDE = 0.7   # normalized glance magnitude
HEAD_DECAY_S = 1.0     # glance decay time after the change completes


@dataclass(slots=True)
class DriverParams:
    gain_y: float = 2.0          # N m / m on own-preview lateral error
    gain_psi: float = 12.0       # N m / rad on own-preview heading error
    grip_stiffness: float = 8.0  # N m / rad, passive arm impedance (hands on wheel)
    grip_damping: float = 2.0    # N m s / rad
    preview_t: float = 1.0       # s
    reaction_delay: float = 0.2  # s, pure delay on the tracking command
    noise_std: float = 0.3       # N m, white torque noise
    stiffen_factor: float = 4.0  # tracking-gain multiplier while overruling
    glance_lead: float = 1.0     # s, head-yaw onset before own steering onset
    delta_t_lc: float = 7.5      # s, planned span of the driver's own changes;
                                 # its yaw-visible core then lasts ~6 s
    overrule: bool = False       # fight guidance whose target differs from own
    comply_with_assist: bool = True  # track the system plan when targets agree

    def validate(self) -> None:
        for name in ("gain_y", "gain_psi", "grip_stiffness", "grip_damping",
                     "preview_t", "reaction_delay", "noise_std", "glance_lead",
                     "delta_t_lc"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"DriverParams.{name} must be non-negative")
        if self.stiffen_factor < 1.0:
            raise ValueError("stiffen_factor must be at least 1")


@dataclass(frozen=True)
class IntentEvent:
    trigger_x: float      # m, where the driver decides to change
    target_lane: int
    comply_with_assist: bool = True


@dataclass(slots=True)
class IntentSchedule:
    events: list[IntentEvent] = field(default_factory=list)

    def validate(self, course_length: float) -> None:
        prev = -1.0
        for e in self.events:
            if e.trigger_x <= prev:
                raise ValueError("trigger positions must be strictly increasing")
            if not 0.0 < e.trigger_x < course_length:
                raise ValueError(f"trigger {e.trigger_x} outside the course")
            prev = e.trigger_x


class SimDriver:
    """Closed-loop driver: delayed noisy preview tracking of an own target."""

    def __init__(
        self,
        params: DriverParams,
        schedule: IntentSchedule,
        geometry: LaneGeometry,
        start_lane: int,
        seed_stream: random.Random,
        dt: float = 1.0 / 60.0,
    ):
        params.validate()
        schedule.validate(geometry.course_length)
        self.params = params
        self.schedule = schedule
        self.geometry = geometry
        self.dt = dt
        self.rng = seed_stream
        self.own_plan: TrajectoryPlan = plan_lane_keep(start_lane, geometry)
        self._preview = PreviewErrorEstimator(t_preview=params.preview_t, dt=dt)
        self._delay = deque([0.0] * round(params.reaction_delay / dt))
        self._prev_tracked: TrajectoryPlan | None = None
        self._next_event = 0
        self._active_event: IntentEvent | None = None
        self._glance_dir = 0
        self._glance_end_x: float | None = None
        self.resisting = False
        self.head_yaw = 0.0

    def set_resist(self, active: bool) -> None:
        """Stiffen the tracking gains while fighting unwanted guidance."""
        self.resisting = active

    @property
    def target_lane(self) -> int:
        return self.own_plan.lane_id

    def _upcoming(self) -> IntentEvent | None:
        if self._next_event < len(self.schedule.events):
            return self.schedule.events[self._next_event]
        return None

    def _update_own_plan(self, v: VehicleState) -> None:
        if self.own_plan.completed(v.x):
            self._glance_end_x = v.x
            self.own_plan = plan_lane_keep(self.own_plan.lane_id, self.geometry)
            self._active_event = None
        nxt = self._upcoming()
        if nxt is not None and v.x >= nxt.trigger_x and not self.own_plan.is_lane_change:
            self.own_plan = plan_lane_change(
                v.x, v.y, nxt.target_lane, self.geometry, v.v_x, self.params.delta_t_lc
            )
            self._active_event = nxt
            self._next_event += 1

    def _update_head(self, v: VehicleState) -> None:
        p = self.params
        target = 0.0
        nxt = self._upcoming()
        if nxt is not None:
            lead_x = nxt.trigger_x - p.glance_lead * v.v_x
            if lead_x <= v.x < nxt.trigger_x:
                direction = 1 if self.geometry.lane_center(nxt.target_lane) > v.y else -1
                self._glance_dir = direction
                frac = (v.x - lead_x) / max(nxt.trigger_x - lead_x, 1e-9)
                target = HEAD_AMPLITUDE * direction * min(frac, 1.0)
        if self.own_plan.is_lane_change:
            direction = 1 if self.own_plan.y_end > self.own_plan.y_start else -1
            self._glance_dir = direction
            target = HEAD_AMPLITUDE * direction
        elif self._glance_end_x is not None:
            decay_len = HEAD_DECAY_S * v.v_x
            frac = (v.x - self._glance_end_x) / max(decay_len, 1e-9)
            if frac < 1.0:
                target = HEAD_AMPLITUDE * self._glance_dir * (1.0 - max(frac, 0.0))
            else:
                self._glance_end_x = None
        self.head_yaw = target

    def step(
        self,
        v: VehicleState,
        s: SteeringState,
        system_plan: TrajectoryPlan,
        system_in_lc: bool,
        assist_active: bool = True,
    ) -> tuple[float, float]:
        """One driver step: returns (tau_driver, head_yaw).

        Deterministic for a given seed stream. The tracked target is the own
        plan, except that a complying driver follows the system's lane-change
        plan while it heads to the same lane the driver wants, and accepts
        the new lane once that assisted change completes (otherwise a faster
        assisted change would leave the driver steering back toward its own
        slower reference). With assist_active False (manual driving) the
        system plan is ignored entirely.
        """
        self._update_own_plan(v)

        comply = assist_active and self.params.comply_with_assist
        if (
            comply
            and self.own_plan.is_lane_change
            and not system_in_lc
            and not system_plan.is_lane_change
            and system_plan.lane_id == self.own_plan.lane_id
        ):
            self._glance_end_x = v.x
            self.own_plan = plan_lane_keep(self.own_plan.lane_id, self.geometry)
            self._active_event = None
        self._update_head(v)

        tracked = self.own_plan
        if comply and system_in_lc and system_plan.lane_id == self.own_plan.lane_id:
            tracked = system_plan
        if tracked is not self._prev_tracked:
            self._preview.notify_plan_change()
            self._prev_tracked = tracked

        e = self._preview.update(v, tracked)
        gain_scale = self.params.stiffen_factor if self.resisting else 1.0
        cmd = gain_scale * (self.params.gain_y * e.e_y + self.params.gain_psi * e.e_theta)

        if self._delay:
            self._delay.append(cmd)
            cmd = self._delay.popleft()
        # passive arm impedance: the hands hold the wheel at all times, which
        # is what keeps torque noise from integrating into free wheel motion.
        # An overruling driver co-contracts, so the stiffening also applies to
        # the (undelayed) grip stiffness. Damping stays at its base value: it
        # enters the column integration explicitly and must keep
        # b_eq + grip_damping < 2 * j_eq / dt.
        tau = (
            cmd
            - gain_scale * self.params.grip_stiffness * s.theta_sw
            - self.params.grip_damping * s.theta_sw_dot
        )
        if self.params.noise_std > 0.0:
            tau += self.rng.gauss(0.0, self.params.noise_std)
        return tau, self.head_yaw
