"""Haptic guidance torque law: instruction, driver-torque estimate, gain scaling.

The instruction torque feeds the column inverse dynamics, subtracts the
estimated driver contribution and adds disturbance compensation; the applied
torque is the instruction scaled by the authority gain and the condition
strength, then saturated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .dynamics import ColumnParams, SteeringState
from .trajectory import PreviewErrors


class Strength(enum.Enum):
    MANUAL = "manual"
    STRONG = "strong"
    WEAK = "weak"


WEAK_FACTOR = 0.4  # weak-assistance multiplier on K_h * tau_hapi


@dataclass(slots=True)
class ControllerGains:
    """Gains of the preview torque law.

    Defaults are tuned (linear eigenvalue analysis plus nonlinear runs) so
    the closed loop with no driver and full gain converges from a 1 m
    lateral offset without sustained oscillation, with margin over the whole
    10-30 m/s range. k_y is negative because the estimated driver torque
    enters the instruction with a minus sign while e_y is positive when the
    target lies to the left.
    """

    k_y: float = -12.0      # N m / m, on e_y
    k_yd: float = 28.0      # N m s / rad, on e_theta_dot
    k_theta: float = 25.0   # N m / rad, on theta_sw
    k_alpha: float = 1.0    # N m / rad, on front slip angle


@dataclass(slots=True)
class TorqueBreakdown:
    tau_hapi: float     # instruction torque (N m)
    tau_dr_hat: float   # estimated driver torque (N m)
    tau_dis_hat: float  # disturbance compensation (N m)
    tau_hapa: float     # applied haptic torque after gain and saturation (N m)


def estimate_driver_torque(
    e: PreviewErrors,
    theta_sw: float,
    alpha: float,
    g: ControllerGains,
    use_heading_error: bool = False,
) -> float:
    """Estimated human torque from the single preview-point errors.

    The third term uses theta_sw as printed; use_heading_error substitutes
    e_theta instead (documented alternative reading).
    """
    third = e.e_theta if use_heading_error else theta_sw
    return g.k_y * e.e_y + g.k_yd * e.e_theta_dot + g.k_theta * third + g.k_alpha * alpha


def disturbance_estimate(
    alpha: float,
    theta_sw_dot: float,
    params: ColumnParams,
    mismatch: float = 1.0,
) -> float:
    """Controller-side mirror of the plant load torque.

    mismatch = 1 reproduces the plant model exactly (perfect disturbance
    knowledge); other values scale the estimate to study robustness.
    """
    return mismatch * (
        params.sat_gain * alpha
        + params.friction_coulomb * math.tanh(theta_sw_dot / params.omega_eps)
    )


def guidance_instruction(
    s: SteeringState,
    theta_ref_ddot: float,
    e: PreviewErrors,
    alpha: float,
    params: ColumnParams,
    g: ControllerGains,
    tau_dis_hat: float | None = None,
    use_heading_error: bool = False,
) -> float:
    """Haptic guidance torque instruction.

    Column inertia acts on the reference steering acceleration; damping and
    stiffness act on the measured column state. When tau_dis_hat is None it
    is computed from alpha and the measured column rate with a unit mismatch.
    """
    if tau_dis_hat is None:
        tau_dis_hat = disturbance_estimate(alpha, s.theta_sw_dot, params)
    tau_dr_hat = estimate_driver_torque(e, s.theta_sw, alpha, g, use_heading_error)
    return (
        params.j_eq * theta_ref_ddot
        + params.b_eq * s.theta_sw_dot
        + params.k_fz * s.theta_sw
        - tau_dr_hat
        + tau_dis_hat
    )


def actual_haptic_torque(
    tau_hapi: float, k_h: float, strength: Strength, tau_max: float
) -> float:
    """Applied haptic torque: condition scaling of the instruction, saturated.

    Manual applies no torque; Strong applies K_h * tau_hapi; Weak applies
    0.4 * K_h * tau_hapi. The result is clamped to [-tau_max, tau_max] so a
    driver can always overrule the assistance.
    """
    if not 0.0 <= k_h <= 1.0:
        raise ValueError(f"k_h must lie in [0, 1], got {k_h}")
    if strength is Strength.MANUAL:
        return 0.0
    tau = k_h * tau_hapi
    if strength is Strength.WEAK:
        tau *= WEAK_FACTOR
    if tau > tau_max:
        return tau_max
    if tau < -tau_max:
        return -tau_max
    return tau


class ReferenceAccelEstimator:
    """Second difference of the reference wheel angle.

    The reference wheel angle follows the plan curvature (Ackermann road
    wheel angle times the steering ratio); differentiating it twice gives the
    inertia feedforward term of the instruction torque. On straight targets
    the term vanishes.
    """

    def __init__(self, dt: float, enabled: bool = True):
        self.dt = dt
        self.enabled = enabled
        self._prev: float | None = None
        self._prev2: float | None = None

    def reset(self) -> None:
        self._prev = None
        self._prev2 = None

    def update(self, theta_ref: float) -> float:
        if not self.enabled:
            return 0.0
        prev, prev2 = self._prev, self._prev2
        self._prev2 = prev
        self._prev = theta_ref
        if prev is None or prev2 is None:
            return 0.0
        return (theta_ref - 2.0 * prev + prev2) / (self.dt * self.dt)
