"""Lateral vehicle dynamics (2-DOF bicycle model) and steering-column dynamics.

Both plants advance with semi-implicit Euler at a fixed step (default 1/60 s).
Longitudinal speed is not integrated here: the scenario supplies the v_x
profile and the model holds it between steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(slots=True)
class VehicleState:
    x: float = 0.0      # longitudinal position (m)
    y: float = 0.0      # lateral position (m), increases leftward
    psi: float = 0.0    # yaw angle (rad), positive = nose left
    v_x: float = 19.444444444444443  # longitudinal speed (m/s), ~70 km/h
    v_y: float = 0.0    # body-frame lateral speed (m/s)
    r: float = 0.0      # yaw rate (rad/s)


@dataclass(slots=True)
class SteeringState:
    theta_sw: float = 0.0       # steering wheel angle (rad)
    theta_sw_dot: float = 0.0   # steering wheel angular velocity (rad/s)


@dataclass(slots=True)
class VehicleParams:
    m: float = 1500.0        # mass (kg)
    i_z: float = 2500.0      # yaw inertia (kg m^2)
    l_f: float = 1.2         # CG to front axle (m)
    l_r: float = 1.6         # CG to rear axle (m)
    c_f: float = 80000.0     # front cornering stiffness (N/rad)
    c_r: float = 80000.0     # rear cornering stiffness (N/rad)
    steer_ratio: float = 16.0  # steering wheel angle / road wheel angle

    def validate(self) -> None:
        for name in ("m", "i_z", "l_f", "l_r", "c_f", "c_r", "steer_ratio"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"VehicleParams.{name} must be positive")
        if self.steer_ratio <= 1.0:
            raise ValueError("steer_ratio must exceed 1")


@dataclass(slots=True)
class ColumnParams:
    j_eq: float = 0.05       # column inertia (kg m^2)
    b_eq: float = 0.3        # column damping (N m s/rad)
    k_fz: float = 1.0        # steering resistance (N m/rad)
    friction_coulomb: float = 0.1  # column friction magnitude (N m)
    sat_gain: float = 2.0    # self-aligning torque coefficient (N m/rad)
    theta_max: float = 7.85  # mechanical stop (rad), ~450 deg
    omega_eps: float = 0.01  # friction sign smoothing speed (rad/s)

    def validate(self) -> None:
        if self.j_eq <= 0.0:
            raise ValueError("j_eq must be positive")
        if self.b_eq < 0.0 or self.k_fz < 0.0:
            raise ValueError("b_eq and k_fz must be non-negative")


def front_slip_angle(v: VehicleState, delta_f: float, params: VehicleParams) -> float:
    """Front-axle side slip angle for road-wheel angle delta_f (rad).

    Raises ValueError when v_x is not positive (formula divides by v_x).
    """
    if v.v_x <= 0.0:
        raise ValueError(f"front_slip_angle requires v_x > 0, got {v.v_x}")
    return (v.v_y + params.l_f * v.r) / v.v_x - delta_f


def column_load_torque(alpha: float, theta_sw_dot: float, params: ColumnParams) -> float:
    """Self-aligning plus friction torque acting on the column (plant side).

    Friction sign is smoothed with tanh(theta_dot / omega_eps) to avoid
    chattering at rest.
    """
    return params.sat_gain * alpha + params.friction_coulomb * math.tanh(
        theta_sw_dot / params.omega_eps
    )


def step_vehicle(
    v: VehicleState, delta_f: float, dt: float, params: VehicleParams
) -> VehicleState:
    """Advance the linear 2-DOF bicycle model by one step.

    The lateral states (v_y, r) integrate the linear tire model with forward
    Euler; the pose (x, y, psi) then advances kinematically with the updated
    rates (semi-implicit). v_x is carried over unchanged.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not (
        math.isfinite(v.v_x)
        and math.isfinite(v.v_y)
        and math.isfinite(v.r)
        and math.isfinite(v.psi)
        and math.isfinite(delta_f)
    ):
        raise FloatingPointError("non-finite input to step_vehicle")
    if v.v_x <= 0.0:
        raise ValueError("step_vehicle requires v_x > 0")

    v_x = v.v_x
    alpha_f = (v.v_y + params.l_f * v.r) / v_x - delta_f
    alpha_r = (v.v_y - params.l_r * v.r) / v_x
    f_f = -params.c_f * alpha_f
    f_r = -params.c_r * alpha_r

    v_y = v.v_y + ((f_f + f_r) / params.m - v_x * v.r) * dt
    r = v.r + ((params.l_f * f_f - params.l_r * f_r) / params.i_z) * dt

    psi = v.psi + r * dt
    cos_psi = math.cos(psi)
    sin_psi = math.sin(psi)
    x = v.x + (v_x * cos_psi - v_y * sin_psi) * dt
    y = v.y + (v_x * sin_psi + v_y * cos_psi) * dt

    return VehicleState(x=x, y=y, psi=psi, v_x=v_x, v_y=v_y, r=r)


def step_column(
    s: SteeringState,
    tau_driver: float,
    tau_hapa: float,
    tau_load: float,
    dt: float,
    params: ColumnParams,
) -> SteeringState:
    """Advance the steering column by one step.

    Integrates J θ'' = tau_driver + tau_hapa - B θ' - K θ - tau_load with
    semi-implicit Euler, then clamps at the mechanical stops (velocity is
    zeroed when pushing into a stop).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    acc = (
        tau_driver
        + tau_hapa
        - params.b_eq * s.theta_sw_dot
        - params.k_fz * s.theta_sw
        - tau_load
    ) / params.j_eq
    theta_dot = s.theta_sw_dot + acc * dt
    theta = s.theta_sw + theta_dot * dt

    stop = params.theta_max
    if theta > stop:
        theta = stop
        if theta_dot > 0.0:
            theta_dot = 0.0
    elif theta < -stop:
        theta = -stop
        if theta_dot < 0.0:
            theta_dot = 0.0

    return SteeringState(theta_sw=theta, theta_sw_dot=theta_dot)
