"""Run configuration: every tunable of the simulator in one place.

The full default configuration is embedded here; a YAML file overrides any
subset of it. Every constant the underlying publication left open (detector
threshold, controller gains, segmentation thresholds, ...) is visible and
overridable through this module, and `dump_default_yaml` prints the complete
set.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import yaml

from .authority import AuthorityConfig
from .controller import ControllerGains
from .dynamics import ColumnParams, VehicleParams
from .trajectory import LaneGeometry

KMH = 1.0 / 3.6


@dataclass(slots=True)
class LcEventSpec:
    trigger_x: float          # m, where the driver decides to change
    target_lane: int
    has_lead: bool = True     # False = free change (no slower lead vehicle)


def _default_events() -> list[LcEventSpec]:
    # Four changes on the two-lane course, alternating direction from the
    # start lane; the third is the free change to the left.
    return [
        LcEventSpec(trigger_x=1200.0, target_lane=1, has_lead=True),
        LcEventSpec(trigger_x=3000.0, target_lane=0, has_lead=True),
        LcEventSpec(trigger_x=4800.0, target_lane=1, has_lead=False),
        LcEventSpec(trigger_x=6600.0, target_lane=0, has_lead=True),
    ]


@dataclass(slots=True)
class ScenarioConfig:
    geometry: LaneGeometry = field(default_factory=LaneGeometry)
    events: list[LcEventSpec] = field(default_factory=_default_events)
    ego_speed: float = 70.0 * KMH        # m/s
    deficit_min_kmh: float = 5.0         # lead vehicle speed deficit range
    deficit_max_kmh: float = 15.0
    start_lane: int = 0
    speed_dip_enabled: bool = False      # slow toward the lead before each LC
    dip_ramp_accel: float = 1.5          # m/s^2 used by the speed profile
    dip_lead_in: float = 150.0           # m before the trigger the dip starts


@dataclass(slots=True)
class ConsistencyConfig:
    delta: float = 0.05      # pseudo-work gap threshold (N m rad/s)
    window_s: float = 1.0
    debounce: int = 3        # consecutive raw verdicts before publishing
    use_estimated_driver_torque: bool = False  # Eq.-estimate instead of true torque


@dataclass(slots=True)
class ControllerConfig:
    gains: ControllerGains = field(default_factory=ControllerGains)
    tau_max: float = 5.0               # applied-torque saturation (N m)
    preview_t: float = 1.0             # s
    e_theta_dot_lowpass_hz: float = 10.0  # 0 disables the derivative filter
    use_heading_error_term: bool = False  # K_theta acts on e_theta instead of theta_sw
    ref_accel_enabled: bool = True     # inertia feedforward from plan curvature
    dis_mismatch: float = 1.0          # disturbance-estimate scaling


@dataclass(slots=True)
class PredictorConfig:
    kind: str = "oracle"               # oracle | heuristic | external
    head_threshold: float = 0.3
    head_window_s: float = 0.5
    drift_window_s: float = 0.5
    horizon: float = 3.0


@dataclass(slots=True)
class DriverConfigParams:
    # mirrors driver.DriverParams; kept flat here for YAML friendliness
    gain_y: float = 2.0
    gain_psi: float = 12.0
    grip_stiffness: float = 8.0
    grip_damping: float = 2.0
    preview_t: float = 1.0
    reaction_delay: float = 0.2
    noise_std: float = 0.3
    stiffen_factor: float = 4.0
    glance_lead: float = 1.0
    delta_t_lc: float = 7.5
    overrule: bool = False
    comply_with_assist: bool = True


@dataclass(slots=True)
class MetricsConfig:
    psi_on_deg: float = 0.5      # yaw threshold starting an LC segment
    lc_rearm_s: float = 0.5      # quiet-yaw dwell before a new segment may start
    psi_off_deg: float = 0.2     # yaw threshold ending an LC segment
    swrr_gap_deg: float = 3.0
    settle_window_s: float = 3.0  # overshoot measurement window after LC end
    lk_buffer_s: float = 8.0     # max delta_T_LC; LK-area buffer = this * v
    lk_margin_m: float = 50.0    # extra exclusion around each LC zone


@dataclass(slots=True)
class SimConfig:
    dt: float = 1.0 / 60.0
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    column: ColumnParams = field(default_factory=ColumnParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    consistency: ConsistencyConfig = field(default_factory=ConsistencyConfig)
    authority: AuthorityConfig = field(default_factory=AuthorityConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    driver: DriverConfigParams = field(default_factory=DriverConfigParams)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    conditions: list[str] = field(default_factory=lambda: [
        "manual",
        "strong-rapid", "strong-normal", "strong-gentle",
        "weak-rapid", "weak-normal", "weak-gentle",
    ])
    seeds: list[int] = field(default_factory=lambda: list(range(1, 13)))

    def validate(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        self.vehicle.validate()
        self.column.validate()
        self.scenario.geometry.validate()
        if self.predictor.kind not in ("oracle", "heuristic", "external"):
            raise ValueError(f"unknown predictor kind {self.predictor.kind!r}")
        if self.consistency.delta <= 0.0:
            raise ValueError("consistency.delta must be positive")


class ConfigError(ValueError):
    """Raised when a configuration file cannot be parsed or validated."""


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, list):
        return [_to_plain(v) for v in obj]
    return obj


def _from_plain(cls: type, data: dict) -> Any:
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r} for {cls.__name__}")
        target = _NESTED.get((cls, key))
        if target is LcEventSpec:  # list-valued
            kwargs[key] = [_from_plain(LcEventSpec, v) for v in value]
        elif target is not None:
            kwargs[key] = _from_plain(target, value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


_NESTED: dict[tuple, type] = {
    (SimConfig, "vehicle"): VehicleParams,
    (SimConfig, "column"): ColumnParams,
    (SimConfig, "controller"): ControllerConfig,
    (SimConfig, "consistency"): ConsistencyConfig,
    (SimConfig, "authority"): AuthorityConfig,
    (SimConfig, "predictor"): PredictorConfig,
    (SimConfig, "driver"): DriverConfigParams,
    (SimConfig, "scenario"): ScenarioConfig,
    (SimConfig, "metrics"): MetricsConfig,
    (ControllerConfig, "gains"): ControllerGains,
    (ScenarioConfig, "geometry"): LaneGeometry,
    (ScenarioConfig, "events"): LcEventSpec,
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def default_config() -> SimConfig:
    return SimConfig()


def dump_default_yaml() -> str:
    return yaml.safe_dump(_to_plain(default_config()), sort_keys=False)


def load_config(path: str | None) -> SimConfig:
    """Defaults, overridden by the YAML file at `path` when given."""
    if path is None:
        return default_config()
    try:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config root must be a mapping, got {type(user).__name__}")
    merged = _merge(_to_plain(default_config()), user)
    try:
        cfg = _from_plain(SimConfig, merged)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg
