"""Experiment scenario: straight two-lane course, scripted LC events, trials.

A trial wires the whole per-step pipeline together at a fixed 60 Hz step:

    sense -> intent window/prediction -> consistency verdict -> authority
    (gain + mode/re-plan) -> preview errors -> torque law -> driver ->
    column/vehicle integration -> log

Every signal logged at step i is the value used to produce step i+1, so logs
can be replayed against the individual operations. Trials are pure functions
of (condition, config, seed): course deficits and driver noise draw from
per-seed streams that do not depend on the condition, which makes the
Strong/Weak pair for one seed differ only through the applied-torque scaling.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .authority import LC, AuthorityState, step_gain, step_mode
from .config import ScenarioConfig, SimConfig
from .consistency import ConsistencyMonitor
from .controller import (
    ReferenceAccelEstimator,
    Strength,
    actual_haptic_torque,
    disturbance_estimate,
    estimate_driver_torque,
    guidance_instruction,
)
from .driver import DriverParams, IntentEvent, IntentSchedule, SimDriver
from .dynamics import SteeringState, VehicleState, column_load_torque, step_column, step_vehicle
from .intent import FeatureSample, FeatureWindow, HeuristicPredictor, OraclePredictor
from .trajectory import LaneGeometry, PreviewErrorEstimator, plan_lane_keep

KMH = 1.0 / 3.6

DELTA_T_NAMES = {4.0: "rapid", 6.0: "normal", 8.0: "gentle"}
_NAME_DELTAS = {v: k for k, v in DELTA_T_NAMES.items()}


class TrialAbort(RuntimeError):
    """The vehicle left the road; carries a diagnostic message."""


@dataclass(frozen=True)
class Condition:
    """One row of the experiment design: torque strength x LC speed."""

    strength: Strength
    delta_t_lc: float | None  # s; None for manual driving

    def __post_init__(self):
        if self.strength is Strength.MANUAL:
            if self.delta_t_lc is not None:
                raise ValueError("manual condition has no LC assistance setting")
        elif self.delta_t_lc not in DELTA_T_NAMES:
            raise ValueError(f"delta_t_lc must be one of {sorted(DELTA_T_NAMES)}")

    @property
    def slug(self) -> str:
        if self.strength is Strength.MANUAL:
            return "manual"
        return f"{self.strength.value}-{DELTA_T_NAMES[self.delta_t_lc]}"

    @staticmethod
    def from_slug(slug: str) -> "Condition":
        if slug == "manual":
            return Condition(Strength.MANUAL, None)
        try:
            strength_s, speed_s = slug.split("-")
            return Condition(Strength(strength_s), _NAME_DELTAS[speed_s])
        except (ValueError, KeyError):
            raise ValueError(f"unknown condition slug {slug!r}") from None

    @staticmethod
    def table() -> list["Condition"]:
        """The seven experiment conditions."""
        rows = [Condition(Strength.MANUAL, None)]
        for strength in (Strength.STRONG, Strength.WEAK):
            for dt_lc in (4.0, 6.0, 8.0):
                rows.append(Condition(strength, dt_lc))
        return rows


@dataclass(slots=True)
class CourseEvent:
    trigger_x: float
    target_lane: int
    has_lead: bool
    deficit_kmh: float  # sampled lead-vehicle speed deficit (0 for free changes)


@dataclass(slots=True)
class Course:
    geometry: LaneGeometry
    events: list[CourseEvent]
    ego_speed: float
    start_lane: int
    speed_dip_enabled: bool
    dip_ramp_accel: float
    dip_lead_in: float

    def target_speed(self, x: float) -> float:
        if not self.speed_dip_enabled:
            return self.ego_speed
        for e in self.events:
            if e.has_lead and (
                e.trigger_x - self.dip_lead_in <= x <= e.trigger_x + 8.0 * self.ego_speed
            ):
                return self.ego_speed - e.deficit_kmh * KMH
        return self.ego_speed


def build_course(cfg: ScenarioConfig, seed: int) -> Course:
    """Instantiate the scripted course for one seed.

    Lead-vehicle deficits are drawn uniformly from the configured range, from
    a stream that depends only on the seed; geometry is seed-independent.
    Overlapping LC zones are a configuration error.
    """
    cfg.geometry.validate()
    rng = random.Random(f"{seed}:course")
    events = []
    prev_end = -math.inf
    zone = 8.0 * cfg.ego_speed  # longest assisted change
    for spec in cfg.events:
        if spec.trigger_x <= prev_end:
            raise ValueError(
                f"LC zones overlap: trigger at {spec.trigger_x} m begins before "
                f"the previous zone ends ({prev_end:.0f} m)"
            )
        if not 0.0 < spec.trigger_x < cfg.geometry.course_length:
            raise ValueError(f"trigger {spec.trigger_x} outside the course")
        deficit = (
            rng.uniform(cfg.deficit_min_kmh, cfg.deficit_max_kmh) if spec.has_lead else 0.0
        )
        events.append(CourseEvent(spec.trigger_x, spec.target_lane, spec.has_lead, deficit))
        prev_end = spec.trigger_x + zone
    return Course(
        geometry=cfg.geometry,
        events=events,
        ego_speed=cfg.ego_speed,
        start_lane=cfg.start_lane,
        speed_dip_enabled=cfg.speed_dip_enabled,
        dip_ramp_accel=cfg.dip_ramp_accel,
        dip_lead_in=cfg.dip_lead_in,
    )


def estimate_crossing_times(course: Course, driver_delta_t: float, dt: float) -> list[float]:
    """Boundary-crossing time estimates for the scripted driver.

    The driver starts its own change at each trigger and crosses the boundary
    at the curve midpoint, half its natural change time later. Trigger times
    come from walking the longitudinal speed profile, so the estimates remain
    valid when the lead-vehicle speed dip is enabled.
    """
    crossings = []
    t, x = 0.0, 0.0
    v = course.target_speed(0.0)
    max_dv = course.dip_ramp_accel * dt
    for event in course.events:
        while x < event.trigger_x:
            dv = course.target_speed(x) - v
            if dv > max_dv:
                dv = max_dv
            elif dv < -max_dv:
                dv = -max_dv
            v += dv
            x += v * dt
            t += dt
            if t > 86400.0:
                raise RuntimeError("speed profile never reaches the next trigger")
        crossings.append(t + 0.5 * driver_delta_t)
    return crossings


# --- DriveLog ---------------------------------------------------------------

LOG_COLUMNS = (
    "t", "x", "y", "psi", "v_x", "v_y", "r",
    "theta_sw", "theta_sw_dot",
    "tau_driver", "tau_hapi", "tau_hapa",
    "k_h", "mode", "verdict", "intent",
    "e_y", "e_theta", "e_theta_dot",
    "w_hapi", "w_dr", "s_c",
    "head_yaw", "lane_id",
)
_INT_COLUMNS = {"mode", "verdict", "intent", "lane_id"}
CSV_SCHEMA = "hapsteer-log v1"


@dataclass
class DriveLog:
    """Per-step telemetry of one trial; all metrics derive from this."""

    condition: str
    seed: int
    dt: float
    data: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.data["t"])

    def __getitem__(self, column: str) -> np.ndarray:
        return self.data[column]

    def to_csv(self, path: str) -> None:
        """Write the log atomically; floats use shortest round-trip form."""
        lines = [
            f"# {CSV_SCHEMA} condition={self.condition} seed={self.seed} dt={self.dt!r}",
            ",".join(LOG_COLUMNS),
        ]
        cols = [self.data[c].tolist() for c in LOG_COLUMNS]
        is_int = [c in _INT_COLUMNS for c in LOG_COLUMNS]
        for row in zip(*cols):
            lines.append(
                ",".join(str(v) if flag else repr(v) for v, flag in zip(row, is_int))
            )
        tmp = path + ".tmp"
        with open(tmp, "w", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")
        os.replace(tmp, path)

    @classmethod
    def from_csv(cls, path: str) -> "DriveLog":
        with open(path) as fh:
            meta_line = fh.readline().strip()
            header = fh.readline().strip().split(",")
            raw = np.loadtxt(fh, delimiter=",", ndmin=2)
        if not meta_line.startswith(f"# {CSV_SCHEMA}"):
            raise ValueError(f"{path} is not a {CSV_SCHEMA} file")
        if tuple(header) != LOG_COLUMNS:
            raise ValueError(f"{path} has an unexpected column set")
        meta = dict(kv.split("=") for kv in meta_line.split()[3:])
        data = {}
        for j, name in enumerate(LOG_COLUMNS):
            col = raw[:, j]
            data[name] = col.astype(np.int64) if name in _INT_COLUMNS else col
        return cls(
            condition=meta["condition"],
            seed=int(meta["seed"]),
            dt=float(meta["dt"]),
            data=data,
        )


# --- trial runner ------------------------------------------------------------


def _adjacent_boundary_distance(lane: int, y: float, geometry: LaneGeometry) -> float:
    """Distance to the internal lane boundary nearest the vehicle."""
    d = geometry.lane_width
    if lane == 0:
        boundary = d
    elif lane == geometry.lane_count - 1:
        boundary = lane * d
    else:
        lo, hi = lane * d, (lane + 1) * d
        boundary = lo if (y - lo) < (hi - y) else hi
    return abs(y - boundary)


def _build_predictor(cfg: SimConfig, course: Course):
    kind = cfg.predictor.kind
    if kind == "oracle":
        times = estimate_crossing_times(course, cfg.driver.delta_t_lc, cfg.dt)
        return OraclePredictor(times, horizon=cfg.predictor.horizon)
    if kind == "heuristic":
        return HeuristicPredictor(
            head_threshold=cfg.predictor.head_threshold,
            head_window_s=cfg.predictor.head_window_s,
            drift_window_s=cfg.predictor.drift_window_s,
            horizon=cfg.predictor.horizon,
        )
    raise ValueError("an 'external' predictor must be passed to run_trial explicitly")


def _driver_params(cfg: SimConfig) -> DriverParams:
    d = cfg.driver
    return DriverParams(
        gain_y=d.gain_y,
        gain_psi=d.gain_psi,
        grip_stiffness=d.grip_stiffness,
        grip_damping=d.grip_damping,
        preview_t=d.preview_t,
        reaction_delay=d.reaction_delay,
        noise_std=d.noise_std,
        stiffen_factor=d.stiffen_factor,
        glance_lead=d.glance_lead,
        delta_t_lc=d.delta_t_lc,
        overrule=d.overrule,
        comply_with_assist=d.comply_with_assist,
    )


def run_trial(
    condition: Condition | str,
    cfg: SimConfig,
    seed: int,
    predictor=None,
    intent_override: Callable[[float], int] | None = None,
    schedule: IntentSchedule | None = None,
    max_steps: int | None = None,
) -> DriveLog:
    """Run one closed-loop trial to the end of the course.

    Deterministic for a given (condition, cfg, seed). `intent_override`
    forces the intention bit (OR-ed with the predictor output) and is how
    verification scenarios inject a false LC trigger. `schedule` overrides
    the driver's scripted events (default: one per course LC event).
    """
    if isinstance(condition, str):
        condition = Condition.from_slug(condition)
    cfg.validate()

    dt = cfg.dt
    geometry = cfg.scenario.geometry
    course = build_course(cfg.scenario, seed)
    if schedule is None:
        schedule = IntentSchedule(
            [
                IntentEvent(e.trigger_x, e.target_lane, cfg.driver.comply_with_assist)
                for e in course.events
            ]
        )
    driver = SimDriver(
        _driver_params(cfg),
        schedule,
        geometry,
        course.start_lane,
        random.Random(f"{seed}:driver"),
        dt=dt,
    )
    if predictor is None:
        predictor = _build_predictor(cfg, course)

    vparams = cfg.vehicle
    column = cfg.column
    gains = cfg.controller.gains
    tau_max = cfg.controller.tau_max
    strength = condition.strength
    use_heading = cfg.controller.use_heading_error_term
    mismatch = cfg.controller.dis_mismatch
    use_est_dr = cfg.consistency.use_estimated_driver_torque
    delta_t_lc = condition.delta_t_lc if condition.delta_t_lc is not None else 6.0
    acfg = cfg.authority
    wheelbase = vparams.l_f + vparams.l_r
    ratio = vparams.steer_ratio
    overrule = cfg.driver.overrule

    preview = PreviewErrorEstimator(
        cfg.controller.preview_t, dt, cfg.controller.e_theta_dot_lowpass_hz or None
    )
    ref_accel = ReferenceAccelEstimator(dt, enabled=cfg.controller.ref_accel_enabled)
    monitor = ConsistencyMonitor(
        delta=cfg.consistency.delta,
        dt=dt,
        window_s=cfg.consistency.window_s,
        debounce=cfg.consistency.debounce,
    )
    feature_window = FeatureWindow(k=round(3.0 / dt), dt=dt)
    astate = AuthorityState()
    plan = plan_lane_keep(course.start_lane, geometry)
    prev_plan = plan

    veh = VehicleState(v_x=course.target_speed(0.0))
    veh.y = geometry.lane_center(course.start_lane)
    steer = SteeringState()

    course_length = geometry.course_length
    road_left = geometry.lane_count * geometry.lane_width + 1.0
    max_dv = course.dip_ramp_accel * dt
    rows = []
    head_prev = 0.0
    a_long = 0.0
    step = 0

    while veh.x < course_length and (max_steps is None or step < max_steps):
        t = step * dt
        lane_id = geometry.lane_of(veh.y)
        delta_f = steer.theta_sw / ratio
        alpha = (veh.v_y + vparams.l_f * veh.r) / veh.v_x - delta_f

        # intention
        feature_window.push(
            FeatureSample(
                head=head_prev,
                a=a_long,
                v=veh.v_x,
                theta_sw=steer.theta_sw,
                d_adj=_adjacent_boundary_distance(lane_id, veh.y, geometry),
                psi=veh.psi,
            )
        )
        intent = predictor.predict(feature_window)
        if intent == 0 and intent_override is not None and intent_override(t):
            intent = 1

        # consistency verdict from samples through the previous step
        verdict = monitor.verdict

        # authority: gain schedule, then mode machine (may re-plan)
        step_gain(astate, verdict, dt, acfg)
        was_replanned = astate.replanned
        astate, plan = step_mode(
            astate, intent, verdict, plan, veh, geometry, delta_t_lc, dt, acfg
        )
        if astate.replanned and not was_replanned:
            monitor.reset_window()  # pseudo-work against the abandoned target is stale
        k_h = astate.k_h

        # preview errors against the active plan
        if plan is not prev_plan:
            preview.notify_plan_change()
            prev_plan = plan
        e = preview.update(veh, plan)

        # torque law
        _, _, curvature = plan.eval(veh.x)
        theta_ref_ddot = ref_accel.update(ratio * wheelbase * curvature)
        tau_dis_hat = disturbance_estimate(alpha, steer.theta_sw_dot, column, mismatch)
        tau_hapi = guidance_instruction(
            steer, theta_ref_ddot, e, alpha, column, gains, tau_dis_hat, use_heading
        )
        tau_hapa = actual_haptic_torque(tau_hapi, k_h, strength, tau_max)

        # driver (resists whenever guidance targets a lane it does not want)
        if overrule:
            driver.set_resist(plan.lane_id != driver.target_lane)
        tau_driver, head_now = driver.step(
            veh, steer, plan, astate.mode == LC, strength is not Strength.MANUAL
        )

        # consistency ingest for the next step
        if use_est_dr:
            tau_dr_sc = estimate_driver_torque(e, steer.theta_sw, alpha, gains, use_heading)
        else:
            tau_dr_sc = tau_driver
        monitor.push(tau_hapi, tau_dr_sc, e.e_theta_dot)

        rows.append(
            (
                t, veh.x, veh.y, veh.psi, veh.v_x, veh.v_y, veh.r,
                steer.theta_sw, steer.theta_sw_dot,
                tau_driver, tau_hapi, tau_hapa,
                k_h, astate.mode, int(verdict), intent,
                e.e_y, e.e_theta, e.e_theta_dot,
                monitor.w_hapi, monitor.w_dr, monitor.s_c,
                head_now, lane_id,
            )
        )

        # plant integration with this step's torques and wheel angle
        tau_load = column_load_torque(alpha, steer.theta_sw_dot, column)
        steer = step_column(steer, tau_driver, tau_hapa, tau_load, dt, column)
        veh = step_vehicle(veh, delta_f, dt, vparams)

        # longitudinal profile
        dv = course.target_speed(veh.x) - veh.v_x
        if dv > max_dv:
            dv = max_dv
        elif dv < -max_dv:
            dv = -max_dv
        veh.v_x += dv
        a_long = dv / dt
        head_prev = head_now

        if veh.y < -1.0 or veh.y > road_left:
            raise TrialAbort(
                f"vehicle left the road at t={t:.2f}s, x={veh.x:.1f}m, y={veh.y:.2f}m"
            )
        step += 1

    columns = list(zip(*rows))
    data = {}
    for name, values in zip(LOG_COLUMNS, columns):
        data[name] = (
            np.array(values, dtype=np.int64)
            if name in _INT_COLUMNS
            else np.array(values, dtype=np.float64)
        )
    return DriveLog(condition=condition.slug, seed=seed, dt=dt, data=data)


# --- batch runner -------------------------------------------------------------


@dataclass
class TrialResult:
    condition: str
    seed: int
    log: DriveLog | None = None
    path: str | None = None
    reduced: Any = None
    error: str | None = None


def _matrix_task(args) -> TrialResult:
    slug, seed, cfg, out_dir, reducer, keep_log = args
    try:
        log = run_trial(slug, cfg, seed)
    except TrialAbort as exc:
        return TrialResult(condition=slug, seed=seed, error=str(exc))
    path = None
    if out_dir is not None:
        path = os.path.join(out_dir, f"{slug}_{seed}.csv")
        log.to_csv(path)
    reduced = reducer(log) if reducer is not None else None
    return TrialResult(
        condition=slug,
        seed=seed,
        log=log if keep_log else None,
        path=path,
        reduced=reduced,
    )


def run_matrix(
    conditions,
    cfg: SimConfig,
    seeds,
    jobs: int = 1,
    out_dir: str | None = None,
    reducer: Callable[[DriveLog], Any] | None = None,
    keep_logs: bool = True,
) -> list[TrialResult]:
    """Run the cartesian product of conditions x seeds, each independently.

    Trials are independent and may execute in parallel worker processes; the
    result list order (and every log in it) is the same for any `jobs`
    setting. `reducer` maps each log to a small summary in the worker, which
    with keep_logs=False avoids holding every full log in memory.
    """
    slugs = [c if isinstance(c, str) else c.slug for c in conditions]
    if not slugs or not list(seeds):
        raise ValueError("conditions and seeds must be non-empty")
    tasks = [
        (slug, seed, cfg, out_dir, reducer, keep_logs)
        for slug in slugs
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_matrix_task, tasks))
    return [_matrix_task(task) for task in tasks]
