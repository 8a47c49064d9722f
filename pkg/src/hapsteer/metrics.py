"""Driving-performance metrics computed from trial logs.

Lane-keeping measures (SDLP, SWRR) are evaluated only over lane-keeping
areas: the course minus a buffer around each scripted lane-change zone, the
same exclusion for every condition so group comparisons are like-for-like.
Lane-change measures (duration, overshoot, steering RMS/peak) are evaluated
per maneuver on segments recovered from the yaw-angle trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import DriveLog

Z_95 = 1.959963984540054  # two-sided 0.95 normal quantile


def sdlp(lateral_positions: np.ndarray) -> float:
    """Standard deviation of lane position (sample SD, N-1 denominator)."""
    x = np.asarray(lateral_positions, dtype=float)
    if x.size < 2:
        raise ValueError("SDLP needs at least two samples")
    return float(np.std(x, ddof=1))


def stationary_points(series: np.ndarray) -> list[int]:
    """Indices of direction changes of a sampled trace, endpoints included.

    Plateaus count as a single stationary point at their last sample.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n == 0:
        return []
    if n == 1:
        return [0]
    points = [0]
    prev_dir = 0
    for i in range(1, n):
        diff = x[i] - x[i - 1]
        if diff == 0.0:
            continue
        direction = 1 if diff > 0.0 else -1
        if prev_dir != 0 and direction != prev_dir:
            points.append(i - 1)  # last sample of any plateau at the extremum
        prev_dir = direction
    if points[-1] != n - 1:
        points.append(n - 1)
    return points


def count_reversals(theta: np.ndarray, gap_threshold: float) -> int:
    """Steering reversals by the stationary-point/gap method.

    A reversal is an excursion between successive stationary points (the
    trace endpoints included) that starts at a genuine direction change and
    exceeds the gap threshold; the leading excursion from the start of the
    trace is not a reversal.
    """
    pts = stationary_points(theta)
    count = 0
    for a, b in zip(pts[1:-1], pts[2:]):
        if abs(theta[b] - theta[a]) > gap_threshold:
            count += 1
    return count


def swrr(theta_sw: np.ndarray, duration: float, gap_threshold: float = math.radians(3.0)) -> float:
    """Steering wheel reversal rate in reversals per minute."""
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    return count_reversals(np.asarray(theta_sw, dtype=float), gap_threshold) / (duration / 60.0)


@dataclass(slots=True)
class LcSegment:
    start_idx: int
    end_idx: int
    start_t: float
    end_t: float
    direction: int      # +1 = left, -1 = right
    start_lane: int
    target_lane: int
    truncated: bool = False  # closed at course end, not by the yaw criterion

    @property
    def duration(self) -> float:
        return self.end_t - self.start_t


def segment_lc(
    log: DriveLog,
    lane_width: float = 3.5,
    psi_on_deg: float = 0.5,
    psi_off_deg: float = 0.2,
    rearm_s: float = 0.5,
) -> list[LcSegment]:
    """Recover lane-change maneuvers from the yaw-angle trace.

    A segment starts when |psi| rises through psi_on with the lateral drift
    agreeing in direction, and ends when |psi| falls below psi_off while the
    vehicle is inside the target lane. A candidate whose yaw settles while
    the vehicle is still in its origin lane never left it and is discarded
    (a transient yaw blip is not a lane change). The on/off hysteresis plus
    a re-arm dwell (the yaw must stay below psi_off for rearm_s before a new
    start may fire) prevents double counting: the settle oscillation right
    after a sharp change would otherwise open a second segment. An
    unterminated segment is closed at the last record and flagged truncated.
    """
    psi = log["psi"]
    y = log["y"]
    t = log["t"]
    n = len(psi)
    psi_on = math.radians(psi_on_deg)
    psi_off = math.radians(psi_off_deg)
    drift_lag = 6  # ~0.1 s at 60 Hz
    rearm_n = max(round(rearm_s / log.dt), 1)

    segments: list[LcSegment] = []
    inside = False
    armed = True
    quiet = 0
    start_idx = 0
    direction = 0
    start_lane = target_lane = 0
    lane_count_guess = max(int(np.max(y) // lane_width) + 1, 2)

    def lane_of(yy: float) -> int:
        return min(max(int(yy // lane_width), 0), lane_count_guess - 1)

    for i in range(n):
        if not inside:
            if not armed:
                if abs(psi[i]) <= psi_off:
                    quiet += 1
                    if quiet >= rearm_n:
                        armed = True
                else:
                    quiet = 0
            elif abs(psi[i]) >= psi_on:
                drift = y[i] - y[max(i - drift_lag, 0)]
                if psi[i] * drift > 0.0:
                    direction = 1 if psi[i] > 0.0 else -1
                    start_lane = lane_of(y[max(i - drift_lag, 0)])
                    target_lane = min(max(start_lane + direction, 0), lane_count_guess - 1)
                    start_idx = i
                    inside = True
        else:
            if abs(psi[i]) <= psi_off:
                lane_now = lane_of(y[i])
                if lane_now == target_lane:
                    segments.append(
                        LcSegment(
                            start_idx=start_idx,
                            end_idx=i,
                            start_t=float(t[start_idx]),
                            end_t=float(t[i]),
                            direction=direction,
                            start_lane=start_lane,
                            target_lane=target_lane,
                        )
                    )
                    inside = False
                    armed = False
                    quiet = 0
                elif lane_now == start_lane:
                    inside = False  # settled without leaving the lane: no change
                    armed = False
                    quiet = 0
    if inside:
        segments.append(
            LcSegment(
                start_idx=start_idx,
                end_idx=n - 1,
                start_t=float(t[start_idx]),
                end_t=float(t[n - 1]),
                direction=direction,
                start_lane=start_lane,
                target_lane=target_lane,
                truncated=True,
            )
        )
    return segments


def overshoot(
    log: DriveLog,
    seg: LcSegment,
    target_center: float,
    settle_window_s: float = 3.0,
) -> tuple[float, bool]:
    """Post-change lateral excursion magnitude around the new lane center.

    Maximum |y - target_center| over the settling window after the segment
    end. Returns (value, truncated): truncated is True when the course ends
    before the window does and the maximum covers only what exists.
    """
    y = log["y"]
    n_window = round(settle_window_s / log.dt)
    a = seg.end_idx
    b = min(a + n_window + 1, len(y))
    window = y[a:b]
    return float(np.max(np.abs(window - target_center))), b < a + n_window + 1


def lc_stats(log: DriveLog, seg: LcSegment) -> tuple[float, float, float]:
    """(duration s, RMS steering velocity rad/s, peak |steering angle| rad)."""
    sl = slice(seg.start_idx, seg.end_idx + 1)
    theta_dot = log["theta_sw_dot"][sl]
    theta = log["theta_sw"][sl]
    rms = float(np.sqrt(np.mean(theta_dot * theta_dot)))
    return seg.duration, rms, float(np.max(np.abs(theta)))


def driver_torque_rms(log: DriveLog) -> float:
    """RMS of the driver's applied torque over the whole trial."""
    tau = log["tau_driver"]
    if tau.size == 0:
        raise ValueError("empty log")
    return float(np.sqrt(np.mean(tau * tau)))


# --- lane-keeping areas -------------------------------------------------------


def lk_mask(
    log: DriveLog,
    triggers: list[float],
    buffer_m: float,
    margin_m: float = 50.0,
) -> np.ndarray:
    """Boolean row mask of the lane-keeping areas.

    Excludes [trigger - margin, trigger + buffer + margin] around each
    scripted lane-change trigger; identical exclusions apply to every
    condition of a scenario.
    """
    x = log["x"]
    mask = np.ones(len(x), dtype=bool)
    for trig in triggers:
        mask &= ~((x >= trig - margin_m) & (x <= trig + buffer_m + margin_m))
    return mask


def _contiguous_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def sdlp_lk(log: DriveLog, triggers: list[float], buffer_m: float, margin_m: float = 50.0) -> float:
    """SDLP aggregated over lane-keeping areas (mean of per-area SDLPs)."""
    mask = lk_mask(log, triggers, buffer_m, margin_m)
    values = []
    for a, b in _contiguous_runs(mask):
        if b - a >= 2:
            values.append(sdlp(log["y"][a:b]))
    if not values:
        raise ValueError("no lane-keeping area contains enough samples")
    return float(np.mean(values))


def swrr_lk(
    log: DriveLog,
    triggers: list[float],
    buffer_m: float,
    margin_m: float = 50.0,
    gap_threshold: float = math.radians(3.0),
) -> float:
    """SWRR over lane-keeping areas: pooled reversal count over pooled time."""
    mask = lk_mask(log, triggers, buffer_m, margin_m)
    reversals = 0
    seconds = 0.0
    for a, b in _contiguous_runs(mask):
        if b - a >= 2:
            reversals += count_reversals(log["theta_sw"][a:b], gap_threshold)
            seconds += (b - a) * log.dt
    if seconds <= 0.0:
        raise ValueError("no lane-keeping area contains enough samples")
    return reversals / (seconds / 60.0)


# --- per-trial report and grouped summaries ------------------------------------


@dataclass
class TrialReport:
    condition: str
    seed: int
    sdlp: float
    swrr: float
    torque_rms: float
    lc_durations: list[float] = field(default_factory=list)
    lc_overshoots: list[float] = field(default_factory=list)
    lc_rms_steer_vel: list[float] = field(default_factory=list)
    lc_peak_angles: list[float] = field(default_factory=list)
    n_lc: int = 0


def trial_report(
    log: DriveLog,
    triggers: list[float],
    lane_width: float = 3.5,
    buffer_m: float = 8.0 * 70.0 / 3.6,
    margin_m: float = 50.0,
    psi_on_deg: float = 0.5,
    psi_off_deg: float = 0.2,
    rearm_s: float = 0.5,
    settle_window_s: float = 3.0,
    swrr_gap_deg: float = 3.0,
) -> TrialReport:
    """Full per-trial measure battery."""
    report = TrialReport(
        condition=log.condition,
        seed=log.seed,
        sdlp=sdlp_lk(log, triggers, buffer_m, margin_m),
        swrr=swrr_lk(log, triggers, buffer_m, margin_m, math.radians(swrr_gap_deg)),
        torque_rms=driver_torque_rms(log),
    )
    for seg in segment_lc(log, lane_width, psi_on_deg, psi_off_deg, rearm_s):
        duration, rms, peak = lc_stats(log, seg)
        center = (seg.target_lane + 0.5) * lane_width
        over, _ = overshoot(log, seg, center, settle_window_s)
        report.lc_durations.append(duration)
        report.lc_overshoots.append(over)
        report.lc_rms_steer_vel.append(rms)
        report.lc_peak_angles.append(peak)
    report.n_lc = len(report.lc_durations)
    return report


TRIAL_MEASURES = ("sdlp", "swrr", "torque_rms")
LC_MEASURES = ("lc_duration", "lc_overshoot", "lc_rms_steer_vel", "lc_peak_angle")
_LC_FIELD = {
    "lc_duration": "lc_durations",
    "lc_overshoot": "lc_overshoots",
    "lc_rms_steer_vel": "lc_rms_steer_vel",
    "lc_peak_angle": "lc_peak_angles",
}


@dataclass(slots=True)
class SummaryRow:
    group: str
    measure: str
    n: int
    mean: float
    sd: float
    ci_lo: float
    ci_hi: float


def _group_key(condition: str, by: str) -> str:
    if by == "condition":
        return condition
    if by == "strength":
        return condition.split("-")[0]
    if by == "lc_speed":
        return condition.split("-")[1] if "-" in condition else "manual"
    raise ValueError(f"unknown grouping {by!r}")


def summarize(reports: list[TrialReport], by: str = "condition") -> list[SummaryRow]:
    """Per-group mean, SD and 0.95 normal-approximation CI for each measure.

    Trial-level measures contribute one observation per trial; lane-change
    measures contribute one observation per maneuver.
    """
    if not reports:
        raise ValueError("no reports to summarize")
    samples: dict[tuple[str, str], list[float]] = {}
    for rep in reports:
        group = _group_key(rep.condition, by)
        for measure in TRIAL_MEASURES:
            samples.setdefault((group, measure), []).append(getattr(rep, measure))
        for measure in LC_MEASURES:
            samples.setdefault((group, measure), []).extend(getattr(rep, _LC_FIELD[measure]))

    rows = []
    for (group, measure), values in sorted(samples.items()):
        if not values:
            continue
        arr = np.asarray(values, dtype=float)
        mean = float(np.mean(arr))
        sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
        half = Z_95 * sd / math.sqrt(arr.size) if arr.size > 1 else 0.0
        rows.append(
            SummaryRow(
                group=group,
                measure=measure,
                n=arr.size,
                mean=mean,
                sd=sd,
                ci_lo=mean - half,
                ci_hi=mean + half,
            )
        )
    return rows


def summary_csv(rows: list[SummaryRow]) -> str:
    lines = ["group,measure,n,mean,sd,ci_lo,ci_hi"]
    for r in rows:
        lines.append(
            f"{r.group},{r.measure},{r.n},{r.mean!r},{r.sd!r},{r.ci_lo!r},{r.ci_hi!r}"
        )
    return "\n".join(lines) + "\n"


def summary_table(rows: list[SummaryRow]) -> str:
    header = f"{'group':<16} {'measure':<18} {'n':>5} {'mean':>12} {'sd':>12} {'0.95 CI':>26}"
    out = [header, "-" * len(header)]
    for r in rows:
        ci = f"[{r.ci_lo: .5g}, {r.ci_hi: .5g}]"
        out.append(
            f"{r.group:<16} {r.measure:<18} {r.n:>5} {r.mean:>12.5g} {r.sd:>12.5g} {ci:>26}"
        )
    return "\n".join(out)
