"""Driver/system intention consistency via modified pseudo-work.

Each step the monitor ingests the guidance instruction torque, the driver
torque and the heading-error rate. Windowed mean powers of each torque
against the heading-error rate measure how hard each agent works toward (or
against) the active target trajectory; the instantaneous torque product
narrows the detection zone to genuinely opposing efforts. No lateral vehicle
motion is required, so a contested false lane change is detectable even when
the car barely moves sideways.
"""

from __future__ import annotations

import enum
from collections import deque


class Verdict(enum.IntEnum):
    CONSISTENT = 0
    INCONSISTENT = 1


def classify(s_c: float, beta: float, delta: float) -> Verdict:
    """Consistency verdict from the torque product and pseudo-work gap.

    Inconsistent only when the torques oppose (s_c < 0) AND the guidance
    pseudo-work exceeds the driver's by more than delta. Boundary cases
    (s_c = 0, beta = delta) resolve to Consistent: assistance is kept unless
    clearly contested.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if s_c < 0.0 and beta > delta:
        return Verdict.INCONSISTENT
    return Verdict.CONSISTENT


class ConsistencyMonitor:
    """Windowed pseudo-work pair, torque product and debounced verdict.

    The ring buffer holds round(window_s / dt) + 1 samples so the trapezoidal
    integral spans exactly window_s seconds once full. Windowed means divide
    by window_s as in the defining integrals, so they ramp up from zero while
    the window fills; the published verdict is forced Consistent until the
    first fill, and afterwards only switches after `debounce` consecutive
    identical raw verdicts (the instantaneous product chatters near zero
    crossings).
    """

    def __init__(
        self,
        delta: float = 0.05,
        dt: float = 1.0 / 60.0,
        window_s: float = 1.0,
        debounce: int = 3,
    ):
        if delta <= 0.0:
            raise ValueError("delta must be positive")
        if dt <= 0.0 or window_s <= 0.0:
            raise ValueError("dt and window_s must be positive")
        self.delta = delta
        self.dt = dt
        self.intervals = round(window_s / dt)
        self.window_s = self.intervals * dt
        self._hapi = deque(maxlen=self.intervals + 1)  # tau_hapi * e_theta_dot
        self._dr = deque(maxlen=self.intervals + 1)    # tau_dr * e_theta_dot
        self._sum_hapi = 0.0
        self._sum_dr = 0.0
        self._pushes = 0
        self.debounce = debounce
        self._streak = 0
        self.s_c = 0.0
        self.w_hapi = 0.0
        self.w_dr = 0.0
        self.verdict = Verdict.CONSISTENT

    @property
    def beta(self) -> float:
        return self.w_hapi - self.w_dr

    @property
    def filled(self) -> bool:
        return len(self._hapi) == self._hapi.maxlen

    def _windowed_mean(self, buf: deque, total: float) -> float:
        n = len(buf)
        if n < 2:
            return 0.0
        integral = self.dt * (total - 0.5 * (buf[0] + buf[-1]))
        return integral / self.window_s

    def push(self, tau_hapi: float, tau_dr: float, e_theta_dot: float) -> None:
        """Ingest one fixed-step sample and refresh all detector outputs."""
        f_hapi = tau_hapi * e_theta_dot
        f_dr = tau_dr * e_theta_dot
        if len(self._hapi) == self._hapi.maxlen:
            self._sum_hapi -= self._hapi[0]
            self._sum_dr -= self._dr[0]
        self._hapi.append(f_hapi)
        self._dr.append(f_dr)
        self._sum_hapi += f_hapi
        self._sum_dr += f_dr
        self._pushes += 1
        if self._pushes % 2048 == 0:  # kill running-sum float drift
            self._sum_hapi = sum(self._hapi)
            self._sum_dr = sum(self._dr)

        self.w_hapi = self._windowed_mean(self._hapi, self._sum_hapi)
        self.w_dr = self._windowed_mean(self._dr, self._sum_dr)
        self.s_c = tau_hapi * tau_dr

        if not self.filled:
            self.verdict = Verdict.CONSISTENT
            self._streak = 0
            return
        raw = classify(self.s_c, self.beta, self.delta)
        if raw == self.verdict:
            self._streak = 0
        else:
            self._streak += 1
            if self._streak >= self.debounce:
                self.verdict = raw
                self._streak = 0

    def raw_verdict(self) -> Verdict:
        """Undebounced Table-style verdict for the current sample."""
        return classify(self.s_c, self.beta, self.delta)

    def reset_window(self) -> None:
        """Flush the pseudo-work window (e.g. after a collapse re-plan).

        The windowed integrals measure effort toward the active target
        trajectory; once the system abandons that target to re-capture the
        driver's intent, the buffered conflict products are stale and would
        re-trigger the verdict against the fresh, agreed target. The startup
        rule then holds the verdict Consistent while the window refills.
        """
        self._hapi.clear()
        self._dr.clear()
        self._sum_hapi = 0.0
        self._sum_dr = 0.0
        self.w_hapi = 0.0
        self.w_dr = 0.0
        self.s_c = 0.0
        self._streak = 0
        self.verdict = Verdict.CONSISTENT
