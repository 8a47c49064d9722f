"""Lane-change intention prediction contract.

A fixed 3 s observation window of six driver/vehicle features is maintained
at the simulation rate; a predictor turns the window into a binary answer to
"will the vehicle cross a lane boundary within the next 3 s". The learned
sequence model that answered this in the original system is not part of the
artifact; the window/label contract and two built-in predictors (a scripted
oracle and a precursor heuristic) are, and an external model can be plugged
in through the flattened-vector boundary.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

logger = logging.getLogger(__name__)

SAMPLE_RATE_HZ = 60
WINDOW_SECONDS = 3.0
HORIZON_SECONDS = 3.0  # prediction lookahead m
FEATURES_PER_SAMPLE = 6


@dataclass(slots=True)
class FeatureSample:
    head: float      # normalized head yaw, [-1, 1]
    a: float         # longitudinal acceleration (m/s^2)
    v: float         # longitudinal velocity (m/s)
    theta_sw: float  # steering wheel angle (rad)
    d_adj: float     # lateral distance to the adjacent lane boundary (m)
    psi: float       # vehicle yaw angle (rad)


class FeatureWindow:
    """Ring buffer of the trailing k = 180 feature samples (3 s at 60 Hz)."""

    def __init__(self, k: int = round(WINDOW_SECONDS * SAMPLE_RATE_HZ),
                 dt: float = 1.0 / SAMPLE_RATE_HZ):
        self.k = k
        self.dt = dt
        self._buf: deque[FeatureSample] = deque(maxlen=k)
        self.pushes = 0

    def __len__(self) -> int:
        return len(self._buf)

    def __getitem__(self, i: int) -> FeatureSample:
        return self._buf[i]

    @property
    def full(self) -> bool:
        return len(self._buf) == self.k

    @property
    def t_newest(self) -> float:
        """Time of the newest sample, counting pushes from t = 0."""
        return (self.pushes - 1) * self.dt

    def push(self, s: FeatureSample) -> None:
        if not -1.0 <= s.head <= 1.0:
            logger.warning("head yaw %.4f outside [-1, 1]; clamped", s.head)
            s.head = min(max(s.head, -1.0), 1.0)
        self._buf.append(s)
        self.pushes += 1

    def flatten(self) -> np.ndarray:
        """Window as one vector, oldest sample first, feature order as pushed."""
        out = np.empty(len(self._buf) * FEATURES_PER_SAMPLE)
        for i, s in enumerate(self._buf):
            j = i * FEATURES_PER_SAMPLE
            out[j] = s.head
            out[j + 1] = s.a
            out[j + 2] = s.v
            out[j + 3] = s.theta_sw
            out[j + 4] = s.d_adj
            out[j + 5] = s.psi
        return out


class Predictor(Protocol):
    def predict(self, window: FeatureWindow) -> int: ...


class OraclePredictor:
    """Ground-truth predictor for scripted trials.

    Built from the known (estimated) lane-crossing times of the scripted
    driver; emits 1 exactly from `horizon` seconds before each crossing until
    the crossing itself.
    """

    def __init__(self, crossing_times: list[float], horizon: float = HORIZON_SECONDS):
        self.crossing_times = sorted(crossing_times)
        self.horizon = horizon

    def predict(self, window: FeatureWindow) -> int:
        if not window.full:
            return 0
        t = window.t_newest
        for c in self.crossing_times:
            if t < c - self.horizon:
                return 0
            if t < c:
                return 1
        return 0


class HeuristicPredictor:
    """Precursor-based stand-in for a learned model.

    Drivers glance before they steer and drift before they cross; the
    heuristic fires when the recent mean |head yaw| exceeds a threshold and a
    linear projection of the adjacent-lane distance reaches zero within the
    prediction horizon. All thresholds are configurable.
    """

    def __init__(
        self,
        head_threshold: float = 0.3,
        head_window_s: float = 0.5,
        drift_window_s: float = 0.5,
        horizon: float = HORIZON_SECONDS,
    ):
        self.head_threshold = head_threshold
        self.head_window_s = head_window_s
        self.drift_window_s = drift_window_s
        self.horizon = horizon

    def predict(self, window: FeatureWindow) -> int:
        if not window.full:
            return 0
        n_head = max(2, round(self.head_window_s / window.dt))
        n_drift = max(2, round(self.drift_window_s / window.dt))
        k = window.k

        head_sum = 0.0
        for i in range(k - n_head, k):
            head_sum += abs(window[i].head)
        if head_sum / n_head <= self.head_threshold:
            return 0

        # least-squares slope of d_adj over the drift window
        sum_t = sum_y = sum_ty = sum_tt = 0.0
        for j in range(n_drift):
            t = j * window.dt
            y = window[k - n_drift + j].d_adj
            sum_t += t
            sum_y += y
            sum_ty += t * y
            sum_tt += t * t
        denom = n_drift * sum_tt - sum_t * sum_t
        slope = (n_drift * sum_ty - sum_t * sum_y) / denom
        if slope >= 0.0:
            return 0
        d_now = window[k - 1].d_adj
        time_to_boundary = d_now / -slope
        return 1 if time_to_boundary <= self.horizon else 0


class ExternalPredictor:
    """Adapter for a drop-in model: flattened window vector in, one bit out."""

    def __init__(self, fn: Callable[[np.ndarray], int]):
        self.fn = fn

    def predict(self, window: FeatureWindow) -> int:
        if not window.full:
            return 0
        return 1 if self.fn(window.flatten()) else 0
