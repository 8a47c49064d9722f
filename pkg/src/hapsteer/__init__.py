"""Closed-loop haptic shared steering simulator.

Deterministic fixed-step simulation of a steering assistance system that
switches between lane keeping and lane changing, detects driver/system
intention conflicts through modified pseudo-work, and transfers control
authority along a continuous gain schedule.
"""

from .authority import AuthorityConfig, AuthorityState, gain_drop, gain_recover
from .config import SimConfig, default_config, dump_default_yaml, load_config
from .consistency import ConsistencyMonitor, Verdict, classify
from .controller import ControllerGains, Strength, actual_haptic_torque
from .dynamics import ColumnParams, SteeringState, VehicleParams, VehicleState
from .driver import DriverParams, IntentEvent, IntentSchedule, SimDriver
from .intent import FeatureSample, FeatureWindow, HeuristicPredictor, OraclePredictor
from .metrics import TrialReport, summarize, trial_report
from .scenario import Condition, DriveLog, TrialAbort, build_course, run_matrix, run_trial
from .trajectory import LaneGeometry, TrajectoryPlan, plan_lane_change, plan_lane_keep

__version__ = "0.1.0"

__all__ = [
    "AuthorityConfig", "AuthorityState", "gain_drop", "gain_recover",
    "SimConfig", "default_config", "dump_default_yaml", "load_config",
    "ConsistencyMonitor", "Verdict", "classify",
    "ControllerGains", "Strength", "actual_haptic_torque",
    "ColumnParams", "SteeringState", "VehicleParams", "VehicleState",
    "DriverParams", "IntentEvent", "IntentSchedule", "SimDriver",
    "FeatureSample", "FeatureWindow", "HeuristicPredictor", "OraclePredictor",
    "TrialReport", "summarize", "trial_report",
    "Condition", "DriveLog", "TrialAbort", "build_course", "run_matrix", "run_trial",
    "LaneGeometry", "TrajectoryPlan", "plan_lane_change", "plan_lane_keep",
    "__version__",
]
