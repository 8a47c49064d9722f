"""Batch command-line entry point.

Commands: run one trial, run the full condition matrix, recompute metrics
from stored logs, or execute the canned verification scenarios. All outputs
go under the output directory; the configuration file is never modified.
"""

from __future__ import annotations

import argparse
import fnmatch
import functools
import os
import sys

import numpy as np

from . import metrics as metrics_mod
from .config import ConfigError, SimConfig, dump_default_yaml, load_config
from .scenario import Condition, DriveLog, TrialAbort, run_matrix, run_trial
from .verify import run_all_checks

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _report_kwargs(cfg: SimConfig) -> dict:
    m = cfg.metrics
    return dict(
        triggers=[e.trigger_x for e in cfg.scenario.events],
        lane_width=cfg.scenario.geometry.lane_width,
        buffer_m=m.lk_buffer_s * cfg.scenario.ego_speed,
        margin_m=m.lk_margin_m,
        psi_on_deg=m.psi_on_deg,
        psi_off_deg=m.psi_off_deg,
        rearm_s=m.lc_rearm_s,
        settle_window_s=m.settle_window_s,
        swrr_gap_deg=m.swrr_gap_deg,
    )


def _trial_metrics_row(report: metrics_mod.TrialReport) -> str:
    def mean(xs):
        return float(np.mean(xs)) if xs else float("nan")

    return ",".join(
        [
            report.condition,
            str(report.seed),
            repr(report.sdlp),
            repr(report.swrr),
            repr(report.torque_rms),
            str(report.n_lc),
            repr(mean(report.lc_durations)),
            repr(mean(report.lc_overshoots)),
            repr(mean(report.lc_rms_steer_vel)),
            repr(mean(report.lc_peak_angles)),
        ]
    )


_TRIAL_METRICS_HEADER = (
    "condition,seed,sdlp,swrr,torque_rms,n_lc,"
    "lc_duration_mean,lc_overshoot_mean,lc_rms_steer_vel_mean,lc_peak_angle_mean"
)


def _append_trial_metrics(out_dir: str, report: metrics_mod.TrialReport) -> None:
    path = os.path.join(out_dir, "trial_metrics.csv")
    fresh = not os.path.exists(path)
    with open(path, "a") as fh:
        if fresh:
            fh.write(_TRIAL_METRICS_HEADER + "\n")
        fh.write(_trial_metrics_row(report) + "\n")


def cmd_run(args, cfg: SimConfig) -> int:
    os.makedirs(args.out, exist_ok=True)
    try:
        log = run_trial(args.condition, cfg, args.seed)
    except TrialAbort as exc:
        print(f"trial aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    path = os.path.join(args.out, f"{log.condition}_{log.seed}.csv")
    log.to_csv(path)
    report = metrics_mod.trial_report(log, **_report_kwargs(cfg))
    _append_trial_metrics(args.out, report)
    print(f"wrote {path} ({len(log)} rows)")
    print(
        f"sdlp={report.sdlp:.4f} m  swrr={report.swrr:.2f}/min  "
        f"torque_rms={report.torque_rms:.3f} N m  lane changes={report.n_lc}"
    )
    return EXIT_OK


def cmd_matrix(args, cfg: SimConfig) -> int:
    os.makedirs(args.out, exist_ok=True)
    slugs = [c.slug for c in Condition.table()]
    configured = args.conditions or cfg.conditions
    selected = []
    for pattern in configured:
        matched = fnmatch.filter(slugs, pattern)
        if not matched:
            print(f"no condition matches {pattern!r}", file=sys.stderr)
            return EXIT_CONFIG
        selected.extend(m for m in matched if m not in selected)
    seeds = args.seeds or cfg.seeds

    reducer = functools.partial(metrics_mod.trial_report, **_report_kwargs(cfg))
    results = run_matrix(
        selected, cfg, seeds, jobs=args.jobs, out_dir=args.out,
        reducer=reducer, keep_logs=False,
    )
    failures = [r for r in results if r.error]
    reports = [r.reduced for r in results if r.reduced is not None]
    for r in failures:
        print(f"FAILED {r.condition} seed {r.seed}: {r.error}", file=sys.stderr)
    print(f"{len(results) - len(failures)}/{len(results)} trials completed -> {args.out}")

    if reports:
        rows = []
        for grouping in ("condition", "strength", "lc_speed"):
            rows.extend(metrics_mod.summarize(reports, by=grouping))
        with open(os.path.join(args.out, "summary.csv"), "w") as fh:
            fh.write(metrics_mod.summary_csv(rows))
        print(metrics_mod.summary_table(rows))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_metrics(args, cfg: SimConfig) -> int:
    paths = args.logs
    if not paths:
        paths = sorted(
            os.path.join(args.out, name)
            for name in os.listdir(args.out)
            if name.endswith(".csv")
            and name not in ("summary.csv", "trial_metrics.csv")
        )
    if not paths:
        print("no trial logs found", file=sys.stderr)
        return EXIT_CONFIG
    reports = []
    for path in paths:
        log = DriveLog.from_csv(path)
        reports.append(metrics_mod.trial_report(log, **_report_kwargs(cfg)))
    rows = []
    for grouping in ("condition", "strength", "lc_speed"):
        rows.extend(metrics_mod.summarize(reports, by=grouping))
    out_path = os.path.join(args.out, "summary.csv")
    os.makedirs(args.out, exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(metrics_mod.summary_csv(rows))
    print(metrics_mod.summary_table(rows))
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_verify(args, cfg: SimConfig) -> int:
    checks = run_all_checks(cfg)
    width = max(len(c.name) for c in checks)
    failed = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {status}  {c.detail}")
        failed += not c.passed
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsteer",
        description="Deterministic closed-loop haptic shared steering simulator",
    )
    parser.add_argument(
        "--dump-config", action="store_true",
        help="print the full default configuration as YAML and exit",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--out", default="out", help="output directory (default: out)")

    p_run = sub.add_parser("run", help="run a single trial")
    common(p_run)
    p_run.add_argument("--condition", required=True, help="condition slug, e.g. strong-normal")
    p_run.add_argument("--seed", type=int, default=1)

    p_matrix = sub.add_parser("matrix", help="run the condition x seed matrix")
    common(p_matrix)
    p_matrix.add_argument(
        "--condition", dest="conditions", action="append", default=None,
        help="condition slug or glob (repeatable; default: config list)",
    )
    p_matrix.add_argument(
        "--seed", dest="seeds", action="append", type=int, default=None,
        help="seed (repeatable; default: config list)",
    )
    p_matrix.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p_metrics = sub.add_parser("metrics", help="summarize stored trial logs")
    common(p_metrics)
    p_metrics.add_argument("logs", nargs="*", help="trial CSVs (default: all in --out)")

    p_verify = sub.add_parser("verify", help="run the canned verification scenarios")
    common(p_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_config:
        print(dump_default_yaml(), end="")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = {
        "run": cmd_run,
        "matrix": cmd_matrix,
        "metrics": cmd_metrics,
        "verify": cmd_verify,
    }[args.command]
    return handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
