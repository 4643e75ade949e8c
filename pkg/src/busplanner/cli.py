"""``busplan`` command line entry point."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import fixtures
from .errors import ModelDomainError, PlannerError, ScenarioError
from .oracle import check_plan, pose_of
from .planner import ABLATIONS, CONVERGED, INFEASIBLE, MAX_ITER, PlanResult, sqp_plan
from .plot import render_plot
from .scenario import Scenario, Weights, load_scenario_file

log = logging.getLogger(__name__)

EXIT_CODES = {CONVERGED: 0, INFEASIBLE: 2, MAX_ITER: 3}
EXIT_IO = 1

TRAJECTORY_HEADER = ["i", "s", "e_y", "e_psi", "u"] + [f"sigma_{k}" for k in range(1, 5)] + ["x", "y", "psi"]


@dataclass
class RunConfig:
    scenario_path: Path
    out_dir: Path
    emit_plot: bool = False
    ablation: str = "full"
    overrides: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.9g}"


def _round(obj):
    """Round every float to 9 significant digits so JSON output is stable."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        v = float(obj)
        return float(f"{v:.9g}") if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def apply_overrides(scenario: Scenario, overrides: dict) -> Scenario:
    sqp = scenario.sqp
    if "max_iter" in overrides:
        sqp = replace(sqp, max_iter=overrides["max_iter"])
    if "tol" in overrides:
        sqp = replace(sqp, tol=overrides["tol"])
    weights = Weights(*overrides["weights"]) if "weights" in overrides else scenario.weights
    return scenario.with_overrides(sqp=sqp, weights=weights)


def write_trajectory(fh, scenario: Scenario, result: PlanResult) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    n = result.horizon
    for i, (s, z) in enumerate(zip(result.stations, result.states)):
        u = result.controls[i] if i < n else None
        sigma = result.slacks[i - 1] if i > 0 else np.zeros(4)
        pose = pose_of(scenario.path, s, z)
        row = [str(result.start_index + i), _fmt(s), _fmt(z[0]), _fmt(z[1]), _fmt(u)]
        row += [_fmt(v) for v in sigma]
        row += [_fmt(pose.position.x), _fmt(pose.position.y), _fmt(pose.heading)]
        writer.writerow(row)


def summarize(scenario: Scenario, result: PlanResult, report, ablation: str) -> dict:
    return _round(
        {
            "scenario": scenario.name,
            "ablation": ablation,
            "status": result.status,
            "iterations": result.iterations,
            "failed_iteration": result.failed_iteration,
            "message": result.message,
            "objectives": result.objectives,
            "max_overhang_exit": report.max_overhang_exit if report is not None else None,
            "step_norms": result.step_norms,
            "linearization_gap": result.linearization_gap,
            "report": report.to_dict() if report is not None else None,
        }
    )


def run(config: RunConfig) -> int:
    try:
        scenario = load_scenario_file(config.scenario_path)
        scenario = apply_overrides(scenario, config.overrides)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        result = sqp_plan(scenario, ablation=config.ablation, keep_history=False)
    except PlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        report = check_plan(scenario, result)
    except ModelDomainError as exc:
        log.warning("oracle skipped: %s", exc)
        report = None

    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        with open(config.out_dir / "trajectory.csv", "w", encoding="utf-8", newline="") as fh:
            write_trajectory(fh, scenario, result)
        with open(config.out_dir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summarize(scenario, result, report, config.ablation), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if config.emit_plot:
            with open(config.out_dir / "plan.svg", "w", encoding="utf-8") as fh:
                fh.write(render_plot(scenario, result, report))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    line = f"{result.status} after {result.iterations} iteration(s)"
    if report is not None:
        line += f"; max overhang exit {report.max_overhang_exit:.3f} m"
    if result.message:
        line += f" ({result.message})"
    print(line)
    return EXIT_CODES[result.status]


def _weights(text: str):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected three numbers c,s,o") from None
    if len(values) != 3 or any(v < 0 or not math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("expected three non-negative numbers c,s,o")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="busplan", description="Road-aligned bus path planner")
    parser.add_argument("-v", "--verbose", action="store_true", help="log SQP iterations")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan a path for a scenario file")
    plan.add_argument("--scenario", required=True, type=Path)
    plan.add_argument("--out", required=True, type=Path)
    plan.add_argument("--svg", action="store_true", help="also write plan.svg")
    plan.add_argument("--ablation", choices=ABLATIONS, default="full")
    plan.add_argument("--max-iter", type=int)
    plan.add_argument("--tol", type=float)
    plan.add_argument("--weights", type=_weights, help="center,smooth,overhang")

    fix = sub.add_parser("fixture", help="print a bundled scenario as JSON")
    fix.add_argument("name", choices=sorted(fixtures.ALL))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "fixture":
        json.dump(fixtures.ALL[args.name](), sys.stdout, indent=1)
        sys.stdout.write("\n")
        return 0
    overrides = {}
    if args.max_iter is not None:
        if args.max_iter < 1:
            print("error: --max-iter must be at least 1", file=sys.stderr)
            return EXIT_IO
        overrides["max_iter"] = args.max_iter
    if args.tol is not None:
        if not args.tol > 0:
            print("error: --tol must be positive", file=sys.stderr)
            return EXIT_IO
        overrides["tol"] = args.tol
    if args.weights is not None:
        overrides["weights"] = args.weights
    config = RunConfig(args.scenario, args.out, args.svg, args.ablation, overrides)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
