import csv
import json
import re
import subprocess
import sys
from types import SimpleNamespace

import numpy as np
import pytest
from shapely.geometry import Polygon

from busplanner import fixtures
from busplanner.cli import TRAJECTORY_HEADER, main
from busplanner.oracle import sat_depth
from busplanner.plot import footprint_indices, render_plot

from conftest import load_fixture


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenarios")
    fixtures.write_all(root)
    return root


def plan(scenario_dir, out, name, *extra):
    return main(["plan", "--scenario", str(scenario_dir / f"{name}.json"), "--out", str(out), *extra])


def test_straight_road_exit_zero(scenario_dir, tmp_path):
    assert plan(scenario_dir, tmp_path, "straight_road") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "converged"
    assert summary["max_overhang_exit"] == 0.0
    with open(tmp_path / "trajectory.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRAJECTORY_HEADER
    assert rows[-1][4] == ""  # no control after the last station
    assert not (tmp_path / "plan.svg").exists()


def test_exit_codes(scenario_dir, tmp_path):
    assert plan(scenario_dir, tmp_path / "a", "tight_passage_no_sweep") == 2
    assert plan(scenario_dir, tmp_path / "b", "tight_passage", "--max-iter", "1") == 3
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["status"] == "max_iter" and summary["iterations"] == 1
    assert plan(scenario_dir, tmp_path / "c", "missing") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"path": {}}')
    assert main(["plan", "--scenario", str(bad), "--out", str(tmp_path / "d")]) == 1
    assert plan(scenario_dir, tmp_path / "e", "straight_road", "--tol", "-1") == 1


def test_overrides_reach_the_planner(scenario_dir, tmp_path):
    assert plan(scenario_dir, tmp_path, "turn90_wide", "--weights", "1,10,0", "--ablation", "center_only") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["ablation"] == "center_only"
    with pytest.raises(SystemExit):
        main(["plan", "--scenario", "x", "--out", "y", "--weights", "1,2"])


def test_repeated_runs_are_byte_identical(scenario_dir, tmp_path):
    for k in (1, 2):
        assert plan(scenario_dir, tmp_path / str(k), "tight_passage", "--svg") == 0
    for name in ("trajectory.csv", "summary.json", "plan.svg"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_fixture_command(capsys):
    assert main(["fixture", "straight_road"]) == 0
    assert json.loads(capsys.readouterr().out) == fixtures.straight_road()


def test_module_entry_point(scenario_dir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "busplanner", "plan", "--scenario", str(scenario_dir / "straight_road.json"),
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("converged")


def _polygons(svg, cls):
    out = []
    for m in re.finditer(rf'<polygon class="{cls}"[^>]*points="([^"]+)"', svg):
        out.append(np.array([[float(v) for v in p.split(",")] for p in m.group(1).split()]))
    return out


def test_footprint_count_for_forty_steps(straight_scenario):
    assert len(footprint_indices(41)) == 9
    states = np.zeros((41, 2))
    stations = straight_scenario.path.stations[12:53]
    result = SimpleNamespace(stations=stations, states=states, status="converged")
    svg = render_plot(straight_scenario, result)
    assert len(_polygons(svg, "footprint")) == 9
    assert len(_polygons(svg, "drivable")) == 1
    # no polygon obstacles: only the two bands beyond the profile bounds are red
    assert len(_polygons(svg, "obstacle")) == 2


def test_tight_passage_plot_is_clear_of_obstacles(scenario_dir, tmp_path):
    assert plan(scenario_dir, tmp_path, "tight_passage", "--svg") == 0
    svg = (tmp_path / "plan.svg").read_text()
    feet = _polygons(svg, "footprint")
    obstacles = _polygons(svg, "obstacle")
    assert feet and obstacles
    scenario = load_fixture("tight_passage")
    cars = [poly.array for poly in scenario.obstacles]
    for foot in feet:
        for car in cars:
            assert sat_depth(foot, car) <= 0.01
        for band in obstacles:
            assert Polygon(foot).intersection(Polygon(band).buffer(0)).area <= 0.01 * 12.0
