import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import Point, Polygon

from busplanner import fixtures
from busplanner.corridor import (
    OBSTACLE,
    SWEEPABLE_BLOCK,
    ObstaclePolygon,
    apply_polygon_obstacle,
    bounds_at,
    corridor_from_profiles,
    ear_clip,
    is_convex,
)
from busplanner.errors import InfeasibleCorridorError, OutOfDomainError, ScenarioError
from busplanner.scenario import load_scenario, scenario_from_dict

from conftest import circle_path, straight_path


def flat(path, drivable=3.0, obstacle=3.0):
    prof = [[0.0, drivable, obstacle], [path.length, drivable, obstacle]]
    neg = [[0.0, -drivable, -obstacle], [path.length, -drivable, -obstacle]]
    return corridor_from_profiles(path.stations, prof, neg)


def rect(x0, x1, y0, y1, label=OBSTACLE):
    return ObstaclePolygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), label)


def test_minimal_straight_document():
    scenario = scenario_from_dict(fixtures.straight_road())
    assert np.all(scenario.path.kappa == 0.0)
    c = scenario.corridor
    assert np.all(c.drivable_left == c.drivable_left[0])
    assert np.all(c.drivable_right == -c.drivable_left[0])


def test_turn_fixture_loads_with_expected_horizon():
    scenario = scenario_from_dict(fixtures.turn90())
    path = scenario.path
    assert path.n == int(path.length / path.delta_s)
    mid = np.argmin(np.abs(path.stations - (25.0 + 15.0 * np.pi / 4)))
    assert path.kappa[mid] == pytest.approx(1 / 15, rel=1e-3)


def test_crossed_bounds_name_the_station():
    doc = fixtures.straight_road()
    doc["corridor"]["left"] = [[0, 3, 3], [20, 3, 3], [21, -3.5, 3], [22, 3, 3], [40, 3, 3]]
    with pytest.raises(ScenarioError, match=r"station s=21"):
        scenario_from_dict(doc)


def test_document_errors():
    with pytest.raises(ScenarioError, match="line 1"):
        load_scenario("{ nope")
    doc = fixtures.straight_road()
    del doc["corridor"]
    with pytest.raises(ScenarioError, match="corridor"):
        scenario_from_dict(doc)
    doc = fixtures.straight_road()
    doc["vehicle"]["width"] = "wide"
    with pytest.raises(ScenarioError, match="vehicle.width"):
        scenario_from_dict(doc)
    doc = fixtures.straight_road()
    doc["start"]["e_y"] = 10.0
    with pytest.raises(ScenarioError, match="start.e_y"):
        scenario_from_dict(doc)
    doc = fixtures.straight_road()
    doc["sqp"]["bogus"] = 1
    with pytest.raises(ScenarioError, match="unknown"):
        scenario_from_dict(doc)


def test_round_trip_through_json():
    scenario = scenario_from_dict(fixtures.tight_passage())
    again = load_scenario(json.dumps(scenario.to_dict()))
    assert again.to_dict() == scenario.to_dict()


def test_bounds_at_examples(straight):
    c = corridor_from_profiles(straight.stations, [[0, 2, 4], [1, 3, 4], [60, 3, 4]], [[0, -2, -4], [60, -2, -4]])
    assert bounds_at(c, 0.5).drivable_left == pytest.approx(2.5)
    for i in (0, 1, 7, len(c) - 1):
        assert bounds_at(c, c.stations[i]) == c[i]
    assert bounds_at(flat(straight), 12.3) == bounds_at(flat(straight), 47.0)
    with pytest.raises(OutOfDomainError):
        bounds_at(c, 61.0)


def test_polygon_outside_obstacle_bounds_changes_nothing(straight):
    c = flat(straight, 2.0, 3.0)
    out = apply_polygon_obstacle(c, straight, rect(10, 20, 3.5, 5.0))
    for name in ("drivable_left", "drivable_right", "obstacle_left", "obstacle_right"):
        np.testing.assert_array_equal(getattr(out, name), getattr(c, name))


def test_rectangle_closed_form(straight):
    c = flat(straight)
    out = apply_polygon_obstacle(c, straight, rect(20, 30, 0.5, 3.5))
    s = out.stations
    inside = (s >= 20.0) & (s <= 30.0)
    assert np.all(np.abs(out.obstacle_left[inside] - 0.5) <= 0.01)
    assert np.all(out.drivable_left[inside] <= 0.5 + 1e-12)
    padded = (s >= 19.75) & (s <= 30.25)
    assert np.all(out.obstacle_left[padded] <= 0.5 + 0.01)
    far = (s < 19.0) | (s > 31.0)
    assert np.all(out.obstacle_left[far] == 3.0)
    np.testing.assert_array_equal(out.obstacle_right, c.obstacle_right)


def test_slalom_reproduces_both_notches(straight):
    c = flat(straight)
    out = apply_polygon_obstacle(c, straight, rect(10, 15, 1.0, 3.5))
    out = apply_polygon_obstacle(out, straight, rect(30, 35, -3.5, -1.2))
    s = out.stations
    first = (s >= 10) & (s <= 15)
    second = (s >= 30) & (s <= 35)
    assert np.allclose(out.obstacle_left[first], 1.0, atol=0.01)
    assert np.allclose(out.obstacle_right[second], -1.2, atol=0.01)
    assert np.all(out.obstacle_left[second] == 3.0)
    assert np.all(out.obstacle_right[first] == -3.0)


def test_sweepable_block_only_narrows_drivable(straight):
    c = flat(straight, 1.75, 3.0)
    out = apply_polygon_obstacle(c, straight, rect(10, 12, 1.0, 2.5, SWEEPABLE_BLOCK))
    s = out.stations
    inside = (s >= 10) & (s <= 12)
    assert np.allclose(out.drivable_left[inside], 1.0, atol=0.01)
    np.testing.assert_array_equal(out.obstacle_left, c.obstacle_left)


def test_blocking_polygon_is_rejected(straight):
    with pytest.raises(InfeasibleCorridorError):
        apply_polygon_obstacle(flat(straight), straight, rect(10, 12, -3.5, 3.5))


def test_polygon_validation():
    with pytest.raises(ScenarioError):
        ObstaclePolygon(((0, 0), (1, 0)))
    with pytest.raises(ScenarioError, match="self-intersecting"):
        ObstaclePolygon(((0, 0), (1, 1), (1, 0), (0, 1)))
    with pytest.raises(ScenarioError):
        ObstaclePolygon(((0, 0), (1, 0), (0, 1)), "lava")
    cw = ObstaclePolygon(((0, 0), (0, 1), (1, 0)))
    assert cw.vertices == ((1.0, 0.0), (0.0, 1.0), (0.0, 0.0))


def test_concave_polygon_decomposes():
    ell = np.array([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)], dtype=float)
    assert not is_convex(ell)
    parts = ear_clip(ell)
    assert all(is_convex(p) for p in parts)
    assert sum(Polygon(p).area for p in parts) == pytest.approx(Polygon(ell).area)


boxes = st.tuples(
    st.floats(5.0, 70.0), st.floats(1.0, 6.0), st.floats(-2.5, 2.5), st.floats(0.3, 1.5)
)


@given(box=boxes, sweep=st.booleans())
def test_monotone_safety(box, sweep):
    path = circle_path(30.0)
    c = flat(path, 2.5, 3.0)
    x0, w, y0, h = box
    s0 = x0
    corners = path.to_cartesian_many(np.array([s0, s0 + w, s0 + w, s0]), np.array([y0, y0, y0 + h, y0 + h]))
    poly = ObstaclePolygon(tuple(map(tuple, corners)), SWEEPABLE_BLOCK if sweep else OBSTACLE)
    try:
        out = apply_polygon_obstacle(c, path, poly)
    except InfeasibleCorridorError:
        return
    assert np.all(out.drivable_left <= c.drivable_left)
    assert np.all(out.drivable_right >= c.drivable_right)
    assert np.all(out.obstacle_left <= c.obstacle_left)
    assert np.all(out.obstacle_right >= c.obstacle_right)


@given(box=boxes)
def test_representation_soundness(box):
    path = circle_path(30.0)
    c = flat(path, 3.0, 3.0)
    x0, w, y0, h = box
    corners = path.to_cartesian_many(np.array([x0, x0 + w, x0 + w, x0]), np.array([y0, y0, y0 + h, y0 + h]))
    poly = ObstaclePolygon(tuple(map(tuple, corners)))
    try:
        out = apply_polygon_obstacle(c, path, poly)
    except InfeasibleCorridorError:
        return
    shape = Polygon(poly.array)
    rng = np.random.default_rng(int(x0 * 1000))
    s = rng.uniform(0.0, path.length, 400)
    dl, dr, _, _ = out.bounds_many(s)
    e = dr + rng.uniform(0.0, 1.0, s.size) * (dl - dr)
    pts = path.to_cartesian_many(s, e)
    assert not any(shape.contains(Point(p)) for p in pts)


def test_tight_passage_width():
    doc = fixtures.tight_passage()
    scenario = scenario_from_dict(doc)
    c = scenario.corridor
    width = c.obstacle_left - c.obstacle_right
    assert np.min(width) == pytest.approx(scenario.vehicle.width + 0.3, abs=0.02)
    no_sweep = scenario_from_dict(fixtures.tight_passage(sweepable=False)).corridor
    np.testing.assert_allclose(no_sweep.obstacle_left, no_sweep.drivable_left)
    np.testing.assert_allclose(no_sweep.obstacle_right, no_sweep.drivable_right)


def test_bundled_scenarios_match_fixtures():
    from importlib import resources

    root = resources.files("busplanner") / "scenarios"
    for name, make in fixtures.ALL.items():
        assert json.loads((root / f"{name}.json").read_text()) == make()
