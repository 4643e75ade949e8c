"""Scenario documents used by the examples, the CLI samples and the test suite."""
from __future__ import annotations

import math

import numpy as np


def _line(start, heading, length, step=1.0):
    n = max(1, int(round(length / step)))
    t = np.linspace(0.0, length, n + 1)
    return np.column_stack([start[0] + t * math.cos(heading), start[1] + t * math.sin(heading)])


def _arc(start, heading, radius, angle, step=1.0):
    """Arc turning left for positive ``radius``."""
    n = max(2, int(round(abs(radius * angle) / step)))
    sign = 1.0 if radius > 0 else -1.0
    r = abs(radius)
    cx = start[0] - sign * r * math.sin(heading)
    cy = start[1] + sign * r * math.cos(heading)
    phi = np.linspace(0.0, angle, n + 1)
    th = heading + sign * phi
    return np.column_stack([cx + sign * r * np.sin(th), cy - sign * r * np.cos(th)])


def _chain(lead, radius, angle, tail, step=1.0):
    a = _line((0.0, 0.0), 0.0, lead, step)
    b = _arc(a[-1], 0.0, radius, angle, step)
    heading = angle if radius > 0 else -angle
    c = _line(b[-1], heading, tail, step)
    return np.vstack([a, b[1:], c[1:]])


def _doc(name, waypoints, left, right, *, start_s, obstacles=(), delta_s=0.5, **extra):
    doc = {
        "name": name,
        "path": {"waypoints": np.round(waypoints, 9).tolist(), "delta_s": delta_s},
        "vehicle": {"wheelbase": 6.0, "width": 2.55, "front_overhang": 2.7, "rear_overhang": 3.3},
        "start": {"s": start_s, "e_y": 0.0, "e_psi": 0.0, "u": 0.0},
        "limits": {"u_max": 1.0 / 12.0, "u_rate_max": 0.01},
        "corridor": {"left": left, "right": right},
        "obstacles": [{"vertices": [list(v) for v in o], "label": "obstacle"} for o in obstacles],
        "weights": {"center": 1.0, "smooth": 10.0, "overhang": 10.0},
        "sqp": {"max_iter": 20, "tol": 1e-3, "trust_y": 0.3, "trust_psi": 0.1, "trust_u": 0.02},
    }
    doc.update(extra)
    return doc


def straight_road(length=40.0, half_width=3.0, sweep=1.0, delta_s=0.5):
    """Wide straight road; the plan should stay on the centerline."""
    wp = _line((0.0, 0.0), 0.0, length)
    left = [[0.0, half_width, half_width + sweep], [length, half_width, half_width + sweep]]
    right = [[0.0, -half_width, -half_width - sweep], [length, -half_width, -half_width - sweep]]
    return _doc("straight_road", wp, left, right, start_s=5.0, delta_s=delta_s)


def turn90(radius=15.0, half_width=1.75, sweep=3.0, lead=25.0, tail=25.0, name="turn90"):
    """Left 90-degree turn with wide sweepable shoulders on both sides."""
    wp = _chain(lead, radius, 0.5 * math.pi, tail)
    total = lead + tail + radius * 0.5 * math.pi + 5.0
    left = [[0.0, half_width, half_width + sweep], [total, half_width, half_width + sweep]]
    right = [[0.0, -half_width, -half_width - sweep], [total, -half_width, -half_width - sweep]]
    return _doc(name, wp, left, right, start_s=6.0)


def tight_passage(radius=20.0, half_width=1.75, sweep=1.2, clearance=0.3, sweepable=True):
    """Left turn followed by a parked vehicle on the right that narrows the passage.

    At the parked vehicle, the obstacle-free width between its inner side and a
    post on the left shoulder equals the body width plus ``clearance``.
    Without ``sweepable`` the obstacle bounds coincide with the drivable bounds.
    """
    lead, tail = 20.0, 40.0
    angle = 0.5 * math.pi
    wp = _chain(lead, radius, angle, tail)
    arc_len = radius * angle
    total = lead + arc_len + tail + 5.0
    width = 2.55
    edge = half_width + (sweep if sweepable else 0.0)
    left = [[0.0, half_width, edge], [total, half_width, edge]]
    right = [[0.0, -half_width, -edge], [total, -half_width, -edge]]

    # parked car on the straight after the turn, inner side at e_y = car_inner
    car_inner = -1.0
    s_car = lead + arc_len + 12.0
    car_len = 4.5
    # after the turn the path heads along +y from (lead + radius, radius)
    x0 = lead + radius
    y_start = radius + (s_car - lead - arc_len)
    car = [
        [x0 - car_inner, y_start],
        [x0 - car_inner + 2.0, y_start],
        [x0 - car_inner + 2.0, y_start + car_len],
        [x0 - car_inner, y_start + car_len],
    ]
    post_inner = car_inner + width + clearance
    posts = []
    if post_inner < edge:
        posts.append(
            [
                [x0 - post_inner, y_start + 1.0],
                [x0 - post_inner, y_start + 2.5],
                [x0 - edge - 0.5, y_start + 2.5],
                [x0 - edge - 0.5, y_start + 1.0],
            ]
        )
    name = "tight_passage" if sweepable else "tight_passage_no_sweep"
    return _doc(name, wp, left, right, start_s=6.0, obstacles=[car] + posts)


ALL = {
    "straight_road": straight_road,
    "turn90": turn90,
    "turn90_wide": lambda: turn90(half_width=1.9, name="turn90_wide"),
    "turn90_r20": lambda: turn90(radius=20.0, name="turn90_r20"),
    "tight_passage": tight_passage,
    "tight_passage_no_sweep": lambda: tight_passage(sweepable=False),
}


def write_all(directory) -> list:
    """Write every bundled scenario as ``<name>.json`` into ``directory``."""
    import json
    from pathlib import Path

    out = []
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, make in ALL.items():
        target = directory / f"{name}.json"
        target.write_text(json.dumps(make(), indent=1) + "\n", encoding="utf-8")
        out.append(target)
    return out
