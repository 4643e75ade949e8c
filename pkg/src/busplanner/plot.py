"""Static SVG rendering of corridor regions, paths and footprints."""
from __future__ import annotations

import numpy as np

from .corridor import corridor_from_profiles
from .oracle import footprint, pose_of

FOOTPRINT_STRIDE = 5
OBSTACLE_BAND = 1.0  # drawn width of the band beyond each obstacle bound

COLORS = {
    "drivable": "#8fd18f",
    "sweepable": "#f2e27a",
    "obstacle": "#e06666",
    "reference": "#555555",
    "planned": "#1f4e9c",
    "footprint": "#1f4e9c",
}


def _num(v: float) -> str:
    return f"{v:.9g}"


def _points(xy) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in xy)


def _band(path, s, inner, outer):
    return np.vstack([path.to_cartesian_many(s, inner), path.to_cartesian_many(s[::-1], outer[::-1])])


def region_polygons(scenario):
    """``(kind, ring)`` pairs for every colored band along the whole path."""
    path = scenario.path
    corridor = scenario.corridor
    profile = corridor_from_profiles(path.stations, scenario.corridor_left, scenario.corridor_right)
    s = path.stations
    out = [("drivable", _band(path, s, corridor.drivable_right, corridor.drivable_left))]
    for dv, ob in ((corridor.drivable_left, corridor.obstacle_left), (corridor.drivable_right, corridor.obstacle_right)):
        if not np.allclose(dv, ob):
            out.append(("sweepable", _band(path, s, dv, ob)))
    for ob, sign in ((profile.obstacle_left, 1.0), (profile.obstacle_right, -1.0)):
        out.append(("obstacle", _band(path, s, ob, ob + sign * OBSTACLE_BAND)))
    for poly in scenario.obstacles:
        kind = "obstacle" if poly.label == "obstacle" else "sweepable"
        out.append((kind, poly.array))
    return out


def footprint_indices(n_states: int, stride: int = FOOTPRINT_STRIDE) -> list[int]:
    return list(range(0, n_states, stride))


def render_plot(scenario, result, report=None, stride: int = FOOTPRINT_STRIDE) -> str:
    path = scenario.path
    regions = region_polygons(scenario)
    stations = result.stations
    states = np.asarray(result.states)
    planned = np.array([pose_of(path, s, z).position for s, z in zip(stations, states)])
    feet = [footprint(pose_of(path, stations[i], states[i]), scenario.vehicle) for i in footprint_indices(len(states), stride)]

    everything = np.vstack([ring for _, ring in regions] + [planned] + feet)
    pad = 2.0
    x0, y0 = everything.min(axis=0) - pad
    x1, y1 = everything.max(axis=0) + pad
    w, h = x1 - x0, y1 - y0
    scale = 10.0

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(w * scale)}" height="{_num(h * scale)}" '
        f'viewBox="{_num(x0)} {_num(-y1)} {_num(w)} {_num(h)}">',
        f"<title>{scenario.name or 'plan'}: {result.status}</title>",
        '<g transform="scale(1,-1)">',
    ]
    for kind, ring in regions:
        lines.append(
            f'<polygon class="{kind}" fill="{COLORS[kind]}" stroke="none" points="{_points(ring)}"/>'
        )
    lines.append(
        f'<polyline class="reference" fill="none" stroke="{COLORS["reference"]}" stroke-width="0.08" '
        f'stroke-dasharray="0.5,0.3" points="{_points(path.points)}"/>'
    )
    lines.append(
        f'<polyline class="planned" fill="none" stroke="{COLORS["planned"]}" stroke-width="0.1" '
        f'points="{_points(planned)}"/>'
    )
    for ring in feet:
        lines.append(
            f'<polygon class="footprint" fill="none" stroke="{COLORS["footprint"]}" stroke-width="0.05" '
            f'points="{_points(ring)}"/>'
        )
    lines.append("</g>")
    if report is not None:
        lines.append(
            f'<desc>max_obstacle_penetration={_num(report.max_obstacle_penetration)} '
            f'max_wheel_excursion={_num(report.max_wheel_excursion)} '
            f'max_overhang_exit={_num(report.max_overhang_exit)}</desc>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
