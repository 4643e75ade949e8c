"""Three-region lateral corridor: obstacle | sweepable | drivable | sweepable | obstacle.

Bounds are signed ``e_y`` values stored per path station. Wheels must stay within
the drivable band; the body may sweep into the sweepable bands but never past
the obstacle bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InfeasibleCorridorError, OutOfDomainError, ScenarioError

OBSTACLE = "obstacle"
SWEEPABLE_BLOCK = "sweepable_block"
LABELS = (OBSTACLE, SWEEPABLE_BLOCK)


class RegionBounds(NamedTuple):
    drivable_left: float
    drivable_right: float
    obstacle_left: float
    obstacle_right: float


@dataclass(frozen=True, eq=False)
class Corridor:
    stations: np.ndarray
    drivable_left: np.ndarray
    drivable_right: np.ndarray
    obstacle_left: np.ndarray
    obstacle_right: np.ndarray

    def __len__(self):
        return len(self.stations)

    def __getitem__(self, i) -> RegionBounds:
        return RegionBounds(
            float(self.drivable_left[i]),
            float(self.drivable_right[i]),
            float(self.obstacle_left[i]),
            float(self.obstacle_right[i]),
        )

    def validate(self) -> None:
        bad = np.flatnonzero(self.drivable_right > self.drivable_left)
        if bad.size:
            i = bad[0]
            raise ScenarioError(
                f"drivable_left {self.drivable_left[i]:.6g} < drivable_right "
                f"{self.drivable_right[i]:.6g} at station s={self.stations[i]:.6g}",
                "corridor",
            )
        bad = np.flatnonzero(
            (self.obstacle_left < self.drivable_left) | (self.obstacle_right > self.drivable_right)
        )
        if bad.size:
            i = bad[0]
            raise ScenarioError(
                f"obstacle bound inside drivable band at station s={self.stations[i]:.6g}",
                "corridor",
            )

    def bounds_many(self, s):
        """Linearly interpolated bounds at stations ``s`` as four arrays."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.stations[0], self.stations[-1]
        if np.any(s < lo - 1e-9) or np.any(s > hi + 1e-9):
            raise OutOfDomainError(f"corridor query outside [{lo:.6g}, {hi:.6g}]")
        return tuple(
            np.interp(s, self.stations, arr)
            for arr in (self.drivable_left, self.drivable_right, self.obstacle_left, self.obstacle_right)
        )


@dataclass(frozen=True)
class ObstaclePolygon:
    vertices: tuple
    label: str = OBSTACLE

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ScenarioError("polygon needs at least 3 (x, y) vertices", "obstacles")
        if self.label not in LABELS:
            raise ScenarioError(f"unknown label {self.label!r}", "obstacles")
        if _signed_area(verts) < 0:
            verts = verts[::-1]
        if _self_intersects(verts):
            raise ScenarioError("polygon is self-intersecting", "obstacles")
        object.__setattr__(self, "vertices", tuple(map(tuple, verts)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def convex_parts(self) -> list[np.ndarray]:
        """Counter-clockwise convex pieces (the polygon itself, or ear-clipped triangles)."""
        verts = self.array
        if is_convex(verts):
            return [verts]
        return ear_clip(verts)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, q1, q2):
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _self_intersects(v: np.ndarray) -> bool:
    n = len(v)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return True
    return False


def is_convex(v: np.ndarray) -> bool:
    n = len(v)
    return all(_cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= -1e-12 for i in range(n))


def ear_clip(v: np.ndarray) -> list[np.ndarray]:
    """Triangulate a simple counter-clockwise polygon."""
    idx = list(range(len(v)))
    tris = []
    while len(idx) > 3:
        for k in range(len(idx)):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            if _cross(v[a], v[b], v[c]) <= 0:
                continue
            tri = np.array([v[a], v[b], v[c]])
            if any(
                _point_in_triangle(v[j], tri) for j in idx if j not in (a, b, c)
            ):
                continue
            tris.append(tri)
            idx.pop(k)
            break
        else:
            raise ScenarioError("polygon could not be triangulated", "obstacles")
    tris.append(np.array([v[i] for i in idx]))
    return tris


def _point_in_triangle(p, tri):
    return all(_cross(tri[i], tri[(i + 1) % 3], p) >= 0 for i in range(3))


def bounds_at(corridor: Corridor, s: float) -> RegionBounds:
    return RegionBounds(*(float(v) for v in corridor.bounds_many(s)))


def corridor_from_profiles(stations, left: Sequence, right: Sequence) -> Corridor:
    """Sample piecewise-linear ``[s, drivable, obstacle]`` profiles at the path stations."""
    stations = np.asarray(stations, dtype=float)
    out = {}
    for side, prof in (("left", left), ("right", right)):
        arr = np.asarray(prof, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) < 1:
            raise ScenarioError("profile must be a list of [s, drivable, obstacle]", f"corridor.{side}")
        if np.any(np.diff(arr[:, 0]) < 0):
            raise ScenarioError("profile stations must be non-decreasing", f"corridor.{side}")
        tol = stations[1] - stations[0] if len(stations) > 1 else 0.0
        if arr[0, 0] > stations[0] + tol or arr[-1, 0] < stations[-1] - tol:
            raise ScenarioError(
                f"profile covers [{arr[0, 0]:.6g}, {arr[-1, 0]:.6g}] but path spans "
                f"[{stations[0]:.6g}, {stations[-1]:.6g}]",
                f"corridor.{side}",
            )
        out[f"drivable_{side}"] = np.interp(stations, arr[:, 0], arr[:, 1])
        out[f"obstacle_{side}"] = np.interp(stations, arr[:, 0], arr[:, 2])
    corridor = Corridor(stations=stations, **out)
    corridor.validate()
    return corridor


def _densify(verts: np.ndarray, spacing: float) -> np.ndarray:
    pts = []
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        m = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
        t = np.arange(m) / m
        pts.append(a + t[:, None] * (b - a))
    return np.vstack(pts)


def polygon_footprint(path, poly: ObstaclePolygon):
    """Road-aligned samples ``(s, e_y)`` of the polygon boundary that project onto the path."""
    pts = _densify(poly.array, path.delta_s / 10.0)
    s, e_y, status = path.to_frenet_many(pts, strict=False)
    ok = status == 0
    return s[ok], e_y[ok]


def apply_polygon_obstacle(corridor: Corridor, path, poly: ObstaclePolygon) -> Corridor:
    """Tighten the corridor so no part of ``poly`` remains inside the passable band.

    The polygon's footprint is padded by half a station along ``s``, and every
    station bracketing the padded footprint is tightened. Lateral extents are
    taken over the two adjacent segments, which keeps linear interpolation
    between stations conservative.
    """
    s, e_y = polygon_footprint(path, poly)
    if s.size == 0:
        raise ScenarioError("polygon does not project onto the reference path", "obstacles")
    ds = path.delta_s
    n = len(corridor) - 1
    lo_pad = s.min() - 0.5 * ds
    hi_pad = s.max() + 0.5 * ds
    i_lo = max(0, int(math.floor(lo_pad / ds + 1e-9)))
    i_hi = min(n, int(math.ceil(hi_pad / ds - 1e-9)))

    dl = corridor.drivable_left.copy()
    dr = corridor.drivable_right.copy()
    ol = corridor.obstacle_left.copy()
    orr = corridor.obstacle_right.copy()
    for i in range(i_lo, i_hi + 1):
        si = corridor.stations[i]
        window = np.abs(s - si) <= ds + 1e-9
        if not np.any(window):
            window = np.abs(s - si) <= np.min(np.abs(s - si)) + 1e-9
        lo = float(e_y[window].min())
        hi = float(e_y[window].max())
        if poly.label == OBSTACLE:
            left_lim, right_lim = ol[i], orr[i]
        else:
            left_lim, right_lim = dl[i], dr[i]
        if lo >= left_lim or hi <= right_lim:
            continue  # outside the band that this label restricts
        if lo > 0.0:
            on_left = True
        elif hi < 0.0:
            on_left = False
        else:
            gap_left = left_lim - hi
            gap_right = lo - right_lim
            if gap_left <= 0.0 and gap_right <= 0.0:
                raise InfeasibleCorridorError(
                    f"polygon spans the whole corridor at station s={si:.6g}", "obstacles"
                )
            on_left = gap_right >= gap_left
        if poly.label == OBSTACLE:
            if on_left:
                ol[i] = min(ol[i], lo)
                dl[i] = min(dl[i], ol[i])
            else:
                orr[i] = max(orr[i], hi)
                dr[i] = max(dr[i], orr[i])
        else:
            if on_left:
                dl[i] = min(dl[i], lo)
            else:
                dr[i] = max(dr[i], hi)
        if dr[i] > dl[i]:
            raise InfeasibleCorridorError(
                f"no drivable band left at station s={si:.6g}", "obstacles"
            )
    return replace(corridor, drivable_left=dl, drivable_right=dr, obstacle_left=ol, obstacle_right=orr)
