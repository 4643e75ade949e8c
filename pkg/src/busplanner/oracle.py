"""Cartesian ground truth for planned paths.

Everything here works on world-frame polygons built from the nonlinear rollout
of the planned controls. Nothing reads the planner's linearized rows, so these
measurements can judge a plan independently of the approximations used to
produce it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon

from .corridor import corridor_from_profiles
from .distortion import body_points_world
from .errors import ProjectionError
from .geometry import CartesianPoint, CartesianPose, ReferencePath
from .vehicle import BodyPointSpec, VehicleGeometry, dynamics_rhs, rollout

FD_STEP_EY = 1e-4
FD_STEP_EPSI = 1e-4

# body corner order used in footprints
CORNERS = ("front_left", "front_right", "rear_right", "rear_left")


def pose_of(path: ReferencePath, s: float, z) -> CartesianPose:
    frame = path.frame_at(np.array([float(s)]))[0]
    x, y, tx, ty = frame
    e_y, e_psi = float(z[0]), float(z[1])
    return CartesianPose(CartesianPoint(x - e_y * ty, y + e_y * tx), math.atan2(ty, tx) + e_psi)


def _rectangle(pose: CartesianPose, lon_lo, lon_hi, half) -> np.ndarray:
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    x, y = pose.position
    local = np.array([[lon_hi, half], [lon_hi, -half], [lon_lo, -half], [lon_lo, half]])
    return np.column_stack(
        [x + local[:, 0] * c - local[:, 1] * s, y + local[:, 0] * s + local[:, 1] * c]
    )


def footprint(pose: CartesianPose, geom: VehicleGeometry) -> np.ndarray:
    """Body corners in ``CORNERS`` order."""
    return _rectangle(pose, geom.rear, geom.front, geom.half_width)


def wheelbase_rectangle(pose: CartesianPose, geom: VehicleGeometry) -> np.ndarray:
    return _rectangle(pose, 0.0, geom.wheelbase, geom.half_width)


def _densify_ring(ring: np.ndarray, spacing: float) -> np.ndarray:
    out = []
    for a, b in zip(ring, np.roll(ring, -1, axis=0)):
        m = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
        out.append(a + (np.arange(m) / m)[:, None] * (b - a))
    return np.vstack(out)


def _densify_many(rings: np.ndarray, spacing: float) -> np.ndarray:
    """Densify a stack of congruent rectangles the same way, shape ``(m, R, 2)``."""
    m, k, _ = rings.shape
    edges = np.roll(rings, -1, axis=1) - rings
    counts = [max(1, int(math.ceil(np.hypot(*edges[0, j]) / spacing))) for j in range(k)]
    parts = [
        rings[:, j, None, :] + (np.arange(c) / c)[None, :, None] * edges[:, j, None, :]
        for j, c in enumerate(counts)
    ]
    return np.concatenate(parts, axis=1)


def _outside_many(points: np.ndarray, polygon: Polygon) -> np.ndarray:
    m = points.shape[0]
    dist = outside_distance(points.reshape(-1, 2), polygon)
    return dist.reshape(m, -1).max(axis=1)


def sat_depth(a: np.ndarray, b: np.ndarray) -> float:
    """Penetration depth of two convex polygons by the separating-axis test.

    Returns the smallest translation that separates them, which is zero exactly
    when their interiors are disjoint.
    """
    depth = math.inf
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        norms = np.hypot(normals[:, 0], normals[:, 1])
        normals = normals[norms > 0] / norms[norms > 0, None]
        pa = a @ normals.T
        pb = b @ normals.T
        overlap = np.minimum(pa.max(0), pb.max(0)) - np.maximum(pa.min(0), pb.min(0))
        depth = min(depth, float(overlap.min()))
        if depth <= 0.0:
            return 0.0
    return depth


def point_depth(points: np.ndarray, polygon: Polygon) -> np.ndarray:
    """Distance of each point to the boundary when inside ``polygon``, else zero."""
    geoms = shapely.points(points)
    inside = shapely.contains(polygon, geoms)
    depth = shapely.distance(polygon.exterior, geoms)
    return np.where(inside, depth, 0.0)


def outside_distance(points: np.ndarray, polygon: Polygon) -> np.ndarray:
    """Distance of each point to ``polygon``, zero inside."""
    shapely.prepare(polygon)
    geoms = shapely.points(points)
    out = np.zeros(len(geoms))
    outside = ~shapely.covers(polygon, geoms)
    if np.any(outside):
        out[outside] = shapely.distance(polygon, geoms[outside])
    return out


def corridor_polygon(path: ReferencePath, corridor, *, which: str, refine: int = 4, s_range=None) -> Polygon:
    """World polygon between the left and right bounds of ``which`` ("drivable" or "obstacle")."""
    lo, hi = (path.stations[0], path.stations[-1]) if s_range is None else s_range
    lo = max(lo, path.stations[0])
    hi = min(hi, path.stations[-1])
    m = max(2, int(math.ceil((hi - lo) / path.delta_s * refine)) + 1)
    s = np.linspace(lo, hi, m)
    dl, dr, ol, orr = corridor.bounds_many(s)
    left, right = (dl, dr) if which == "drivable" else (ol, orr)
    ring = np.vstack([path.to_cartesian_many(s, left), path.to_cartesian_many(s[::-1], right[::-1])])
    poly = Polygon(ring)
    if not poly.is_valid:
        poly = shapely.make_valid(poly)
        if poly.geom_type != "Polygon":
            poly = max(poly.geoms, key=lambda g: g.area)
    return poly


@dataclass
class FootprintReport:
    stations: np.ndarray  # evaluated stations, planned stations and midpoints
    polygons: np.ndarray  # (m, 4, 2) body corners, CORNERS order
    obstacle_penetration: np.ndarray
    wheel_excursion: np.ndarray
    overhang_exit: np.ndarray

    @property
    def max_obstacle_penetration(self) -> float:
        return float(self.obstacle_penetration.max(initial=0.0))

    @property
    def max_wheel_excursion(self) -> float:
        return float(self.wheel_excursion.max(initial=0.0))

    @property
    def max_overhang_exit(self) -> float:
        return float(self.overhang_exit.max(initial=0.0))

    def to_dict(self) -> dict:
        return {
            "max_obstacle_penetration": self.max_obstacle_penetration,
            "max_wheel_excursion": self.max_wheel_excursion,
            "max_overhang_exit": self.max_overhang_exit,
            "stations": self.stations.tolist(),
            "obstacle_penetration": self.obstacle_penetration.tolist(),
            "wheel_excursion": self.wheel_excursion.tolist(),
            "overhang_exit": self.overhang_exit.tolist(),
            "polygons": self.polygons.tolist(),
        }


def sample_poses(scenario, start_index: int, controls) -> tuple[np.ndarray, np.ndarray]:
    """Stations and states of the rollout at every station and every midpoint.

    Midpoint states take half an Euler step with the control of the enclosing
    interval, which is exactly where the discrete model puts the vehicle.
    """
    path = scenario.path
    states = np.array(rollout(path, scenario.start.z, controls, start_index=start_index))
    n = len(controls)
    stations = path.stations[start_index:start_index + n + 1]
    mids = []
    for i in range(n):
        f = dynamics_rhs(states[i], float(controls[i]), path.kappa[start_index + i])
        mids.append(states[i] + 0.5 * path.delta_s * np.asarray(f))
    s_all = np.empty(2 * n + 1)
    z_all = np.empty((2 * n + 1, 2))
    s_all[0::2] = stations
    s_all[1::2] = stations[:-1] + 0.5 * path.delta_s
    z_all[0::2] = states
    z_all[1::2] = np.array(mids).reshape(n, 2)
    return s_all, z_all


def _obstacle_regions(scenario, s_range):
    """Profile obstacle bands as a passable polygon plus the convex pieces of every polygon obstacle."""
    path = scenario.path
    profile = corridor_from_profiles(path.stations, scenario.corridor_left, scenario.corridor_right)
    free = corridor_polygon(path, profile, which="obstacle", s_range=s_range)
    parts = []
    for poly in scenario.obstacles:
        if poly.label == "obstacle":
            parts.extend(poly.convex_parts())
    return free, parts


def check_plan(scenario, result) -> FootprintReport:
    """Measure a plan against obstacles and the drivable corridor."""
    geom = scenario.vehicle
    path = scenario.path
    s_all, z_all = sample_poses(scenario, result.start_index, result.controls)
    margin = geom.length + 1.0
    s_range = (s_all[0] - margin, s_all[-1] + margin)
    free, parts = _obstacle_regions(scenario, s_range)
    drivable = corridor_polygon(path, scenario.corridor, which="drivable", s_range=s_range)
    spacing = 0.05

    m = len(s_all)
    poses = [pose_of(path, s, z) for s, z in zip(s_all, z_all)]
    polygons = np.array([footprint(p, geom) for p in poses])
    wheelbases = np.array([wheelbase_rectangle(p, geom) for p in poses])
    body_rings = _densify_many(polygons, spacing)
    wheel_rings = _densify_many(wheelbases, spacing)

    pen = _outside_many(body_rings, free)
    for k in range(m):
        for part in parts:
            pen[k] = max(pen[k], sat_depth(polygons[k], part))
    wheel = _outside_many(wheel_rings, drivable)
    exit_ = _outside_many(polygons, drivable)
    return FootprintReport(s_all, polygons, pen, wheel, exit_)


def corner_penetration(scenario, start_index: int, controls, corner: str = "front_right") -> float:
    """Largest depth of one body corner inside any obstacle over the rollout of ``controls``."""
    geom = scenario.vehicle
    path = scenario.path
    s_all, z_all = sample_poses(scenario, start_index, controls)
    margin = geom.length + 1.0
    free, parts = _obstacle_regions(scenario, (s_all[0] - margin, s_all[-1] + margin))
    idx = CORNERS.index(corner)
    pts = np.array([footprint(pose_of(path, s, z), geom)[idx] for s, z in zip(s_all, z_all)])
    depth = outside_distance(pts, free)
    for part in parts:
        depth = np.maximum(depth, point_depth(pts, Polygon(part)))
    return float(depth.max(initial=0.0))


def edge_lateral_exact(path, s, z, bp: BodyPointSpec, s_hat, lon0):
    """``e_y`` of the point on the body edge line through ``bp`` that projects to ``s_hat``."""
    def miss(lon):
        p = body_points_world(path, s, z[0], z[1], lon, bp.lateral_offset)
        s_p, e_p, status = path.to_frenet_many(p[None, :], strict=False)
        if status[0]:
            raise ProjectionError(f"perturbed body point does not project (status {status[0]})")
        return s_p[0] - s_hat, e_p[0]

    a = lon0
    fa, ea = miss(a)
    if abs(fa) < 1e-12:
        return ea
    b = a - fa
    for _ in range(50):
        fb, eb = miss(b)
        if abs(fb) < 1e-12 or fb == fa:
            return eb
        a, fa, b = b, fb, b - fb * (b - a) / (fb - fa)
    raise ProjectionError("secant search for the body point station did not converge")


def finite_diff_partials(path, axle, bp: BodyPointSpec, h=(FD_STEP_EY, FD_STEP_EPSI)) -> tuple[float, float]:
    """Central differences of the exact lateral edge offset at a fixed station.

    The station ``s_hat`` is the projection of the body point at the nominal
    pose. For each perturbed pose the edge line is searched for the point that
    projects onto the same ``s_hat``, which matches how the arc-circle partials
    are defined.
    """
    s, z = axle
    z = np.asarray(z, dtype=float)
    p0 = body_points_world(path, s, z[0], z[1], bp.longitudinal_offset, bp.lateral_offset)
    s_hat, _, status = path.to_frenet_many(p0[None, :], strict=False)
    if status[0]:
        raise ProjectionError(f"body point does not project (status {status[0]})")
    out = []
    for k, step in enumerate(h):
        dz = np.zeros(2)
        dz[k] = step
        plus = edge_lateral_exact(path, s, z + dz, bp, s_hat[0], bp.longitudinal_offset)
        minus = edge_lateral_exact(path, s, z - dz, bp, s_hat[0], bp.longitudinal_offset)
        out.append((plus - minus) / (2.0 * step))
    return out[0], out[1]
