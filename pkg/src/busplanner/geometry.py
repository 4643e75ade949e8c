"""Reference paths and conversions between Cartesian and road-aligned coordinates.

A :class:`ReferencePath` stores stations uniformly spaced in arclength. Between
stations the path is the cubic Hermite curve through the neighbouring station
positions and tangents, so ``to_cartesian`` and ``to_frenet`` are exact inverses
of each other on that curve.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import GeometryError, OutOfDomainError, ProjectionError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_DOMAIN_TOL = 1e-9


class CartesianPoint(NamedTuple):
    x: float
    y: float


class CartesianPose(NamedTuple):
    position: CartesianPoint
    heading: float


class FrenetCoord(NamedTuple):
    s: float
    e_y: float


def wrap_angle(angle):
    """Wrap to (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


@dataclass(frozen=True, eq=False)
class ReferencePath:
    delta_s: float
    stations: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    kappa: np.ndarray

    @property
    def n(self) -> int:
        """Number of segments N (there are N + 1 stations)."""
        return len(self.stations) - 1

    @property
    def length(self) -> float:
        return float(self.stations[-1])

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < -_DOMAIN_TOL) or np.any(s > self.length + _DOMAIN_TOL):
            bad = s[(s < -_DOMAIN_TOL) | (s > self.length + _DOMAIN_TOL)].ravel()[0]
            raise OutOfDomainError(f"station {bad:.6g} outside [0, {self.length:.6g}]")
        return np.clip(s, 0.0, self.length)

    def frame_at(self, s):
        """Position and unit tangent at arbitrary stations, as an ``(m, 4)`` array."""
        s = self._check_s(s)
        return kernels.hermite_eval(self.x, self.y, self.psi, self.delta_s, s)

    def heading_at(self, s):
        f = self.frame_at(s)
        h = np.arctan2(f[:, 3], f[:, 2])
        return float(h[0]) if np.ndim(s) == 0 else h

    def curvature_at(self, s):
        s = self._check_s(s)
        return np.interp(s, self.stations, self.kappa)

    def to_cartesian_many(self, s, e_y) -> np.ndarray:
        s, e_y = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(e_y, dtype=float))
        f = self.frame_at(s.ravel())
        e = e_y.ravel()
        out = np.column_stack([f[:, 0] - e * f[:, 3], f[:, 1] + e * f[:, 2]])
        return out.reshape(s.shape + (2,))

    def to_frenet_many(self, points, *, strict=True):
        """Project an ``(m, 2)`` array of points.

        Returns ``(s, e_y, status)``; with ``strict`` any failed projection raises.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        s, e_y, status = kernels.project_points(
            self.x, self.y, self.psi, self.kappa, self.delta_s, pts[:, 0], pts[:, 1]
        )
        if strict and np.any(status):
            i = int(np.flatnonzero(status)[0])
            _raise_projection(status[i], pts[i])
        return s, e_y, status


def _raise_projection(code, point):
    where = f"({point[0]:.6g}, {point[1]:.6g})"
    if code == kernels.PROJ_BEFORE_START:
        raise OutOfDomainError(f"point {where} projects before the path start")
    if code == kernels.PROJ_BEYOND_END:
        raise OutOfDomainError(f"point {where} projects beyond the path end")
    if code == kernels.PROJ_BEYOND_CENTER:
        raise ProjectionError(f"point {where} lies beyond the center of curvature")
    raise ProjectionError(f"projection of {where} failed with status {code}")


class _Arclength:
    """Arclength of a parametric cubic spline and its inverse."""

    def __init__(self, spline: CubicSpline):
        self.spline = spline
        self.knots = spline.x
        self.deriv = spline.derivative()
        seg = [self._integral(a, b) for a, b in zip(self.knots[:-1], self.knots[1:])]
        self.cumulative = np.concatenate([[0.0], np.cumsum(seg)])

    def speed(self, t):
        d = self.deriv(t)
        return np.hypot(d[..., 0], d[..., 1])

    def _integral(self, a, b):
        half = 0.5 * (b - a)
        t = a + half * (_GL_NODES + 1.0)
        return half * float(np.dot(_GL_WEIGHTS, self.speed(t)))

    @property
    def total(self):
        return float(self.cumulative[-1])

    def parameter_at(self, s):
        k = int(np.clip(np.searchsorted(self.cumulative, s, side="right") - 1, 0, len(self.knots) - 2))
        a, b = self.knots[k], self.knots[k + 1]
        base = self.cumulative[k]
        span = self.cumulative[k + 1] - base
        t = a + (b - a) * (s - base) / span
        for _ in range(50):
            f = base + self._integral(a, t) - s
            t_new = float(np.clip(t - f / self.speed(t), a, b))
            if abs(t_new - t) < 1e-14:
                t = t_new
                break
            t = t_new
        return t


def build_reference_path(
    waypoints: Sequence[Sequence[float]],
    delta_s: float,
    kappa_max: float | None = None,
) -> ReferencePath:
    """Interpolate waypoints with a cubic spline and resample every ``delta_s`` meters.

    Curvature comes analytically from the spline. The last station is the largest
    multiple of ``delta_s`` not exceeding the spline length.
    """
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise GeometryError("need at least two (x, y) waypoints")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("waypoints must be finite")
    if not delta_s > 0:
        raise GeometryError("delta_s must be positive")
    chords = np.hypot(*np.diff(pts, axis=0).T)
    if np.any(chords < 1e-9):
        i = int(np.flatnonzero(chords < 1e-9)[0])
        raise GeometryError(f"duplicate consecutive waypoints at index {i}")

    t_knots = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(t_knots, pts, axis=0)
    arc = _Arclength(spline)
    if delta_s > arc.total:
        raise GeometryError(f"delta_s {delta_s} exceeds curve length {arc.total:.6g}")

    n = int(math.floor(arc.total / delta_s + 1e-9))
    stations = np.arange(n + 1) * delta_s
    params = np.array([arc.parameter_at(s) for s in stations])
    pos = spline(params)
    d1 = spline(params, 1)
    d2 = spline(params, 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    psi = np.arctan2(d1[:, 1], d1[:, 0])
    kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    if kappa_max is not None and np.max(np.abs(kappa)) > kappa_max:
        i = int(np.argmax(np.abs(kappa)))
        raise GeometryError(
            f"curvature {kappa[i]:.6g} at station {stations[i]:.6g} exceeds kappa_max {kappa_max}"
        )
    return ReferencePath(
        delta_s=float(delta_s),
        stations=stations,
        x=np.ascontiguousarray(pos[:, 0]),
        y=np.ascontiguousarray(pos[:, 1]),
        psi=np.ascontiguousarray(psi),
        kappa=np.ascontiguousarray(kappa),
    )


def to_cartesian(path: ReferencePath, c: FrenetCoord) -> CartesianPoint:
    x, y = path.to_cartesian_many(c[0], c[1])
    return CartesianPoint(float(x), float(y))


def to_frenet(path: ReferencePath, p) -> FrenetCoord:
    s, e_y, status = kernels.project_point(
        path.x, path.y, path.psi, path.kappa, path.delta_s, float(p[0]), float(p[1])
    )
    if status:
        _raise_projection(status, p)
    return FrenetCoord(float(s), float(e_y))


def write_path_csv(path: ReferencePath, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["s", "x", "y", "psi", "kappa"])
    for row in zip(path.stations, path.x, path.y, path.psi, path.kappa):
        writer.writerow([f"{v:.9g}" for v in row])
