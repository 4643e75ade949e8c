"""Arc-circle approximation of the vehicle body in the road-aligned frame.

Along a curved reference path each straight body edge appears bent. The edge at
lateral offset ``d`` is modelled as a circle of radius ``1/kappa + d`` whose
center lies on the rear-axle normal. Holding the evaluation station ``s_hat``
fixed, the edge offset and its partials in ``(e_y, e_psi)`` follow in closed
form, which gives the slopes of the linearized position constraints. The
closed form never divides by ``kappa``, so it passes smoothly through
``kappa == 0`` where it becomes the straight-body line. The constant term of each constraint always comes from the exact projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DistortionError
from .vehicle import BodyPointSpec, VehicleGeometry

LOWER = "lower"
UPPER = "upper"


class EdgeEvalContext(NamedTuple):
    station_hat: float
    body_point: BodyPointSpec
    kappa: float
    axle_station: float


@dataclass(frozen=True)
class ConstraintRow:
    """Linearized edge position ``P z + p`` compared against ``bound``.

    ``sense == "upper"`` means ``P z + p <= bound``; ``"lower"`` means ``>=``.
    """

    P: np.ndarray
    p: float
    bound: float
    sense: str

    def value(self, z) -> float:
        return float(self.P @ np.asarray(z, dtype=float) + self.p)

    def violation(self, z) -> float:
        v = self.value(z)
        return max(v - self.bound, 0.0) if self.sense == UPPER else max(self.bound - v, 0.0)


def arc_center(z, kappa: float, s: float) -> tuple[float, float]:
    e_y, e_psi = z
    radius = 1.0 / kappa
    return s + radius * math.sin(e_psi), e_y - radius * math.cos(e_psi)


def _evaluate(ctx: EdgeEvalContext, z):
    e_hat, d_ey, d_epsi, status = kernels.arc_edge(
        ctx.axle_station, z[0], z[1], ctx.kappa, ctx.station_hat,
        ctx.body_point.lateral_offset,
    )
    if int(np.asarray(status)):
        raise DistortionError(
            f"station {ctx.station_hat:.6g} is out of reach of the arc around axle station "
            f"{ctx.axle_station:.6g} (kappa={ctx.kappa:.6g})"
        )
    return float(e_hat), float(d_ey), float(d_epsi)


def edge_lateral(ctx: EdgeEvalContext, z, geom: VehicleGeometry | None = None) -> float:
    """Arc-circle estimate of the body edge offset at the fixed station ``ctx.station_hat``."""
    return _evaluate(ctx, z)[0]


def edge_partials(ctx: EdgeEvalContext, z, geom: VehicleGeometry | None = None) -> tuple[float, float]:
    _, d_ey, d_epsi = _evaluate(ctx, z)
    return d_ey, d_epsi


def body_points_world(path, s, e_y, e_psi, longitudinal, lateral) -> np.ndarray:
    """Cartesian positions of body points for axle poses given in road-aligned coordinates.

    All arguments broadcast; returns an array of shape ``broadcast + (2,)``.
    """
    s, e_y, e_psi, longitudinal, lateral = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (s, e_y, e_psi, longitudinal, lateral))
    )
    frame = path.frame_at(s.ravel())
    tx, ty = frame[:, 2], frame[:, 3]
    ax = frame[:, 0] - e_y.ravel() * ty
    ay = frame[:, 1] + e_y.ravel() * tx
    heading = np.arctan2(ty, tx) + e_psi.ravel()
    c, sn = np.cos(heading), np.sin(heading)
    lon, lat = longitudinal.ravel(), lateral.ravel()
    out = np.column_stack([ax + lon * c - lat * sn, ay + lon * sn + lat * c])
    return out.reshape(s.shape + (2,))


def project_body_point(path, axle, bp: BodyPointSpec) -> tuple[float, float]:
    """Exact road-aligned coordinates ``(s_hat, e_y_hat)`` of one body point."""
    s, z = axle
    p = body_points_world(path, s, z[0], z[1], bp.longitudinal_offset, bp.lateral_offset)
    s_hat, e_hat, _ = path.to_frenet_many(p[None, :])
    return float(s_hat[0]), float(e_hat[0])


def station_of_body_point(path, axle, bp: BodyPointSpec) -> float:
    return project_body_point(path, axle, bp)[0]


def taylor_constraint_row(
    ctx: EdgeEvalContext,
    z_ref,
    geom: VehicleGeometry | None,
    exact_ey: float,
    bound: float,
    sense: str,
) -> ConstraintRow:
    """First-order row ``P z + p`` with arc-circle slopes and exact value at ``z_ref``."""
    if sense not in (LOWER, UPPER):
        raise ValueError(f"unknown sense {sense!r}")
    d_ey, d_epsi = edge_partials(ctx, z_ref, geom)
    P = np.array([d_ey, d_epsi])
    p = exact_ey - float(P @ np.asarray(z_ref, dtype=float))
    return ConstraintRow(P=P, p=p, bound=float(bound), sense=sense)
