"""Space-based road-aligned kinematic model.

States are ``z = (e_y, e_psi)`` and the input is the vehicle curvature ``u``; all
derivatives are with respect to the path arclength ``s``::

    e_y'   = (1 - kappa e_y) tan(e_psi)
    e_psi' = u (1 - kappa e_y) / cos(e_psi) - kappa
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ModelDomainError


class VehicleStateZ(NamedTuple):
    e_y: float
    e_psi: float


@dataclass(frozen=True)
class VehicleGeometry:
    wheelbase: float = 6.0
    width: float = 2.55
    front_overhang: float = 2.7
    rear_overhang: float = 3.3

    def __post_init__(self):
        for name in ("wheelbase", "width", "front_overhang", "rear_overhang"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def length(self) -> float:
        return self.wheelbase + self.front_overhang + self.rear_overhang

    @property
    def half_width(self) -> float:
        return 0.5 * self.width

    @property
    def front(self) -> float:
        """Longitudinal offset of the front bumper from the rear axle."""
        return self.wheelbase + self.front_overhang

    @property
    def rear(self) -> float:
        return -self.rear_overhang


@dataclass(frozen=True)
class ActuatorLimits:
    u_max: float = 1.0 / 12.0
    u_rate_max: float = 0.01

    def __post_init__(self):
        if not (self.u_max > 0 and self.u_rate_max > 0):
            raise ValueError("actuator limits must be positive")


@dataclass(frozen=True)
class LinearizedDynamics:
    A: np.ndarray
    B: np.ndarray
    G: np.ndarray


@dataclass(frozen=True)
class BodyPointSpec:
    longitudinal_offset: float
    lateral_offset: float
    tag: str


EDGE_LEFT = "edge_left"
EDGE_RIGHT = "edge_right"
WHEELBASE_LEFT = "wheelbase_left"
WHEELBASE_RIGHT = "wheelbase_right"
CORNER = "corner"


def curvature_to_steering(u: float, wheelbase: float) -> float:
    return math.atan(u * wheelbase)


def steering_to_curvature(phi: float, wheelbase: float) -> float:
    return math.tan(phi) / wheelbase


def _guard(e_y, e_psi, kappa, station=None):
    if not abs(e_psi) < 0.5 * math.pi:
        raise ModelDomainError(f"|e_psi| = {abs(e_psi):.6g} reaches pi/2", station)
    if not 1.0 - kappa * e_y > 0.0:
        raise ModelDomainError(f"1 - kappa*e_y = {1.0 - kappa * e_y:.6g} is not positive", station)


def dynamics_rhs(z, u: float, kappa: float) -> tuple[float, float]:
    e_y, e_psi = z
    _guard(e_y, e_psi, kappa)
    scale = 1.0 - kappa * e_y
    return scale * math.tan(e_psi), u * scale / math.cos(e_psi) - kappa


def jacobians(z, u: float, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``df/dz`` (2x2) and ``df/du`` (2x1)."""
    e_y, e_psi = z
    _guard(e_y, e_psi, kappa)
    scale = 1.0 - kappa * e_y
    c = math.cos(e_psi)
    t = math.tan(e_psi)
    dfdz = np.array(
        [
            [-kappa * t, scale / (c * c)],
            [-kappa * u / c, u * scale * t / c],
        ]
    )
    dfdu = np.array([[0.0], [scale / c]])
    return dfdz, dfdu


def linearize(z_ref, u_ref: float, kappa: float, delta_s: float) -> LinearizedDynamics:
    """Explicit-Euler discretization linearized at ``(z_ref, u_ref)``."""
    f = np.array(dynamics_rhs(z_ref, u_ref, kappa))
    dfdz, dfdu = jacobians(z_ref, u_ref, kappa)
    z = np.asarray(z_ref, dtype=float)
    A = np.eye(2) + delta_s * dfdz
    B = delta_s * dfdu
    G = delta_s * (f - dfdz @ z - dfdu[:, 0] * u_ref)
    return LinearizedDynamics(A, B, G.reshape(2, 1))


def euler_step(z, u, kappa, delta_s, station=None):
    try:
        de_y, de_psi = dynamics_rhs(z, u, kappa)
    except ModelDomainError as exc:
        raise ModelDomainError(f"station {station}: {exc}", station) from None
    return VehicleStateZ(z[0] + delta_s * de_y, z[1] + delta_s * de_psi)


def rollout(path, z0, controls: Sequence[float], start_index: int = 0) -> list[VehicleStateZ]:
    """Nonlinear forward simulation, one explicit Euler step per station.

    Returns ``len(controls) + 1`` states, the first being ``z0``.
    """
    if start_index + len(controls) > path.n:
        raise ValueError("more controls than remaining path stations")
    states = [VehicleStateZ(float(z0[0]), float(z0[1]))]
    for i, u in enumerate(controls):
        station = start_index + i
        states.append(euler_step(states[-1], float(u), path.kappa[station], path.delta_s, station))
    return states


def body_sample_points(geom: VehicleGeometry, K: int = 8, M: int = 4) -> list[BodyPointSpec]:
    """Edge samples (K per side), wheelbase samples (M per side) and the 4 corners.

    Order: left edge rear to front, right edge, left wheelbase, right wheelbase,
    then corners front-left, front-right, rear-left, rear-right.
    """
    if K < 2 or M < 2:
        raise ValueError("K and M must be at least 2")
    half = geom.half_width
    edge = np.linspace(geom.rear, geom.front, K)
    base = np.linspace(0.0, geom.wheelbase, M)
    points = [BodyPointSpec(float(l), half, EDGE_LEFT) for l in edge]
    points += [BodyPointSpec(float(l), -half, EDGE_RIGHT) for l in edge]
    points += [BodyPointSpec(float(l), half, WHEELBASE_LEFT) for l in base]
    points += [BodyPointSpec(float(l), -half, WHEELBASE_RIGHT) for l in base]
    for l in (geom.front, geom.rear):
        points.append(BodyPointSpec(l, half, CORNER))
        points.append(BodyPointSpec(l, -half, CORNER))
    return points
