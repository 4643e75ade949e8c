import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from busplanner.errors import ModelDomainError
from busplanner.vehicle import (
    CORNER,
    EDGE_LEFT,
    EDGE_RIGHT,
    WHEELBASE_LEFT,
    VehicleGeometry,
    body_sample_points,
    curvature_to_steering,
    dynamics_rhs,
    euler_step,
    jacobians,
    linearize,
    rollout,
    steering_to_curvature,
)

from conftest import circle_path


def test_rhs_examples():
    assert dynamics_rhs((0, 0), 0.0, 0.0) == (0.0, 0.0)
    assert dynamics_rhs((0, 0), 0.05, 0.05) == pytest.approx((0.0, 0.0), abs=1e-15)
    de_y, de_psi = dynamics_rhs((0, 0.1), 0.0, 0.0)
    assert de_y == pytest.approx(0.100335, abs=1e-6)
    assert de_psi == 0.0


def test_rhs_guards():
    with pytest.raises(ModelDomainError):
        dynamics_rhs((0, math.pi / 2), 0.0, 0.0)
    with pytest.raises(ModelDomainError):
        dynamics_rhs((25.0, 0.0), 0.0, 0.05)


def test_linearize_zero_curvature():
    lin = linearize((0, 0), 0.0, 0.0, 0.5)
    np.testing.assert_allclose(lin.A, [[1, 0.5], [0, 1]])
    np.testing.assert_allclose(lin.B, [[0], [0.5]])
    np.testing.assert_allclose(lin.G, [[0], [0]])


def test_linearize_curved_by_hand():
    lin = linearize((0, 0), 0.0, 0.05, 0.5)
    np.testing.assert_allclose(lin.G, [[0], [-0.025]], atol=1e-15)
    np.testing.assert_allclose(lin.A, [[1, 0.5], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(lin.B, [[0], [0.5]], atol=1e-15)


states = st.tuples(st.floats(-5.0, 5.0), st.floats(-1.0, 1.0))


@given(z=states, u=st.floats(-0.1, 0.1), kappa=st.floats(-0.1, 0.1))
def test_jacobians_match_finite_differences(z, u, kappa):
    if abs(kappa * z[0]) > 0.5:
        kappa = 0.5 * math.copysign(1.0, kappa) / max(abs(z[0]), 1e-9) * 0.99
    dfdz, dfdu = jacobians(z, u, kappa)
    h = 1e-6
    num = np.zeros((2, 3))
    for k in range(3):
        zp, zm = list(z) + [u], list(z) + [u]
        zp[k] += h
        zm[k] -= h
        fp = np.array(dynamics_rhs(zp[:2], zp[2], kappa))
        fm = np.array(dynamics_rhs(zm[:2], zm[2], kappa))
        num[:, k] = (fp - fm) / (2 * h)
    ana = np.column_stack([dfdz, dfdu])
    assert np.all(np.abs(ana - num) <= 1e-6 * np.maximum(np.abs(num), 1.0))


@given(z=states, u=st.floats(-0.1, 0.1), kappa=st.floats(-0.1, 0.1), ds=st.floats(0.1, 1.0))
def test_linearization_exact_at_reference(z, u, kappa, ds):
    if 1.0 - kappa * z[0] <= 0.1:
        return
    lin = linearize(z, u, kappa, ds)
    pred = lin.A @ np.asarray(z) + lin.B[:, 0] * u + lin.G[:, 0]
    np.testing.assert_allclose(pred, euler_step(z, u, kappa, ds), atol=1e-12)


@given(u=st.floats(-1 / 12, 1 / 12))
def test_steering_round_trip(u):
    assert steering_to_curvature(curvature_to_steering(u, 6.0), 6.0) == pytest.approx(u, abs=1e-12)


def test_rollout_straight_zero(straight):
    out = rollout(straight, (0, 0), [0.0] * 20)
    assert len(out) == 21
    assert all(z == (0.0, 0.0) for z in out)


def test_rollout_tracks_constant_curvature(circle):
    out = rollout(circle, (0, 0), [0.05] * 100, start_index=10)
    assert max(max(abs(a), abs(b)) for a, b in out) <= 1e-9


def test_rollout_names_singular_station(straight):
    with pytest.raises(ModelDomainError) as info:
        rollout(straight, (0.0, 1.5), [0.5] * 5, start_index=3)
    # the first step pushes e_psi past pi/2, so the second step fails
    assert info.value.station == 4


def test_rollout_second_order_remainder():
    path = circle_path(30.0)
    base = np.full(60, 1 / 30)
    direction = np.sin(np.linspace(0, 3, 60))
    z0 = np.array([0.2, 0.02])
    ref = np.array(rollout(path, z0, base))

    def linear(du):
        z = z0.copy()
        out = [z.copy()]
        for i in range(60):
            lin = linearize(ref[i], base[i], path.kappa[i], path.delta_s)
            z = lin.A @ z + lin.B[:, 0] * (base[i] + du[i]) + lin.G[:, 0]
            out.append(z.copy())
        return np.array(out)

    errs = []
    for eps in (4e-3, 2e-3, 1e-3):
        du = eps * direction
        errs.append(np.max(np.abs(np.array(rollout(path, z0, base + du)) - linear(du))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_body_points_endpoints():
    geom = VehicleGeometry()
    pts = body_sample_points(geom, K=2, M=2)
    edges = [p for p in pts if p.tag in (EDGE_LEFT, EDGE_RIGHT)]
    assert len(edges) == 4
    assert sorted({p.longitudinal_offset for p in edges}) == [-3.3, pytest.approx(8.7)]


def test_body_points_equispaced():
    pts = body_sample_points(VehicleGeometry(), K=3, M=4)
    left = [p.longitudinal_offset for p in pts if p.tag == EDGE_LEFT]
    assert left == pytest.approx([-3.3, 2.7, 8.7])
    base = [p.longitudinal_offset for p in pts if p.tag == WHEELBASE_LEFT]
    assert base == pytest.approx([0.0, 2.0, 4.0, 6.0])


def test_body_points_corners():
    geom = VehicleGeometry()
    corners = [(p.longitudinal_offset, p.lateral_offset) for p in body_sample_points(geom) if p.tag == CORNER]
    assert sorted(corners) == sorted(
        [(l, w) for l in (-3.3, geom.front) for w in (-1.275, 1.275)]
    )
    for p in body_sample_points(geom):
        assert geom.rear <= p.longitudinal_offset <= geom.front


def test_geometry_validation():
    assert VehicleGeometry().length == pytest.approx(12.0)
    with pytest.raises(ValueError):
        VehicleGeometry(width=-1.0)
    with pytest.raises(ValueError):
        body_sample_points(VehicleGeometry(), K=1)
