from dataclasses import replace

import numpy as np
import pytest

from busplanner.planner import (
    CONVERGED,
    INFEASIBLE,
    TRUST_SCALES,
    assemble_qp,
    evaluate_objectives,
    feasible_feedforward,
    initial_reference,
    planning_horizon,
    sqp_plan,
    unpack,
    weighted_objective,
)
from busplanner.errors import ScenarioError
from busplanner.qp import kkt_residuals, solve_qp
from busplanner.scenario import Weights

from conftest import load_fixture


@pytest.fixture(scope="module")
def tight_result(tight_scenario):
    return sqp_plan(tight_scenario)


@pytest.fixture(scope="module")
def wide_turn_result():
    return sqp_plan(load_fixture("turn90_wide"))


def test_objective_examples():
    assert evaluate_objectives(np.zeros((11, 2)), np.zeros(10), np.zeros((10, 4))) == (0.0, 0.0, 0.0)
    states = np.column_stack([np.ones(11), np.zeros(11)])
    assert evaluate_objectives(states, np.zeros(10), np.zeros((10, 4)))[0] == 11.0
    assert evaluate_objectives(np.zeros((3, 2)), [0, 0.1, 0.1], np.zeros((2, 4)))[1] == pytest.approx(0.01)
    assert weighted_objective((1.0, 2.0, 3.0), Weights(1, 10, 100)) == 321.0


def _straight_qp(scenario, n=10, **kw):
    i0, _ = planning_horizon(scenario)
    ref_states = np.zeros((n + 1, 2))
    return assemble_qp(scenario, i0, ref_states, np.zeros(n), **kw)


def test_row_count(straight_scenario):
    n, K, M = 10, straight_scenario.edge_points, straight_scenario.wheelbase_points
    assert (K, M) == (8, 4)
    qp, _ = _straight_qp(straight_scenario, n)
    body = n * (2 * K + 2 * M + 4)
    sigma = 4 * n
    actuator = 2 * (n - 1) + 2 * (n - 1)
    trust = 4 * n + 2 * (n - 1)
    assert qp.C.shape[0] == body + sigma + actuator + trust
    assert qp.C.shape[0] == n * (2 * K + 2 * M + 4 + 4) + 6 * (n - 1) + 4 * n
    assert qp.A_eq.shape[0] == 1 + 2 * n
    assert qp.n == n + 2 * n + 4 * n
    labels = qp.row_labels
    assert labels.count("corner") == 4 * n
    assert labels.count("trust_u") == 2 * (n - 1)


def test_ablation_drops_wheelbase_rows(straight_scenario):
    full, _ = _straight_qp(straight_scenario)
    bare, _ = _straight_qp(straight_scenario, wheelbase_rows=False)
    assert full.C.shape[0] - bare.C.shape[0] == 10 * 2 * straight_scenario.wheelbase_points


def test_rows_reproduce_exact_offset_at_reference(tight_scenario):
    i0, n = planning_horizon(tight_scenario)
    states, controls = initial_reference(tight_scenario, i0, n)
    _, block = assemble_qp(tight_scenario, i0, states, controls)
    z = states[block.station_index]
    value = z[:, 0] + block.slope_epsi * z[:, 1] + block.offset
    assert np.max(np.abs(value - block.exact)) <= 1e-9


def test_centerline_optimum_is_zero(straight_scenario):
    qp, _ = _straight_qp(straight_scenario)
    sol = solve_qp(qp)
    assert np.max(np.abs(sol.x)) <= 1e-8
    assert max(kkt_residuals(qp, sol).values()) <= 1e-6


def test_straight_plan_trivial_optimum(straight_scenario):
    result = sqp_plan(straight_scenario)
    assert result.status == CONVERGED and result.iterations <= 2
    assert np.max(np.abs(result.controls)) <= 1e-6
    assert np.max(np.abs(result.states[:, 0])) <= 1e-6
    assert np.all(result.slacks == 0.0)
    assert result.objectives["overhang"] <= 1e-9


def test_actuator_limits_and_slacks(tight_result, tight_scenario):
    lim = tight_scenario.limits
    u = tight_result.controls
    assert np.max(np.abs(u)) <= lim.u_max + 1e-8
    assert np.max(np.abs(np.diff(u))) <= lim.u_rate_max + 1e-8
    assert np.all(tight_result.slacks >= 0.0)


def test_converged_step_below_tolerance(tight_result, tight_scenario):
    assert tight_result.status == CONVERGED
    assert tight_result.step_norms[-1] <= tight_scenario.sqp.tol
    assert tight_result.linearization_gap <= 0.05


def test_trust_region_honored(tight_result, tight_scenario):
    sqp = tight_scenario.sqp
    i0, n = planning_horizon(tight_scenario)
    ref_states, ref_controls = initial_reference(tight_scenario, i0, n)
    for rec in tight_result.history:
        assert rec.trust_scale in TRUST_SCALES
        dz = np.abs(rec.states - ref_states)
        assert np.max(dz[:, 0]) <= rec.trust_scale * sqp.trust_y + 1e-7
        assert np.max(dz[:, 1]) <= rec.trust_scale * sqp.trust_psi + 1e-7
        du = np.abs(rec.controls[1:] - ref_controls[1:])
        assert np.max(du) <= rec.trust_scale * sqp.trust_u + 1e-7
        ref_states, ref_controls = rec.rollout_states, rec.controls


@pytest.mark.parametrize("which", ["tight_result", "wide_turn_result"])
def test_taylor_gap_shrinks(which, request):
    result = request.getfixturevalue(which)
    assert result.status == CONVERGED
    gaps = [rec.taylor_gap for rec in result.history]
    assert all(b <= a for a, b in zip(gaps[1:], gaps[2:]))
    assert gaps[-1] <= 5e-3


def test_kkt_on_every_iteration(tight_result, wide_turn_result):
    for result in (tight_result, wide_turn_result):
        for rec in result.history:
            assert max(rec.kkt.values()) <= 1e-6


def test_infeasible_reports_iteration():
    result = sqp_plan(load_fixture("tight_passage_no_sweep"))
    assert result.status == INFEASIBLE
    assert result.failed_iteration == 1
    assert "primal_infeasible" in result.message


def test_feedforward_respects_limits():
    kappa = np.concatenate([np.zeros(10), np.full(20, 0.2), np.zeros(10)])
    u = feasible_feedforward(kappa, 0.0, 0.1, 0.01)
    assert u[0] == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(u)) <= 0.1 + 1e-8
    assert np.max(np.abs(np.diff(u))) <= 0.01 + 1e-8
    free = feasible_feedforward(np.full(5, 0.05), 0.05, 0.1, 0.1)
    np.testing.assert_allclose(free, 0.05, atol=1e-8)


def test_unpack_layout():
    n = 3
    x = np.arange(7 * n, dtype=float)
    states, controls, slacks = unpack(x, (9.0, 8.0), n)
    np.testing.assert_array_equal(controls, [0, 1, 2])
    np.testing.assert_array_equal(states[0], [9, 8])
    np.testing.assert_array_equal(states[1], [3, 4])
    assert slacks.shape == (3, 4) and slacks[0, 0] == 9.0


def test_bad_arguments(straight_scenario):
    with pytest.raises(ValueError):
        sqp_plan(straight_scenario, ablation="nothing")
    early = straight_scenario.with_overrides(start=replace(straight_scenario.start, s=1.0))
    with pytest.raises(ScenarioError, match="start.s"):
        planning_horizon(early)
