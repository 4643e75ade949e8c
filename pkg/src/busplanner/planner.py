"""QP assembly and the sequential-QP loop.

Decision vector layout for a horizon of ``N`` steps::

    [u_0 .. u_{N-1} | e_y,1 e_psi,1 .. e_y,N e_psi,N | sigma_1 (4) .. sigma_N (4)]

``z_0`` is the fixed start state and is eliminated from the variables.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .distortion import body_points_world
from .errors import DistortionError, GeometryError, ModelDomainError, QpSolveError, ScenarioError
from .qp import QpProblem, kkt_residuals, make_qp, solve_qp
from .scenario import Scenario, SqpSettings, Weights
from .vehicle import (
    CORNER,
    EDGE_LEFT,
    EDGE_RIGHT,
    WHEELBASE_LEFT,
    WHEELBASE_RIGHT,
    VehicleStateZ,
    body_sample_points,
    linearize,
    rollout,
)

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"

ABLATIONS = ("full", "no_overhang_objective", "center_only")

# longitudinal clearance kept between the body and the path ends
_END_MARGIN = 1.0
# trust-box multipliers tried in turn when a subproblem is infeasible
TRUST_SCALES = (1.0, 2.0, 4.0, 8.0)


@dataclass
class IterationRecord:
    iteration: int
    step_norm: float
    objective: float
    controls: np.ndarray
    states: np.ndarray
    rollout_states: np.ndarray
    taylor_gap: float
    linearization_gap: float
    qp_iterations: int
    kkt: dict
    trust_scale: float = 1.0


@dataclass
class PlanResult:
    status: str
    stations: np.ndarray
    start_index: int
    states: np.ndarray  # (N + 1, 2)
    controls: np.ndarray  # (N,)
    slacks: np.ndarray  # (N, 4), rows for stations 1..N
    objectives: dict
    iterations: int
    step_norms: list = field(default_factory=list)
    history: list = field(default_factory=list)
    linearization_gap: float = math.nan
    failed_iteration: int | None = None
    message: str = ""

    @property
    def horizon(self) -> int:
        return len(self.controls)


@dataclass(eq=False)
class ConstraintBlock:
    """Linearized body rows for one SQP iteration, kept for diagnostics."""

    station_index: np.ndarray  # local station i in 1..N
    point_index: np.ndarray
    tag: np.ndarray
    longitudinal: np.ndarray
    lateral: np.ndarray
    s_hat: np.ndarray
    exact: np.ndarray
    slope_epsi: np.ndarray
    offset: np.ndarray  # p in P z + p
    bound: np.ndarray
    upper: np.ndarray  # True: P z + p <= bound


def planning_horizon(scenario: Scenario) -> tuple[int, int]:
    """First station index and number of steps N the plan covers."""
    path = scenario.path
    geom = scenario.vehicle
    i0 = scenario.start_index
    s0 = path.stations[i0]
    if s0 - geom.rear_overhang - _END_MARGIN < 0.0:
        raise ScenarioError(
            f"start station {s0:.6g} leaves no room for the rear overhang before the path start",
            "start.s",
        )
    last = int(math.floor((path.length - geom.front - _END_MARGIN) / path.delta_s + 1e-9))
    n = last - i0
    if n < 2:
        raise ScenarioError("path too short beyond the start station for a plan", "path")
    return i0, n


def evaluate_objectives(states, controls, slacks, weights: Weights | None = None):
    """Unweighted ``(J_center, J_smooth, J_overhang)``."""
    states = np.asarray(states, dtype=float).reshape(-1, 2)
    controls = np.asarray(controls, dtype=float)
    slacks = np.asarray(slacks, dtype=float)
    j_center = float(np.sum(states[:, 0] ** 2))
    j_smooth = float(np.sum(np.diff(controls) ** 2))
    j_overhang = float(np.sum(slacks**2))
    return j_center, j_smooth, j_overhang


def weighted_objective(objectives, weights: Weights) -> float:
    jc, js, jo = objectives
    return weights.center * jc + weights.smooth * js + weights.overhang * jo


def _ablate(scenario: Scenario, ablation: str):
    if ablation not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablation!r}")
    weights = scenario.weights
    if ablation != "full":
        weights = Weights(weights.center, weights.smooth, 0.0)
    return weights, ablation != "center_only"


def body_rows(scenario: Scenario, i0: int, ref_states: np.ndarray, wheelbase_rows: bool = True) -> ConstraintBlock:
    """Linearize every body sample point at stations ``1..N`` around the reference states."""
    path = scenario.path
    corridor = scenario.corridor
    points = body_sample_points(scenario.vehicle, scenario.edge_points, scenario.wheelbase_points)
    if not wheelbase_rows:
        points = [bp for bp in points if bp.tag not in (WHEELBASE_LEFT, WHEELBASE_RIGHT)]
    n = len(ref_states) - 1
    lon = np.array([bp.longitudinal_offset for bp in points])
    lat = np.array([bp.lateral_offset for bp in points])
    tags = np.array([bp.tag for bp in points])
    local = np.arange(1, n + 1)
    glob = i0 + local
    s = path.stations[glob][:, None]
    ey = ref_states[1:, 0][:, None]
    ep = ref_states[1:, 1][:, None]
    kappa = path.kappa[glob][:, None]

    world = body_points_world(path, s, ey, ep, lon[None, :], lat[None, :])
    s_hat, exact, _ = path.to_frenet_many(world.reshape(-1, 2))
    shape = world.shape[:2]
    s_hat = s_hat.reshape(shape)
    exact = exact.reshape(shape)
    _, _, slope, status = kernels.arc_edge(s, ey, ep, kappa, s_hat, lat[None, :])
    if np.any(status):
        i, j = np.argwhere(status)[0]
        raise DistortionError(
            f"arc-circle does not reach station {s_hat[i, j]:.6g} from axle station {s[i, 0]:.6g}"
        )
    dl, dr, ol, orr = corridor.bounds_many(s_hat)

    tag_grid = np.broadcast_to(tags, shape)
    lat_grid = np.broadcast_to(lat, shape)
    left = lat_grid > 0
    is_edge = np.isin(tag_grid, (EDGE_LEFT, EDGE_RIGHT))
    bound = np.where(is_edge, np.where(left, ol, orr), np.where(left, dl, dr))
    offset = exact - (ey + slope * ep)
    return ConstraintBlock(
        station_index=np.broadcast_to(local[:, None], shape).ravel(),
        point_index=np.broadcast_to(np.arange(len(points)), shape).ravel(),
        tag=tag_grid.ravel(),
        longitudinal=np.broadcast_to(lon, shape).ravel(),
        lateral=lat_grid.ravel(),
        s_hat=s_hat.ravel(),
        exact=exact.ravel(),
        slope_epsi=slope.ravel(),
        offset=offset.ravel(),
        bound=bound.ravel(),
        upper=left.ravel(),
    )


def assemble_qp(
    scenario: Scenario,
    i0: int,
    ref_states: np.ndarray,
    ref_controls: np.ndarray,
    *,
    weights: Weights | None = None,
    wheelbase_rows: bool = True,
    trust: bool = True,
    trust_scale: float = 1.0,
) -> tuple[QpProblem, ConstraintBlock]:
    """Build the convex subproblem linearized around ``(ref_states, ref_controls)``."""
    path = scenario.path
    limits = scenario.limits
    sqp = scenario.sqp
    weights = weights or scenario.weights
    n = len(ref_controls)
    if ref_states.shape != (n + 1, 2):
        raise ValueError("reference states must have shape (N + 1, 2)")
    if i0 + n > path.n:
        raise ScenarioError("horizon exceeds the corridor stations", "corridor")
    nu, nz, nsig = n, 2 * n, 4 * n
    nvar = nu + nz + nsig

    def iu(j):
        return j

    def iz(i, k):  # state i in 1..N, k=0 e_y, k=1 e_psi
        return nu + 2 * (i - 1) + k

    def isig(i, c):
        return nu + nz + 4 * (i - 1) + c

    z0 = ref_states[0]
    u_start = ref_controls[0]

    # equalities: u_0 = u_start, then z_{i+1} - A_i z_i - B_i u_i = G_i
    er, ec, ev, b_eq = [0], [iu(0)], [1.0], [u_start]
    row = 1
    for i in range(n):
        g = i0 + i
        lin = linearize(ref_states[i], ref_controls[i], path.kappa[g], path.delta_s)
        for k in range(2):
            er.append(row + k)
            ec.append(iz(i + 1, k))
            ev.append(1.0)
            rhs = lin.G[k, 0]
            if i == 0:
                rhs += lin.A[k] @ z0
            else:
                for m in range(2):
                    er.append(row + k)
                    ec.append(iz(i, m))
                    ev.append(-lin.A[k, m])
            er.append(row + k)
            ec.append(iu(i))
            ev.append(-lin.B[k, 0])
            b_eq.append(rhs)
        row += 2
    A_eq = sp.csc_matrix((ev, (er, ec)), shape=(row, nvar))

    block = body_rows(scenario, i0, ref_states, wheelbase_rows=wheelbase_rows)
    labels = []
    cr, cc, cv, d = [], [], [], []
    r = 0

    # body rows, grouped by station
    corner_counter = {}
    for k in range(block.bound.size):
        i = int(block.station_index[k])
        sign = 1.0 if block.upper[k] else -1.0
        cr += [r, r]
        cc += [iz(i, 0), iz(i, 1)]
        cv += [sign * 1.0, sign * block.slope_epsi[k]]
        rhs = sign * (block.bound[k] - block.offset[k])
        if block.tag[k] == CORNER:
            c = corner_counter.get(i, 0)
            corner_counter[i] = c + 1
            cr.append(r)
            cc.append(isig(i, c))
            cv.append(-1.0)
        d.append(rhs)
        labels.append(str(block.tag[k]))
        r += 1
    for i in range(1, n + 1):
        for c in range(4):
            cr.append(r)
            cc.append(isig(i, c))
            cv.append(-1.0)
            d.append(0.0)
            labels.append("sigma_nonneg")
            r += 1

    # actuator magnitude and rate, u_1 .. u_{N-1}
    for j in range(1, n):
        for sgn in (1.0, -1.0):
            cr.append(r)
            cc.append(iu(j))
            cv.append(sgn)
            d.append(limits.u_max)
            labels.append("u_max")
            r += 1
    for j in range(1, n):
        for sgn in (1.0, -1.0):
            cr += [r, r]
            cc += [iu(j), iu(j - 1)]
            cv += [sgn, -sgn]
            d.append(limits.u_rate_max)
            labels.append("u_rate")
            r += 1

    if trust:
        for i in range(1, n + 1):
            for k, radius in ((0, trust_scale * sqp.trust_y), (1, trust_scale * sqp.trust_psi)):
                for sgn in (1.0, -1.0):
                    cr.append(r)
                    cc.append(iz(i, k))
                    cv.append(sgn)
                    d.append(radius + sgn * ref_states[i, k])
                    labels.append("trust_z")
                    r += 1
        for j in range(1, n):
            for sgn in (1.0, -1.0):
                cr.append(r)
                cc.append(iu(j))
                cv.append(sgn)
                d.append(trust_scale * sqp.trust_u + sgn * ref_controls[j])
                labels.append("trust_u")
                r += 1
    C = sp.csc_matrix((cv, (cr, cc)), shape=(r, nvar))

    # objective
    diag = np.zeros(nvar)
    for i in range(1, n + 1):
        diag[iz(i, 0)] = 2.0 * weights.center
    diag[nu + nz:] = 2.0 * weights.overhang
    H = sp.diags(diag)
    if n > 1:
        D = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
        Hu = 2.0 * weights.smooth * (D.T @ D)
        H = H + sp.block_diag([Hu, sp.csc_matrix((nz + nsig, nz + nsig))])
    qp = QpProblem(
        hessian=sp.csc_matrix(H),
        gradient=np.zeros(nvar),
        A_eq=A_eq,
        b_eq=np.asarray(b_eq),
        C=C,
        d=np.asarray(d),
        constant=weights.center * float(z0[0] ** 2),
        row_labels=labels,
    )
    return qp, block


def unpack(x: np.ndarray, z0, n: int):
    controls = x[:n].copy()
    states = np.vstack([np.asarray(z0, dtype=float), x[n:3 * n].reshape(n, 2)])
    slacks = x[3 * n:].reshape(n, 4).copy()
    return states, controls, slacks


def initial_reference(scenario: Scenario, i0: int, n: int):
    """Curvature feed-forward rollout from the start state.

    The feed-forward is the closest control sequence to the path curvature that
    honors the actuator limits, so the first trust box never conflicts with them.
    """
    path = scenario.path
    controls = feasible_feedforward(
        path.kappa[i0:i0 + n], start_control(scenario, i0), scenario.limits.u_max, scenario.limits.u_rate_max
    )
    states = np.array(rollout(path, scenario.start.z, controls, start_index=i0))
    return states, controls


def feasible_feedforward(kappa, u_start: float, u_max: float, u_rate_max: float) -> np.ndarray:
    """Least-squares fit of ``kappa`` under magnitude and rate limits with ``u_0 = u_start``."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.size
    if n == 1:
        return np.array([u_start])
    D = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    E = sp.eye(n, format="csc")[1:]
    C = sp.vstack([E, -E, D, -D], format="csc")
    d = np.concatenate([np.full(2 * (n - 1), u_max), np.full(2 * (n - 1), u_rate_max)])
    A_eq = sp.csc_matrix(([1.0], ([0], [0])), shape=(1, n))
    qp = make_qp(2.0 * sp.eye(n), -2.0 * kappa, A_eq, [u_start], C, d, float(kappa @ kappa))
    try:
        return solve_qp(qp).x
    except QpSolveError:
        raise ScenarioError("start curvature cannot be reconciled with the actuator limits", "start.u") from None


def start_control(scenario: Scenario, i0: int) -> float:
    if scenario.start.u is not None:
        return float(scenario.start.u)
    u_max = scenario.limits.u_max
    return float(np.clip(scenario.path.kappa[i0], -u_max, u_max))


def minimal_slacks(block: ConstraintBlock, states) -> np.ndarray:
    """Smallest corner slacks consistent with the linearized rows at ``states``.

    Equal to the QP slacks whenever the overhang weight is positive; with a zero
    weight the QP leaves them undetermined, so they are recomputed here.
    """
    n = len(states) - 1
    corner = block.tag == CORNER
    i = block.station_index[corner]
    z = np.asarray(states)[i]
    value = z[:, 0] + block.slope_epsi[corner] * z[:, 1] + block.offset[corner]
    excess = np.where(block.upper[corner], value - block.bound[corner], block.bound[corner] - value)
    return np.maximum(excess, 0.0).reshape(n, 4)


def _taylor_gap(scenario, i0, block: ConstraintBlock, states) -> float:
    """Largest difference between linearized rows and exact projections at ``states``."""
    path = scenario.path
    glob = i0 + block.station_index
    z = states[block.station_index]
    world = body_points_world(path, path.stations[glob], z[:, 0], z[:, 1], block.longitudinal, block.lateral)
    _, exact, status = path.to_frenet_many(world, strict=False)
    linear = z[:, 0] + block.slope_epsi * z[:, 1] + block.offset
    ok = status == 0
    return float(np.max(np.abs(linear[ok] - exact[ok]))) if np.any(ok) else math.nan


def step_norm(new_states, ref_states, sqp: SqpSettings) -> float:
    """Infinity norm of the state step, heading scaled to meters by the trust-box ratio."""
    delta = np.abs(np.asarray(new_states) - np.asarray(ref_states))
    scale = sqp.trust_y / sqp.trust_psi
    return float(max(delta[:, 0].max(), (delta[:, 1] * scale).max()))


def _solve_subproblem(scenario, i0, ref_states, ref_controls, weights, wheelbase_rows):
    """Solve the linearized subproblem, widening the trust box while it is infeasible.

    Only primal infeasibility triggers a wider box; the body rows themselves are
    never relaxed, so a scenario that is infeasible at the widest box fails.
    """
    for scale in TRUST_SCALES:
        qp, block = assemble_qp(
            scenario, i0, ref_states, ref_controls,
            weights=weights, wheelbase_rows=wheelbase_rows, trust_scale=scale,
        )
        try:
            return qp, block, solve_qp(qp), scale
        except QpSolveError as exc:
            if exc.status != "primal_infeasible" or scale == TRUST_SCALES[-1]:
                raise
            log.debug("subproblem infeasible at trust scale %g, widening", scale)
    raise AssertionError("unreachable")


def sqp_plan(scenario: Scenario, ablation: str = "full", keep_history: bool = True) -> PlanResult:
    path = scenario.path
    sqp = scenario.sqp
    weights, wheelbase_rows = _ablate(scenario, ablation)
    i0, n = planning_horizon(scenario)
    stations = path.stations[i0:i0 + n + 1]
    ref_states, ref_controls = initial_reference(scenario, i0, n)

    history = []
    steps = []
    last = None
    status = MAX_ITER
    failed = None
    message = ""
    for it in range(1, sqp.max_iter + 1):
        try:
            qp, block, sol, scale = _solve_subproblem(
                scenario, i0, ref_states, ref_controls, weights, wheelbase_rows
            )
        except QpSolveError as exc:
            status, failed, message = INFEASIBLE, it, f"iteration {it}: {exc.status}"
            break
        except (GeometryError, DistortionError, ModelDomainError) as exc:
            status, failed, message = INFEASIBLE, it, f"iteration {it}: {exc}"
            break
        states, controls, _ = unpack(sol.x, ref_states[0], n)
        slacks = minimal_slacks(block, states)
        try:
            rolled = np.array(rollout(path, ref_states[0], controls, start_index=i0))
        except ModelDomainError as exc:
            status, failed, message = INFEASIBLE, it, f"iteration {it}: {exc}"
            break
        step = step_norm(states, ref_states, sqp)
        steps.append(step)
        record = IterationRecord(
            iteration=it,
            step_norm=step,
            objective=qp.objective(sol.x),
            controls=controls,
            states=states,
            rollout_states=rolled,
            taylor_gap=_taylor_gap(scenario, i0, block, states),
            linearization_gap=float(np.max(np.abs(states - rolled))),
            qp_iterations=sol.iterations,
            kkt=kkt_residuals(qp, sol),
            trust_scale=scale,
        )
        if keep_history:
            history.append(record)
        last = (states, controls, slacks, record)
        log.debug("sqp iteration %d: step %.3e objective %.6g", it, step, record.objective)
        ref_states, ref_controls = rolled, controls
        if step <= sqp.tol:
            status = CONVERGED
            break

    if last is None:
        states, controls = ref_states, ref_controls
        slacks = np.zeros((n, 4))
        gap = math.nan
    else:
        states, controls, slacks, record = last
        gap = record.linearization_gap
    objectives = evaluate_objectives(states, controls, slacks)
    return PlanResult(
        status=status,
        stations=stations,
        start_index=i0,
        states=states,
        controls=controls,
        slacks=slacks,
        objectives={
            "center": objectives[0],
            "smooth": objectives[1],
            "overhang": objectives[2],
            "total": weighted_objective(objectives, weights),
        },
        iterations=len(steps) if failed is None else failed,
        step_norms=steps,
        history=history,
        linearization_gap=gap,
        failed_iteration=failed,
        message=message,
    )
