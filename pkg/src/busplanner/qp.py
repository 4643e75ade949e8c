"""Convex QP container, solver front end and KKT certificate.

Problems are stated as::

    minimize    0.5 x'Hx + g'x + const
    subject to  A_eq x  = b_eq
                C x    <= d
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import QpSolveError

_SETTINGS = dict(
    verbose=False,
    max_iter=200,
    tol_gap_abs=1e-10,
    tol_gap_rel=1e-10,
    tol_feas=1e-10,
    tol_infeas_abs=1e-9,
    tol_infeas_rel=1e-9,
)


@dataclass(eq=False)
class QpProblem:
    hessian: sp.csc_matrix
    gradient: np.ndarray
    A_eq: sp.csc_matrix
    b_eq: np.ndarray
    C: sp.csc_matrix
    d: np.ndarray
    constant: float = 0.0
    row_labels: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.hessian.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.hessian @ x) + self.gradient @ x + self.constant)


@dataclass(eq=False)
class QpSolution:
    x: np.ndarray
    y_eq: np.ndarray
    y_ineq: np.ndarray
    status: str
    iterations: int


def _csc(m, shape):
    if m is None:
        return sp.csc_matrix(shape)
    return sp.csc_matrix(m, dtype=float)


def make_qp(H, g, A_eq=None, b_eq=None, C=None, d=None, constant=0.0) -> QpProblem:
    g = np.asarray(g, dtype=float)
    n = g.size
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    d = np.zeros(0) if d is None else np.asarray(d, dtype=float)
    return QpProblem(
        hessian=_csc(H, (n, n)),
        gradient=g,
        A_eq=_csc(A_eq, (b_eq.size, n)),
        b_eq=b_eq,
        C=_csc(C, (d.size, n)),
        d=d,
        constant=constant,
    )


def solve_qp(qp: QpProblem) -> QpSolution:
    n = qp.n
    m_eq = qp.b_eq.size
    m_in = qp.d.size
    P = sp.triu(qp.hessian, format="csc")
    A = sp.vstack([qp.A_eq, qp.C], format="csc")
    b = np.concatenate([qp.b_eq, qp.d])
    cones = []
    if m_eq:
        cones.append(clarabel.ZeroConeT(m_eq))
    if m_in:
        cones.append(clarabel.NonnegativeConeT(m_in))
    if not cones:
        A = sp.csc_matrix((1, n))
        b = np.zeros(1)
        cones = [clarabel.NonnegativeConeT(1)]
    settings = clarabel.DefaultSettings()
    for key, value in _SETTINGS.items():
        setattr(settings, key, value)
    solver = clarabel.DefaultSolver(P, qp.gradient, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        raise QpSolveError("primal_infeasible", "QP constraints are inconsistent")
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        raise QpSolveError("dual_infeasible", "QP objective is unbounded below")
    if status == "MaxIterations":
        raise QpSolveError("iteration_limit", "QP solver hit its iteration limit")
    if status not in ("Solved", "AlmostSolved"):
        raise QpSolveError("numerical_error", f"QP solver stopped with status {status}")
    z = np.asarray(sol.z)
    out = QpSolution(
        x=np.asarray(sol.x),
        y_eq=z[:m_eq],
        y_ineq=z[m_eq:m_eq + m_in] if m_in else np.zeros(0),
        status="optimal",
        iterations=int(sol.iterations),
    )
    return _polish(qp, out)


def _polish(qp: QpProblem, sol: QpSolution) -> QpSolution:
    """Re-solve the KKT system on the guessed active set.

    Interior-point iterates sit slightly inside weakly active constraints. The
    polished point is kept only if it is feasible, dual feasible and has smaller
    KKT residuals than the interior-point answer.
    """
    n, m_eq = qp.n, qp.b_eq.size
    slack = qp.d - qp.C @ sol.x if qp.d.size else np.zeros(0)
    active = np.flatnonzero(sol.y_ineq > slack)
    A = sp.vstack([qp.A_eq, qp.C[active]], format="csc")
    b = np.concatenate([qp.b_eq, qp.d[active]])
    m = b.size
    K = sp.bmat([[qp.hessian, A.T], [A, None]], format="csc")
    if m == 0:
        K = qp.hessian.tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            step = spla.spsolve(K, np.concatenate([-qp.gradient, b]))
        except (RuntimeError, ValueError):
            return sol
    step = np.atleast_1d(step)
    if not np.all(np.isfinite(step)):
        return sol
    y_ineq = np.zeros(qp.d.size)
    y_ineq[active] = step[n + m_eq:]
    cand = QpSolution(step[:n], step[n:n + m_eq], y_ineq, sol.status, sol.iterations)
    before = kkt_residuals(qp, sol)
    after = kkt_residuals(qp, cand)
    if max(after.values()) <= max(before.values()):
        return cand
    return sol


def kkt_residuals(qp: QpProblem, sol: QpSolution) -> dict[str, float]:
    """Infinity-norm KKT residuals of a primal-dual pair."""
    x = sol.x
    grad = qp.hessian @ x + qp.gradient
    if qp.b_eq.size:
        grad = grad + qp.A_eq.T @ sol.y_eq
    slack = qp.d - qp.C @ x if qp.d.size else np.zeros(0)
    if qp.d.size:
        grad = grad + qp.C.T @ sol.y_ineq

    def inf(v):
        return float(np.max(np.abs(v))) if np.size(v) else 0.0

    return {
        "stationarity": inf(grad),
        "primal_eq": inf(qp.A_eq @ x - qp.b_eq) if qp.b_eq.size else 0.0,
        "primal_ineq": float(np.max(np.maximum(-slack, 0.0))) if slack.size else 0.0,
        "dual": float(np.max(np.maximum(-sol.y_ineq, 0.0))) if sol.y_ineq.size else 0.0,
        "complementarity": inf(sol.y_ineq * slack),
    }
