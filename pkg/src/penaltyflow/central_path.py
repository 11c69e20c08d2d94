"""Strongly monotone auxiliary solves, path tracing and the least-norm limit.

The auxiliary inclusion for parameters (eps, beta) adds eps*Id + beta*B1 to
A + D, which makes the fixed-point map of one forward-backward step a
contraction; every routine here is built on that solver.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, ParameterError
from .operators import as_vector


@dataclass
class CentralPathPoint:
    """One solved auxiliary problem: the point and its solve diagnostics."""

    eps: float
    beta: float
    xbar: np.ndarray
    residual: float
    iterations: int
    t: Optional[float] = None
    residual_history: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FunnelDiagnostics:
    """Norm bounds extracted from the solved points.

    r_estimate is the norm of the least-norm limit; ell_estimate additionally
    majorizes ||B1|| over every visited point.
    """

    r_estimate: float
    ell_estimate: float


def _internal_step(prob, eps, beta):
    lips = prob.lipschitz_bound(eps, beta)
    if prob.d.cocoercive:
        return 0.9 / lips
    # without cocoercivity the 0.9/L step can cycle (rotational fields);
    # eps/L^2 minimizes the strong-monotonicity contraction bound
    return min(0.9 / lips, eps / lips ** 2)


def solve_auxiliary(prob, eps, beta, tol=1e-10, max_iter=200000, x0=None,
                    keep_history=False):
    """Solve the eps-strongly-monotone auxiliary inclusion.

    Iterates the forward-backward step x <- J_{lam*A}(x - lam*V(x)) with a
    fixed internal step until the fixed-point gap drops below ``tol``.

    Returns
    -------
    CentralPathPoint

    Raises
    ------
    ConvergenceFailure
        If max_iter is exhausted; the exception carries the last residual.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive (strong monotonicity)")
    if beta < 0:
        raise ParameterError("beta must be nonnegative")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    x = np.zeros(prob.dim) if x0 is None else as_vector(x0, prob.dim).copy()
    lam = _internal_step(prob, eps, beta)
    resolvent = prob.a.resolvent
    vfield = prob.vfield
    history = [] if keep_history else None
    for k in range(int(max_iter)):
        x_next = resolvent(lam, x - lam * vfield(eps, beta, x))
        res = float(np.linalg.norm(x - x_next))
        if history is not None:
            history.append(res)
        x = x_next
        if res <= tol:
            return CentralPathPoint(eps, beta, x, res, k + 1,
                                    residual_history=None if history is None
                                    else np.asarray(history))
    raise ConvergenceFailure(
        f"auxiliary solve at (eps={eps:g}, beta={beta:g}) stalled at residual {res:.3e}",
        residual=res)


def central_path(prob, sch, times, tol=1e-10, max_iter=200000, x0=None):
    """Solve the auxiliary problem along (eps(t), beta(t)), warm-starting each solve.

    Returns a list of CentralPathPoint with the time attached.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ParameterError("times grid is empty")
    if np.any(np.diff(times) <= 0) and times.size > 1:
        raise ParameterError("times must be strictly increasing")
    points = []
    warm = x0
    for t in times:
        eps = float(sch.eps(t))
        beta = float(sch.beta(t))
        try:
            pt = solve_auxiliary(prob, eps, beta, tol=tol, max_iter=max_iter, x0=warm)
        except ConvergenceFailure as exc:
            raise ConvergenceFailure(f"central path solve failed at t={t:g}: {exc}",
                                     residual=exc.residual) from exc
        pt.t = float(t)
        points.append(pt)
        warm = pt.xbar
    return points


_DIAG_EPS_EXP = -0.25
_DIAG_BETA_EXP = 0.5


def _diagonal_points(prob, tol, solver_tol, max_levels=60):
    """Solved points along the diagonal eps=n^-1/4, beta=n^1/2 with n doubling.

    Doubling the index keeps consecutive gaps proportional to the remaining
    distance, so the Cauchy test at ``tol`` certifies a comparable accuracy;
    stepping n by one would make the gaps vanish much faster than the error.
    """
    points = []
    warm = None
    prev = None
    n = 1.0
    for _ in range(max_levels):
        eps = n ** _DIAG_EPS_EXP
        beta = n ** _DIAG_BETA_EXP
        pt = solve_auxiliary(prob, eps, beta, tol=solver_tol, x0=warm)
        points.append(pt)
        if prev is not None and float(np.linalg.norm(pt.xbar - prev)) <= tol:
            return points
        prev = pt.xbar
        warm = pt.xbar
        n *= 2.0
    raise ConvergenceFailure(
        "diagonal sequence not Cauchy within the level budget",
        residual=float(np.linalg.norm(points[-1].xbar - points[-2].xbar)))


def funnel_diagnostics(prob, tol=1e-4, solver_tol=None):
    """Least-norm limit plus the norm bounds of the visited funnel points.

    Returns
    -------
    (solution, FunnelDiagnostics, points)
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    solver_tol = 0.01 * tol if solver_tol is None else solver_tol
    points = _diagonal_points(prob, tol, solver_tol)
    sol = points[-1].xbar
    r_est = float(np.linalg.norm(sol))
    b_sup = max(float(np.linalg.norm(prob.b1.eval(p.xbar))) for p in points)
    return sol, FunnelDiagnostics(r_est, max(r_est, b_sup)), points


def least_norm_solution(prob, tol=1e-4):
    """Approximate the minimal-norm zero by the vanishing-regularization diagonal."""
    sol, _, _ = funnel_diagnostics(prob, tol=tol)
    return sol


@dataclass(frozen=True)
class RegularityReport:
    """Both sides of the solution-map Lipschitz bound for one parameter pair."""

    lhs: float
    rhs_sharp: float
    rhs_ell: float
    ell_used: float
    passed_sharp: bool
    passed_ell: bool


def path_regularity_check(prob, sigma1, sigma2, tol=1e-9, diagnostics=None,
                          solver_tol=1e-12):
    """Compare the distance of two solved points with its Lipschitz majorants.

    The sharp bound uses |beta2-beta1|/eps1 * ||B1(x1)|| + |eps2-eps1|/eps1 *
    ||x2||; the coarser one replaces both norms by an ell constant taken from
    the funnel diagnostics joined with the two solved points.
    """
    e1, b1 = sigma1
    e2, b2 = sigma2
    if e1 <= 0 or e2 <= 0 or b1 <= 0 or b2 <= 0:
        raise ParameterError("both parameter pairs must be strictly positive")
    p1 = solve_auxiliary(prob, e1, b1, tol=solver_tol)
    p2 = solve_auxiliary(prob, e2, b2, tol=solver_tol)
    lhs = float(np.linalg.norm(p2.xbar - p1.xbar))
    bnorm1 = float(np.linalg.norm(prob.b1.eval(p1.xbar)))
    xnorm2 = float(np.linalg.norm(p2.xbar))
    rhs_sharp = (abs(b2 - b1) * bnorm1 + abs(e2 - e1) * xnorm2) / e1
    if diagnostics is None:
        ell = max(bnorm1, xnorm2,
                  float(np.linalg.norm(prob.b1.eval(p2.xbar))),
                  float(np.linalg.norm(p1.xbar)))
    else:
        ell = max(diagnostics.ell_estimate, bnorm1, xnorm2)
    rhs_ell = ell / e1 * (abs(b2 - b1) + abs(e2 - e1))
    slack = 1.0 + 1e-6
    return RegularityReport(lhs, rhs_sharp, rhs_ell, ell,
                            lhs <= rhs_sharp * slack + tol,
                            lhs <= rhs_ell * slack + tol)


@dataclass(frozen=True)
class DerivativeReport:
    """Finite-difference path speed against its closed-form majorant."""

    t: float
    fd_norm: float
    bound: float
    passed: bool


def path_derivative_check(prob, sch, t, rel_step=1e-4, slack=0.05, tol=1e-9,
                          solver_tol=1e-12):
    """Central finite difference of the path at ``t`` against the speed bound.

    The bound is dbeta/eps * ||B1(xbar)|| + |deps|/eps * ||xbar||; the check
    passes when the finite-difference speed does not exceed it by more than
    ``slack`` relatively.
    """
    if t <= 0:
        raise ParameterError("t must be positive")
    h = rel_step * t
    pts = {}
    warm = None
    for tt in (t - h, t, t + h):
        pt = solve_auxiliary(prob, float(sch.eps(tt)), float(sch.beta(tt)),
                             tol=solver_tol, x0=warm)
        pts[tt] = pt.xbar
        warm = pt.xbar
    fd = float(np.linalg.norm(pts[t + h] - pts[t - h]) / (2.0 * h))
    eps = float(sch.eps(t))
    bound = (float(sch.dbeta(t)) / eps * float(np.linalg.norm(prob.b1.eval(pts[t])))
             + abs(float(sch.deps(t))) / eps * float(np.linalg.norm(pts[t])))
    return DerivativeReport(float(t), fd, bound, fd <= bound * (1.0 + slack) + tol)
