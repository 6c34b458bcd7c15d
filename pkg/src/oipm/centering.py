"""Offline centering machinery: damped Newton, phase-I, path-following.

These routines produce certified starting points (decrement <= 1/9) for the
online solvers and high-accuracy centers for the per-round optimum oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .barriers import AffineIneq, BarrierAggregate, relax_with_slack
from .errors import InfeasibleStart, NonConvergent
from .kkt import KktSystem, newton_step
from .problem import PrimalDualPoint, TimeVaryingProblem

log = logging.getLogger(__name__)

CERTIFICATE = 1.0 / 9.0
DAMPED_THRESHOLD = 0.25
_EQ_TOL = 1e-10
_MAX_BACKSTEPS = 60


@dataclass
class CenteringResult:
    point: PrimalDualPoint
    decrement: float
    iterations: int


def newton_solve(problem, b, eta, y0, tol=CERTIFICATE, max_iter=500,
                 raise_on_cap=True, accept_tol=None):
    """Damped Newton until the decrement certifies, from a possibly
    equality-infeasible start.

    Step length is 1 when the decrement is at most 1/4 or equality
    feasibility still has to be restored, and 1/(1+lambda) otherwise; either
    way the step is halved until the iterate stays strictly interior.

    Deep on the central path the decrement bottoms out at a
    conditioning-dependent floor; when ``accept_tol`` is set, stagnating
    below it counts as converged even above ``tol``.
    """
    b = np.asarray(b, dtype=float).ravel()
    y = y0.copy()
    eq_scale = 1.0 + float(np.linalg.norm(b))
    prev_decrement = np.inf
    best = None
    for it in range(max_iter):
        step = newton_step(problem, y, eta, b)
        feasible = step.equality_residual_norm <= _EQ_TOL * eq_scale
        if feasible and step.decrement <= tol:
            return CenteringResult(y, step.decrement, it)
        if (feasible and accept_tol is not None
                and step.decrement <= accept_tol
                and step.decrement >= 0.5 * prev_decrement):
            return CenteringResult(y, step.decrement, it)
        prev_decrement = step.decrement
        best = CenteringResult(y, step.decrement, it)
        if feasible and step.decrement > DAMPED_THRESHOLD:
            alpha = 1.0 / (1.0 + step.decrement)
        else:
            alpha = 1.0
        for _ in range(_MAX_BACKSTEPS):
            if problem.barrier.is_interior(y.x + alpha * step.delta_x):
                break
            alpha *= 0.5
        else:
            raise NonConvergent("could not keep the Newton iterate interior")
        y = PrimalDualPoint(y.x + alpha * step.delta_x,
                            y.nu + alpha * step.delta_nu)
    if raise_on_cap:
        raise NonConvergent(
            f"centering did not certify within {max_iter} iterations "
            f"(decrement {best.decrement:g})")
    final = newton_step(problem, y, eta, b)
    return CenteringResult(y, final.decrement, max_iter)


def growth_factor(v_f):
    """Largest barrier-parameter growth keeping one re-centering step safe."""
    return 1.0 + 1.0 / (8.0 * np.sqrt(max(v_f, 1.0)))


def path_follow(problem, b, y, eta_start, eta_target, stage_tol=CERTIFICATE,
                max_iter_per_stage=50, growth=None):
    """Grow eta geometrically towards eta_target, re-centering per stage.

    The default growth 1 + 1/(8 sqrt(v_f)) re-certifies in a single full
    step per stage.  Larger factors trade more damped re-centering steps
    per stage for far fewer stages; each stage stays equality-feasible, so
    damped Newton convergence is guaranteed either way.
    """
    eta = float(eta_start)
    factor = growth_factor(problem.v_f) if growth is None else float(growth)
    while eta < eta_target:
        eta = min(eta * factor, eta_target)
        y = newton_solve(problem, b, eta, y, tol=stage_tol,
                         max_iter=max_iter_per_stage).point
    return y, eta


def _interior_margin(barrier, x):
    return -barrier.max_constraint(x)


def phase_one(barrier: BarrierAggregate, A, b, x0=None, growth=1.5,
              eta_cap=1e12, max_iter_per_stage=80):
    """Find a strictly interior point of the barrier domain on {Ax = b}.

    Minimizes an auxiliary slack s over the relaxed terms g_i(x) <= s with
    the same Newton machinery, stopping as soon as the x-part turns strictly
    interior.  Raises InfeasibleStart when no interior point exists.
    """
    A = np.asarray(A, dtype=float)
    n = barrier.dim
    if A.size == 0:
        A = A.reshape(0, n)
    b = np.asarray(b, dtype=float).ravel()
    if x0 is None:
        if A.shape[0]:
            x0 = np.linalg.lstsq(A, b, rcond=None)[0]
        else:
            x0 = np.zeros(n)
    else:
        x0 = np.asarray(x0, dtype=float).copy()
        if A.shape[0] and np.linalg.norm(A @ x0 - b) > _EQ_TOL * (1 + np.linalg.norm(b)):
            x0 = x0 - np.linalg.lstsq(A, A @ x0 - b, rcond=None)[0]
    if _interior_margin(barrier, x0) > 0.0:
        return x0

    s0 = barrier.max_constraint(x0) + 1.0
    terms = [relax_with_slack(t) for t in barrier.terms]
    cap = AffineIneq(np.eye(n + 1)[-1], s0 + 1.0)  # keeps s bounded above
    ext_barrier = BarrierAggregate(terms + [cap])
    ext_A = np.hstack([A, np.zeros((A.shape[0], 1))])
    ext_c = np.zeros(n + 1)
    ext_c[-1] = 1.0
    ext = TimeVaryingProblem(ext_c, ext_A, ext_barrier)
    y = PrimalDualPoint(np.concatenate([x0, [s0]]), np.zeros(A.shape[0]))

    eta = 1.0
    while eta <= eta_cap:
        y = newton_solve(ext, b, eta, y, tol=CERTIFICATE,
                         max_iter=max_iter_per_stage).point
        x = y.x[:n]
        if _interior_margin(barrier, x) > 0.0:
            return x
        eta *= growth
    raise InfeasibleStart(
        "phase-I found no strictly interior point "
        f"(best slack {y.x[-1]:g}, max constraint {barrier.max_constraint(y.x[:n]):g})")


def solve_to_center(problem, b, eta_target, warm=None, center_tol=CERTIFICATE,
                    x0=None, accept_tol=CERTIFICATE):
    """Center the barrier objective at eta_target, warm-starting if possible.

    A warm point close to the target center converges in a handful of
    steps; otherwise the cold route runs phase-I, centers at eta = 1, and
    path-follows up to eta_target.  ``accept_tol`` caps how loose a
    stagnated solve may finish (the certificate 1/9 by default); pass None
    to require ``center_tol`` strictly.
    """
    b = np.asarray(b, dtype=float).ravel()
    if warm is not None:
        try:
            res = newton_solve(problem, b, eta_target, warm,
                               tol=center_tol, max_iter=80,
                               accept_tol=accept_tol)
            return res.point
        except NonConvergent:
            log.debug("warm start did not certify, falling back to cold path")
    x_int = phase_one(problem.barrier, problem.A, b, x0=x0)
    y = PrimalDualPoint(x_int, np.zeros(problem.p))
    eta0 = min(1.0, eta_target)
    y = newton_solve(problem, b, eta0, y, tol=CERTIFICATE).point
    if eta_target > eta0:
        y, _ = path_follow(problem, b, y, eta0, eta_target)
    if center_tol < CERTIFICATE:
        y = newton_solve(problem, b, eta_target, y, tol=center_tol,
                         max_iter=100, accept_tol=accept_tol).point
    return y
