"""Round-driven online interior-point solvers.

Two schemes share the state machine:

* ``oipm_tec`` — per round: commit the current decision, observe b_t, take
  one unit Newton step on the new data (t-step), grow the barrier weight by
  beta, and take one more step with a zero equality block (eta-step).
* ``eps_oipm_tec`` — fixed barrier weight, one t-step per round; intended
  for a tolerance eps with eta >= 11 v_f / (5 eps).

Both maintain the standing certificate: decrement <= 1/9 after every round
whose equality drift stays under sqrt(3m/160).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .centering import CERTIFICATE, newton_solve, path_follow, solve_to_center
from .errors import DriftTooLarge, NonConvergent
from .kkt import drift_threshold, eta_step, newton_step, smallest_singular_value
from .problem import PrimalDualPoint, TimeVaryingProblem

log = logging.getLogger(__name__)

MODES = ("oipm_tec", "eps_oipm_tec")
DRIFT_POLICIES = ("correct", "warn", "raise")


def beta_cap(v_f):
    return 1.0 + 1.0 / (8.0 * np.sqrt(max(v_f, 1.0)))


def default_beta(v_f):
    """min(1.02, theory cap); the cap keeps the eta-step certified."""
    return min(1.02, beta_cap(v_f))


def minimum_eta_for_tolerance(v_f, epsilon):
    return 11.0 * v_f / (5.0 * epsilon)


@dataclass
class RoundEvent:
    round: int
    drift: float
    threshold: float
    drift_exceeded: bool
    corrections: int
    decrement: float
    certified: bool


@dataclass
class SolverState:
    problem: TimeVaryingProblem
    y: PrimalDualPoint
    eta: float
    eta0: float
    beta: float
    mode: str
    round: int = 0
    last_decrement: float = np.nan
    b_prev: np.ndarray = None
    m_estimate: float = np.nan
    drift_policy: str = "correct"
    correction_cap: int = 5
    init_iterations: int = 0
    decrement_trace: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def drift_limit(self):
        return drift_threshold(self.m_estimate)

    def refresh_m(self):
        self.m_estimate = smallest_singular_value(self.problem, self.y)
        return self.m_estimate


def initialize(problem, eta0=1.0, mode="oipm_tec", beta=None, epsilon=None,
               eta_fixed=None, warm=None, b0=None, drift_policy="correct",
               correction_cap=5, max_iter=500):
    """Offline phase producing a certified state (decrement <= 1/9 at b0).

    Runs phase-I for a strictly interior point when no warm start is given,
    then damped Newton centering; large target weights are reached by
    path-following.  For ``eps_oipm_tec`` the running weight is
    max(eta_fixed, 11 v_f / (5 epsilon)).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if drift_policy not in DRIFT_POLICIES:
        raise ValueError(f"unknown drift policy {drift_policy!r}")
    if b0 is None:
        if problem.b_stream is None:
            raise ValueError("initialize needs b0 or a problem with a b_stream")
        b0 = problem.b_stream[0]
    b0 = np.asarray(b0, dtype=float).ravel()

    v_f = problem.v_f
    if mode == "eps_oipm_tec":
        if epsilon is None or epsilon <= 0:
            raise ValueError("eps_oipm_tec needs a positive epsilon")
        eta_run = max(eta_fixed or 0.0, minimum_eta_for_tolerance(v_f, epsilon))
        beta_run = 1.0
    else:
        eta_run = float(eta0)
        beta_run = default_beta(v_f) if beta is None else float(beta)
        if beta_run <= 1.0:
            raise ValueError(f"beta must exceed 1, got {beta_run}")
        cap = beta_cap(v_f)
        if beta_run > cap * (1 + 1e-12):
            log.warning(
                "beta=%g exceeds the certified growth cap %g for v_f=%g; "
                "per-round certificates may need extra corrections",
                beta_run, cap, v_f)

    iterations = 0
    if warm is not None:
        probe = newton_step(problem, warm, eta_run, b0)
        feasible = probe.equality_residual_norm <= 1e-10 * (1 + np.linalg.norm(b0))
        if feasible and probe.decrement <= CERTIFICATE:
            y = warm.copy()
            dec = probe.decrement
        else:
            res = newton_solve(problem, b0, eta_run, warm, tol=CERTIFICATE,
                               max_iter=max_iter)
            y, dec, iterations = res.point, res.decrement, res.iterations
    else:
        x_int = _interior_start(problem, b0)
        y = PrimalDualPoint(x_int, np.zeros(problem.p))
        eta_first = min(1.0, eta_run)
        res = newton_solve(problem, b0, eta_first, y, tol=CERTIFICATE,
                           max_iter=max_iter)
        y, dec, iterations = res.point, res.decrement, res.iterations
        if eta_run > eta_first:
            y, _ = path_follow(problem, b0, y, eta_first, eta_run)
            final = newton_step(problem, y, eta_run, b0)
            dec = final.decrement

    state = SolverState(problem=problem, y=y, eta=eta_run, eta0=eta_run,
                        beta=beta_run, mode=mode, last_decrement=dec,
                        b_prev=b0.copy(), drift_policy=drift_policy,
                        correction_cap=correction_cap,
                        init_iterations=iterations)
    state.refresh_m()
    return state


def _interior_start(problem, b0):
    from .centering import phase_one

    return phase_one(problem.barrier, problem.A, b0)


def certify(state: SolverState, b_t):
    """Recompute the decrement at (y, eta, b_t) without moving."""
    step = newton_step(state.problem, state.y, state.eta, b_t)
    return step.decrement


def _check_drift(state, b_t):
    drift = float(np.linalg.norm(np.asarray(b_t, dtype=float) - state.b_prev))
    limit = state.drift_limit
    exceeded = np.isfinite(limit) and drift > limit * (1 + 1e-12)
    if exceeded:
        if state.drift_policy == "raise":
            raise DriftTooLarge(
                f"round {state.round}: |db|={drift:g} exceeds {limit:g}")
        if state.drift_policy == "warn":
            log.warning("round %d: equality drift %g exceeds threshold %g",
                        state.round, drift, limit)
    return drift, limit, exceeded


def _recover_certificate(state, b_t):
    """Bounded damped-Newton corrections after a drift violation."""
    corrections = 0
    if state.drift_policy == "correct" and state.correction_cap > 0:
        res = newton_solve(state.problem, b_t, state.eta, state.y,
                           tol=CERTIFICATE, max_iter=state.correction_cap,
                           raise_on_cap=False)
        state.y = res.point
        corrections = res.iterations
    return corrections


def _finish_round(state, b_t, drift, limit, exceeded):
    dec = certify(state, b_t)
    corrections = 0
    if dec > CERTIFICATE:
        corrections = _recover_certificate(state, b_t)
        dec = certify(state, b_t)
    certified = dec <= CERTIFICATE
    state.last_decrement = dec
    state.decrement_trace.append(dec)
    state.events.append(RoundEvent(
        round=state.round, drift=drift, threshold=limit,
        drift_exceeded=exceeded, corrections=corrections,
        decrement=dec, certified=certified))
    state.b_prev = np.asarray(b_t, dtype=float).copy()


def oipm_tec_round(state: SolverState, b_t):
    """One round of the growing-weight scheme; returns (decision, state).

    The returned decision is the pre-update iterate, so it satisfies the
    previous round's equality constraint exactly.
    """
    if state.mode != "oipm_tec":
        raise ValueError(f"state was initialized for mode {state.mode!r}")
    problem = state.problem
    decision = state.y.x.copy()
    b_t = np.asarray(b_t, dtype=float).ravel()
    drift, limit, exceeded = _check_drift(state, b_t)

    t_step = newton_step(problem, state.y, state.eta, b_t)
    state.y = PrimalDualPoint(state.y.x + t_step.delta_x,
                              state.y.nu + t_step.delta_nu)
    state.round += 1
    state.eta = state.eta0 * state.beta ** state.round
    e_step = eta_step(problem, state.y, state.eta)
    state.y = PrimalDualPoint(state.y.x + e_step.delta_x,
                              state.y.nu + e_step.delta_nu)

    _finish_round(state, b_t, drift, limit, exceeded)
    return decision, state


def epsilon_oipm_tec_round(state: SolverState, b_t):
    """One round of the fixed-weight scheme; returns (decision, state)."""
    if state.mode != "eps_oipm_tec":
        raise ValueError(f"state was initialized for mode {state.mode!r}")
    problem = state.problem
    decision = state.y.x.copy()
    b_t = np.asarray(b_t, dtype=float).ravel()
    drift, limit, exceeded = _check_drift(state, b_t)

    t_step = newton_step(problem, state.y, state.eta, b_t)
    state.y = PrimalDualPoint(state.y.x + t_step.delta_x,
                              state.y.nu + t_step.delta_nu)
    state.round += 1

    _finish_round(state, b_t, drift, limit, exceeded)
    return decision, state


def run_round(state, b_t):
    """Dispatch to the round update matching the state's mode."""
    if state.mode == "oipm_tec":
        return oipm_tec_round(state, b_t)
    return epsilon_oipm_tec_round(state, b_t)
