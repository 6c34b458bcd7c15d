"""Per-round optimum oracle and regret/violation bookkeeping.

The ledger accumulates, over recorded rounds t = 1..T:

  R_d   = sum of c.x_t - c.x*_t
  R_eps = sum of [c.x_t - c.x*_t - eps]^+
  Vio   = sum of (cone distances + |A x_t - b_t|)
  V_b   = sum of |b_t - b_{t-1}|
  V_T   = sum of |x*_t - x*_{t-1}|        (singleton optimal sets)

Optima come from a path-following oracle on the barrier objective; each
round's solve warm-starts from the previous center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barriers import AffineIneq, ConvexQuadIneq, SecondOrderCone
from .centering import solve_to_center
from .errors import InfeasibleInstance, InfeasibleStart, MissingOracle
from .problem import PrimalDualPoint

ORACLE_TOL = 1e-8


def offline_center(problem, b, eta_target=None, tol=ORACLE_TOL, warm=None,
                   center_tol=1e-8):
    """Path-following center y^eta; doubles as the per-round optimum oracle.

    Without an explicit eta_target, the weight is pushed until the
    optimality-gap proxy v_f/eta drops to tol; the returned primal part is
    then within O(tol) of the true constrained optimum.  The final
    centering aims for ``center_tol`` but accepts the certificate decrement
    1/9 when rounding noise floors above it.
    """
    if eta_target is None:
        eta_target = problem.v_f / tol
    try:
        return solve_to_center(problem, b, eta_target, warm=warm,
                               center_tol=center_tol)
    except InfeasibleStart as exc:
        raise InfeasibleInstance(str(exc)) from exc


@dataclass
class ConeDistance:
    value: float
    surrogate: bool


def soc_point_distance(u, t):
    """Euclidean distance of a raw point (u, t) to the cone |u| <= t."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    nu = float(np.linalg.norm(u))
    t = float(t)
    if nu <= t:
        return 0.0
    if nu <= -t:
        return math.hypot(t, nu)
    return (nu - t) / math.sqrt(2.0)


def cone_distance(term, x):
    """Distance from x to the feasible set of one term.

    Exact for half-spaces.  For cones the point distance in (u, t) space is
    mapped back only when the affine map [U; w'] has orthonormal columns;
    otherwise (and for quadratics) the surrogate max(0, g(x)) is returned
    with ``surrogate=True``.  Interior points always measure exactly 0.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(term, AffineIneq):
        g = term.g(x)
        na = np.linalg.norm(term.a)
        value = max(0.0, g) / na if na > 0 else 0.0
        return ConeDistance(value=value, surrogate=False)
    if isinstance(term, SecondOrderCone):
        u, t = term.affine_parts(x)
        if np.linalg.norm(u) <= t:
            return ConeDistance(value=0.0, surrogate=False)
        M = np.vstack([term.U, term.w])
        gram = M.T @ M
        if np.allclose(gram, np.eye(term.dim), atol=1e-10):
            return ConeDistance(value=soc_point_distance(u, t), surrogate=False)
        return ConeDistance(value=max(0.0, term.g(x)), surrogate=True)
    if isinstance(term, ConvexQuadIneq):
        g = term.g(x)
        if g <= 0.0:
            return ConeDistance(value=0.0, surrogate=False)
        return ConeDistance(value=g, surrogate=True)
    raise TypeError(f"unsupported term type {type(term).__name__}")


@dataclass
class RoundRecord:
    t: int
    obj: float
    obj_opt: float
    regret_inc: float
    eps_regret_inc: float
    eq_viol: float
    ineq_viol: float
    decrement: float
    eta: float


CSV_COLUMNS = ("t", "obj", "obj_opt", "regret_inc", "eps_regret_inc",
               "eq_viol", "ineq_viol", "decrement", "eta")


class MetricsLedger:
    """Round-ordered record store with running regret/violation sums."""

    def __init__(self, problem, epsilon=0.0, oracle_tol=ORACLE_TOL, lazy=True):
        self.problem = problem
        self.epsilon = float(epsilon)
        self.oracle_tol = float(oracle_tol)
        self.lazy = lazy
        self.records = []
        self.R_d = 0.0
        self.R_eps = 0.0
        self.Vio = 0.0
        self.V_T = 0.0
        self.V_b = 0.0
        self.surrogate_used = False
        self._warm = None
        self._x_star_prev = None
        self._b_prev = None

    def oracle(self, b):
        y = offline_center(self.problem, b, tol=self.oracle_tol,
                           warm=self._warm)
        self._warm = y
        return y

    def set_baseline(self, b0, x_star=None):
        """Anchor V_b and V_T at the pre-stream data (round 0)."""
        b0 = np.asarray(b0, dtype=float).ravel()
        if x_star is None:
            x_star = self.oracle(b0).x
        self._x_star_prev = np.asarray(x_star, dtype=float).copy()
        self._b_prev = b0.copy()

    def inequality_violation(self, x):
        total = 0.0
        for term in self.problem.barrier.terms:
            dist = cone_distance(term, x)
            total += dist.value
            self.surrogate_used |= dist.surrogate
        return total

    def record_round(self, t, x_t, b_t, decrement=float("nan"),
                     eta=float("nan"), x_star=None):
        x_t = np.asarray(x_t, dtype=float)
        b_t = np.asarray(b_t, dtype=float).ravel()
        if x_star is None:
            if not self.lazy:
                raise MissingOracle(
                    f"round {t}: no optimum supplied and lazy solves disabled")
            x_star = self.oracle(b_t).x
        x_star = np.asarray(x_star, dtype=float)

        obj = self.problem.objective(x_t)
        obj_opt = self.problem.objective(x_star)
        gap = obj - obj_opt
        eps_inc = max(0.0, gap - self.epsilon)
        eq = float(np.linalg.norm(self.problem.equality_residual(x_t, b_t)))
        ineq = self.inequality_violation(x_t)

        rec = RoundRecord(t=t, obj=obj, obj_opt=obj_opt, regret_inc=gap,
                          eps_regret_inc=eps_inc, eq_viol=eq, ineq_viol=ineq,
                          decrement=float(decrement), eta=float(eta))
        self.records.append(rec)
        self.R_d += gap
        self.R_eps += eps_inc
        self.Vio += ineq + eq
        if self._b_prev is not None:
            self.V_b += float(np.linalg.norm(b_t - self._b_prev))
        if self._x_star_prev is not None:
            self.V_T += float(np.linalg.norm(x_star - self._x_star_prev))
        self._b_prev = b_t.copy()
        self._x_star_prev = x_star.copy()
        return rec

    def __len__(self):
        return len(self.records)

    def summary(self):
        return {"rounds": len(self.records), "R_d": self.R_d,
                "R_eps": self.R_eps, "Vio": self.Vio, "V_T": self.V_T,
                "V_b": self.V_b, "epsilon": self.epsilon,
                "surrogate_used": self.surrogate_used}

    def export_csv(self, path):
        """Comma-separated ledger, 17 significant digits (lossless doubles)."""
        lines = [",".join(CSV_COLUMNS)]
        for r in self.records:
            lines.append(",".join([str(r.t)] + [
                format(v, ".17g") for v in (
                    r.obj, r.obj_opt, r.regret_inc, r.eps_regret_inc,
                    r.eq_viol, r.ineq_viol, r.decrement, r.eta)]))
        text = "\n".join(lines) + "\n"
        with open(path, "w") as fh:
            fh.write(text)
        return text


def bound_check(ledger, problem, eta0=None, beta=None, epsilon=None,
                eta_fixed=None):
    """Evaluate the applicable regret/violation bounds against the ledger.

    With (eta0, beta): R_d <= 11 v_f beta / (5 eta0 (beta-1)) + |c| V_T.
    With (epsilon, eta_fixed >= 11 v_f/(5 eps)): R_eps <= |c| V_T.
    The violation comparison Vio <= V_b applies to every run.
    """
    v_f = problem.v_f
    c_norm = float(np.linalg.norm(problem.c))
    report = {"v_f": v_f, "c_norm": c_norm}

    vio_bound = {"lhs": ledger.Vio, "rhs": ledger.V_b,
                 "passed": ledger.Vio <= ledger.V_b + 1e-8 * (1 + ledger.V_b)}
    vio_bound["margin"] = vio_bound["rhs"] - vio_bound["lhs"]
    report["violation"] = vio_bound

    if eta0 is not None and beta is not None and beta > 1.0:
        rhs = 11.0 * v_f * beta / (5.0 * eta0 * (beta - 1.0)) + c_norm * ledger.V_T
        report["dynamic_regret"] = {
            "lhs": ledger.R_d, "rhs": rhs, "margin": rhs - ledger.R_d,
            "passed": ledger.R_d <= rhs}
    if epsilon is not None and eta_fixed is not None:
        rhs = c_norm * ledger.V_T
        report["eps_regret"] = {
            "lhs": ledger.R_eps, "rhs": rhs, "margin": rhs - ledger.R_eps,
            "eta_large_enough": eta_fixed >= 11.0 * v_f / (5.0 * epsilon),
            "passed": ledger.R_eps <= rhs + 1e-12}
    return report
