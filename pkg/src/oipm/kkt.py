"""KKT assembly, Newton steps, and decrement diagnostics.

The saddle system solved throughout is

    D(y) = [ H(x)  A' ]        r = [ eta*c + grad phi(x) + A'nu ]
           [ A     0  ]            [ A x - b_t                  ]

with H(x) the barrier Hessian.  One unit step y + Delta restores A x = b_t
exactly because the equality rows are linear.  The squared Newton decrement
is r' D^-1 r; at equality-feasible points this is a true squared norm, at
infeasible points it can dip negative and is clamped to zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import DimensionMismatch, SingularKkt
from .problem import PrimalDualPoint, TimeVaryingProblem

log = logging.getLogger(__name__)

# above this primal dimension, prefer block elimination when H factors
SCHUR_MIN_N = 150
_RCOND_FLOOR = 1e-15


class KktSystem:
    """Factorized KKT matrix with a private solve workspace.

    Two routes are available: a symmetric indefinite (Bunch-Kaufman)
    factorization of the assembled matrix, and block elimination through
    the Schur complement A H^-1 A' when H admits a Cholesky factor.
    """

    def __init__(self, hessian_block, A, method="auto"):
        H = np.asarray(hessian_block, dtype=float)
        A = np.asarray(A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, H.shape[0])
        n, p = H.shape[0], A.shape[0]
        if H.shape != (n, n) or A.shape[1] != n:
            raise DimensionMismatch("inconsistent KKT block shapes")
        self.n, self.p = n, p
        self.H, self.A = H, A
        self._route = None
        if method not in ("auto", "sym", "schur"):
            raise ValueError(f"unknown KKT method {method!r}")
        if method == "schur" or (method == "auto" and p > 0 and n >= SCHUR_MIN_N):
            try:
                self._init_schur()
            except scipy.linalg.LinAlgError:
                if method == "schur":
                    raise SingularKkt("Hessian block is not positive definite; "
                                      "Schur route unavailable")
        if self._route is None:
            self._init_sym()

    @property
    def matrix(self):
        D = np.zeros((self.n + self.p, self.n + self.p))
        D[:self.n, :self.n] = self.H
        if self.p:
            D[:self.n, self.n:] = self.A.T
            D[self.n:, :self.n] = self.A
        return D

    def _init_sym(self):
        D = self.matrix
        ldu, ipiv, info = lapack.dsytrf(D, lower=1)
        if info > 0:
            raise SingularKkt(f"KKT factorization hit a zero pivot (index {info})")
        if info < 0:
            raise SingularKkt(f"KKT factorization failed (lapack info {info})")
        anorm = np.linalg.norm(D, 1)
        rcond, cinfo = lapack.dsycon(ldu, ipiv, anorm, lower=1)
        self.rcond = float(rcond) if cinfo == 0 else None
        if self.rcond is not None and self.rcond < _RCOND_FLOOR:
            # expected deep on the central path where the Hessian scales like
            # eta^2; iterative refinement keeps the solves usable
            log.debug("ill-conditioned KKT matrix (rcond=%.2e)", self.rcond)
        if self.rcond == 0.0:
            raise SingularKkt("KKT matrix numerically singular (rcond=0)",
                              rcond=0.0)
        self._route = "sym"
        self._ldu, self._ipiv = ldu, ipiv

    def _init_schur(self):
        Hc = scipy.linalg.cho_factor(self.H, lower=True)
        HinvAt = scipy.linalg.cho_solve(Hc, self.A.T)
        S = self.A @ HinvAt
        Sc = scipy.linalg.cho_factor(0.5 * (S + S.T), lower=True)
        self._route = "schur"
        self._Hc, self._Sc, self._HinvAt = Hc, Sc, HinvAt
        self.rcond = None

    def _solve_once(self, rhs):
        if self._route == "sym":
            out, info = lapack.dsytrs(self._ldu, self._ipiv, rhs, lower=1)
            if info != 0:
                raise SingularKkt(f"KKT back-substitution failed (info {info})")
            return out
        top, bottom = rhs[:self.n], rhs[self.n:]
        t1 = scipy.linalg.cho_solve(self._Hc, top)
        v = scipy.linalg.cho_solve(self._Sc, self.A @ t1 - bottom)
        u = scipy.linalg.cho_solve(self._Hc, top - self.A.T @ v)
        return np.concatenate([u, v])

    def solve(self, rhs, refine=1):
        """Solve D z = rhs with optional iterative refinement."""
        rhs = np.asarray(rhs, dtype=float).ravel()
        if rhs.size != self.n + self.p:
            raise DimensionMismatch(
                f"rhs has size {rhs.size}, expected {self.n + self.p}")
        z = self._solve_once(rhs)
        D = self.matrix
        scale = 1.0 + np.linalg.norm(rhs)
        for _ in range(refine):
            res = rhs - D @ z
            if np.linalg.norm(res) <= 1e-14 * scale:
                break
            z = z + self._solve_once(res)
        return z


@dataclass
class NewtonStepResult:
    delta_x: np.ndarray
    delta_nu: np.ndarray
    decrement: float
    equality_residual_norm: float

    @property
    def delta_y(self):
        return np.concatenate([self.delta_x, self.delta_nu])


def residual(problem: TimeVaryingProblem, y: PrimalDualPoint, eta, b):
    """Stacked first-order residual [eta*c + grad phi + A'nu; Ax - b]."""
    b = np.asarray(b, dtype=float).ravel()
    if b.size != problem.p:
        raise DimensionMismatch(f"b has size {b.size}, expected {problem.p}")
    if y.x.size != problem.n or y.nu.size != problem.p:
        raise DimensionMismatch("point dimensions do not match the problem")
    top = eta * problem.c + problem.barrier.gradient(y.x)
    if problem.p:
        top = top + problem.A.T @ y.nu
        return np.concatenate([top, problem.A @ y.x - b])
    return top


def _clamped_decrement(lam2):
    # r'D^-1 r can go slightly (or, at equality-infeasible points,
    # substantially) negative; the reported decrement floors at zero.
    return float(np.sqrt(max(lam2, 0.0)))


def _step_from_rhs(problem, y, r, eq_norm, system=None):
    if system is None:
        system = KktSystem(problem.barrier.hessian(y.x), problem.A)
    dy = system.solve(-r)
    lam2 = -float(r @ dy)
    return NewtonStepResult(
        delta_x=dy[:problem.n],
        delta_nu=dy[problem.n:],
        decrement=_clamped_decrement(lam2),
        equality_residual_norm=eq_norm)


def newton_step(problem, y, eta, b, system=None):
    """Infeasible Newton step for the round objective at barrier weight eta."""
    r = residual(problem, y, eta, b)
    eq = float(np.linalg.norm(r[problem.n:])) if problem.p else 0.0
    return _step_from_rhs(problem, y, r, eq, system=system)


def eta_step(problem, y, eta_plus, system=None):
    """Newton step after an eta update, with a zero equality block.

    Preserves A x = b exactly: the equality rows of the solve force
    A delta_x = 0.
    """
    top = eta_plus * problem.c + problem.barrier.gradient(y.x)
    if problem.p:
        top = top + problem.A.T @ y.nu
        r = np.concatenate([top, np.zeros(problem.p)])
    else:
        r = top
    return _step_from_rhs(problem, y, r, 0.0, system=system)


@dataclass
class ContractionReport:
    decrement_before: float
    decrement_after: float
    bound: float
    slack: float
    passed: bool


def decrement_reduction_check(problem, y, eta, b, slack=1e-8):
    """Apply one unit step and compare the new decrement to l^2/(1-l)^2."""
    first = newton_step(problem, y, eta, b)
    lam = first.decrement
    if lam >= 1.0:
        raise ValueError(f"contraction check needs decrement <= 1, got {lam:g}")
    y_next = PrimalDualPoint(y.x + first.delta_x, y.nu + first.delta_nu)
    second = newton_step(problem, y_next, eta, b)
    bound = lam * lam / (1.0 - lam) ** 2
    return ContractionReport(
        decrement_before=lam,
        decrement_after=second.decrement,
        bound=bound,
        slack=slack,
        passed=second.decrement <= bound + slack)


def dual_witness(problem, y):
    """Hessian-metric length of D^-1 [grad phi + A'nu; 0]; at most sqrt(v_f).

    The equality block of the right-hand side is zero, so the quadratic
    form is nonnegative, and the value is invariant to nu because the
    projection annihilates range(A').
    """
    top = problem.barrier.gradient(y.x)
    if problem.p:
        top = top + problem.A.T @ y.nu
        rhs = np.concatenate([top, np.zeros(problem.p)])
    else:
        rhs = top
    system = KktSystem(problem.barrier.hessian(y.x), problem.A)
    z = system.solve(rhs)
    return _clamped_decrement(float(rhs @ z))


def smallest_singular_value(problem, y, iters=20, tol=1e-6, seed=0):
    """Estimate min singular value of D(y) by inverse power iteration.

    D is symmetric, so the smallest singular value equals the smallest
    eigenvalue magnitude; it bounds |D^-1| from above by 1/m and feeds the
    drift-safety threshold sqrt(3m/160).
    """
    system = KktSystem(problem.barrier.hessian(y.x), problem.A)
    D = system.matrix
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(problem.n + problem.p)
    v /= np.linalg.norm(v)
    sigma = None
    for _ in range(iters):
        z = system.solve(v, refine=0)
        zn = np.linalg.norm(z)
        if zn == 0.0 or not np.isfinite(zn):
            raise SingularKkt("inverse iteration broke down")
        estimate = 1.0 / zn
        converged = sigma is not None and abs(estimate - sigma) <= tol * estimate
        sigma = estimate
        v = z / zn
        if converged:
            break
    # Rayleigh quotient is quadratically accurate in the eigenvector error
    return float(abs(v @ D @ v))


def drift_threshold(m):
    """Safe per-round equality drift sqrt(3m/160) for the certificate chain."""
    return float(np.sqrt(3.0 * m / 160.0))
