"""Random synthetic instances for tests, property batteries, and CLI runs.

Instances are built around a known strictly interior point so phase-I is
trivial and Slater's condition holds by construction.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .barriers import (AffineIneq, BarrierAggregate, ConvexQuadIneq,
                       SecondOrderCone)
from .kkt import drift_threshold
from .problem import TimeVaryingProblem


def _orthonormal_rows(rng, p, n):
    M = rng.standard_normal((n, max(p, 1)))
    Q, _ = scipy.linalg.qr(M, mode="economic")
    return Q[:, :p].T.copy()


def box_terms(lo, hi):
    """Pairs of half-space terms lo_i <= x_i <= hi_i."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    terms = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        terms.append(AffineIneq(-e, -lo[i]))   # -x_i <= -lo
        terms.append(AffineIneq(e, hi[i]))     # x_i <= hi
    return terms


def random_problem(rng, n=6, p=2, flavor="lp", half_width=1.5):
    """Random instance with x = 0 strictly interior and b0 = A @ x_int.

    Returns (problem, x_int).  ``flavor`` is "lp" (boxes plus a random cut)
    or "socp" (adds a quadratic and a second-order cone term).
    """
    lo = -(half_width + rng.uniform(0.0, 0.5, size=n))
    hi = half_width + rng.uniform(0.0, 0.5, size=n)
    terms = box_terms(lo, hi)

    a = rng.standard_normal(n)
    a /= np.linalg.norm(a)
    terms.append(AffineIneq(a, 1.0 + rng.uniform(0.5, 1.0)))

    if flavor == "socp":
        G = rng.standard_normal((n, n)) / np.sqrt(n)
        Q = G @ G.T
        q = rng.standard_normal(n) * 0.2
        terms.append(ConvexQuadIneq(Q, q, -(1.0 + rng.uniform(0.5, 1.0))))
        k = rng.integers(2, 4)
        U = rng.standard_normal((k, n)) * 0.3
        u0 = rng.standard_normal(k) * 0.1
        w = rng.standard_normal(n) * 0.1
        w0 = float(np.linalg.norm(u0) + 1.0 + rng.uniform(0.5, 1.0))
        terms.append(SecondOrderCone(U, u0, w, w0))
    elif flavor != "lp":
        raise ValueError(f"unknown flavor {flavor!r}")

    barrier = BarrierAggregate(terms)
    c = rng.standard_normal(n)
    c /= np.linalg.norm(c)
    A = _orthonormal_rows(rng, p, n) if p else np.zeros((0, n))
    x_int = rng.uniform(-0.1, 0.1, size=n)
    problem = TimeVaryingProblem(c, A, barrier)
    return problem, x_int


def drift_stream(rng, b0, T, m, scale=0.9, decay="sqrt"):
    """Equality-RHS stream with per-round drift scale * sqrt(3m/160) / sqrt(t).

    The decaying schedule keeps cumulative variation sublinear while staying
    under the certificate-safe threshold at every round.
    """
    b0 = np.asarray(b0, dtype=float).ravel()
    limit = drift_threshold(m)
    stream = np.empty((T + 1, b0.size))
    stream[0] = b0
    for t in range(1, T + 1):
        direction = rng.standard_normal(b0.size)
        nrm = np.linalg.norm(direction)
        if nrm == 0.0:
            direction[:] = 0.0
        else:
            direction /= nrm
        size = scale * limit / (np.sqrt(t) if decay == "sqrt" else 1.0)
        stream[t] = stream[t - 1] + size * direction
    return stream
