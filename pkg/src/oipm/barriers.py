"""Self-concordant barrier terms and their aggregation.

Three constraint classes are supported, each with a standard logarithmic
barrier of known complexity:

====================  =============================  =======================
constraint            barrier                        complexity
====================  =============================  =======================
a.x <= offset         -log(offset - a.x)             1
x'Qx/2 + q.x + r <=0  -log(-g(x)),  Q sym. PSD       1
|Ux + u0| <= w.x+w0   -log(t(x)^2 - |u(x)|^2)        2
====================  =============================  =======================

Values, gradients and Hessians are exact closed forms.  Every evaluation
requires the point to be strictly interior; ``DomainViolation`` is raised
otherwise.  Terms and aggregates are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, DomainViolation, SingularHessian

_PSD_TOL = 1e-10


def _vec(v, n=None, name="vector"):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.size != n:
        raise DimensionMismatch(f"{name} has size {v.size}, expected {n}")
    return v


class AffineIneq:
    """Half-space a.x <= offset with barrier -log(offset - a.x)."""

    kind = "affine"
    complexity = 1.0

    def __init__(self, a, offset):
        self.a = _vec(a, name="a")
        self.offset = float(offset)
        self.dim = self.a.size

    def g(self, x):
        return float(self.a @ x - self.offset)

    def slack(self, x):
        # positive inside the domain
        return self.offset - float(self.a @ x)

    def is_interior(self, x):
        return self.slack(x) > 0.0

    def value(self, x):
        s = self.slack(x)
        if s <= 0.0:
            raise DomainViolation(f"affine term not interior (slack={s:g})")
        return -math.log(s)

    def gradient(self, x):
        return self.a / self.slack(x)

    def hessian(self, x):
        s = self.slack(x)
        return np.outer(self.a, self.a) / (s * s)

    def to_dict(self):
        return {"kind": "affine", "a": self.a.tolist(), "offset": self.offset}


class ConvexQuadIneq:
    """Convex quadratic constraint x'Qx/2 + q.x + r <= 0.

    Q must be symmetric positive semidefinite; this is validated by a
    symmetric eigenvalue factorization at construction time.
    """

    kind = "quad"
    complexity = 1.0

    def __init__(self, Q, q, r):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
        scale = 1.0 + float(np.abs(Q).max(initial=0.0))
        if np.abs(Q - Q.T).max(initial=0.0) > _PSD_TOL * scale:
            raise ValueError("Q is not symmetric")
        eigs = np.linalg.eigvalsh(Q)
        if eigs.size and eigs[0] < -_PSD_TOL * scale:
            raise ValueError(f"Q is not PSD (min eigenvalue {eigs[0]:g})")
        self.Q = 0.5 * (Q + Q.T)
        self.q = _vec(q, Q.shape[0], name="q")
        self.r = float(r)
        self.dim = self.q.size

    def g(self, x):
        return float(0.5 * x @ self.Q @ x + self.q @ x + self.r)

    def slack(self, x):
        return -self.g(x)

    def is_interior(self, x):
        return self.slack(x) > 0.0

    def value(self, x):
        s = self.slack(x)
        if s <= 0.0:
            raise DomainViolation(f"quadratic term not interior (slack={s:g})")
        return -math.log(s)

    def gradient(self, x):
        gp = self.Q @ x + self.q
        return gp / self.slack(x)

    def hessian(self, x):
        s = self.slack(x)
        gp = self.Q @ x + self.q
        return np.outer(gp, gp) / (s * s) + self.Q / s

    def to_dict(self):
        return {"kind": "quad", "Q": self.Q.tolist(), "q": self.q.tolist(),
                "r": self.r}


class SecondOrderCone:
    """Cone constraint |u(x)| <= t(x) with u = Ux + u0, t = w.x + w0.

    Uses the degree-2 generalized logarithm -log(t^2 - |u|^2).
    """

    kind = "soc"
    complexity = 2.0

    def __init__(self, U, u0, w, w0):
        self.U = np.atleast_2d(np.asarray(U, dtype=float))
        self.u0 = _vec(u0, self.U.shape[0], name="u0")
        self.w = _vec(w, self.U.shape[1], name="w")
        self.w0 = float(w0)
        self.dim = self.w.size

    def affine_parts(self, x):
        return self.U @ x + self.u0, float(self.w @ x + self.w0)

    def g(self, x):
        u, t = self.affine_parts(x)
        return float(np.linalg.norm(u) - t)

    def slack(self, x):
        u, t = self.affine_parts(x)
        return t * t - float(u @ u) if t > 0.0 else -1.0

    def is_interior(self, x):
        u, t = self.affine_parts(x)
        return t > 0.0 and float(u @ u) < t * t

    def value(self, x):
        s = self.slack(x)
        if s <= 0.0:
            raise DomainViolation(f"cone term not interior (slack={s:g})")
        return -math.log(s)

    def _slack_grad(self, x):
        u, t = self.affine_parts(x)
        return 2.0 * t * self.w - 2.0 * self.U.T @ u

    def gradient(self, x):
        return -self._slack_grad(x) / self.slack(x)

    def hessian(self, x):
        s = self.slack(x)
        ds = self._slack_grad(x)
        d2s = 2.0 * np.outer(self.w, self.w) - 2.0 * self.U.T @ self.U
        return np.outer(ds, ds) / (s * s) - d2s / s

    def to_dict(self):
        return {"kind": "soc", "U": self.U.tolist(), "u0": self.u0.tolist(),
                "w": self.w.tolist(), "w0": self.w0}


def term_from_dict(d):
    kind = d.get("kind")
    if kind == "affine":
        return AffineIneq(d["a"], d["offset"])
    if kind == "quad":
        return ConvexQuadIneq(d["Q"], d["q"], d["r"])
    if kind == "soc":
        return SecondOrderCone(d["U"], d["u0"], d["w"], d["w0"])
    raise ValueError(f"unknown barrier term kind {kind!r}")


class BarrierAggregate:
    """Sum of barrier terms over a common decision space.

    Affine terms are batched into a single (rows, offsets) block internally
    so that values, gradients, and Hessians cost one matrix product instead
    of a Python loop per half-space.
    """

    def __init__(self, terms):
        terms = list(terms)
        dims = {t.dim for t in terms}
        if len(dims) > 1:
            raise DimensionMismatch(f"terms disagree on dimension: {sorted(dims)}")
        self.terms = tuple(terms)
        self.dim = dims.pop() if dims else 0
        self.total_complexity = float(sum(t.complexity for t in terms))
        aff_idx = [i for i, t in enumerate(terms) if isinstance(t, AffineIneq)]
        self._aff_index = np.asarray(aff_idx, dtype=int)
        self._aff_rows = (np.vstack([terms[i].a for i in aff_idx])
                          if aff_idx else np.zeros((0, self.dim)))
        self._aff_offsets = np.asarray([terms[i].offset for i in aff_idx])
        self._other_index = [i for i, t in enumerate(terms)
                             if not isinstance(t, AffineIneq)]

    def __len__(self):
        return len(self.terms)

    def _affine_slacks(self, x):
        return self._aff_offsets - self._aff_rows @ x

    def _require_interior(self, x):
        s = self._affine_slacks(x)
        bad = np.flatnonzero(s <= 0.0)
        if bad.size:
            i = int(self._aff_index[bad[0]])
            raise DomainViolation(
                f"point outside domain of term {i} (affine)", term_index=i)
        for i in self._other_index:
            if not self.terms[i].is_interior(x):
                raise DomainViolation(
                    f"point outside domain of term {i} ({self.terms[i].kind})",
                    term_index=i)
        return s

    def is_interior(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(self._affine_slacks(x) <= 0.0):
            return False
        return all(self.terms[i].is_interior(x) for i in self._other_index)

    def max_constraint(self, x):
        """Largest g_i(x); negative iff strictly interior."""
        x = np.asarray(x, dtype=float)
        worst = -np.inf
        if self._aff_index.size:
            worst = float((-self._affine_slacks(x)).max())
        for i in self._other_index:
            worst = max(worst, self.terms[i].g(x))
        return worst

    def value(self, x):
        x = np.asarray(x, dtype=float)
        s = self._require_interior(x)
        total = -float(np.log(s).sum()) if s.size else 0.0
        return total + float(sum(self.terms[i].value(x)
                                 for i in self._other_index))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        s = self._require_interior(x)
        out = self._aff_rows.T @ (1.0 / s) if s.size else np.zeros(self.dim)
        for i in self._other_index:
            out = out + self.terms[i].gradient(x)
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        s = self._require_interior(x)
        if s.size:
            scaled = self._aff_rows / s[:, None]
            out = scaled.T @ scaled
        else:
            out = np.zeros((self.dim, self.dim))
        for i in self._other_index:
            out = out + self.terms[i].hessian(x)
        return 0.5 * (out + out.T)

    def to_dict(self):
        return {"terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d):
        return cls(term_from_dict(t) for t in d["terms"])


# module-level aliases matching the operation contracts
def barrier_value(agg, x):
    return agg.value(x)


def barrier_gradient(agg, x):
    return agg.gradient(x)


def barrier_hessian(agg, x):
    return agg.hessian(x)


def complexity_witness(agg, x):
    """grad' Hess^-1 grad at x; bounded by the aggregate complexity."""
    g = agg.gradient(x)
    H = agg.hessian(x)
    try:
        factor = scipy.linalg.cho_factor(H)
    except scipy.linalg.LinAlgError as exc:
        raise SingularHessian(f"barrier Hessian is singular: {exc}") from exc
    w = scipy.linalg.cho_solve(factor, g)
    return float(g @ w)


@dataclass
class ConcordanceReport:
    third_abs: float
    bound: float        # 2 * r''^{3/2}
    spacing: float
    tol: float
    passed: bool


def scalar_concordance_probe(f, h):
    """Finite-difference |r'''(0)| and 2 r''(0)^{3/2} for a scalar callable."""
    f_m2, f_m1, f_0, f_p1, f_p2 = (f(s * h) for s in (-2, -1, 0, 1, 2))
    d2 = (f_p1 - 2.0 * f_0 + f_m1) / (h * h)
    d3 = (f_p2 - 2.0 * f_p1 + 2.0 * f_m1 - f_m2) / (2.0 * h ** 3)
    bound = 2.0 * max(d2, 0.0) ** 1.5
    return abs(d3), bound


def check_self_concordance(agg, x, direction, h=None, tol=1e-4):
    """Probe |r'''| <= 2 r''^{3/2} on the restriction r(s) = phi(x + s*dir).

    The third difference is cancellation-limited, so the default spacing is
    2e-3*(1+|x|), coarser than the gradient/Hessian default.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0.0:
        raise ValueError("direction must be non-zero")
    d = d / nd
    if h is None:
        h = 2e-3 * (1.0 + float(np.linalg.norm(x)))
    for s in (-2, -1, 1, 2):
        if not agg.is_interior(x + (s * h) * d):
            raise DomainViolation(
                f"probe point at offset {s * h:g} leaves the domain")
    third, bound = scalar_concordance_probe(lambda s: agg.value(x + s * d), h)
    return ConcordanceReport(third_abs=third, bound=bound, spacing=h, tol=tol,
                             passed=third <= bound + tol)


# ---------------------------------------------------------------------------
# coefficient transforms used by phase-I and proximal subproblems

def embed_term(term, n_total, offset=0):
    """Lift a term on R^d into R^{n_total}, placing its variables at offset."""
    d = term.dim
    if offset + d > n_total:
        raise DimensionMismatch("embedding does not fit the target space")
    if isinstance(term, AffineIneq):
        a = np.zeros(n_total)
        a[offset:offset + d] = term.a
        return AffineIneq(a, term.offset)
    if isinstance(term, ConvexQuadIneq):
        Q = np.zeros((n_total, n_total))
        Q[offset:offset + d, offset:offset + d] = term.Q
        q = np.zeros(n_total)
        q[offset:offset + d] = term.q
        return ConvexQuadIneq(Q, q, term.r)
    if isinstance(term, SecondOrderCone):
        U = np.zeros((term.U.shape[0], n_total))
        U[:, offset:offset + d] = term.U
        w = np.zeros(n_total)
        w[offset:offset + d] = term.w
        return SecondOrderCone(U, term.u0, w, term.w0)
    raise TypeError(f"unsupported term type {type(term).__name__}")


def relax_with_slack(term):
    """Turn g(x) <= 0 into g(x) <= s on the extended space (x, s).

    Each supported class stays in-class: the slack enters the offset side of
    affine terms, the linear part of quadratics, and t(x) for cones.
    """
    lifted = embed_term(term, term.dim + 1, offset=0)
    if isinstance(lifted, AffineIneq):
        lifted.a[-1] = -1.0
        return AffineIneq(lifted.a, lifted.offset)
    if isinstance(lifted, ConvexQuadIneq):
        lifted.q[-1] = -1.0
        return ConvexQuadIneq(lifted.Q, lifted.q, lifted.r)
    lifted.w[-1] = 1.0
    return SecondOrderCone(lifted.U, lifted.u0, lifted.w, lifted.w0)
