"""Problem container for time-varying equality-constrained conic programs.

A problem is  min c.x  s.t.  barrier terms g_i(x) <= 0  and  A x = b_t,
where only the right-hand side b_t changes between rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .barriers import BarrierAggregate
from .errors import DimensionMismatch, RankDeficient

_RANK_TOL = 1e-10


def matrix_row_rank(A):
    """Row rank via rank-revealing QR of A'."""
    if A.size == 0:
        return 0
    _, R, _ = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.count_nonzero(diag > _RANK_TOL * diag[0]))


@dataclass
class PrimalDualPoint:
    """Primal decision x and equality multipliers nu."""

    x: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.nu = np.asarray(self.nu, dtype=float).ravel()

    @property
    def y(self):
        return np.concatenate([self.x, self.nu])

    @classmethod
    def from_concat(cls, y, n):
        y = np.asarray(y, dtype=float).ravel()
        return cls(y[:n], y[n:])

    def copy(self):
        return PrimalDualPoint(self.x.copy(), self.nu.copy())


class TimeVaryingProblem:
    """Immutable (c, A, barrier) triple plus an optional stream of b_t."""

    def __init__(self, c, A, barrier: BarrierAggregate, b_stream=None):
        self.c = np.asarray(c, dtype=float).ravel()
        A = np.asarray(A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, self.c.size)
        if A.ndim != 2:
            raise DimensionMismatch(f"A must be 2-D, got shape {A.shape}")
        self.A = A
        self.barrier = barrier
        n, p = self.c.size, A.shape[0]
        if A.shape[1] != n:
            raise DimensionMismatch(
                f"A has {A.shape[1]} columns but c has {n} entries")
        if barrier.dim and barrier.dim != n:
            raise DimensionMismatch(
                f"barrier acts on R^{barrier.dim} but c is in R^{n}")
        if p >= n:
            raise DimensionMismatch(f"need P < N, got P={p}, N={n}")
        if p > 0:
            rank = matrix_row_rank(A)
            if rank < p:
                raise RankDeficient(
                    f"A has row rank {rank} < {p}; remove dependent rows")
        if b_stream is not None:
            b_stream = np.asarray(b_stream, dtype=float)
            if b_stream.ndim == 1:
                b_stream = b_stream.reshape(-1, p)
            if b_stream.shape[1] != p:
                raise DimensionMismatch(
                    f"b_stream rows have size {b_stream.shape[1]}, expected {p}")
        self.b_stream = b_stream

    @property
    def n(self):
        return self.c.size

    @property
    def p(self):
        return self.A.shape[0]

    @property
    def v_f(self):
        return self.barrier.total_complexity

    def equality_residual(self, x, b):
        if self.p == 0:
            return np.zeros(0)
        return self.A @ np.asarray(x, dtype=float) - np.asarray(b, dtype=float)

    def objective(self, x):
        return float(self.c @ np.asarray(x, dtype=float))

    def to_dict(self):
        d = {"c": self.c.tolist(), "A": self.A.tolist(),
             "barrier": self.barrier.to_dict()}
        if self.b_stream is not None:
            d["b_stream"] = self.b_stream.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["c"], d["A"], BarrierAggregate.from_dict(d["barrier"]),
                   b_stream=d.get("b_stream"))
