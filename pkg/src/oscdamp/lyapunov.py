"""Exact Lyapunov data and the terminal finite-time control.

``q_ij = 1 / ((i+j)(i+j-1))`` (1-based) is a Hilbert-like matrix, so it is
inverted in rational arithmetic; ``Q = q^-1`` comes out as an integer
matrix with even entries. The controllability time ``T(X)`` solves

    <Q delta(T) X, delta(T) X> = 1 / (2N(2N+1)),   delta(T) = diag(T^-1 .. T^-2N),

and the control ``c delta(T) X`` with ``c = -Q[0] / 2`` drives the canonical
chain to zero in exactly ``T(X)`` time units, never exceeding 1/2 in
magnitude.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .exceptions import NonpositiveTime, SizeExceeded, ZeroState

__all__ = [
    "LyapunovData",
    "ControllabilityTime",
    "lyapunov_data",
    "rational_inverse",
    "delta",
    "level_constant",
    "level_value",
    "controllability_time",
    "local_control",
    "MAX_N",
]

MAX_N = 8


def rational_inverse(m):
    """Gauss-Jordan inverse of a square matrix of Fractions."""
    n = len(m)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _positive_definite(m) -> bool:
    """Exact test via the pivots of a symmetric LDL^T elimination."""
    n = len(m)
    a = [list(row) for row in m]
    for k in range(n):
        if a[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
    return True


@dataclass(frozen=True)
class LyapunovData:
    n: int
    q: tuple           # Fractions
    Q: tuple           # ints
    c_row: tuple       # Fractions
    M_diag: tuple      # ints 1..2N

    @property
    def dim(self) -> int:
        return 2 * self.n

    @cached_property
    def q_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.q])

    @cached_property
    def Q_float(self) -> np.ndarray:
        out = np.array(self.Q, dtype=float)
        out.flags.writeable = False
        return out

    @cached_property
    def c_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.c_row])

    @cached_property
    def powers(self) -> np.ndarray:
        return np.arange(1, self.dim + 1, dtype=float)

    def divisible_by_q11(self) -> bool:
        q11 = self.Q[0][0]
        return all(v % q11 == 0 for row in self.Q for v in row)


def lyapunov_data(n: int, max_n: int = MAX_N) -> LyapunovData:
    """Build q, Q, c and M exactly; asserts the integrality and evenness of Q."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_n:
        raise SizeExceeded(f"N={n} exceeds the configured maximum {max_n}")
    dim = 2 * n
    q = [[Fraction(1, (i + j) * (i + j - 1)) for j in range(1, dim + 1)] for i in range(1, dim + 1)]
    inv = rational_inverse(q)
    if any(v.denominator != 1 for row in inv for v in row):
        raise ArithmeticError("inverse of q is not an integer matrix")
    Q = tuple(tuple(int(v) for v in row) for row in inv)
    if any(v % 2 for row in Q for v in row):
        raise ArithmeticError("inverse of q has odd entries")
    c_row = tuple(Fraction(-v, 2) for v in Q[0])
    ld = LyapunovData(n, tuple(tuple(r) for r in q), Q, c_row, tuple(range(1, dim + 1)))
    if not ld.divisible_by_q11():
        warnings.warn(f"Q for N={n} has entries not divisible by Q_11={Q[0][0]}", RuntimeWarning,
                      stacklevel=2)
    return ld


def delta(T: float, n: int) -> np.ndarray:
    """``diag(T^-1, T^-2, ..., T^-2N)``."""
    if not T > 0:
        raise NonpositiveTime(f"time scale must be positive, got {T}")
    return np.diag(float(T) ** -np.arange(1, 2 * n + 1, dtype=float))


def level_constant(n: int) -> float:
    return 1.0 / (2 * n * (2 * n + 1))


def level_value(ld: LyapunovData, x_can, T: float) -> float:
    """``<Q delta(T) X, delta(T) X>``."""
    w = np.asarray(x_can, dtype=float) * float(T) ** -ld.powers
    return float(w @ ld.Q_float @ w)


@dataclass(frozen=True)
class ControllabilityTime:
    T: float
    level: float


def controllability_time(ld: LyapunovData, x_can, tol: float = 1e-12,
                         level: float | None = None, guess: float | None = None) -> ControllabilityTime:
    """Unique ``T > 0`` with ``<Q delta(T) X, delta(T) X> = level``.

    ``level`` defaults to ``1/(2N(2N+1))``. The left side is strictly
    decreasing in T, so the root is bracketed by doubling and polished
    by Brent's method in ``log T``. With a ``guess`` (e.g. the previous
    value along a trajectory) Newton's method in ``log T`` is tried first.
    """
    x = np.asarray(x_can, dtype=float).reshape(-1)
    if x.size != ld.dim:
        raise ValueError(f"expected {ld.dim} canonical coordinates, got {x.size}")
    if not np.any(x):
        raise ZeroState("controllability time is undefined at the origin")
    target = level_constant(ld.n) if level is None else float(level)
    p = ld.powers
    Qf = ld.Q_float

    def f(log_t):
        w = x * np.exp(-p * log_t)
        return math.log(float(w @ Qf @ w)) - math.log(target)

    if guess is not None and guess > 0:
        log_t = math.log(guess)
        log_target = math.log(target)
        for _ in range(8):
            w = x * np.exp(-p * log_t)
            Qw = Qf @ w
            v = float(w @ Qw)
            step = (math.log(v) - log_target) * v / (-2.0 * float((p * w) @ Qw))
            log_t -= step
            # quadratic convergence: once a correction is below sqrt(tol)
            # the next one would be below tol
            if abs(step) <= math.sqrt(tol):
                return ControllabilityTime(math.exp(log_t), target)

    nz = np.abs(x) > 0
    start = float(np.max(np.log(np.abs(x[nz])) / p[nz]))
    lo = hi = start
    while f(lo) <= 0:
        lo -= 1.0
    while f(hi) >= 0:
        hi += 1.0
    log_t = brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
    T = math.exp(log_t)
    return ControllabilityTime(T, level_value(ld, x, T))


def local_control(ld: LyapunovData, x_can, T) -> float:
    """Terminal control ``c delta(T) X``; bounded by 1/2 on the level set."""
    t = T.T if isinstance(T, ControllabilityTime) else float(T)
    w = np.asarray(x_can, dtype=float) * t ** -ld.powers
    return float(ld.c_float @ w)
