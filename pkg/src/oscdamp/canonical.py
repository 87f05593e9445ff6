"""Feedback-plus-coordinate reduction of the oscillator chain to a fixed form.

With ``u = C x + v`` and ``x = D X`` the plant becomes

    X_1' = v,   X_{j+1}' = -j X_j   (j = 1 .. 2N-1),

independent of the frequencies. ``C`` makes ``A + B C`` nilpotent and the
columns of ``D`` are ``(-1)^{j-1} (A + B C)^{j-1} B / (j-1)!``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DuplicateFrequency, SingularGauge
from .system import OscillatorSystem, check_state

__all__ = [
    "CanonicalData",
    "feedback_row",
    "gauge_matrix",
    "canonical_matrices",
    "canonical_data",
    "to_canonical",
    "from_canonical",
    "lift_control",
    "conjugation_error",
]

logger = logging.getLogger(__name__)

CONJUGATION_TOL = 1e-10


def canonical_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(A_can, B_can)``: subdiagonal ``-1, -2, ..., -(2N-1)`` and ``e_1``."""
    dim = 2 * n
    a = np.zeros((dim, dim))
    for j in range(1, dim):
        a[j, j - 1] = -float(j)
    b = np.zeros(dim)
    b[0] = 1.0
    return a, b


def feedback_row(sys: OscillatorSystem) -> np.ndarray:
    """Row ``C = (c_1, 0, ..., c_N, 0)`` with
    ``c_k = (-1)^{N+1} w_k^{2N} prod_{i != k} (w_i^2 - w_k^2)^{-1}``.
    """
    n = sys.n
    w2 = sys.omega ** 2
    row = np.zeros(sys.dim)
    for k in range(n):
        diff = np.delete(w2, k) - w2[k]
        if np.any(diff == 0):
            raise DuplicateFrequency("feedback row needs pairwise distinct frequencies")
        row[2 * k] = (-1) ** (n + 1) * w2[k] ** n / np.prod(diff)
    return row


def _closed_form_gauge(sys: OscillatorSystem) -> np.ndarray:
    """Block formula ``d_ij = (-1)^{j-1} lam_i^{j-1} [[0, -1/(2j-1)!], [1/(2j-2)!, 0]]``."""
    n = sys.n
    w2 = sys.omega ** 2
    lam = w2.sum() - w2
    d = np.zeros((sys.dim, sys.dim))
    for i in range(n):
        power = 1.0
        for j in range(1, n + 1):
            sgn = (-1) ** (j - 1)
            d[2 * i, 2 * j - 1] = -sgn * power / math.factorial(2 * j - 1)
            d[2 * i + 1, 2 * j - 2] = sgn * power / math.factorial(2 * j - 2)
            power *= lam[i]
    return d


def _constructive_gauge(closed_loop: np.ndarray, b: np.ndarray) -> np.ndarray:
    dim = b.size
    d = np.zeros((dim, dim))
    col = b.copy()
    for j in range(dim):
        d[:, j] = col
        col = -(closed_loop @ col) / (j + 1)
    return d


def conjugation_error(sys: OscillatorSystem, c_row: np.ndarray, d: np.ndarray) -> float:
    """Largest entrywise mismatch of ``D^-1 (A + BC) D`` and ``D^-1 B`` against
    the canonical pair, relative to the size of the closed-loop matrix."""
    a_can, b_can = canonical_matrices(sys.n)
    closed = sys.A() + np.outer(sys.B(), c_row)
    try:
        lhs = np.linalg.solve(d, closed @ d)
        rhs = np.linalg.solve(d, sys.B())
    except np.linalg.LinAlgError:
        return math.inf
    scale = max(1.0, float(np.abs(a_can).max()))
    return max(float(np.abs(lhs - a_can).max()), float(np.abs(rhs - b_can).max())) / scale


def gauge_matrix(sys: OscillatorSystem, c_row: np.ndarray | None = None,
                 tol: float = CONJUGATION_TOL) -> tuple[np.ndarray, str]:
    """Gauge matrix ``D`` and the path used to get it.

    The block formula is tried first; if it fails the conjugation identity
    the unique ``D`` with ``d_1 = B``, ``(A+BC) d_j = -j d_{j+1}`` is built
    instead. Returns ``(D, "closed-form" | "constructive")``.
    """
    if c_row is None:
        c_row = feedback_row(sys)
    d = _closed_form_gauge(sys)
    if conjugation_error(sys, c_row, d) <= tol:
        return d, "closed-form"
    closed = sys.A() + np.outer(sys.B(), c_row)
    d = _constructive_gauge(closed, sys.B())
    err = conjugation_error(sys, c_row, d)
    if not err <= tol:
        raise SingularGauge(f"constructive gauge fails the conjugation identity (error {err:.2e})")
    logger.info("closed-form gauge rejected for omega=%s; using constructive D", sys.omega.tolist())
    return d, "constructive"


@dataclass(frozen=True)
class CanonicalData:
    c_row: np.ndarray
    D: np.ndarray
    D_inv: np.ndarray
    A_can: np.ndarray
    B_can: np.ndarray
    gauge_path: str

    @property
    def strip_normal(self) -> np.ndarray:
        """``D^T C^T``: the feedback term as a linear form in canonical coordinates."""
        return self.D.T @ self.c_row


def canonical_data(sys: OscillatorSystem) -> CanonicalData:
    c_row = feedback_row(sys)
    d, path = gauge_matrix(sys, c_row)
    a_can, b_can = canonical_matrices(sys.n)
    d_inv = np.linalg.inv(d)
    for arr in (c_row, d, d_inv, a_can, b_can):
        arr.setflags(write=False)
    return CanonicalData(c_row, d, d_inv, a_can, b_can, path)


def to_canonical(can: CanonicalData, state) -> np.ndarray:
    return can.D_inv @ np.asarray(state, dtype=float)


def from_canonical(can: CanonicalData, x_can) -> np.ndarray:
    return can.D @ np.asarray(x_can, dtype=float)


def lift_control(can: CanonicalData, state, u_can: float) -> float:
    """Physical control ``C x + u_can`` for a canonical-form control value."""
    return float(can.c_row @ np.asarray(state, dtype=float)) + float(u_can)
