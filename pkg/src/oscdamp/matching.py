"""Stage calibration: terminal ellipsoid size, intermediate bound, stage-1 radius.

The terminal domain is ``G = {X : <Q delta(Theta) X, delta(Theta) X> <= 1}``
in canonical coordinates ``X = D^-1 x``. ``Theta`` is the largest value for
which ``G`` stays inside the strip ``|C x| <= 1/2``; the intermediate bound
``U`` is then chosen so that the scaled attractor ``U * a * Omega`` of the
bang-bang law fits inside ``G``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.stats import norm, qmc

from .canonical import CanonicalData, canonical_data
from .exceptions import DegenerateDirection
from .lyapunov import LyapunovData, lyapunov_data
from .momentum import MasterSolver
from .support import SupportFunction, dual_magnitudes
from .system import OscillatorSystem

__all__ = [
    "StagePlan",
    "theta_max",
    "bound_U",
    "lambda_inscribed",
    "in_terminal_domain",
    "terminal_form",
    "terminal_boundary_points",
    "default_r1",
    "calibrate",
    "STAGE1_RADIUS",
]

STAGE1_RADIUS = 2.0
_SEED = 7


@dataclass(frozen=True)
class StagePlan:
    Theta: float
    U: float
    r1: float
    attractor_constant: float
    Lambda: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def _grading(theta: float, dim: int) -> np.ndarray:
    return float(theta) ** np.arange(1, dim + 1, dtype=float)


def _strip_support_sq(ld: LyapunovData, v: np.ndarray, theta: float) -> float:
    y = _grading(theta, ld.dim) * v
    return float(y @ ld.q_float @ y)


def theta_max(sys: OscillatorSystem, can: CanonicalData | None = None,
              ld: LyapunovData | None = None, tol: float = 1e-13) -> float:
    """Largest Theta with ``<delta^-1 q delta^-1 v, v> = 1/4`` for ``v = D^T C^T``.

    The left side is the squared support value of G in the direction of
    the feedback form, so G touches the strip ``|Cx| <= 1/2`` exactly.
    """
    can = can or canonical_data(sys)
    ld = ld or lyapunov_data(sys.n)
    v = can.strip_normal

    def f(log_theta):
        return math.log(_strip_support_sq(ld, v, math.exp(log_theta))) - math.log(0.25)

    lo = hi = 0.0
    while f(lo) >= 0:
        lo -= 1.0
    while f(hi) <= 0:
        hi += 1.0
    return math.exp(brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def terminal_form(ld: LyapunovData, can: CanonicalData, theta: float) -> np.ndarray:
    """Physical-coordinate matrix P of the form ``x -> <Q delta D^-1 x, delta D^-1 x>``."""
    m = (1.0 / _grading(theta, ld.dim))[:, None] * can.D_inv
    return m.T @ ld.Q_float @ m


def lambda_inscribed(ld: LyapunovData, can: CanonicalData, theta: float) -> float:
    """Radius of the largest Euclidean ball inside G (physical coordinates)."""
    lam = np.linalg.eigvalsh(terminal_form(ld, can, theta))
    return float(lam[-1] ** -0.5)


def in_terminal_domain(ld: LyapunovData, can: CanonicalData, theta: float, state,
                       slack: float = 1e-12) -> bool:
    w = (can.D_inv @ np.asarray(state, dtype=float)) / _grading(theta, ld.dim)
    return float(w @ ld.Q_float @ w) <= 1.0 + slack


def terminal_boundary_points(ld: LyapunovData, can: CanonicalData, theta: float,
                             count: int, seed: int = _SEED) -> np.ndarray:
    """Physical states on the boundary of G, one per row.

    Built in canonical coordinates, where Q is far better conditioned than
    the physical-coordinate form.
    """
    chol = np.linalg.cholesky(ld.Q_float)  # Q = L L^T
    dirs = _sphere_points(count, ld.dim, seed)
    y = np.linalg.solve(chol.T, dirs.T).T  # <Q y, y> = |dir|^2 = 1
    return (y * _grading(theta, ld.dim)) @ can.D.T


def _sphere_points(count: int, dim: int, seed: int = _SEED) -> np.ndarray:
    # draw a power-of-two block (keeps the Sobol balance) and keep the first rows
    u = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(max(0, math.ceil(math.log2(count))))[:count]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def bound_U(sys: OscillatorSystem, can: CanonicalData, ld: LyapunovData, theta: float,
            attractor_constant: float, n_dirs: int = 4096, polish: bool = True) -> float:
    """Intermediate bound from the support-function containment test.

    ``U = min(1, min_p ||p||_G / (a * H_Omega(D^-T p)))`` where
    ``||p||_G = <delta^-1 q delta^-1 p, p>^{1/2}`` is the support function of
    G and ``a`` the attractor constant. Directions come from a scrambled
    Sobol sequence with a fixed seed; the best few are polished locally.
    """
    if attractor_constant <= 0:
        raise ValueError("attractor_constant must be positive")
    if math.isinf(attractor_constant):
        return 0.0
    dim = ld.dim
    grade = _grading(theta, dim)
    qf = ld.q_float
    h = SupportFunction(sys.n)
    d_inv_t = can.D_inv.T

    def ratio(p):
        p = np.asarray(p, dtype=float)
        y = grade * p
        num = math.sqrt(max(float(y @ qf @ y), 0.0))
        den = h.value(dual_magnitudes(sys.omega, d_inv_t @ p))
        if den <= 0:
            raise DegenerateDirection("support value vanished for a nonzero direction")
        return num / den

    pts = _sphere_points(n_dirs, dim)
    vals = np.array([ratio(p) for p in pts])
    best = float(vals.min())
    if polish:
        for i in np.argsort(vals)[:3]:
            r = minimize(ratio, pts[i], method="Nelder-Mead",
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            best = min(best, float(r.fun))
    return min(1.0, best / attractor_constant)


def default_r1(sys: OscillatorSystem, radius: float = STAGE1_RADIUS,
               solver: MasterSolver | None = None) -> float:
    """rho-radius of the smallest rho-ball containing the Euclidean ball of ``radius``.

    rho grows with every amplitude ``e_i``, and on a circle of radius s the
    amplitude peaks at ``max(omega_i, 1) s``, so the search runs over the
    positive part of the unit sphere of per-oscillator radii.
    """
    n = sys.n
    amp = np.maximum(sys.omega, 1.0) * radius
    if n == 1:
        return math.pi / 2 * float(amp[0])
    solver = solver or MasterSolver(n, tol=1e-9, resolution=None if n <= 2 else 64)

    def neg_rho_angles(s):
        s = np.abs(np.asarray(s, dtype=float))
        return -solver(amp * s / np.linalg.norm(s)).rho

    if n == 2:
        thetas = np.linspace(0.0, math.pi / 2, 65)
        vals = [-neg_rho_angles([math.cos(t), math.sin(t)]) for t in thetas]
        i = int(np.argmax(vals))
        lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, 64)]
        r = minimize_scalar(lambda t: neg_rho_angles([math.cos(t), math.sin(t)]),
                            bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        return max(float(-r.fun), max(vals))
    pts = np.abs(_sphere_points(8 * n, n))
    vals = np.array([-neg_rho_angles(p) for p in pts])
    i = int(np.argmax(vals))
    r = minimize(neg_rho_angles, pts[i], method="Nelder-Mead",
                 options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 200})
    return max(float(-r.fun), float(vals[i]))


def calibrate(sys: OscillatorSystem, r1: float | None = None, attractor_constant: float | None = None,
              n_dirs: int = 4096, can: CanonicalData | None = None,
              ld: LyapunovData | None = None) -> StagePlan:
    """Full stage plan. ``attractor_constant`` defaults to ``r1``: the unit
    bang-bang law is assumed to settle inside the stage-1 switching set."""
    can = can or canonical_data(sys)
    ld = ld or lyapunov_data(sys.n)
    theta = theta_max(sys, can, ld)
    r1 = default_r1(sys) if r1 is None else float(r1)
    a = r1 if attractor_constant is None else float(attractor_constant)
    U = bound_U(sys, can, ld, theta, a, n_dirs)
    return StagePlan(theta, U, r1, a, lambda_inscribed(ld, can, theta))
