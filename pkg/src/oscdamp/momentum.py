"""Master equation, quasi-time-to-go rho(x), momentum and bang-bang control.

Given amplitudes ``e`` the dual direction ``z`` solves

    maximise <e, z>  subject to  h(z) <= 1,

whose optimality condition ``e = rho * grad h(z)`` makes ``rho = <e, z>``
the time parameter of the scaled body ``rho * Omega`` passing through the
state. The control is ``-U sign(sum_i z_i y_i / g_i)`` with ``g = grad h(z)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize, root

from .elliptic import ratio_F
from .exceptions import DegenerateGradient, NoConvergence, ZeroAmplitude
from .support import SupportFunction, _pair, dual_magnitudes
from .system import OscillatorSystem, amplitude_vector, check_state

__all__ = [
    "Momentum",
    "MasterSolution",
    "MasterSolver",
    "solve_master",
    "rho",
    "momentum_vector",
    "high_energy_control",
    "eikonal_residual",
]

EPS_ACTIVE = 1e-9


@dataclass(frozen=True)
class Momentum:
    xi: np.ndarray
    eta: np.ndarray

    def interleaved(self) -> np.ndarray:
        p = np.empty(2 * self.xi.size)
        p[0::2], p[1::2] = self.xi, self.eta
        return p


@dataclass(frozen=True)
class MasterSolution:
    z_dir: np.ndarray
    rho: float
    gradient: np.ndarray
    active: np.ndarray
    residual: float = 0.0
    iterations: int = 0

    @property
    def weights(self) -> np.ndarray:
        """``z_i / g_i`` on active oscillators, 0 elsewhere."""
        w = np.zeros_like(self.z_dir)
        a = self.active
        w[a] = self.z_dir[a] / self.gradient[a]
        return w


class MasterSolver:
    """Solves the master equation for a fixed oscillator count.

    ``method="auto"`` uses the exact N = 1 solution, root-finding on the
    gradient ratio for N = 2 and a quasi-Newton solve on the hyperplane
    ``<e, z> = 1`` otherwise; ``method="iterative"`` forces the general path
    (used for cross-checks).
    """

    def __init__(self, n: int, tol: float = 1e-10, method: str = "auto",
                 eps_active: float = EPS_ACTIVE, max_iter: int = 500,
                 resolution: int | None = None):
        if method not in ("auto", "iterative"):
            raise ValueError(f"unknown method {method!r}")
        self.n = n
        self.tol = tol
        self.method = method
        self.eps_active = eps_active
        self.max_iter = max_iter
        self.resolution = resolution

    def support(self, m: int, pivot: int | None = None) -> SupportFunction:
        kind = "quadrature" if (self.method == "iterative" or m > 2) else "auto"
        return SupportFunction(m, kind, self.resolution, pivot)

    def __call__(self, e) -> MasterSolution:
        e = np.asarray(e, dtype=float).reshape(-1)
        if e.size != self.n:
            raise ValueError(f"expected {self.n} amplitudes, got {e.size}")
        norm = float(np.linalg.norm(e))
        if norm == 0.0:
            raise ZeroAmplitude("amplitude vector is zero; the state is at equilibrium")
        active = e >= self.eps_active * norm
        ea = e[active]
        m = ea.size
        if m == 1:
            za, ga, res, it = np.array([math.pi / 2]), np.array([2 / math.pi]), 0.0, 0
        elif m == 2 and self.method == "auto":
            za, ga, res, it = self._pair(ea)
        else:
            za, ga, res, it = self._iterative(ea)
        z = np.zeros(self.n)
        g = np.zeros(self.n)
        z[active], g[active] = za, ga
        return MasterSolution(z, float(ea @ za), g, active, res, it)

    def _pair(self, e):
        lo_i, hi_i = (0, 1) if e[0] <= e[1] else (1, 0)
        r = e[hi_i] / e[lo_i]
        if r == 1.0:
            kappa = 1.0
        else:
            # F(k) >= 1/k on (0, 1], so F(1/(2r)) > r brackets the root
            kappa = brentq(lambda k: ratio_F(k) - r, 0.5 / r, 1.0, xtol=1e-16, rtol=1e-15)
        zs = np.empty(2)
        zs[lo_i], zs[hi_i] = kappa, 1.0
        v, g1, g2 = _pair(zs[0], zs[1])
        z = zs / v
        g = np.array([g1, g2])  # gradient is degree-0 homogeneous
        rho = float(e @ z)
        res = float(np.linalg.norm(e - rho * g) / np.linalg.norm(e))
        return z, g, res, 0

    def _iterative(self, e):
        # Equivalent smooth problem: minimise h on the hyperplane <e_hat, z> = 1.
        # BFGS gets close, then root-finding on the projected gradient
        # finishes the job; the objective alone saturates in double precision
        # well before the stationarity residual reaches 1e-10.
        f = self.support(e.size, pivot=int(np.argmax(e)))
        e_hat = e / np.linalg.norm(e)
        basis = null_space(e_hat[None, :])
        base = e_hat.copy()

        def fun(w):
            v, g = f.value_and_grad(base + basis @ w)
            return v, basis.T @ g

        w0 = np.zeros(basis.shape[1])
        r = minimize(fun, w0, jac=True, method="BFGS",
                     options={"gtol": 1e-14, "maxiter": self.max_iter})
        w, it = r.x, int(r.nit)
        rr = root(lambda w: fun(w)[1], w, method="hybr", options={"xtol": 1e-15})
        if np.linalg.norm(fun(rr.x)[1]) < np.linalg.norm(fun(w)[1]):
            w, it = rr.x, it + int(rr.nfev)
        z = base + basis @ w
        z = np.abs(z) / f.value(z)
        _, g = f.value_and_grad(z)
        res = float(np.linalg.norm(e_hat - float(e_hat @ z) * g))
        if res <= self.tol:
            return z, g, res, it
        raise NoConvergence(f"stationarity residual {res:.3e} above tolerance {self.tol:.1e}")


def _solver(sys_or_n, tol, method="auto") -> MasterSolver:
    n = sys_or_n.n if isinstance(sys_or_n, OscillatorSystem) else int(sys_or_n)
    return MasterSolver(n, tol=tol, method=method)


def solve_master(sys: OscillatorSystem, e, tol: float = 1e-10, method: str = "auto") -> MasterSolution:
    """Unique maximiser of ``<e, z>`` on ``h(z) = 1`` and ``rho = <e, z>``.

    Oscillators whose amplitude is below ``1e-9 * |e|`` are left out of
    the solve (mask ``active``) and get ``z_i = 0``.
    """
    return _solver(sys, tol, method)(e)


def rho(sys: OscillatorSystem, state, tol: float = 1e-10, solver: MasterSolver | None = None) -> float:
    """Quasi-time-to-go: the scale of the body ``rho * Omega`` through the state."""
    solver = solver or _solver(sys, tol)
    return solver(amplitude_vector(sys, state)).rho


def momentum_vector(sys: OscillatorSystem, state, sol: MasterSolution) -> Momentum:
    """Momentum direction ``(z_i / g_i) (omega_i^2 x_i, y_i)``.

    The positive factor ``1/rho`` is dropped; inactive oscillators get 0.
    """
    s = check_state(sys, state)
    a = sol.active
    if np.any(sol.gradient[a] <= 0):
        raise DegenerateGradient("nonpositive support gradient on an active oscillator")
    w = sol.weights
    return Momentum(w * sys.omega ** 2 * s[0::2], w * s[1::2])


def high_energy_control(sys: OscillatorSystem, state, bound_U: float = 1.0,
                        sol: MasterSolution | None = None, tol: float = 1e-10) -> float:
    """Bang-bang law ``-U sign(sum_active (z_i/g_i) y_i)`` with ``sign(0) = 0``."""
    s = check_state(sys, state)
    if sol is None:
        sol = solve_master(sys, amplitude_vector(sys, s), tol)
    arg = float(sol.weights @ s[1::2])
    return -bound_U * float(np.sign(arg))


def eikonal_residual(sys: OscillatorSystem, state, fd_step: float = 1e-5, tol: float = 1e-12) -> float:
    """``|H_Omega(grad rho) - 1|`` with a central-difference gradient of rho.

    ``fd_step`` is relative to the state norm, so scaled states give the
    same residual.
    """
    s = check_state(sys, state)
    solver = _solver(sys, tol)
    h = fd_step * float(np.linalg.norm(s))
    grad = np.empty(s.size)
    for j in range(s.size):
        dx = np.zeros(s.size)
        dx[j] = h
        grad[j] = (rho(sys, s + dx, solver=solver) - rho(sys, s - dx, solver=solver)) / (2 * h)
    z = dual_magnitudes(sys.omega, grad)
    return abs(solver.support(sys.n).value(z) - 1.0)
