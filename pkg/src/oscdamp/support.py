"""Support function of the limiting reachable body and its gradient.

For a dual direction with magnitudes ``z`` the support value is

    h(z) = (2 pi)^{-N} int_{[0, 2pi]^N} |sum_i z_i cos(phi_i)| dphi,

a convex, even, degree-1 homogeneous function. One oscillator has the
closed form ``2|z|/pi``; two oscillators reduce to complete elliptic
integrals; larger N use a quadrature in which the largest coordinate is
integrated analytically:

    (1/2pi) int |c + a cos(psi)| dpsi = (2/pi)(c arccos(-c/a) + sqrt(a^2 - c^2)) - c

for ``|c| < a`` and ``|c|`` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .elliptic import elliptic_I1, elliptic_I2
from .exceptions import AccuracyUnreachable, BudgetExceeded, ZeroVector

__all__ = [
    "SupportEval",
    "SupportFunction",
    "support_value",
    "support_gradient",
    "quadrature_oracle",
    "dual_magnitudes",
    "DEFAULT_RESOLUTION",
]

# outer-grid points per angle for the quadrature path, keyed by N
DEFAULT_RESOLUTION = {2: 4096, 3: 256, 4: 64}
_QMC_POINTS = 2 ** 16
_MAX_RESOLUTION_POINTS = 2 ** 22
_PI2 = math.pi ** 2


@dataclass(frozen=True)
class SupportEval:
    value: float
    gradient: np.ndarray
    error_estimate: float = 0.0


def dual_magnitudes(omega, p) -> np.ndarray:
    """``z_i = sqrt(eta_i^2 + xi_i^2 / omega_i^2)`` for an interleaved momentum."""
    p = np.asarray(p, dtype=float)
    return np.hypot(p[..., 0::2] / omega, p[..., 1::2])


def _pair(z1: float, z2: float) -> tuple[float, float, float]:
    """Closed form for N = 2 on nonnegative magnitudes: (value, g1, g2)."""
    if z1 <= z2:
        big, small, swap = z2, z1, False
    else:
        big, small, swap = z1, z2, True
    if big == 0.0:
        return 0.0, 0.0, 0.0
    kappa = small / big
    g_small = elliptic_I1(kappa) / _PI2
    g_big = elliptic_I2(kappa) / _PI2
    value = small * g_small + big * g_big
    return (value, g_big, g_small) if swap else (value, g_small, g_big)


def _inner(c: np.ndarray, a: float):
    """Analytic average over one angle; returns (J, dJ/dc, dJ/da)."""
    if a == 0.0:
        return np.abs(c), np.sign(c), np.zeros_like(c)
    t = np.clip(c / a, -1.0, 1.0)
    inside = np.abs(c) < a
    acos = np.arccos(-t)
    root = np.sqrt(1.0 - t * t)
    J = np.where(inside, (2.0 / math.pi) * (c * acos + a * root) - c, np.abs(c))
    dJdc = np.where(inside, (2.0 / math.pi) * acos - 1.0, np.sign(c))
    dJda = np.where(inside, (2.0 / math.pi) * root, 0.0)
    return J, dJdc, dJda


@lru_cache(maxsize=32)
def _outer_cosines(n_outer: int, resolution: int, qmc_points: int) -> np.ndarray:
    """Cosines of the outer quadrature nodes, shape (points, n_outer)."""
    if n_outer <= 3:
        phi = (np.arange(resolution) + 0.5) * (2.0 * math.pi / resolution)
        grids = np.meshgrid(*([np.cos(phi)] * n_outer), indexing="ij")
        cos = np.stack([g.reshape(-1) for g in grids], axis=1)
    else:
        u = qmc.Sobol(n_outer, scramble=True, seed=20240917).random(qmc_points)
        cos = np.cos(2.0 * math.pi * u)
    cos.setflags(write=False)
    return cos


class SupportFunction:
    """Evaluator of the support value and gradient for a fixed N.

    ``method`` is ``"auto"`` (closed forms for N <= 2, quadrature above),
    ``"closed"`` or ``"quadrature"``. The quadrature path can be forced for
    N = 2 to cross-check the elliptic route.
    """

    def __init__(self, n: int, method: str = "auto", resolution: int | None = None,
                 pivot: int | None = None):
        if n < 1:
            raise ValueError("n must be >= 1")
        if method not in ("auto", "closed", "quadrature"):
            raise ValueError(f"unknown method {method!r}")
        if method == "closed" and n > 2:
            raise ValueError("closed forms exist only for N <= 2")
        if method == "auto":
            method = "closed" if n <= 2 else "quadrature"
        if method == "quadrature" and n == 1:
            method = "closed"
        self.n = n
        self.method = method
        self.resolution = resolution or DEFAULT_RESOLUTION.get(n, 0)
        # coordinate integrated analytically; None picks the largest |z_i|.
        # Pinning it keeps the discrete h smooth along an optimisation path.
        self.pivot = pivot

    def __repr__(self):
        return (f"SupportFunction(n={self.n}, method={self.method!r}, "
                f"resolution={self.resolution}, pivot={self.pivot})")

    def _quad(self, za: np.ndarray, resolution: int, grad: bool):
        # za: nonnegative magnitudes; integrate the largest one analytically
        n = self.n
        idx = int(np.argmax(za)) if self.pivot is None else self.pivot
        others = np.delete(np.arange(n), idx)
        if n - 1 <= 3 and resolution ** (n - 1) > _MAX_RESOLUTION_POINTS:
            raise BudgetExceeded(f"{resolution}^{n - 1} outer nodes exceed the cap")
        cos = _outer_cosines(n - 1, resolution, _QMC_POINTS if n - 1 > 3 else 0)
        c = cos @ za[others]
        J, dJdc, dJda = _inner(c, float(za[idx]))
        value = float(J.mean())
        if not grad:
            return value, None
        g = np.empty(n)
        g[idx] = dJda.mean()
        g[others] = dJdc @ cos / cos.shape[0]
        return value, g

    def value(self, z) -> float:
        za = np.abs(np.asarray(z, dtype=float).reshape(-1))
        if za.size != self.n:
            raise ValueError(f"expected {self.n} magnitudes, got {za.size}")
        if not np.any(za):
            return 0.0
        if self.n == 1:
            return 2.0 / math.pi * float(za[0])
        if self.method == "closed":
            return _pair(float(za[0]), float(za[1]))[0]
        return self._quad(za, self.resolution, False)[0]

    def value_and_grad(self, z) -> tuple[float, np.ndarray]:
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size != self.n:
            raise ValueError(f"expected {self.n} magnitudes, got {z.size}")
        za = np.abs(z)
        if not np.any(za):
            raise ZeroVector("support gradient is undefined at z = 0")
        if self.n == 1:
            v, g = 2.0 / math.pi * float(za[0]), np.array([2.0 / math.pi])
        elif self.method == "closed":
            v, g1, g2 = _pair(float(za[0]), float(za[1]))
            g = np.array([g1, g2])
        else:
            v, g = self._quad(za, self.resolution, True)
        # h depends on |z_i|; the gradient picks up the sign of each coordinate
        return v, np.where(z < 0, -g, np.where(z > 0, g, 0.0))


def _adaptive(z, accuracy: float, grad: bool) -> SupportEval:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size == 0 or not np.all(np.isfinite(z)):
        raise ValueError("z must be a nonempty finite vector")
    if accuracy <= 0:
        raise ValueError("accuracy must be positive")
    n = z.size
    if n <= 2:
        f = SupportFunction(n)
        if grad:
            v, g = f.value_and_grad(z)
            return SupportEval(v, g, 0.0)
        return SupportEval(f.value(z), np.zeros(0), 0.0)
    if not np.any(z):
        if grad:
            raise ZeroVector("support gradient is undefined at z = 0")
        return SupportEval(0.0, np.zeros(0), 0.0)
    if n - 1 > 3:
        # quasi-random outer nodes; estimate error from a half-size rule
        coarse = SupportFunction(n, "quadrature")
        v, g = coarse.value_and_grad(z)
        half = _outer_cosines(n - 1, 0, _QMC_POINTS // 2)
        za = np.abs(z)
        idx = int(np.argmax(za))
        J = _inner(half @ np.delete(za, idx), float(za[idx]))[0]
        err = abs(v - float(J.mean()))
        if err > accuracy:
            raise AccuracyUnreachable(
                f"quasi-random estimate {err:.2e} exceeds requested accuracy {accuracy:.2e}")
        return SupportEval(v, g if grad else np.zeros(0), err)
    res = DEFAULT_RESOLUTION.get(n, 32)
    prev = SupportFunction(n, "quadrature", res // 2).value(z)
    while True:
        f = SupportFunction(n, "quadrature", res)
        if grad:
            v, g = f.value_and_grad(z)
        else:
            v, g = f.value(z), np.zeros(0)
        err = abs(v - prev)
        if err <= accuracy:
            return SupportEval(v, g, err)
        if (2 * res) ** (n - 1) > _MAX_RESOLUTION_POINTS:
            raise AccuracyUnreachable(
                f"error estimate {err:.2e} above {accuracy:.2e} at resolution {res}")
        prev, res = v, 2 * res


def support_value(z, accuracy: float = 1e-8) -> float:
    """Support value ``h(z)`` to the requested absolute accuracy.

    Returns 0 for ``z = 0``. For N >= 3 the quadrature resolution is doubled
    until two successive estimates agree to ``accuracy``.
    """
    return _adaptive(z, accuracy, grad=False).value


def support_gradient(z, accuracy: float = 1e-8) -> SupportEval:
    """Support value with gradient. Raises ZeroVector at ``z = 0``."""
    return _adaptive(z, accuracy, grad=True)


# golden-ratio phase shifts: keeps oracle nodes off the kink set for
# symmetric directions such as z1 = z2, where exact zeros bias the sum
_GOLDEN_SHIFT = (3.0 - math.sqrt(5.0)) / 2.0


def _oracle_nodes(n: int, axis: int) -> np.ndarray:
    shift = (0.5 + axis * _GOLDEN_SHIFT) % 1.0
    return (np.arange(n) + shift) * (2.0 * math.pi / n)


def quadrature_oracle(z, points_per_dim: int, gradient: bool = False,
                      max_points: float = 2.0 ** 40, chunk: int = 2 ** 16):
    """Reference value of h(z) by a tensor rectangle rule on the full torus.

    Independent of the closed forms: it sums ``|sum z_i cos phi_i|`` over
    ``points_per_dim**N`` nodes. The last axis is summed exactly by sorting
    its terms and using prefix sums, so each outer node costs O(log n).
    With ``gradient=True`` returns ``(value, grad)`` where grad is the
    rectangle-rule average of ``cos(phi_i) sign(...)``.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    n_dim = z.size
    n = int(points_per_dim)
    if n < 8:
        raise ValueError("points_per_dim must be >= 8")
    if float(n) ** n_dim > max_points:
        raise BudgetExceeded(f"{n}^{n_dim} nodes exceed the cap {max_points:.3g}")
    cos_axes = [np.cos(_oracle_nodes(n, i)) for i in range(n_dim)]
    if n_dim == 1:
        f = z[0] * cos_axes[0]
        value = float(np.abs(f).mean())
        grad = np.array([float((cos_axes[0] * np.sign(f)).mean())])
        return (value, grad) if gradient else value

    last = z[-1] * cos_axes[-1]
    order = np.argsort(last, kind="stable")
    w = last[order]
    cw = cos_axes[-1][order]
    pw = np.concatenate([[0.0], np.cumsum(w)])
    pc = np.concatenate([[0.0], np.cumsum(cw)])

    n_outer = n ** (n_dim - 1)
    total = 0.0
    gsum = np.zeros(n_dim)
    for start in range(0, n_outer, chunk):
        flat = np.arange(start, min(start + chunk, n_outer))
        idx = np.unravel_index(flat, (n,) * (n_dim - 1))
        cos_block = np.stack([cos_axes[i][idx[i]] for i in range(n_dim - 1)], axis=1)
        c = cos_block @ z[:-1]
        lo = np.searchsorted(w, -c, side="left")    # w < -c: negative terms
        hi = np.searchsorted(w, -c, side="right")   # w > -c: positive terms
        n_pos, n_neg = n - hi, lo
        pos = (c * n_pos + (pw[-1] - pw[hi]))
        neg = (c * n_neg + pw[lo])
        total += float(np.sum(pos - neg))
        if gradient:
            s = (n_pos - n_neg).astype(float)
            gsum[:-1] += s @ cos_block
            gsum[-1] += float(np.sum((pc[-1] - pc[hi]) - pc[lo]))
    count = float(n) ** n_dim
    value = total / count
    return (value, gsum / count) if gradient else value
