"""Complete elliptic integrals by the arithmetic-geometric mean, and the two
integrals that give the support-function gradient for a pair of oscillators.

Parameter convention: ``m = k**2`` (so ``K(m) = int_0^{pi/2} (1 - m sin^2)^{-1/2}``).
The negative-parameter forms ``E(k^2/(k^2-1))`` are mapped back to
``0 <= m <= 1`` with the imaginary-modulus transformation, so only the
well-conditioned branch is ever evaluated.
"""
from __future__ import annotations

import math

from .exceptions import DomainError

__all__ = [
    "ellipk",
    "ellipe",
    "elliptic_I1",
    "elliptic_I2",
    "legendre_A",
    "legendre_B",
    "ratio_F",
]

_EPS = 2.0 ** -54


def _agm_kd(m: float) -> tuple[float, float]:
    """Return ``(K(m), D(m))`` with ``D = (K - E) / m`` for ``0 <= m < 1``.

    ``D`` is accumulated from ``c_n^2 / m`` so it stays accurate as m -> 0,
    where ``K - E`` itself cancels.
    """
    b0 = math.sqrt(1.0 - m)
    a, b = 0.5 * (1.0 + b0), math.sqrt(b0)
    # r = c_n^2 / m, starting at n = 1 where c_1 = (1 - b_0) / 2
    r = m / (4.0 * (1.0 + b0) ** 2)
    total = 0.5 + r
    power = 1.0
    for _ in range(64):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        # c_{n+1} = c_n^2 / (4 a_{n+1})
        r = r * (r * m) / (16.0 * a * a)
        power *= 2.0
        term = power * r
        total += term
        if term <= _EPS * total and abs(a - b) <= _EPS * a:
            break
    k = math.pi / (2.0 * a)
    return k, k * total


def ellipk(m: float) -> float:
    """Complete integral of the first kind, ``0 <= m < 1``."""
    if not 0.0 <= m < 1.0:
        raise DomainError(f"ellipk needs 0 <= m < 1, got {m}")
    return _agm_kd(m)[0]


def ellipe(m: float) -> float:
    """Complete integral of the second kind, ``0 <= m <= 1``."""
    if not 0.0 <= m <= 1.0:
        raise DomainError(f"ellipe needs 0 <= m <= 1, got {m}")
    if m == 1.0:
        return 1.0
    k, d = _agm_kd(m)
    return k - m * d


def _check_k(k):
    if not (0.0 <= k <= 1.0):
        raise DomainError(f"modulus must lie in [0, 1], got {k}")


def elliptic_I1(k: float) -> float:
    r"""``I_1(k) = \int_0^{2\pi} k \sin^2\phi / \sqrt{1 - k^2\cos^2\phi} d\phi``.

    Equals ``4 (E - (1 - k^2) K) / k`` with parameter ``k^2``; the form
    ``4 k (K - D)`` is used for small k to avoid cancellation.
    """
    k = float(k)
    _check_k(k)
    if k == 0.0:
        return 0.0
    if k == 1.0:
        return 4.0
    m = k * k
    K, D = _agm_kd(m)
    if m <= 0.5:
        return 4.0 * k * (K - D)
    return 4.0 * ((K - m * D) - (1.0 - m) * K) / k


def elliptic_I2(k: float) -> float:
    r"""``I_2(k) = \int_0^{2\pi} \sqrt{1 - k^2\cos^2\phi} d\phi = 4 E(k^2)``."""
    k = float(k)
    _check_k(k)
    return 4.0 * ellipe(k * k)


def legendre_A(k: float) -> float:
    """``sqrt(1-k^2) E(k^2/(k^2-1))``, which reduces to ``E(k^2) = I_2 / 4``."""
    return elliptic_I2(k) / 4.0


def legendre_B(k: float) -> float:
    """``(sqrt(1-k^2)/k) (E - K)(k^2/(k^2-1))`` in magnitude, i.e. ``I_1 / 4``.

    The source formula carries a leading minus sign together with a
    negative modulus; with ``k >= 0`` both signs are absorbed.
    """
    return elliptic_I1(k) / 4.0


def ratio_F(k: float) -> float:
    """Gradient ratio ``g_2 / g_1 = I_2(k) / I_1(k)`` on ``0 < k <= 1``.

    Strictly decreasing from ``+inf`` (like ``2/k``) to ``F(1) = 1``.
    """
    k = float(k)
    if not (0.0 < k <= 1.0):
        raise DomainError(f"ratio_F needs 0 < k <= 1, got {k}")
    return elliptic_I2(k) / elliptic_I1(k)
