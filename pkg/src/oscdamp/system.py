"""Oscillator model: frequencies, energy, amplitude coordinates, resonances.

States are interleaved phase vectors ``(x_1, y_1, ..., x_N, y_N)`` with
``x_i`` the displacement and ``y_i`` the velocity of oscillator ``i``. The
plant is ``x_i' = y_i``, ``y_i' = -omega_i**2 x_i + u`` with one scalar
input ``u`` shared by all oscillators.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, DuplicateFrequency, NonpositiveFrequency

__all__ = [
    "OscillatorSystem",
    "ResonanceReport",
    "new_system",
    "energy",
    "amplitude_vector",
    "resonance_check",
    "check_state",
]


@dataclass(frozen=True)
class OscillatorSystem:
    """N undamped oscillators driven by a common bounded acceleration."""

    omega: np.ndarray = field(repr=True)

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).reshape(-1)
        if omega.size == 0 or not np.all(np.isfinite(omega)):
            raise ValueError("omega must be a nonempty vector of finite reals")
        if np.any(omega <= 0):
            raise NonpositiveFrequency(f"frequencies must be positive, got {omega.tolist()}")
        if np.unique(omega).size != omega.size:
            raise DuplicateFrequency(f"frequencies must be pairwise distinct, got {omega.tolist()}")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def n(self) -> int:
        return self.omega.size

    @property
    def dim(self) -> int:
        return 2 * self.omega.size

    def A(self) -> np.ndarray:
        """Dense drift matrix (block diagonal ``[[0, 1], [-w^2, 0]]``)."""
        a = np.zeros((self.dim, self.dim))
        for i, w in enumerate(self.omega):
            a[2 * i, 2 * i + 1] = 1.0
            a[2 * i + 1, 2 * i] = -w * w
        return a

    def B(self) -> np.ndarray:
        b = np.zeros(self.dim)
        b[1::2] = 1.0
        return b

    def __eq__(self, other):
        return isinstance(other, OscillatorSystem) and np.array_equal(self.omega, other.omega)

    def __hash__(self):
        return hash(self.omega.tobytes())


def new_system(omega) -> OscillatorSystem:
    return OscillatorSystem(omega)


def check_state(sys: OscillatorSystem, state) -> np.ndarray:
    state = np.asarray(state, dtype=float).reshape(-1)
    if state.size != sys.dim:
        raise DimensionMismatch(f"state has length {state.size}, expected {sys.dim}")
    if not np.all(np.isfinite(state)):
        raise ValueError("state entries must be finite")
    return state


def energy(sys: OscillatorSystem, state) -> float:
    """Total mechanical energy ``1/2 sum(y_i^2 + omega_i^2 x_i^2)``."""
    s = check_state(sys, state)
    x, y = s[0::2], s[1::2]
    return 0.5 * float(np.sum(y * y + (sys.omega * x) ** 2))


def amplitude_vector(sys: OscillatorSystem, state) -> np.ndarray:
    """Per-oscillator amplitudes ``e_i = sqrt(omega_i^2 x_i^2 + y_i^2)``.

    These are conserved by the free motion and are all the high-energy
    control needs to know about the state besides the velocities.
    """
    s = check_state(sys, state)
    return np.hypot(sys.omega * s[0::2], s[1::2])


@dataclass(frozen=True)
class ResonanceReport:
    relations: list
    m_max: int
    tol: float

    @property
    def resonant(self) -> bool:
        return bool(self.relations)


def resonance_check(sys: OscillatorSystem, m_max: int = 6, tol: float = 1e-9,
                    warn: bool = True) -> ResonanceReport:
    """Scan integer vectors ``0 < ||m||_inf <= m_max`` for ``|m . omega| <= tol``.

    Each relation is reported once, normalised so that its first nonzero
    entry is positive. A nonempty report only triggers a warning: the
    controller still works at resonance, it just loses quasi-optimality.
    """
    if m_max < 1 or tol <= 0:
        raise ValueError("need m_max >= 1 and tol > 0")
    n = sys.n
    rng = np.arange(-m_max, m_max + 1)
    found = []
    if n >= 2:
        # fix the leading coordinate block-by-block to keep memory flat
        for head in itertools.product(rng, repeat=max(n - 3, 0)):
            tail = np.stack(np.meshgrid(*([rng] * min(n, 3)), indexing="ij"), -1)
            tail = tail.reshape(-1, min(n, 3))
            m = np.hstack([np.tile(head, (tail.shape[0], 1)), tail]).astype(np.int64)
            vals = np.abs(m @ sys.omega)
            for row in m[vals <= tol]:
                nz = np.flatnonzero(row)
                if nz.size and row[nz[0]] > 0:
                    found.append(tuple(int(v) for v in row))
    report = ResonanceReport(sorted(found), m_max, tol)
    if warn and report.resonant:
        warnings.warn(
            f"frequencies {sys.omega.tolist()} satisfy {len(found)} integer relation(s) "
            f"with |m|_inf <= {m_max}; the high-energy control loses quasi-optimality",
            RuntimeWarning,
            stacklevel=2,
        )
    return report
