"""Closed-loop simulation with exact zero-order-hold propagation.

Between samples the control is constant, so every oscillator rotates about
its shifted equilibrium ``u / omega^2`` exactly. The stage machine only
moves forward:

1. bang-bang law with bound 1 while ``rho > r1``;
2. the same law with bound ``U`` until the state enters the terminal ellipsoid;
3. the lifted terminal control until ``T(X)`` reaches ``t_floor``, after
   which the state is clamped to the origin.

In stage 3 the hold step is ``terminal_step_fraction * h``, further capped
at ``terminal_ratio * T`` because the terminal gains grow like ``1/T`` (the default ratio shrinks with N since
the gains ``c`` grow quickly with N). The capped step is rounded down to
the grid ``h 2^(-j/8)`` so that the per-step propagators can be cached. The canonical coordinates shrink like
``T^j``, far below the rounding level of the physical state, so stage 3
propagates the canonical state directly (same exact hold map, different
basis). As a guard against a precision floor, stage 3 also ends once ``T``
has not reached a new minimum for ``stall_steps`` consecutive steps.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalData, canonical_data
from .exceptions import MaxTimeExceeded, ZeroAmplitude
from .lyapunov import LyapunovData, controllability_time, local_control, lyapunov_data
from .matching import StagePlan, calibrate, in_terminal_domain
from .momentum import MasterSolver
from .system import OscillatorSystem, check_state

__all__ = [
    "SimConfig",
    "TrajectoryRecord",
    "hold_step",
    "default_hold_step",
    "run",
    "measure_decay",
    "estimate_attractor_constant",
    "write_csv",
    "csv_header",
]


def chain_propagator(a_cl: np.ndarray, b: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """``(exp(a h), int_0^h exp(a t) dt b)`` by Taylor series.

    For the chain-like matrices of stage 3 entry (i, j) of the k-th term
    vanishes for k < i - j, so every entry keeps full relative precision.
    """
    dim = a_cl.shape[0]
    m = a_cl * h
    term = np.eye(dim)
    phi = term.copy()
    gam = term * h
    floor = 1e-18 * min(1.0, h) ** dim
    for k in range(1, 200):
        term = term @ m / k
        phi += term
        gam += term * (h / (k + 1))
        if k >= dim and np.abs(term).max() <= floor:
            break
    return phi, gam @ b


def default_hold_step(sys: OscillatorSystem) -> float:
    return 1e-3 * 2.0 * math.pi / float(sys.omega.max())


def hold_step(sys: OscillatorSystem, state, u: float, h: float) -> np.ndarray:
    """Exact state after holding ``u`` for ``h`` time units."""
    if not h > 0:
        raise ValueError("hold step must be positive")
    s = np.asarray(state, dtype=float)
    w = sys.omega
    x, y = s[0::2], s[1::2]
    ct, st = np.cos(w * h), np.sin(w * h)
    # 1 - cos written as 2 sin^2 so the forced response keeps full relative
    # precision even when it is tiny compared with u / omega^2
    vers = 2.0 * np.sin(0.5 * w * h) ** 2
    out = np.empty_like(s)
    out[0::2] = x * ct + (y / w) * st + (u / (w * w)) * vers
    out[1::2] = -w * x * st + y * ct + (u / w) * st
    return out


@dataclass
class SimConfig:
    system: OscillatorSystem
    x0: np.ndarray
    plan: StagePlan | None = None
    h: float | None = None
    tol_state: float = 1e-9
    max_time: float = 1000.0
    record_stride: int = 1
    terminal_ratio: float | None = None  # default 0.02 / (2N(2N+1))
    terminal_step_fraction: float = 0.25
    t_floor: float = 1e-6
    stall_steps: int = 200
    solver_tol: float = 1e-10

    def __post_init__(self):
        self.x0 = check_state(self.system, self.x0)
        if self.h is None:
            self.h = default_hold_step(self.system)
        if not (self.h > 0 and self.max_time > 0 and self.tol_state > 0):
            raise ValueError("h, max_time and tol_state must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class TrajectoryRecord:
    n: int
    t: list = field(default_factory=list)
    states: list = field(default_factory=list)
    u: list = field(default_factory=list)
    stage: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    T_ctrl: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    terminated: bool = False

    def append(self, t, state, u, stage, rho, T, energy):
        self.t.append(t)
        self.states.append(np.array(state, dtype=float))
        self.u.append(u)
        self.stage.append(stage)
        self.rho.append(rho)
        self.T_ctrl.append(T)
        self.energy.append(energy)

    def __len__(self):
        return len(self.t)

    def as_arrays(self) -> dict:
        return {
            "t": np.array(self.t),
            "state": np.array(self.states).reshape(len(self), 2 * self.n),
            "u": np.array(self.u),
            "stage": np.array(self.stage, dtype=int),
            "rho": np.array(self.rho),
            "T_ctrl": np.array(self.T_ctrl),
            "energy": np.array(self.energy),
        }

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class _Controller:
    """Stage machine state shared by ``run`` and the estimator API."""

    def __init__(self, sys, plan, can=None, ld=None, solver_tol=1e-10):
        self.sys = sys
        self.plan = plan
        self.can = can or canonical_data(sys)
        self.ld = ld or lyapunov_data(sys.n)
        self.solver = MasterSolver(sys.n, tol=solver_tol)
        self._omega = sys.omega
        self._normal = self.can.strip_normal

    def high_energy(self, state, bound):
        e = np.hypot(self._omega * state[0::2], state[1::2])
        sol = self.solver(e)
        arg = float(sol.weights @ state[1::2])
        return -bound * float(np.sign(arg)) + 0.0, sol.rho

    def in_terminal(self, state):
        return in_terminal_domain(self.ld, self.can, self.plan.Theta, state)

    def terminal(self, state, guess=None):
        return self.terminal_canonical(self.can.D_inv @ state, guess)

    def terminal_canonical(self, x_can, guess=None):
        T = controllability_time(self.ld, x_can, guess=guess).T
        u_can = local_control(self.ld, x_can, T)
        return float(self._normal @ x_can) + u_can, u_can, T

    def canonical_open_loop(self) -> np.ndarray:
        """``D^-1 A D`` assembled from its exact chain structure."""
        return self.can.A_can - np.outer(self.can.B_can.ravel(), self._normal)

    def classify(self, state, stage=1):
        """Next stage for ``state`` given the current one (never decreases)."""
        if stage < 3 and self.in_terminal(state):
            return 3
        if stage == 1:
            e = np.hypot(self._omega * state[0::2], state[1::2])
            if self.solver(e).rho <= self.plan.r1:
                return 2
        return stage


def _energy(omega, s):
    return 0.5 * float(np.sum(s[1::2] ** 2 + (omega * s[0::2]) ** 2))


def run(config: SimConfig, can: CanonicalData | None = None, ld: LyapunovData | None = None) -> TrajectoryRecord:
    """Simulate the three-stage closed loop from ``config.x0``.

    Raises MaxTimeExceeded (carrying the partial record) when the origin is
    not reached within ``config.max_time``.
    """
    sys = config.system
    plan = config.plan or calibrate(sys, can=can, ld=ld)
    ctl = _Controller(sys, plan, can, ld, config.solver_tol)
    omega = sys.omega
    rec = TrajectoryRecord(sys.n)
    state = config.x0.copy()
    t = 0.0
    h = config.h
    stride = config.record_stride
    nan = math.nan

    if float(np.linalg.norm(state)) <= config.tol_state:
        rec.append(0.0, np.zeros_like(state), 0.0, 3, nan, 0.0, 0.0)
        rec.terminated = True
        return rec

    stage = ctl.classify(state, 1)
    k = 0
    guess = None
    t_min, stall = math.inf, 0
    x_can = None
    a_cl = ctl.canonical_open_loop()
    b_can = ctl.can.B_can.ravel()
    ratio = config.terminal_ratio or 0.02 / ctl.ld.Q[0][0]
    props: dict[int, tuple] = {}
    j0 = max(0, math.ceil(-8.0 * math.log2(config.terminal_step_fraction) - 1e-9))
    while True:
        if stage < 3:
            stage = ctl.classify(state, stage)
        if stage == 3:
            if x_can is None:
                x_can = ctl.can.D_inv @ state
            u, _, T = ctl.terminal_canonical(x_can, guess)
            if T < t_min:
                t_min, stall = T, 0
            else:
                stall += 1
            small = float(np.linalg.norm(state)) <= config.tol_state
            if small or T <= config.t_floor or stall >= config.stall_steps:
                if rec.t and rec.t[-1] != t:
                    rec.append(t, state, 0.0, 3, nan, T, _energy(omega, state))
                rec.append(t, np.zeros_like(state), 0.0, 3, nan, 0.0, 0.0)
                rec.terminated = True
                return rec
            j = max(j0, math.ceil(8.0 * math.log2(h / (ratio * T))))
            step = h * 2.0 ** (-j / 8.0)
            guess = T - step
            r = nan
        else:
            u, r = ctl.high_energy(state, 1.0 if stage == 1 else plan.U)
            T = nan
            step = h
        if k % stride == 0:
            rec.append(t, state, u, stage, r, T, _energy(omega, state))
        if t >= config.max_time:
            raise MaxTimeExceeded(f"origin not reached within t={config.max_time}", rec)
        if x_can is None:
            state = hold_step(sys, state, u, step)
        else:
            if j not in props:
                props[j] = chain_propagator(a_cl, b_can, step)
            phi, gam = props[j]
            x_can = phi @ x_can + gam * u
            state = ctl.can.D @ x_can
        t += step
        k += 1


def measure_decay(config: SimConfig, rho_start: float, rho_stop: float,
                  control=None, window: float | None = None) -> float:
    """Average decay rate ``(rho(0) - rho(t)) / t`` under the unit bang-bang law.

    The initial state is ``config.x0`` rescaled so that ``rho(0) = rho_start``;
    the run stops at the first sample with ``rho <= rho_stop``. ``control``
    may replace the law with any callable ``state -> u`` (|u| <= 1), and
    ``window`` fixes the horizon instead of waiting for ``rho_stop``.
    """
    sys = config.system
    if not rho_start > rho_stop > 0:
        raise ValueError("need rho_start > rho_stop > 0")
    solver = MasterSolver(sys.n, tol=config.solver_tol)
    omega = sys.omega

    def rho_of(s):
        return solver(np.hypot(omega * s[0::2], s[1::2])).rho

    state = config.x0 * (rho_start / rho_of(config.x0))
    r0 = rho_of(state)
    t = 0.0
    h = config.h
    horizon = window if window is not None else config.max_time
    while True:
        e = np.hypot(omega * state[0::2], state[1::2])
        sol = solver(e)
        if window is None and sol.rho <= rho_stop and t > 0:
            return (r0 - sol.rho) / t
        if t >= horizon:
            if window is not None:
                return (r0 - sol.rho) / t
            raise MaxTimeExceeded(f"rho did not reach {rho_stop} within t={horizon}")
        if control is None:
            u = -float(np.sign(sol.weights @ state[1::2]))
        else:
            u = float(np.clip(control(state), -1.0, 1.0))
        state = hold_step(sys, state, u, h)
        t += h


def estimate_attractor_constant(sys: OscillatorSystem, n_starts: int = 20, settle: float = 200.0,
                                tail: float = 50.0, h: float | None = None, seed: int = 0) -> float:
    """Empirical size of the limit set of the unit bang-bang law, in rho units.

    Runs the bound-1 law from random starts on the sphere ``rho = 4 r`` with
    ``r`` the default stage-1 radius scale, and returns the largest rho seen
    during the last ``tail`` time units. Because the law is scale
    equivariant this equals ``sup rho / U`` for any bound U.
    """
    rng = np.random.default_rng(seed)
    solver = MasterSolver(sys.n, tol=1e-10)
    omega = sys.omega
    h = h or default_hold_step(sys)
    worst = 0.0
    for _ in range(n_starts):
        s = rng.normal(size=sys.dim)
        e = np.hypot(omega * s[0::2], s[1::2])
        s *= 20.0 / solver(e).rho
        t = 0.0
        while t < settle + tail:
            e = np.hypot(omega * s[0::2], s[1::2])
            try:
                sol = solver(e)
            except ZeroAmplitude:
                break
            if t >= settle:
                worst = max(worst, sol.rho)
            u = -float(np.sign(sol.weights @ s[1::2]))
            s = hold_step(sys, s, u, h)
            t += h
    return worst


def csv_header(n: int) -> str:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"x{i}", f"y{i}"]
    return ",".join(cols + ["u", "stage", "rho", "T_ctrl", "energy"])


def _fmt(v: float) -> str:
    return "" if (v is None or (isinstance(v, float) and math.isnan(v))) else format(float(v), ".17g")


def write_csv(rec: TrajectoryRecord, out, comments=()) -> None:
    """Write the trajectory as CSV; ``comments`` lines are emitted first, each
    prefixed by ``#``. ``out`` is a path or a text stream."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n" if not line.startswith("#") else f"{line}\n")
    buf.write(csv_header(rec.n) + "\n")
    for i in range(len(rec)):
        row = [_fmt(rec.t[i])] + [_fmt(v) for v in rec.states[i]]
        row += [_fmt(rec.u[i]), str(int(rec.stage[i])), _fmt(rec.rho[i]), _fmt(rec.T_ctrl[i]),
                _fmt(rec.energy[i])]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
