"""Bounded feedback damping of a set of linear oscillators.

The controller runs in three stages: a bang-bang law driven by the
support function of the limiting reachable body at high energy, the same
law with a reduced bound at moderate energy, and a polynomial feedback in
chain coordinates inside an invariant terminal ellipsoid.
"""
from .canonical import CanonicalData, canonical_data, from_canonical, lift_control, to_canonical
from .elliptic import ellipe, ellipk, elliptic_I1, elliptic_I2, ratio_F
from .estimator import DampingController
from .exceptions import *  # noqa: F401,F403
from .lyapunov import LyapunovData, controllability_time, local_control, lyapunov_data
from .matching import StagePlan, bound_U, calibrate, in_terminal_domain, theta_max
from .momentum import MasterSolver, MasterSolution, high_energy_control, momentum_vector, rho, solve_master
from .simulator import SimConfig, TrajectoryRecord, hold_step, measure_decay, run, write_csv
from .support import SupportFunction, quadrature_oracle, support_gradient, support_value
from .system import OscillatorSystem, amplitude_vector, energy, new_system, resonance_check

__version__ = "0.1.0"
