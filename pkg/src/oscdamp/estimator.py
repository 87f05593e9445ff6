"""scikit-learn style front end for the three-stage damping controller.

``fit`` takes the frequency vector and calibrates the stage plan;
``predict`` maps state rows to control values and ``transform`` maps them
to ``(rho, T, stage)`` features.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .canonical import canonical_data
from .exceptions import ConfigError
from .lyapunov import lyapunov_data
from .matching import StagePlan, calibrate, lambda_inscribed
from .simulator import SimConfig, _Controller, run
from .system import new_system

__all__ = ["DampingController"]


class DampingController(TransformerMixin, BaseEstimator):
    """Three-stage feedback damping of a set of linear oscillators.

    Parameters
    ----------
    r1 : float, optional
        rho value at which the unit bound is replaced by ``U``.
    attractor_constant : float, optional
        Size of the unit-law limit set in rho units; scales ``U`` inversely.
    theta, U : float, optional
        Skip calibration of the terminal time bound and/or the stage-2 bound.
    n_dirs : int
        Directions sampled when calibrating ``U``.
    solver_tol : float
        Tolerance of the amplitude-to-rho solve.
    """

    def __init__(self, r1=None, attractor_constant=None, theta=None, U=None,
                 n_dirs=4096, solver_tol=1e-10):
        self.r1 = r1
        self.attractor_constant = attractor_constant
        self.theta = theta
        self.U = U
        self.n_dirs = n_dirs
        self.solver_tol = solver_tol

    def fit(self, X, y=None):
        """Calibrate for the frequency vector ``X`` (shape (N,) or (1, N))."""
        omega = check_array(np.atleast_2d(np.asarray(X, dtype=float)), ensure_2d=True)
        if omega.shape[0] != 1:
            raise ConfigError("fit expects a single frequency vector")
        self.system_ = new_system(omega[0])
        self.canonical_ = canonical_data(self.system_)
        self.lyapunov_ = lyapunov_data(self.system_.n)
        if self.theta is not None and self.U is not None:
            plan = calibrate(self.system_, r1=self.r1, attractor_constant=math.inf,
                             can=self.canonical_, ld=self.lyapunov_)
            lam = lambda_inscribed(self.lyapunov_, self.canonical_, float(self.theta))
            ac = self.attractor_constant if self.attractor_constant is not None else plan.r1
            plan = StagePlan(float(self.theta), float(self.U), plan.r1, ac, lam)
        else:
            plan = calibrate(self.system_, r1=self.r1, attractor_constant=self.attractor_constant,
                             n_dirs=self.n_dirs, can=self.canonical_, ld=self.lyapunov_)
            if self.theta is not None or self.U is not None:
                plan = StagePlan(
                    plan.Theta if self.theta is None else float(self.theta),
                    plan.U if self.U is None else float(self.U),
                    plan.r1, plan.attractor_constant, plan.Lambda)
        self.plan_ = plan
        self.n_features_in_ = self.system_.dim
        self._ctl = _Controller(self.system_, plan, self.canonical_, self.lyapunov_, self.solver_tol)
        return self

    def _rows(self, X):
        check_is_fitted(self, "plan_")
        return check_array(X, ensure_2d=True)

    def _evaluate(self, s):
        if not np.any(s):
            return 0.0, 0.0, math.nan, 3
        stage = self._ctl.classify(s, 1)
        if stage == 3:
            u, _, T = self._ctl.terminal(s)
            return u, math.nan, T, 3
        u, r = self._ctl.high_energy(s, 1.0 if stage == 1 else self.plan_.U)
        return u, r, math.nan, stage

    def predict(self, X):
        """Control value for each state row (stage chosen from the state alone)."""
        X = self._rows(X)
        if X.shape[1] != self.n_features_in_:
            raise ConfigError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.array([self._evaluate(s)[0] for s in X])

    def transform(self, X):
        """Columns ``rho`` (NaN in stage 3), ``T`` (NaN outside stage 3) and ``stage``."""
        X = self._rows(X)
        if X.shape[1] != self.n_features_in_:
            raise ConfigError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = np.empty((X.shape[0], 3))
        for i, s in enumerate(X):
            _, r, T, st = self._evaluate(s)
            out[i] = (r, T, st)
        return out

    def simulate(self, x0, **kwargs):
        """Closed-loop run from ``x0``; keyword arguments go to SimConfig."""
        check_is_fitted(self, "plan_")
        cfg = SimConfig(self.system_, x0, plan=self.plan_, solver_tol=self.solver_tol, **kwargs)
        return run(cfg, can=self.canonical_, ld=self.lyapunov_)
