import math

import numpy as np
import pytest

from oscdamp import high_energy_control, momentum_vector, new_system, rho, solve_master
from oscdamp.exceptions import ZeroAmplitude
from oscdamp.momentum import MasterSolver, eikonal_residual
from oscdamp.support import support_value


def test_single_oscillator_solution():
    sol = solve_master(new_system([1.0]), [2.0])
    assert sol.z_dir == pytest.approx([math.pi / 2])
    assert sol.rho == pytest.approx(math.pi)


def test_pair_solutions():
    s = new_system([1.0, 2.0])
    sol = solve_master(s, [1.0, 1.0])
    assert sol.z_dir[0] == pytest.approx(sol.z_dir[1], rel=1e-12)
    sol = solve_master(s, [0.0, 1.0])
    assert sol.z_dir == pytest.approx([0.0, math.pi / 2])
    assert sol.rho == pytest.approx(math.pi / 2)
    assert list(sol.active) == [False, True]


def test_stationarity(rng):
    s = new_system([1.0, math.sqrt(2)])
    for _ in range(5):
        e = rng.uniform(0.1, 2.0, size=2)
        sol = solve_master(s, e)
        assert support_value(sol.z_dir) == pytest.approx(1.0, abs=1e-12)
        assert sol.rho * sol.gradient == pytest.approx(e, rel=1e-9)


def test_pair_iterative_matches_closed_form():
    e = np.array([0.4, 1.3])
    closed = MasterSolver(2)(e)
    iterative = MasterSolver(2, method="iterative")(e)
    assert iterative.rho == pytest.approx(closed.rho, rel=1e-9)
    assert iterative.z_dir == pytest.approx(closed.z_dir, abs=1e-7)


@pytest.mark.parametrize("e", [[1.0, 0.5, 0.8], [1.0, 0.01, 0.3], [0.2, 1.0, 1.0], [1.0, 0.5, 0.8, 0.3]])
def test_general_solver(e):
    e = np.array(e)
    solver = MasterSolver(e.size)
    sol = solver(e)
    assert sol.residual <= 1e-10
    f = solver.support(e.size, pivot=int(np.argmax(e)))
    assert f.value(sol.z_dir) == pytest.approx(1.0, abs=1e-12)
    # the optimum beats nearby feasible directions
    for d in np.eye(e.size):
        z = sol.z_dir + 1e-3 * d
        assert e @ (z / f.value(z)) <= sol.rho + 1e-12


def test_rho():
    s = new_system([1.0])
    assert rho(s, [3, 4]) == pytest.approx(5 * math.pi / 2)
    with pytest.raises(ZeroAmplitude):
        rho(s, [0, 0])


def test_rho_by_grid_search(rng):
    s = new_system([1.0, math.sqrt(2)])
    state = rng.normal(size=4)
    e = np.hypot(s.omega * state[0::2], state[1::2])
    t = np.linspace(0, math.pi / 2, 20001)
    dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
    vals = np.array([support_value(d) for d in dirs[::10]])
    best = np.max(dirs[::10] @ e / vals)
    assert rho(s, state) == pytest.approx(best, rel=1e-3)


def test_momentum():
    s = new_system([1.0])
    state = np.array([3.0, 4.0])
    p = momentum_vector(s, state, solve_master(s, [5.0])).interleaved()
    assert p / np.linalg.norm(p) == pytest.approx(state / 5.0)

    s2 = new_system([1.0, 2.0])
    state = np.array([0.0, 1.0, 0.5, 0.0])  # e = (1, 1)
    p = momentum_vector(s2, state, solve_master(s2, [1.0, 1.0]))
    assert p.xi[1] / (4 * 0.5) == pytest.approx(p.eta[0] / 1.0)

    state = np.array([0.0, 0.0, 1.0, 0.0])
    p = momentum_vector(s2, state, solve_master(s2, [0.0, 2.0]))
    assert p.xi[0] == 0 and p.eta[0] == 0


def test_high_energy_control():
    s = new_system([1.0])
    assert high_energy_control(s, [0, 1]) == -1
    assert high_energy_control(s, [1, 0]) == 0
    assert high_energy_control(s, [0, -2], bound_U=0.25) == 0.25


def test_eikonal(rng):
    s = new_system([1.0])
    assert eikonal_residual(s, [3, 4]) <= 1e-3
    s2 = new_system([1.0, math.sqrt(2)])
    state = rng.normal(size=4)
    r = eikonal_residual(s2, state)
    assert r <= 1e-3
    assert eikonal_residual(s2, 2 * state) <= 1e-3
