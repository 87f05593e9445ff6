import math

import numpy as np
import pytest

from oscdamp import calibrate, canonical_data, lyapunov_data, new_system
from oscdamp.matching import (bound_U, default_r1, in_terminal_domain, lambda_inscribed, terminal_boundary_points,
                              terminal_form, theta_max)

THETA1 = 3 ** 0.25


@pytest.fixture(scope="module")
def single():
    s = new_system([1.0])
    return s, canonical_data(s), lyapunov_data(1)


@pytest.fixture(scope="module")
def pair():
    s = new_system([1.0, math.sqrt(2)])
    return s, canonical_data(s), lyapunov_data(2)


def test_theta_single(single):
    s, can, ld = single
    assert theta_max(s, can, ld) == pytest.approx(THETA1, abs=1e-12)


def test_theta_pair_is_maximal():
    s = new_system([1.0, 2.0])
    can, ld = canonical_data(s), lyapunov_data(2)
    theta = theta_max(s, can, ld)
    assert 0 < theta < math.inf
    # sup of |C x| over G, as a function of Theta
    for t, ok in ((theta, True), (2 * theta, False)):
        p = terminal_form(ld, can, t)
        sup = math.sqrt(can.c_row @ np.linalg.solve(p, can.c_row))
        assert (sup <= 0.5 + 1e-9) == ok


def test_lambda(single):
    s, can, ld = single
    assert lambda_inscribed(ld, can, THETA1) == pytest.approx(0.26253, abs=1e-5)
    # the form in canonical coordinates is delta Q delta; Theta -> s Theta shrinks it
    assert lambda_inscribed(ld, can, 2 * THETA1) > lambda_inscribed(ld, can, THETA1)


def test_terminal_domain(single, pair):
    s, can, ld = single
    assert in_terminal_domain(ld, can, THETA1, [0.0, 0.0])
    assert not in_terminal_domain(ld, can, THETA1, [2.0, 0.0])
    for _, can_, ld_ in (single, pair):
        theta = theta_max(_, can_, ld_)
        for x in terminal_boundary_points(ld_, can_, theta, 16):
            assert in_terminal_domain(ld_, can_, theta, x * (1 - 1e-9))
            assert not in_terminal_domain(ld_, can_, theta, x * (1 + 1e-6))


def test_bound_U(single):
    s, can, ld = single
    lam = lambda_inscribed(ld, can, THETA1)
    assert bound_U(s, can, ld, THETA1, math.pi) == pytest.approx(lam / 2, rel=1e-6)
    assert bound_U(s, can, ld, THETA1, 2 * math.pi) == pytest.approx(lam / 4, rel=1e-6)
    assert bound_U(s, can, ld, THETA1, math.inf) == 0.0
    assert bound_U(s, can, ld, THETA1, 1e-9) == 1.0


def test_bound_U_sampling_stable(pair):
    s, can, ld = pair
    theta = theta_max(s, can, ld)
    a = bound_U(s, can, ld, theta, 4.0, n_dirs=2048)
    b = bound_U(s, can, ld, theta, 4.0, n_dirs=4096)
    assert 0 < a <= 1
    assert abs(a - b) <= 0.02 * b


def test_default_r1():
    assert default_r1(new_system([1.0])) == pytest.approx(math.pi)
    r = default_r1(new_system([1.0, math.sqrt(2)]))
    assert r == pytest.approx(math.pi * math.sqrt(2), rel=1e-6)


def test_calibrate_single():
    plan = calibrate(new_system([1.0]))
    assert plan.Theta == pytest.approx(THETA1, abs=1e-9)
    assert plan.Lambda == pytest.approx(0.26253, abs=1e-4)
    assert plan.U == pytest.approx(plan.Lambda / 2, abs=1e-4)
    assert set(plan.to_dict()) == {"Theta", "U", "r1", "attractor_constant", "Lambda"}
