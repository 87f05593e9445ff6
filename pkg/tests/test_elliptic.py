import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from oscdamp.elliptic import ellipe, ellipk, elliptic_I1, elliptic_I2, legendre_A, legendre_B, ratio_F
from oscdamp.exceptions import DomainError


@pytest.mark.parametrize("m", [0.0, 1e-12, 1e-4, 0.1, 0.5, 0.9, 0.999999])
def test_agm_matches_scipy(m):
    assert ellipk(m) == pytest.approx(sp.ellipk(m), rel=1e-14)
    assert ellipe(m) == pytest.approx(sp.ellipe(m), rel=1e-14)


def test_endpoints():
    assert elliptic_I1(1.0) == pytest.approx(4.0, abs=1e-13)
    assert elliptic_I2(1.0) == pytest.approx(4.0, abs=1e-13)
    assert elliptic_I2(0.0) == pytest.approx(2 * math.pi, abs=1e-14)
    assert elliptic_I1(0.0) == 0.0
    assert ratio_F(1.0) == pytest.approx(1.0, abs=1e-12)
    assert legendre_A(0.3) == pytest.approx(elliptic_I2(0.3) / 4)
    assert legendre_B(0.3) == pytest.approx(elliptic_I1(0.3) / 4)


def test_small_modulus_asymptotics():
    # I1 ~ pi k, so F ~ 2/k
    assert elliptic_I1(1e-6) == pytest.approx(math.pi * 1e-6, rel=1e-6)
    assert ratio_F(1e-6) > 1e5


def test_integrals_by_quadrature():
    from scipy.integrate import quad
    for k in (0.2, 0.5, 0.8):
        # I2 = int_0^2pi sqrt(1 - k^2 sin^2), I1 = int_0^2pi k cos^2 / sqrt(1 - k^2 sin^2)
        i2 = quad(lambda p: math.sqrt(1 - (k * math.sin(p)) ** 2), 0, 2 * math.pi, limit=200)[0]
        i1 = quad(lambda p: k * math.cos(p) ** 2 / math.sqrt(1 - (k * math.sin(p)) ** 2),
                  0, 2 * math.pi, limit=200)[0]
        assert elliptic_I2(k) == pytest.approx(i2, rel=1e-12)
        assert elliptic_I1(k) == pytest.approx(i1, rel=1e-12)
        assert ratio_F(k) == pytest.approx(i2 / i1, rel=1e-8)


def test_domain():
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            elliptic_I1(bad)
    with pytest.raises(DomainError):
        ratio_F(0.0)


def test_F_strictly_decreasing():
    ks = np.linspace(0.01, 1.0, 100)
    f = np.array([ratio_F(k) for k in ks])
    assert np.all(np.diff(f) < 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1.0))
def test_I1_below_I2(k):
    # on [0,1) the transverse integral never exceeds the longitudinal one
    assert elliptic_I1(k) <= elliptic_I2(k) + 1e-12
