import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscdamp.exceptions import BudgetExceeded, ZeroVector
from oscdamp.support import SupportFunction, dual_magnitudes, quadrature_oracle, support_gradient, support_value


def test_single_oscillator():
    assert support_value([1.0]) == pytest.approx(2 / math.pi, abs=1e-15)
    assert support_value([-3.0]) == pytest.approx(6 / math.pi, abs=1e-15)
    assert support_gradient([3.0]).gradient == pytest.approx([2 / math.pi])
    assert support_gradient([-3.0]).gradient == pytest.approx([-2 / math.pi])


def test_pair_limits():
    assert support_value([0.0, 1.0]) == pytest.approx(2 / math.pi, abs=1e-15)
    g = support_gradient([1.0, 1.0]).gradient
    assert g == pytest.approx([4 / math.pi**2] * 2, abs=1e-14)
    g = support_gradient([0.0, 1.0]).gradient
    assert g == pytest.approx([0.0, 2 / math.pi], abs=1e-14)


def test_zero_vector():
    with pytest.raises(ZeroVector):
        support_gradient([0.0, 0.0])
    assert support_value([0.0, 0.0]) == 0.0


def test_pair_against_oracle(rng):
    for _ in range(5):
        z = rng.normal(size=2)
        v, g = quadrature_oracle(z, 2**14, gradient=True)
        ev = support_gradient(z)
        assert ev.value == pytest.approx(v, abs=1e-7)
        assert ev.gradient == pytest.approx(g, abs=1e-6)


def test_three_oscillators_against_oracle():
    z = np.array([0.4, -1.0, 0.7])
    v, g = quadrature_oracle(z, 512, gradient=True)
    ev = support_gradient(z, accuracy=1e-7)
    assert ev.value == pytest.approx(v, abs=1e-5)
    assert ev.gradient == pytest.approx(g, abs=1e-4)


def test_oracle_checks():
    assert quadrature_oracle([1.0], 4096) == pytest.approx(2 / math.pi, abs=1e-6)
    assert quadrature_oracle([1.0, 0.0], 4096) == pytest.approx(2 / math.pi, abs=1e-6)
    vals = {quadrature_oracle(p, 256) for p in ([1, 2, 3], [3, 1, 2], [2, 3, 1])}
    assert max(vals) - min(vals) < 1e-4
    with pytest.raises(BudgetExceeded):
        quadrature_oracle([1, 1, 1, 1], 1024, max_points=1e6)


def test_methods_agree():
    z = [0.3, 0.9]
    closed = SupportFunction(2, method="closed").value(z)
    quad = SupportFunction(2, method="quadrature").value(z)
    assert closed == pytest.approx(quad, abs=1e-7)


def test_dual_magnitudes():
    p = np.array([2.0, 0.0, 0.0, 3.0])
    assert dual_magnitudes([2.0, 1.0], p) == pytest.approx([1.0, 3.0])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda z: max(map(abs, z)) > 1e-3),
       st.floats(0.1, 10.0))
def test_euler_and_homogeneity_three(z, lam):
    f = SupportFunction(3)
    v, g = f.value_and_grad(z)
    assert float(np.dot(g, z)) == pytest.approx(v, rel=1e-10)
    assert f.value(np.multiply(lam, z)) == pytest.approx(lam * v, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_pair_symmetries(a, b):
    v = support_value([a, b])
    assert support_value([b, a]) == pytest.approx(v, abs=1e-14)
    assert support_value([-a, b]) == pytest.approx(v, abs=1e-14)
    # triangle inequality on the axes
    assert v <= 2 / math.pi * (abs(a) + abs(b)) + 1e-14
    assert v >= 2 / math.pi * max(abs(a), abs(b)) - 1e-14
