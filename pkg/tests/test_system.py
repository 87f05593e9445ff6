import math

import numpy as np
import pytest

from oscdamp import amplitude_vector, energy, new_system, resonance_check
from oscdamp.exceptions import DimensionMismatch, DuplicateFrequency, NonpositiveFrequency


def test_construction():
    assert new_system([1.0]).n == 1
    s = new_system([1.0, 2.0])
    assert (s.n, s.dim) == (2, 4)
    with pytest.raises(DuplicateFrequency):
        new_system([1.0, 1.0])
    with pytest.raises(NonpositiveFrequency):
        new_system([1.0, -2.0])
    with pytest.raises(NonpositiveFrequency):
        new_system([0.0])


def test_omega_is_read_only():
    s = new_system([1.0, 2.0])
    with pytest.raises(ValueError):
        s.omega[0] = 3.0


def test_plant_matrices():
    s = new_system([1.0, 2.0])
    a = s.A()
    assert a[0, 1] == 1 and a[1, 0] == -1
    assert a[2, 3] == 1 and a[3, 2] == -4
    assert list(s.B().ravel()) == [0, 1, 0, 1]


def test_energy():
    assert energy(new_system([1.0]), [0, 0]) == 0
    assert energy(new_system([1.0]), [1, 0]) == 0.5
    assert energy(new_system([1.0, 2.0]), [1, 0, 0, 2]) == pytest.approx(2.5)
    with pytest.raises(DimensionMismatch):
        energy(new_system([1.0]), [1, 0, 0])


def test_amplitudes():
    assert amplitude_vector(new_system([1.0]), [3, 4]) == pytest.approx([5])
    assert amplitude_vector(new_system([2.0]), [1, 0]) == pytest.approx([2])
    assert amplitude_vector(new_system([1.0, 2.0]), [0, 1, 1, 0]) == pytest.approx([1, 2])


def test_resonance():
    rep = resonance_check(new_system([1.0, 2.0]), 3, warn=False)
    assert rep.resonant and (2, -1) in [tuple(r) for r in rep.relations]
    with pytest.warns(RuntimeWarning):
        resonance_check(new_system([1.0, 2.0]), 3)
    assert not resonance_check(new_system([1.0, math.sqrt(2)]), 5, 1e-9).resonant
    assert not resonance_check(new_system([1.0]), 5).resonant


def test_equality_and_hash():
    a, b = new_system([1.0, 2.0]), new_system(np.array([1.0, 2.0]))
    assert a == b and hash(a) == hash(b)
    assert a != new_system([1.0, 3.0])
