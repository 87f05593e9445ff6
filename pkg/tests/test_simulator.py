import io
import math

import numpy as np
import pytest
from scipy.linalg import expm

from oscdamp import MaxTimeExceeded, calibrate, new_system
from oscdamp.simulator import (SimConfig, chain_propagator, csv_header, default_hold_step, hold_step, run,
                               write_csv)


@pytest.fixture(scope="module")
def single():
    s = new_system([1.0])
    return s, calibrate(s)


def test_hold_step_period():
    s = new_system([1.0, 2.0])
    x = np.array([0.3, -0.2, 1.0, 0.5])
    out = x
    for _ in range(8):
        out = hold_step(s, out, 0.0, math.pi / 4)
    assert out == pytest.approx(x, abs=1e-13)


def test_hold_step_forced_fixed_point():
    s = new_system([2.0])
    u = 0.7
    x = np.array([u / 4, 0.0])
    assert hold_step(s, x, u, 0.37) == pytest.approx(x, abs=1e-15)


def test_hold_step_matches_expm(rng):
    s = new_system([1.0, 1.7])
    a = s.A()
    b = s.B()
    x = rng.normal(size=4)
    h = 0.3
    aug = np.zeros((5, 5))
    aug[:4, :4] = a
    aug[:4, 4] = b * 0.4
    ref = expm(aug * h) @ np.append(x, 1.0)
    assert hold_step(s, x, 0.4, h) == pytest.approx(ref[:4], abs=1e-13)
    with pytest.raises(ValueError):
        hold_step(s, x, 0.0, 0.0)


def test_chain_propagator_matches_expm(rng):
    a = np.diag(-np.arange(1.0, 4.0), -1)
    a[0] = rng.normal(size=4)
    b = np.array([1.0, 0, 0, 0])
    phi, gb = chain_propagator(a, b, 0.05)
    aug = np.zeros((5, 5))
    aug[:4, :4] = a
    aug[:4, 4] = b
    ref = expm(aug * 0.05)
    assert phi == pytest.approx(ref[:4, :4], rel=1e-12, abs=1e-16)
    assert gb == pytest.approx(ref[:4, 4], rel=1e-12, abs=1e-18)


def test_default_hold_step():
    assert default_hold_step(new_system([1.0, 2.0])) == pytest.approx(math.pi * 1e-3)


def test_origin_start(single):
    s, plan = single
    rec = run(SimConfig(s, [0.0, 0.0], plan=plan))
    assert rec.terminated and len(rec) == 1 and rec.stage == [3]


def test_start_inside_terminal_domain(single):
    s, plan = single
    rec = run(SimConfig(s, [0.2, 0.0], plan=plan))
    assert set(rec.stage) == {3}
    assert rec.terminated
    assert np.all(np.abs(rec.u) <= 1)


def test_full_run_single(single):
    s, plan = single
    rec = run(SimConfig(s, [5.0, 0.0], plan=plan, record_stride=50))
    arr = rec.as_arrays()
    assert rec.terminated
    assert np.all(np.diff(arr["stage"]) >= 0)
    assert set(arr["stage"]) == {1, 2, 3}
    assert np.linalg.norm(rec.final_state) <= 1e-6
    bounds = np.where(arr["stage"] == 1, 1.0, np.where(arr["stage"] == 2, plan.U, 1.0))
    assert np.all(np.abs(arr["u"]) <= bounds + 1e-12)


def test_max_time(single):
    s, plan = single
    with pytest.raises(MaxTimeExceeded) as e:
        run(SimConfig(s, [50.0, 0.0], plan=plan, max_time=1.0))
    assert e.value.record.t[-1] >= 1.0
    assert len(e.value.record) > 0


def test_csv(single):
    s, plan = single
    assert csv_header(2) == "t,x1,y1,x2,y2,u,stage,rho,T_ctrl,energy"
    rec = run(SimConfig(s, [1.5, 0.0], plan=plan, record_stride=100))
    a, b = io.StringIO(), io.StringIO()
    write_csv(rec, a, ["omega = 1.0"])
    write_csv(run(SimConfig(s, [1.5, 0.0], plan=plan, record_stride=100)), b, ["omega = 1.0"])
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert lines[0] == "# omega = 1.0"
    assert lines[1] == csv_header(1)
    first = lines[2].split(",")
    # columns t, x1, y1, u, stage, rho, T_ctrl, energy; rho filled before stage 3
    assert first[0] == "0" and first[4] == "2"
    assert first[5] != "" and first[6] == ""
    last = lines[-1].split(",")
    assert last[4] == "3" and last[5] == ""
