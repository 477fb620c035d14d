import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttcbf.hocbf_algebra import flatten_hocbf
from ttcbf.plant import (
    ObstacleSpec,
    RobotState,
    assemble_flattened_constraint,
    cbf_derivatives,
    cbf_value,
    hocbf_constraint,
    taylor_truncation_slack,
    ttcbf_constraint,
)

OBS = ObstacleSpec(0.0, -3.1, 2.0, 1.0)
START = RobotState(-10.0, 0.0, 10.0, 0.0)
H0 = 100.0 + 3.1**2 - 9.0

finite = st.floats(-20, 20)


def h_along(state, u, obs, t):
    # closed-form constant-acceleration trajectory, valid for negative t too
    x = state.x + state.vx * t + 0.5 * u[0] * t * t
    y = state.y + state.vy * t + 0.5 * u[1] * t * t
    return (x - obs.x_obs) ** 2 + (y - obs.y_obs) ** 2 - obs.safe_distance**2


def test_cbf_value_examples():
    assert cbf_value(RobotState(0.0, -3.1, 0, 0), OBS) == pytest.approx(-9.0)
    assert cbf_value(START, OBS) == pytest.approx(100.61)
    assert cbf_value(RobotState(3.0, -3.1, 0, 0), OBS) == pytest.approx(0.0, abs=1e-12)


def test_derivatives_examples():
    s = cbf_derivatives(START, OBS)
    assert s.h_dot == -200.0
    assert s.h_ddot_drift == 200.0
    assert s.h_ddot_input == pytest.approx((-20.0, 6.2))
    still = cbf_derivatives(RobotState(4.0, 1.0, 0.0, 0.0), OBS)
    assert still.h_dot == 0.0 and still.h_ddot_drift == 0.0
    s = cbf_derivatives(RobotState(1.0, 0.0, 0.0, 2.0), ObstacleSpec(0.0, 0.0, 0.5, 0.5))
    assert (s.h_dot, s.h_ddot_drift, s.h_ddot_input) == (0.0, 8.0, (2.0, 0.0))


def test_invalid_types():
    with pytest.raises(ValueError):
        RobotState(float("nan"), 0, 0, 0)
    with pytest.raises(ValueError):
        ObstacleSpec(0, 0, 0.0, 1.0)


@given(finite, finite, finite, finite, st.floats(-50, 50), st.floats(-50, 50))
def test_finite_differences(x, y, vx, vy, ux, uy):
    state = RobotState(x, y, vx, vy)
    u = (ux, uy)
    s = cbf_derivatives(state, OBS)
    d = 1e-5
    hp, h0, hm = (h_along(state, u, OBS, t) for t in (d, 0.0, -d))
    assert s.h == pytest.approx(h0, rel=1e-12, abs=1e-12)
    scale = 1.0 + abs(s.h)
    assert (hp - hm) / (2 * d) == pytest.approx(s.h_dot, rel=1e-4, abs=1e-6 * scale)
    assert (hp - 2 * h0 + hm) / d**2 == pytest.approx(s.h_ddot(u), rel=1e-4, abs=1e-4 * scale)
    assert s.h >= -OBS.safe_distance**2


def test_relative_degree_two():
    # h and h_dot do not depend on u; h_ddot does
    s = cbf_derivatives(START, OBS)
    assert s.h_ddot((0, 0)) != s.h_ddot((1, 0))
    assert np.linalg.norm(s.h_ddot_input) > 0


def test_hocbf_constraint_baseline():
    c = hocbf_constraint(cbf_derivatives(START, OBS), (10.0, 0.5))
    assert c.offset == pytest.approx(2 * 100 + 10.5 * (-200) + 5 * H0)
    assert c.offset == pytest.approx(-1396.95)
    assert c.normal == pytest.approx((-20.0, 6.2))


def test_hocbf_constraint_at_rest():
    s = cbf_derivatives(RobotState(5.0, 0.0, 0.0, 0.0), OBS)
    c = hocbf_constraint(s, (2.0, 3.0))
    assert c.offset == pytest.approx(6.0 * s.h)


def test_hocbf_constraint_uses_flattened_weights():
    s = cbf_derivatives(START, OBS)
    lam = (2.7, 0.9)
    w = flatten_hocbf(lam).coefficients
    c = hocbf_constraint(s, lam)
    assert c.offset == pytest.approx(w[0] * s.h + w[1] * s.h_dot + w[2] * s.h_ddot_drift)
    with pytest.raises(ValueError):
        hocbf_constraint(s, (1.0,))


def test_general_assembler_degree_three():
    c = assemble_flattened_constraint((1.0, 2.0, 3.0), (1.0, 2.0, 3.0), 4.0, (0.5, 0.0))
    assert c.offset == 6 * 1 + 11 * 2 + 6 * 3 + 4.0
    with pytest.raises(ValueError):
        assemble_flattened_constraint((1.0, 2.0), (1.0,), 0.0, (1.0, 0.0))


def test_ttcbf_constraint_baseline():
    s = cbf_derivatives(START, OBS)
    c = ttcbf_constraint(s, 0.1, 0.0, 0.01)
    assert c.offset == pytest.approx(0.01 * -200 + 0.00005 * 200 + 0.1 * H0)
    assert c.offset == pytest.approx(8.071)
    assert c.normal == pytest.approx((0.00005 * -20, 0.00005 * 6.2))
    # gamma shifts the offset by gamma dt^3 only
    assert ttcbf_constraint(s, 0.1, 2.0, 0.01).offset == pytest.approx(c.offset - 2e-6)


def test_ttcbf_matches_taylor_expression():
    s = cbf_derivatives(RobotState(-3.0, 0.5, 8.0, 1.0), OBS)
    u = (-40.0, 25.0)
    dt, lam = 0.02, 0.3
    c = ttcbf_constraint(s, lam, 0.0, dt)
    assert c.value(u) == pytest.approx(dt * s.h_dot + 0.5 * dt * dt * s.h_ddot(u) + lam * s.h)


def test_ttcbf_small_dt_limit():
    s = cbf_derivatives(START, OBS)
    c = ttcbf_constraint(s, 0.4, 0.0, 1e-9)
    assert c.offset == pytest.approx(0.4 * s.h, rel=1e-6)
    assert max(abs(n) for n in c.normal) < 1e-15


@pytest.mark.parametrize("lam, dt, gamma", [(0.0, 0.01, 0.0), (1.2, 0.01, 0.0), (0.5, 0.0, 0.0), (0.5, 0.01, -1.0)])
def test_ttcbf_argument_checks(lam, dt, gamma):
    with pytest.raises(ValueError):
        ttcbf_constraint(cbf_derivatives(START, OBS), lam, gamma, dt)


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_constraints_affine_in_u(ux, uy):
    s = cbf_derivatives(RobotState(-4.0, 1.0, 7.0, -2.0), OBS)
    for c in (hocbf_constraint(s, (3.0, 1.5)), ttcbf_constraint(s, 0.2, 0.0, 0.01)):
        u = (ux, uy)
        u2 = (2 * ux, 2 * uy)
        lin = c.normal[0] * ux + c.normal[1] * uy
        assert c.value(u2) - c.value(u) == pytest.approx(lin, rel=1e-9, abs=1e-9)


def test_slack_examples():
    assert taylor_truncation_slack(10.0, 9.0, 0.1, 0.0, 0.0, 0.01) == pytest.approx(0.0, abs=1e-15)
    assert taylor_truncation_slack(10.0, 9.5, 0.1, 0.0, 0.0, 0.01) > 0
    # a nonzero bound loosens the requirement by bound / 3! * dt^3
    assert taylor_truncation_slack(10.0, 9.0, 0.1, 0.0, 6.0, 0.1) == pytest.approx(1e-3)
