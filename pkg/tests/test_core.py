import numpy as np
import pytest

from tikhonov.core import (FastSlowSystem, State, Trajectory, check_jacobians, eval_rhs, fast_time_rhs,
                           finite_difference_only, full_rhs, jacobian, jacobian_at)
from tikhonov.errors import NonFiniteOutput


def linear_system():
    return FastSlowSystem(n=1, m=1, eps_max=0.5, name="linear",
                          f=lambda u, v, t, eps: np.array([-u[0] + v[0]]),
                          g=lambda u, v, t, eps: np.array([u[0] - 2.0 * v[0] + np.sin(t)]))


def test_validation_of_dimensions_and_jacobian_kinds():
    f = g = lambda u, v, t, eps: np.zeros(1)
    with pytest.raises(ValueError):
        FastSlowSystem(n=0, m=1, f=f, g=g, eps_max=1.0)
    with pytest.raises(ValueError):
        FastSlowSystem(n=1, m=1, f=f, g=g, eps_max=0.0)
    with pytest.raises(ValueError):
        FastSlowSystem(n=1, m=1, f=f, g=g, eps_max=1.0, jacobians={"g_w": f})


def test_state_is_immutable_and_finite():
    s = State(0.0, [1.0, 2.0], [3.0])
    np.testing.assert_array_equal(s.y, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        s.u[0] = 5.0
    with pytest.raises(ValueError):
        State(0.0, [np.nan], [0.0])


def test_eval_rhs_scales_fast_field_by_eps():
    sys = linear_system()
    du, dv = eval_rhs(sys, State(0.0, [1.0], [0.0]), 0.1)
    assert du[0] == -1.0 and dv[0] == pytest.approx(10.0)
    with pytest.raises(ValueError):
        eval_rhs(sys, State(0.0, [1.0], [0.0]), 0.6)
    np.testing.assert_allclose(full_rhs(sys, 0.1)(0.0, np.array([1.0, 0.0])), [-1.0, 10.0])
    # fast time: (eps f, g)
    np.testing.assert_allclose(fast_time_rhs(sys, 0.1)(0.0, np.array([1.0, 0.0])), [-0.1, 1.0])


def test_nonfinite_field_output_raises():
    sys = FastSlowSystem(n=1, m=1, eps_max=1.0, f=lambda u, v, t, eps: np.array([np.inf]),
                         g=lambda u, v, t, eps: np.zeros(1))
    with pytest.raises(NonFiniteOutput):
        sys.eval_f(np.zeros(1), np.zeros(1), 0.0, 0.1)


def test_finite_difference_jacobians_of_linear_system():
    sys = linear_system()
    s = State(0.3, [0.5], [0.2])
    np.testing.assert_allclose(jacobian(sys, "f_u", s, 0.1), [[-1.0]], atol=1e-8)
    np.testing.assert_allclose(jacobian(sys, "g_v", s, 0.1), [[-2.0]], atol=1e-8)
    np.testing.assert_allclose(jacobian(sys, "g_t", s, 0.1), [np.cos(0.3)], atol=1e-7)
    np.testing.assert_allclose(jacobian_at(sys, "g_u", [0.5], [0.2], 0.3, 0.0), [[1.0]], atol=1e-8)
    with pytest.raises(ValueError):
        jacobian(sys, "h_u", s, 0.1)


@pytest.mark.parametrize("fixture", ["allee", "predprey"])
def test_builtin_analytic_jacobians_match_finite_differences(fixture, request, rng):
    sys = request.getfixturevalue(fixture)
    states = [State(0.0, rng.uniform(0.2, 2.0, sys.n), rng.uniform(0.1, 1.0, sys.m)) for _ in range(10)]
    worst = check_jacobians(sys, states, [0.0] * 5 + [sys.eps_max / 2] * 5)
    assert worst < 1e-6
    assert finite_difference_only(sys).jacobians == {}


def test_check_jacobians_flags_a_wrong_derivative():
    sys = linear_system()
    bad = FastSlowSystem(n=1, m=1, eps_max=0.5, f=sys.f, g=sys.g,
                         jacobians={"g_v": lambda u, v, t, eps: np.array([[-3.0]])})
    with pytest.raises(AssertionError):
        check_jacobians(bad, [State(0.0, [1.0], [1.0])], [0.1])


def test_trajectory_interpolation_and_split():
    t = np.linspace(0.0, 1.0, 11)
    y = np.column_stack([t, 2 * t, t ** 2])
    tr = Trajectory(t, y, n_slow=2)
    assert tr.u.shape == (11, 2) and tr.v.shape == (11, 1)
    np.testing.assert_allclose(tr.at(0.25), [0.25, 0.5, 0.065], atol=1e-14)
    np.testing.assert_allclose(tr.at([0.0, 1.0]), y[[0, -1]])
    assert tr.state(3).t == pytest.approx(0.3)
    assert len(tr.states()) == 11
    with pytest.raises(ValueError):
        tr.at(1.5)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        Trajectory([0.0], [[1.0]])
