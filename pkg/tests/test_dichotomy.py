import math

import numpy as np
import pytest
import scipy.linalg as sla

from tikhonov.dichotomy import (EPS_FLOOR, as_matrix_fn, constant_propagator, continuity_modulus,
                                fit_dichotomy, propagator)
from tikhonov.errors import HypothesisViolated, StepUnderflow


def triangular(t):
    return np.array([[-1.0, math.sin(t)], [0.0, -1.0]])


def test_propagator_of_constant_matrix_is_matrix_exponential():
    A = np.diag([-1.0, -2.0])
    Y = propagator(A, 0.1, 0.0, 0.1)
    np.testing.assert_allclose(Y, np.diag([math.exp(-1.0), math.exp(-2.0)]), atol=1e-12)
    B = np.array([[-1.0, 3.0], [-0.5, -2.0]])
    np.testing.assert_allclose(propagator(B, 0.2, 1.0, 1.3), sla.expm(B * 0.3 / 0.2), atol=1e-11)
    np.testing.assert_allclose(constant_propagator(B, 0.2, 0.3), sla.expm(B * 1.5), rtol=1e-12)


def test_propagator_cocycle_and_identity():
    Y_ts = propagator(triangular, 0.1, 0.0, 1.0)
    Y_tr = propagator(triangular, 0.1, 0.4, 1.0)
    Y_rs = propagator(triangular, 0.1, 0.0, 0.4)
    np.testing.assert_allclose(Y_ts, Y_tr @ Y_rs, atol=1e-11)
    np.testing.assert_array_equal(propagator(triangular, 0.1, 2.0, 2.0), np.eye(2))
    with pytest.raises(ValueError):
        propagator(triangular, 0.1, 1.0, 0.0)


def test_eps_floor():
    with pytest.raises(StepUnderflow):
        propagator(triangular, EPS_FLOOR / 2, 0.0, 1.0)


def test_as_matrix_fn_accepts_arrays_and_callables():
    assert as_matrix_fn(-2.0)(5.0).shape == (1, 1)
    np.testing.assert_array_equal(as_matrix_fn(triangular)(0.0), triangular(0.0))


def test_diagonal_constant_gives_c_one():
    fit = fit_dichotomy(np.diag([-1.0, -2.0]), 0.1, 2.0)
    assert fit.c == pytest.approx(1.0, abs=1e-6)
    assert fit.sigma == pytest.approx(0.5)
    assert fit.passed and fit.residual < 1.05


def test_nonnormal_constant_matches_expm_oracle():
    A = np.array([[-1.0, 4.0], [0.0, -1.0]])
    eps, sigma = 0.1, 0.5
    fit = fit_dichotomy(A, eps, 2.0, sigma=sigma)
    h = fit.spacing
    lags = h * np.arange(0, int(math.ceil(40 * eps / sigma / h)) + 1)
    lags = lags[lags <= 2.0 + 1e-12]
    oracle = max(np.linalg.norm(sla.expm(A * s / eps), 2) * math.exp(sigma * s / eps) for s in lags)
    assert fit.c == pytest.approx(oracle, rel=1e-8)
    assert fit.c > 1.0


def test_unstable_matrix_violates_hypothesis():
    with pytest.raises(HypothesisViolated):
        fit_dichotomy(np.array([[0.1, 0.0], [0.0, -1.0]]), 0.1, 1.0)
    with pytest.raises(ValueError):
        fit_dichotomy(np.diag([-1.0]), 0.1, -1.0)


def test_translation_in_time_preserves_periodic_fit():
    a = fit_dichotomy(triangular, 0.1, 2 * math.pi, sigma=0.25)
    b = fit_dichotomy(triangular, 0.1, 2 * math.pi, sigma=0.25, t0=2 * math.pi)
    assert a.c == pytest.approx(b.c, rel=1e-6)


def test_decay_rate_scales_inversely_with_eps():
    A = np.diag([-1.0, -2.0])
    r1 = fit_dichotomy(A, 0.1, 2.0).decay_rate
    r2 = fit_dichotomy(A, 0.05, 2.0).decay_rate
    assert r1 == pytest.approx(10.0, rel=1e-3)        # slowest mode decays like exp(-t/eps)
    assert r2 / r1 == pytest.approx(2.0, rel=1e-3)


def test_to_dict_is_json_ready():
    import json

    d = fit_dichotomy(np.diag([-1.0, -2.0]), 0.1, 1.0).to_dict()
    json.dumps(d)
    assert set(d) >= {"c", "sigma", "residual", "pass", "decay_rate"}


def test_continuity_modulus():
    # for a constant matrix the modulus vanishes
    assert continuity_modulus(np.diag([-1.0]), 0.1, 3.0) == 0.0
    # D(t) = -2 + sin t: the worst window change approaches 2 sin(sqrt(eps)/2)
    D = lambda t: np.array([[-2.0 + math.sin(t)]])
    values = [continuity_modulus(D, e, 2 * math.pi) for e in (0.1, 0.05, 0.025, 0.0125)]
    assert all(b < a for a, b in zip(values, values[1:]))
    for e, val in zip((0.1, 0.05, 0.025, 0.0125), values):
        assert val <= math.sqrt(e) + 1e-12
        assert val == pytest.approx(2 * math.sin(math.sqrt(e) / 2), rel=2e-3)
