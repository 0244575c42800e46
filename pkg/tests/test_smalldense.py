import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tikhonov.errors import SingularMatrix
from tikhonov.smalldense import (char_poly, det, eigenvalues, eigenvalues_batch, expm, hurwitz_cubic, lu_factor,
                                 lu_solve, norm2, pivot_ratio, poly_roots, polyval, spectral_bound,
                                 spectral_bounds)

small = st.integers(min_value=1, max_value=5)
entries = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def canon(z):
    """Sort eigenvalues by rounded real part, then imaginary part."""
    z = np.asarray(z, complex)
    return z[np.lexsort((z.imag, np.round(z.real, 6)))]


def well_conditioned(k, rng):
    return rng.normal(size=(k, k)) + 3 * k * np.eye(k)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8])
def test_lu_solve_matches_scipy(k, rng):
    A = well_conditioned(k, rng)
    b = rng.normal(size=k)
    np.testing.assert_allclose(lu_solve(A, b), sla.solve(A, b), rtol=1e-12, atol=1e-14)


def test_lu_solve_multiple_right_hand_sides(rng):
    A = well_conditioned(4, rng)
    B = rng.normal(size=(4, 3))
    np.testing.assert_allclose(lu_solve(A, B), sla.solve(A, B), rtol=1e-12)


def test_singular_matrix_raises_with_pivot():
    with pytest.raises(SingularMatrix) as info:
        lu_factor(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert info.value.pivot < 1e-12
    with pytest.raises(SingularMatrix):
        lu_solve(np.zeros((1, 1)), np.ones(1))


def test_pivot_ratio_detects_near_singularity():
    assert pivot_ratio(np.eye(3)) == pytest.approx(1.0)
    assert pivot_ratio(np.array([[1.0, 0.0], [0.0, 1e-9]])) < 1e-8


def test_rejects_nonsquare_and_nonfinite():
    with pytest.raises(ValueError):
        det(np.ones((2, 3)))
    with pytest.raises(ValueError):
        det(np.array([[np.nan]]))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 6])
def test_det_matches_numpy(k, rng):
    A = rng.normal(size=(k, k)) + np.eye(k)
    assert det(A) == pytest.approx(np.linalg.det(A), rel=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_char_poly_matches_numpy(k, rng):
    A = rng.normal(size=(k, k))
    np.testing.assert_allclose(char_poly(A), np.poly(A), rtol=1e-10, atol=1e-12)


def test_polyval_horner():
    assert polyval([1.0, -3.0, 2.0], 2.0) == 0.0
    assert polyval([2.0, 0.0, 1.0], 1j) == pytest.approx(-1.0)


def test_poly_roots_repeated_and_complex():
    r = canon(poly_roots([1.0, 0.0, 1.0]))
    np.testing.assert_allclose(r, [-1j, 1j], atol=1e-10)
    r = np.sort(poly_roots(np.poly([1.0, 2.0, 3.0])).real)
    np.testing.assert_allclose(r, [1.0, 2.0, 3.0], atol=1e-9)
    with pytest.raises(ValueError):
        poly_roots([1.0])


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_eigenvalues_match_scipy(k, rng):
    A = rng.normal(size=(k, k))
    ours = canon(eigenvalues(A).eigenvalues)
    ref = canon(sla.eigvals(A))
    np.testing.assert_allclose(ours, ref, atol=1e-8)
    assert eigenvalues(A).spectral_bound == pytest.approx(ref.real.max(), abs=1e-8)


def test_eigenvalues_batch_and_bounds(rng):
    stack = rng.normal(size=(20, 3, 3))
    ref = np.array([sla.eigvals(a).real.max() for a in stack])
    np.testing.assert_allclose(spectral_bounds(stack), ref, atol=1e-8)
    for ours, a in zip(eigenvalues_batch(stack), stack):
        np.testing.assert_allclose(canon(ours), canon(sla.eigvals(a)), atol=1e-8)
    with pytest.raises(ValueError):
        eigenvalues(stack)


def test_spectral_bound_of_diagonal():
    assert spectral_bound(np.diag([-1.0, -2.0, 0.5])) == pytest.approx(0.5)


def test_norm2_edge_cases():
    assert norm2(np.eye(3)) == pytest.approx(1.0, rel=1e-14)
    assert norm2(np.zeros((2, 2))) == 0.0
    assert norm2(np.diag([1e-200, 3e-200])) == pytest.approx(3e-200, rel=1e-12)
    assert norm2(np.diag([1e150, -2e150])) == pytest.approx(2e150, rel=1e-12)
    # repeated singular values and a non-normal Jordan block
    assert norm2(np.diag([2.0, 2.0, -2.0])) == pytest.approx(2.0, rel=1e-14)
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert norm2(J) == pytest.approx((1 + 5 ** 0.5) / 2, rel=1e-13)


def test_norm2_random_and_stacked(rng):
    stack = rng.normal(size=(200, 4, 4))
    np.testing.assert_allclose(norm2(stack), np.linalg.norm(stack, 2, axis=(1, 2)), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(small.flatmap(lambda k: arrays(np.float64, (k, k), elements=entries)))
def test_norm2_property_matches_svd(A):
    assert norm2(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(small.flatmap(lambda k: arrays(np.float64, (k, k), elements=entries)))
def test_char_poly_property_trace_and_det(A):
    c = char_poly(A)
    k = A.shape[0]
    scale = 1 + np.abs(A).max() ** k
    assert c[0] == 1.0
    assert c[1] == pytest.approx(-np.trace(A), abs=1e-9 * scale)
    assert c[-1] == pytest.approx((-1) ** k * np.linalg.det(A), abs=1e-8 * scale)


@pytest.mark.parametrize("a,expected", [
    ((3.0, 3.0, 1.0), True),     # (s + 1)^3
    ((1.0, 1.0, 1.0), False),    # a1 a2 == a3: roots on the imaginary axis
    ((1.0, 1.0, 2.0), False),
    ((-1.0, 2.0, 1.0), False),
    ((2.0, 3.0, 0.0), False),
])
def test_hurwitz_cubic(a, expected):
    assert hurwitz_cubic(*a) is expected
    roots = np.roots([1.0, *a])
    assert (roots.real.max() < -1e-12) == expected


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3))
def test_hurwitz_property_agrees_with_roots(a):
    roots = np.roots([1.0, *a])
    margin = roots.real.max()
    if abs(margin) > 1e-6:
        assert hurwitz_cubic(*a) == (margin < 0)


@pytest.mark.parametrize("scale", [0.01, 1.0, 30.0])
def test_expm_matches_scipy(scale, rng):
    A = rng.normal(size=(3, 3)) * scale
    np.testing.assert_allclose(expm(A), sla.expm(A), rtol=1e-10, atol=1e-12 * np.abs(sla.expm(A)).max())


def test_expm_of_zero_and_diagonal():
    np.testing.assert_array_equal(expm(np.zeros((2, 2))), np.eye(2))
    np.testing.assert_allclose(expm(np.diag([-1.0, -2.0])), np.diag(np.exp([-1.0, -2.0])), rtol=1e-14)
