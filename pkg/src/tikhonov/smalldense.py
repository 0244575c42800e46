"""Small dense linear algebra for matrices of order <= 8.

Eigenvalues go through the characteristic polynomial (Faddeev-LeVerrier)
and Durand-Kerner root finding.  Both accept stacks of matrices
(``shape (..., k, k)``) so that audits over many time samples vectorise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularMatrix

PIVOT_RTOL = 1e-13
DK_MAX_ITERS = 500
DK_RESIDUAL = 1e-10
NORM2_SQUARINGS = 52


def _square(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[-1] != A.shape[-2]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("matrix entries must be finite")
    return A


def _inf_norm(A) -> float:
    return float(np.max(np.sum(np.abs(A), axis=-1)))


def lu_factor(A, check=True):
    """LU with partial pivoting.

    Returns ``(lu, perm, pivot_ratio)`` where ``pivot_ratio`` is the smallest
    pivot magnitude divided by the infinity norm of ``A``.  Raises
    ``SingularMatrix`` when ``check`` is set and the ratio falls below 1e-13.
    """
    A = _square(A)
    k = A.shape[0]
    if k == 1:
        a = float(A[0, 0])
        ratio = 1.0 if a != 0.0 else 0.0
        if check and a == 0.0:
            raise SingularMatrix("pivot 0 at column 0", pivot=0.0)
        return A.copy(), np.zeros(1, dtype=int), ratio
    lu = A.copy()
    perm = np.arange(k)
    scale = _inf_norm(A)
    ratio = np.inf
    for j in range(k):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        if p != j:
            lu[[j, p]] = lu[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        piv = lu[j, j]
        ratio = min(ratio, abs(piv) / scale if scale > 0 else 0.0)
        if check and (scale == 0.0 or abs(piv) < PIVOT_RTOL * scale):
            raise SingularMatrix(f"pivot {abs(piv):.3e} below {PIVOT_RTOL:g}*||A|| at column {j}",
                                 pivot=ratio)
        if piv != 0.0:
            lu[j + 1:, j] /= piv
            lu[j + 1:, j + 1:] -= np.outer(lu[j + 1:, j], lu[j, j + 1:])
    return lu, perm, float(ratio)


def pivot_ratio(A) -> float:
    """Smallest LU pivot relative to ``||A||``, without raising."""
    return lu_factor(A, check=False)[2]


def lu_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` (``b`` may be a vector or a matrix of right-hand sides)."""
    lu, perm, _ = lu_factor(A)
    b = np.asarray(b, dtype=float)
    if lu.shape[0] == 1:
        return b / lu[0, 0]
    x = b[perm].copy()
    k = lu.shape[0]
    for i in range(1, k):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(k - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def det(A) -> float:
    lu, perm, _ = lu_factor(A, check=False)
    # parity of the permutation
    sign, seen = 1.0, np.zeros(len(perm), bool)
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return float(sign * np.prod(np.diag(lu)))


def char_poly(A) -> np.ndarray:
    """Monic coefficients of ``det(lambda I - A)``, highest degree first.

    Faddeev-LeVerrier recursion; works on stacks ``(..., k, k)``.
    """
    A = _square(A)
    k = A.shape[-1]
    eye = np.eye(k)
    coeffs = np.empty(A.shape[:-2] + (k + 1,))
    coeffs[..., 0] = 1.0
    M = np.zeros_like(A)
    for i in range(1, k + 1):
        M = A @ M + coeffs[..., i - 1, None, None] * eye
        coeffs[..., i] = -np.trace(A @ M, axis1=-2, axis2=-1) / i
    return coeffs


def polyval(coeffs, z):
    """Horner evaluation along the last axis of ``coeffs`` (broadcast against ``z``)."""
    coeffs = np.asarray(coeffs)
    acc = np.zeros(np.broadcast_shapes(coeffs.shape[:-1] + (1,), np.shape(z)), dtype=complex)
    for c in np.moveaxis(coeffs, -1, 0):
        acc = acc * z + np.asarray(c)[..., None]
    return acc


def poly_roots(coeffs, max_iters=DK_MAX_ITERS) -> np.ndarray:
    """All complex roots of monic polynomials by Durand-Kerner iteration.

    ``coeffs`` has shape ``(..., k + 1)``; the result has shape ``(..., k)``,
    each row sorted by real then imaginary part.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    batch_shape = coeffs.shape[:-1]
    c = coeffs.reshape(-1, coeffs.shape[-1])
    c = c / c[:, :1]
    k = c.shape[1] - 1
    if k < 1:
        raise ValueError("polynomial degree must be at least 1")

    # Fujiwara bound for the root radius
    powers = np.abs(c[:, 1:]) ** (1.0 / np.arange(1, k + 1))
    powers[:, -1] = (np.abs(c[:, -1]) / 2.0) ** (1.0 / k)
    radius = 2.0 * np.max(powers, axis=1) + 1e-3
    angles = 2.0 * np.pi * np.arange(k) / k + 0.4
    z = radius[:, None] * np.exp(1j * angles)[None, :]

    active = np.ones(len(c), dtype=bool)
    abs_c = np.abs(c)
    for _ in range(max_iters):
        zi = z[active]
        ci = c[active]
        p = polyval(ci, zi)
        diff = zi[:, :, None] - zi[:, None, :]
        idx = np.arange(k)
        diff[:, idx, idx] = 1.0
        diff[diff == 0] = 1e-300
        step = p / np.prod(diff, axis=2)
        zi = zi - step
        z[active] = zi
        scale = polyval(abs_c[active], np.abs(zi)).real
        rel_res = np.abs(polyval(ci, zi)) / np.maximum(scale, 1e-300)
        small_step = np.abs(step) <= 4e-16 * (1.0 + np.abs(zi))
        done = np.all(small_step | (rel_res <= 1e-15), axis=1)
        sub = np.flatnonzero(active)
        active[sub[done]] = False
        if not active.any():
            break

    scale = polyval(abs_c, np.abs(z)).real
    rel_res = np.abs(polyval(c, z)) / np.maximum(scale, 1e-300)
    if np.any(rel_res > DK_RESIDUAL):
        raise NoConvergence(f"Durand-Kerner residual {rel_res.max():.3e} after {max_iters} iterations")

    order = np.lexsort((z.imag, z.real), axis=-1)
    z = np.take_along_axis(z, order, axis=-1)
    return z.reshape(batch_shape + (k,))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    spectral_bound: float


def eigenvalues(A) -> Spectrum:
    A = _square(A)
    if A.ndim != 2:
        raise ValueError("use eigenvalues_batch for stacks of matrices")
    lam = poly_roots(char_poly(A))
    return Spectrum(lam, float(np.max(lam.real)))


def eigenvalues_batch(A) -> np.ndarray:
    return poly_roots(char_poly(_square(A)))


def spectral_bound(A) -> float:
    return eigenvalues(A).spectral_bound


def spectral_bounds(A) -> np.ndarray:
    """Spectral bound of every matrix in a stack ``(..., k, k)``."""
    return np.max(eigenvalues_batch(A).real, axis=-1)


def norm2(A):
    """Operator 2-norm, the square root of the largest eigenvalue of ``A^T A``.

    ``G = A^T A`` is symmetric positive semidefinite, so its largest
    eigenvalue equals its spectral radius ``lim ||G^N||_F^(1/N)``; repeated
    squaring with renormalisation reaches it to rounding accuracy in
    ``NORM2_SQUARINGS`` steps, including the repeated-eigenvalue case where
    polynomial root finding loses half the digits.  Accepts a single matrix
    or a stack.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or not np.isfinite(A).all():
        raise ValueError("norm2 needs finite matrices")
    peak = np.max(np.abs(A), axis=(-2, -1))
    peak = np.where(peak > 0, peak, 1.0)
    A = A / peak[..., None, None]
    G = np.swapaxes(A, -1, -2) @ A
    log_scale = 2.0 * np.log(peak)
    zero = np.zeros(G.shape[:-2], dtype=bool)
    for j in range(NORM2_SQUARINGS):
        fro = np.sqrt(np.sum(G * G, axis=(-2, -1)))
        zero |= fro == 0.0
        fro = np.where(fro == 0.0, 1.0, fro)
        log_scale += np.log(fro) / 2.0 ** j
        G = G / fro[..., None, None]
        G = G @ G
    fro = np.sqrt(np.sum(G * G, axis=(-2, -1)))
    zero |= fro == 0.0
    log_scale += np.log(np.where(fro == 0.0, 1.0, fro)) / 2.0 ** NORM2_SQUARINGS
    out = np.where(zero, 0.0, np.exp(0.5 * log_scale))
    return float(out) if np.ndim(out) == 0 else out


def hurwitz_cubic(a1: float, a2: float, a3: float) -> bool:
    """Routh-Hurwitz test for ``l^3 + a1 l^2 + a2 l + a3``."""
    return bool(a1 > 0 and a2 > 0 and a3 > 0 and a1 * a2 > a3)


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor kernel."""
    A = _square(A)
    nrm = _inf_norm(A)
    s = max(0, int(np.ceil(np.log2(nrm / 0.5))) if nrm > 0.5 else 0)
    X = A / (2.0 ** s)
    term = np.eye(A.shape[0])
    E = term.copy()
    for i in range(1, 21):
        term = term @ X / i
        E = E + term
    for _ in range(s):
        E = E @ E
    return E
