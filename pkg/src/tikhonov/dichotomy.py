"""Propagators of ``eps Y' = D(t) Y`` and measured dichotomy constants.

The bound of interest is ``||Y(t) Y(s)^-1|| <= c exp(-sigma (t - s) / eps)``
for ``s <= t``.  Propagators between neighbouring grid points are integrated
once and chained with the cocycle identity ``Y(t, s) = Y(t, r) Y(r, s)``, so a
fit over ``N`` grid points costs ``N`` small integrations plus matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import HypothesisViolated, StepUnderflow
from .integrate import IntegratorConfig, integrate
from .smalldense import expm, norm2, spectral_bounds

MatrixFn = Union[Callable[[float], np.ndarray], np.ndarray]

PROPAGATOR_CFG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
FIT_CFG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)
EPS_FLOOR = 1e-6
LAG_CUTOFF = 40.0          # pairs with t - s > LAG_CUTOFF * eps / sigma are not formed
ENVELOPE_WINDOW = (1e-10, 1e-2)
HORIZON_TOL = 0.05


def as_matrix_fn(D: MatrixFn) -> Callable[[float], np.ndarray]:
    """Accept either a constant square array or a callable ``t -> matrix``."""
    if callable(D):
        return lambda t: np.atleast_2d(np.asarray(D(t), dtype=float))
    A = np.atleast_2d(np.asarray(D, dtype=float))
    return lambda t: A


def propagator(D: MatrixFn, eps: float, s: float, t: float, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """``Y(t, s)`` for ``eps Y' = D(t) Y`` with ``Y(s, s) = I``.

    All columns are integrated together as one flattened system.  Raises
    ``StepUnderflow`` for ``eps`` below ``EPS_FLOOR``.
    """
    if t < s:
        raise ValueError("propagator needs s <= t")
    if eps < EPS_FLOOR:
        raise StepUnderflow(f"eps={eps:g} is below the floor {EPS_FLOOR:g}")
    Dfn = as_matrix_fn(D)
    k = Dfn(s).shape[0]
    if t == s:
        return np.eye(k)
    cfg = cfg or PROPAGATOR_CFG

    def rhs(tt, y):
        return (Dfn(tt) @ y.reshape(k, k)).ravel() / eps

    traj = integrate(rhs, np.eye(k).ravel(), (s, t), cfg, t_eval=[s, t])
    return traj.y[-1].reshape(k, k)


def constant_propagator(A, eps: float, dt: float) -> np.ndarray:
    """Closed form ``exp(A dt / eps)`` for constant ``A``."""
    return expm(np.asarray(A, dtype=float) * (dt / eps))


@dataclass
class DichotomyFit:
    """Measured constants of ``||Y(t, s)|| <= c exp(-sigma (t - s) / eps)``.

    ``c`` is measured on pairs inside the requested horizon.  ``residual`` is
    the worst ratio of ``||Y(t, s)||`` to that bound over pairs in the doubled
    horizon; ``passed`` requires it to stay within ``1 + HORIZON_TOL``, i.e.
    extending the horizon does not move ``c`` by 5% or more.
    """

    c: float
    sigma: float
    eps: float
    horizon: float
    spacing: float
    residual: float
    passed: bool
    c_extended: float
    decay_rate: float
    worst_pair: tuple
    n_pairs: int
    grid: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "c": self.c, "sigma": self.sigma, "horizon": self.horizon,
                "spacing": self.spacing, "residual": self.residual, "pass": self.passed,
                "c_extended": self.c_extended, "decay_rate": self.decay_rate,
                "worst_pair": list(self.worst_pair), "n_pairs": self.n_pairs,
                "grid": {"start": float(self.grid[0]), "stop": float(self.grid[-1]), "points": len(self.grid)}}


def _check_spectrum(Dfn, times) -> float:
    mats = np.array([Dfn(t) for t in times])
    bounds = spectral_bounds(mats)
    worst = int(np.argmax(bounds))
    if bounds[worst] >= 0.0:
        raise HypothesisViolated(f"spectral bound {bounds[worst]:.4g} >= 0 at t={times[worst]:.6g}")
    return float(bounds[worst])


def _envelope_rate(lags, env, eps) -> float:
    lo, hi = ENVELOPE_WINDOW
    mask = (env >= lo) & (env <= hi)
    if mask.sum() < 3:
        return math.nan
    slope, _ = np.polyfit(lags[mask], np.log(env[mask]), 1)
    return -float(slope)


def fit_dichotomy(D: MatrixFn, eps: float, horizon: float, spacing: Optional[float] = None,
                  sigma: Optional[float] = None, t0: float = 0.0,
                  cfg: Optional[IntegratorConfig] = None) -> DichotomyFit:
    """Measure the dichotomy constant ``c`` for ``eps Y' = D(t) Y`` on ``[t0, t0 + horizon]``.

    ``sigma`` defaults to half the smallest sampled margin ``-s(D(t))``.
    ``decay_rate`` is the log-slope of the envelope ``max_s ||Y(s + h, s)||``
    over lags where it lies in ``[1e-10, 1e-2]``; it should scale like ``1/eps``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    Dfn = as_matrix_fn(D)
    h = spacing if spacing is not None else max(eps, horizon / 512.0)
    n_base = int(round(horizon / h))
    if n_base < 1 or not math.isclose(n_base * h, horizon, rel_tol=1e-9):
        n_base = max(1, int(math.ceil(horizon / h)))
        h = horizon / n_base
    n_ext = 2 * n_base
    grid = t0 + h * np.arange(n_ext + 1)

    worst_bound = _check_spectrum(Dfn, grid)
    if sigma is None:
        sigma = -worst_bound / 2.0
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    cfg = cfg or FIT_CFG
    steps = np.array([propagator(Dfn, eps, grid[i], grid[i + 1], cfg) for i in range(n_ext)])
    k = steps.shape[1]
    max_lag = max(1, min(n_ext, int(math.ceil(LAG_CUTOFF * eps / sigma / h))))

    # products[i, l] = Y(t_{i+l}, t_i); lag 0 is the identity
    products = np.full((n_ext + 1, max_lag + 1, k, k), np.nan)
    products[:, 0] = np.eye(k)
    for lag in range(1, max_lag + 1):
        n_start = n_ext + 1 - lag
        products[:n_start, lag] = steps[lag - 1:lag - 1 + n_start] @ products[:n_start, lag - 1]

    valid = np.zeros((n_ext + 1, max_lag + 1), dtype=bool)
    for lag in range(max_lag + 1):
        valid[: n_ext + 1 - lag, lag] = True
    norms = np.full(valid.shape, np.nan)
    norms[valid] = norm2(products[valid])

    lags = h * np.arange(max_lag + 1)
    weighted = norms * np.exp(sigma * lags / eps)[None, :]
    end_index = np.arange(n_ext + 1)[:, None] + np.arange(max_lag + 1)[None, :]
    inside = valid & (end_index <= n_base)

    c_base = float(np.max(weighted[inside]))
    c_ext = float(np.max(weighted[valid]))
    i, l = np.unravel_index(int(np.nanargmax(np.where(valid, weighted, -np.inf))), weighted.shape)
    residual = c_ext / c_base
    envelope = np.nanmax(norms, axis=0)
    rate = _envelope_rate(lags, envelope, eps)
    passed = bool(np.isfinite(c_base) and residual < 1.0 + HORIZON_TOL)
    return DichotomyFit(c=c_base, sigma=float(sigma), eps=float(eps), horizon=float(horizon), spacing=float(h),
                        residual=residual, passed=passed, c_extended=c_ext, decay_rate=rate,
                        worst_pair=(float(grid[i]), float(grid[i + l])), n_pairs=int(valid.sum()), grid=grid)


def continuity_modulus(D: MatrixFn, eps: float, horizon: float, t0: float = 0.0, samples: int = 512,
                       window_points: int = 33) -> float:
    """``max_t max_{q in [t - sqrt(eps), t]} ||D(q) - D(t)||`` over sampled ``t``."""
    Dfn = as_matrix_fn(D)
    width = math.sqrt(eps)
    ts = np.linspace(t0, t0 + horizon, samples)
    offsets = np.linspace(0.0, width, window_points)
    diffs = []
    for t in ts:
        Dt = Dfn(t)
        for q in t - offsets[1:]:
            if q >= t0:
                diffs.append(Dfn(q) - Dt)
    if not diffs:
        return 0.0
    return float(np.max(norm2(np.array(diffs))))
