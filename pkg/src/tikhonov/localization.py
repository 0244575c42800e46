"""Localisation of the fast field around the slow curve.

The localised field keeps ``g`` unchanged near the slow curve and replaces it
far away by its linearisation there:

    g_loc = psi_d * g_u (u - u_bar) + g_v (v - phi) + Psi_d * R,
    R     = g - g_u (u - u_bar) - g_v (v - phi),

with the Jacobians taken on the curve at ``eps = 0``.  The cutoff multiplies
the ``g_u`` term and the remainder but not the ``g_v`` term.  Inside the
plateau of the bump (``E_{delta/2}``) all weights equal one and the three
terms add back up to ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .core import FastSlowSystem, jacobian_at
from .integrate import IntegratorConfig, integrate
from .reduction import SlowSolution

PLATEAU = 0.25

COINCIDENCE_CFG = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


_H_FLOOR = 1e-3   # exp(-1/x) underflows to exactly 0 below this


def _h(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > _H_FLOOR, x, 1.0)
    return np.where(x > _H_FLOOR, np.exp(-1.0 / safe), 0.0)


def _dh(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > _H_FLOOR, x, 1.0)
    return np.where(x > _H_FLOOR, np.exp(-1.0 / safe) / safe ** 2, 0.0)


def _step(s):
    a, b = _h(s), _h(1.0 - s)
    return a / (a + b)


def _dstep(s):
    a, b = _h(s), _h(1.0 - s)
    da, db = _dh(s), _dh(1.0 - s)
    return (da * b + a * db) / (a + b) ** 2


def _psi_scalar(x: float) -> float:
    s = (x - PLATEAU) / (1.0 - PLATEAU)
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 0.0
    a = math.exp(-1.0 / s) if s > _H_FLOOR else 0.0
    b = math.exp(-1.0 / (1.0 - s)) if 1.0 - s > _H_FLOOR else 0.0
    return 1.0 - a / (a + b)


def psi(x):
    """Smooth cutoff: 1 on ``[0, 1/4]``, 0 on ``[1, inf)``, decreasing between."""
    if isinstance(x, (float, int)):
        return _psi_scalar(float(x))
    s = (np.asarray(x, dtype=float) - PLATEAU) / (1.0 - PLATEAU)
    out = 1.0 - _step(np.clip(s, 0.0, 1.0))
    return float(out) if np.ndim(out) == 0 else out


def dpsi(x):
    """Derivative of ``psi``; vanishes outside ``(1/4, 1)``."""
    s = (np.asarray(x, dtype=float) - PLATEAU) / (1.0 - PLATEAU)
    inside = (s > 0) & (s < 1)
    out = np.where(inside, -_dstep(np.clip(s, 1e-300, 1.0 - 1e-16)) / (1.0 - PLATEAU), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _deriv_bound(points: int = 200001) -> float:
    return float(np.max(np.abs(dpsi(np.linspace(PLATEAU, 1.0, points)))))


PSI_DERIV_BOUND = _deriv_bound()


@dataclass(frozen=True)
class Tube:
    """The moving product ball ``E_delta(v_bar(t))`` around the slow curve."""

    slow: SlowSolution
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def center(self, t: float):
        return self.slow.u_at(t), self.slow.phi_at(t)

    def distances(self, u, v, t: float, center=None):
        ub, vb = self.center(t) if center is None else center
        return float(np.linalg.norm(np.asarray(u, float) - ub)), float(np.linalg.norm(np.asarray(v, float) - vb))

    def contains(self, u, v, t: float, radius: Optional[float] = None) -> bool:
        """Both ``||u - u_bar(t)|| <= r`` and ``||v - phi(u_bar(t), t)|| <= r`` (``r`` defaults to delta)."""
        r = self.delta if radius is None else radius
        du, dv = self.distances(u, v, t)
        return du <= r and dv <= r


def default_delta(slow: SlowSolution, u0, v0) -> float:
    """Twice the product-ball distance of the initial state from ``v_bar(0)``,
    clamped to ``[0.05, 1]``, so the state starts inside ``E_{delta/2}``
    whenever the clamp allows."""
    ub, vb = slow.u[0], slow.vbar[0]
    d = max(np.linalg.norm(np.asarray(u0, float) - ub), np.linalg.norm(np.asarray(v0, float) - vb))
    return float(np.clip(2.0 * d, 0.05, 1.0))


def bump_weights(tube: Tube, u, v, t: float, center=None):
    """``(psi_delta, chi_delta, Psi_delta)`` at ``(u, v, t)``."""
    du, dv = tube.distances(u, v, t, center)
    d2 = tube.delta ** 2
    a = psi(du * du / d2)
    b = psi(dv * dv / d2)
    return a, b, a * b


def localized_g(sys: FastSlowSystem, tube: Tube, u, v, t: float, eps: float) -> np.ndarray:
    """Localised fast field at ``(u, v, t, eps)``, built by remainder subtraction."""
    u = np.asarray(u, float).reshape(sys.n)
    v = np.asarray(v, float).reshape(sys.m)
    ub, vb = tube.center(t)
    g_u = jacobian_at(sys, "g_u", ub, vb, t, 0.0)
    g_v = jacobian_at(sys, "g_v", ub, vb, t, 0.0)
    lin_u = g_u @ (u - ub)
    lin_v = g_v @ (v - vb)
    w_u, _, w = bump_weights(tube, u, v, t, (ub, vb))
    out = w_u * lin_u + lin_v
    if w > 0.0:
        out = out + w * (sys.eval_g(u, v, t, eps) - lin_u - lin_v)
    return out


def localized_system(sys: FastSlowSystem, tube: Tube) -> FastSlowSystem:
    """Copy of ``sys`` whose fast field is the localised one.

    The slow field is left as it is and the analytic fast Jacobians are
    dropped (derivatives of the localised field fall back to finite differences).
    """
    jac = {k: fn for k, fn in sys.jacobians.items() if k.startswith("f_")}
    return replace(sys, name=f"{sys.name}-localized", jacobians=jac,
                   g=lambda u, v, t, eps: localized_g(sys, tube, u, v, t, eps))


class CoincidenceResult(NamedTuple):
    first_exit: Optional[float]
    max_gap: float
    t: np.ndarray
    gap: np.ndarray


def coincidence_test(sys: FastSlowSystem, tube: Tube, eps: float, init, t_span, n_out: int = 2001,
                     cfg: Optional[IntegratorConfig] = None) -> CoincidenceResult:
    """Integrate the original and localised systems from the same state.

    ``max_gap`` is the sup-norm difference over output times up to the first
    exit of the localised solution from ``E_{delta/2}``; ``first_exit`` is
    ``None`` when it never leaves.  ``gap`` holds the difference at every
    output time, before and after any exit.
    """
    init = np.asarray(init, float).reshape(sys.n + sys.m)
    lo, hi = map(float, t_span)
    s_lo, s_hi = tube.slow.span
    if lo < s_lo or hi > s_hi:
        raise ValueError("t_span must lie inside the slow solution's span")
    cfg = cfg or COINCIDENCE_CFG
    grid = np.linspace(lo, hi, n_out)
    loc = localized_system(sys, tube)

    def rhs_of(system):
        n = system.n

        def rhs(t, y):
            u, v = y[:n], y[n:]
            return np.concatenate([system.eval_f(u, v, t, eps), system.eval_g(u, v, t, eps) / eps])

        return rhs

    a = integrate(rhs_of(sys), init, t_span, cfg, t_eval=grid, n_slow=sys.n)
    b = integrate(rhs_of(loc), init, t_span, cfg, t_eval=grid, n_slow=sys.n)
    gap = np.max(np.abs(a.y - b.y), axis=1)
    half = tube.delta / 2.0
    inside = np.array([tube.contains(y[: sys.n], y[sys.n:], t, half) for t, y in zip(grid, b.y)])
    exits = np.flatnonzero(~inside)
    first_exit = float(grid[exits[0]]) if exits.size else None
    upto = exits[0] if exits.size else len(grid)
    max_gap = float(np.max(gap[:upto])) if upto > 0 else math.nan
    return CoincidenceResult(first_exit, max_gap, grid, gap)
