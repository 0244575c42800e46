"""Quasi-steady state, reduced system, composite approximation and error curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import FastSlowSystem, Trajectory, full_rhs, jacobian_at
from .errors import BoundednessViolation, NoConvergence, SingularJacobian, SingularMatrix
from .integrate import IntegratorConfig, integrate
from .smalldense import lu_factor, lu_solve

REDUCED_CFG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


@dataclass(frozen=True)
class QssResult:
    """Root ``v = phi(u, t)`` of ``g(u, v, t, 0) = 0`` with the derivative data
    needed downstream (``phi_u = -g_v^{-1} g_u``, ``phi_t = -g_v^{-1} g_t``)."""

    u: np.ndarray
    t: float
    v_root: np.ndarray
    g_v: np.ndarray
    g_u: np.ndarray
    phi_u: np.ndarray
    phi_t: np.ndarray
    newton_iters: int
    residual: float
    pivot_ratio: float


def _newton_root(sys: FastSlowSystem, u: np.ndarray, t: float, v: np.ndarray, tol: float, max_iters: int):
    """Bare Newton iteration on ``g(u, ., t, 0)``; returns ``(v, iters, residual)``."""
    iters = 0
    r = sys.eval_g(u, v, t, 0.0)
    res = float(np.linalg.norm(r))
    while res > tol:
        if iters >= max_iters:
            raise NoConvergence(f"QSS Newton: residual {res:.3e} after {max_iters} iterations at u={u}")
        try:
            dv = lu_solve(jacobian_at(sys, "g_v", u, v, t, 0.0), r)
        except SingularMatrix as exc:
            raise SingularJacobian(f"g_v singular at v={v}, u={u}, t={t}", pivot=exc.pivot) from exc
        v = v - dv
        iters += 1
        r = sys.eval_g(u, v, t, 0.0)
        res = float(np.linalg.norm(r))
        if np.linalg.norm(dv) <= 4e-16 * (1.0 + np.linalg.norm(v)):
            break  # rounding floor: further steps cannot reduce the residual
    return v, iters, res


def qss_root(sys: FastSlowSystem, u, t: float = 0.0, v_seed=None, tol: float = 1e-12,
             max_iters: int = 50) -> np.ndarray:
    """Only the root ``phi(u, t)``, without the derivative data of ``solve_qss``."""
    u = np.asarray(u, dtype=float).reshape(sys.n)
    v = sys.seed(u, t) if v_seed is None else np.array(v_seed, dtype=float).reshape(sys.m)
    return _newton_root(sys, u, t, v, tol, max_iters)[0]


def solve_qss(sys: FastSlowSystem, u, t: float = 0.0, v_seed=None, tol: float = 1e-12,
              max_iters: int = 50) -> QssResult:
    """Newton solve of ``g(u, v, t, 0) = 0`` starting from ``v_seed``.

    Raises
    ------
    SingularJacobian
        ``g_v`` fails the pivot test at an iterate (the root is not isolated,
        or the seed sits on a fold).
    NoConvergence
        Residual still above ``tol`` after ``max_iters`` steps.
    """
    u = np.asarray(u, dtype=float).reshape(sys.n)
    v = sys.seed(u, t) if v_seed is None else np.array(v_seed, dtype=float).reshape(sys.m)
    v, iters, res = _newton_root(sys, u, t, v, tol, max_iters)
    g_v = jacobian_at(sys, "g_v", u, v, t, 0.0)
    try:
        _, _, ratio = lu_factor(g_v)
    except SingularMatrix as exc:
        raise SingularJacobian(f"g_v singular at the root v={v}, u={u}", pivot=exc.pivot) from exc
    g_u = jacobian_at(sys, "g_u", u, v, t, 0.0)
    g_t = jacobian_at(sys, "g_t", u, v, t, 0.0)
    phi_u = -lu_solve(g_v, g_u)
    phi_t = -lu_solve(g_v, g_t)
    return QssResult(u, float(t), v, g_v, g_u, phi_u, phi_t, iters, res, ratio)


def reduced_rhs(sys: FastSlowSystem, u, t: float = 0.0, v_seed=None) -> np.ndarray:
    """``f(u, phi(u, t), t, 0)``, or the model's reduced override if it has one."""
    u = np.asarray(u, dtype=float)
    if sys.reduced_override is not None:
        return np.asarray(sys.reduced_override(u, t), dtype=float).reshape(sys.n)
    return sys.eval_f(u, qss_root(sys, u, t, v_seed), t, 0.0)


class SlowSolution:
    """Reduced trajectory ``u_bar(t)`` with the quasi-steady-state chain along it."""

    def __init__(self, system: FastSlowSystem, traj: Trajectory, qss_chain: Sequence[QssResult]):
        self.system = system
        self.traj = traj
        self.qss_chain = list(qss_chain)
        vbar = np.array([q.v_root for q in self.qss_chain])
        vbar.setflags(write=False)
        self.vbar = vbar

    def __repr__(self):
        return f"SlowSolution({self.system.name}, {self.traj!r})"

    @property
    def t(self):
        return self.traj.t

    @property
    def u(self):
        return self.traj.y

    @property
    def span(self):
        return self.traj.span

    def u_at(self, t):
        return self.traj.at(t)

    def _seed_near(self, t):
        i = min(max(int(np.searchsorted(self.traj.t, t)), 0), len(self.traj.t) - 1)
        return self.vbar[i]

    def qss_at(self, t: float) -> QssResult:
        """Exact QSS at the interpolated slow state ``u_bar(t)``."""
        return solve_qss(self.system, self.u_at(t), t, self._seed_near(t))

    def phi_at(self, t):
        """``phi(u_bar(t), t)`` for scalar or array ``t``."""
        if np.ndim(t) == 0:
            t = float(t)
            return qss_root(self.system, self.u_at(t), t, self._seed_near(t))
        seeds = [self._seed_near(float(ti)) for ti in np.asarray(t)]
        return np.array([qss_root(self.system, ui, float(ti), si)
                         for ti, ui, si in zip(np.asarray(t), self.u_at(t), seeds)])

    def du(self) -> np.ndarray:
        """Reduced field evaluated at every stored sample."""
        sys = self.system
        return np.array([reduced_rhs(sys, u, t, q.v_root) for u, t, q in zip(self.u, self.t, self.qss_chain)])

    def manifold_defect(self) -> float:
        """Largest gap between finite-difference ``d/dt phi(u_bar(t), t)`` and
        ``phi_u u_bar' + phi_t`` over interior samples."""
        t = self.t
        dphi_fd = (self.vbar[2:] - self.vbar[:-2]) / (t[2:] - t[:-2])[:, None]
        du = self.du()
        chain = np.array([q.phi_u @ d + q.phi_t for q, d in zip(self.qss_chain, du)])[1:-1]
        return float(np.max(np.abs(dphi_fd - chain)))


def integrate_reduced(sys: FastSlowSystem, u0, t_span, cfg: Optional[IntegratorConfig] = None,
                      t_eval=None, v_seed=None, bound: Optional[float] = None) -> SlowSolution:
    """Integrate the reduced equation, re-solving the QSS at each evaluation.

    Each Newton solve is warm-started from the previous root.  With ``bound``
    set, ``BoundednessViolation`` is raised if ``||(u_bar, phi(u_bar))||``
    exceeds it anywhere on the output grid.
    """
    cfg = cfg or REDUCED_CFG
    u0 = np.asarray(u0, dtype=float).reshape(sys.n)
    first = solve_qss(sys, u0, float(t_span[0]), v_seed)
    last = [first.v_root]

    def rhs(t, u):
        if sys.reduced_override is not None:
            return np.asarray(sys.reduced_override(u, t), dtype=float)
        v = qss_root(sys, u, t, last[0])
        last[0] = v
        return sys.eval_f(u, v, t, 0.0)

    traj = integrate(rhs, u0, t_span, cfg, t_eval=t_eval,
                     meta={"eps": 0.0, "system": sys.name, "kind": "reduced"})
    chain = []
    seed = first.v_root
    for t, u in zip(traj.t, traj.y):
        q = solve_qss(sys, u, t, seed)
        seed = q.v_root
        chain.append(q)
    slow = SlowSolution(sys, traj, chain)
    if bound is not None:
        norms = np.linalg.norm(np.hstack([slow.u, slow.vbar]), axis=1)
        if np.any(norms > bound):
            i = int(np.argmax(norms > bound))
            raise BoundednessViolation(f"||v_bar(t)|| = {norms[i]:.3e} exceeds {bound} at t={slow.t[i]:.6g}")
    return slow


def full_config(eps: float, base: Optional[IntegratorConfig] = None) -> IntegratorConfig:
    """Integrator settings for the stiff full system: step capped at eps / 2."""
    base = base or IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    return base.replace(max_step=min(base.max_step, eps / 2.0))


def integrate_full(sys: FastSlowSystem, eps: float, u0, v0, t_span, cfg: Optional[IntegratorConfig] = None,
                   t_eval=None) -> Trajectory:
    """Integrate the full singularly perturbed system at ``eps``.

    Explicit integration resolves the layer scale eps; for eps below about
    0.005 pass a ``backward_euler`` config instead.
    """
    cfg = full_config(eps, cfg)
    y0 = np.concatenate([np.asarray(u0, float).reshape(sys.n), np.asarray(v0, float).reshape(sys.m)])
    return integrate(full_rhs(sys, eps), y0, t_span, cfg, t_eval=t_eval, n_slow=sys.n,
                     meta={"eps": eps, "system": sys.name, "kind": "full"})


def composite_v(slow: SlowSolution, layer, eps: float, t):
    """Composite fast approximation ``phi(u_bar(t), t) + v_tilde_0(t / eps)``."""
    return slow.phi_at(t) + layer.correction_at(np.asarray(t, float) / eps)


@dataclass
class ErrorCurves:
    t: np.ndarray
    u_full: np.ndarray
    v_full: np.ndarray
    u_reduced: np.ndarray
    v_qss: np.ndarray
    v_composite: np.ndarray
    err_u: np.ndarray
    err_v: np.ndarray
    err_composite: np.ndarray
    t_rho: float
    sup_composite: float
    sup_u: float
    sup_u_after: float
    sup_v_after: float

    def summary(self) -> dict:
        return {"t_rho": self.t_rho, "sup_composite": self.sup_composite, "sup_u": self.sup_u,
                "sup_u_after": self.sup_u_after, "sup_v_after": self.sup_v_after}

    def window_sup(self, which: str, t_lo: float, t_hi: float) -> float:
        e = getattr(self, which)
        mask = (self.t >= t_lo) & (self.t <= t_hi)
        return float(np.max(e[mask])) if mask.any() else math.nan


def error_curves(full: Trajectory, slow: SlowSolution, layer, eps: float, grid=None,
                 t_rho: Optional[float] = None, rho: float = 1e-3) -> ErrorCurves:
    """Euclidean errors ``||u_eps - u_bar||``, ``||v_eps - phi||`` and
    ``||v_eps - composite||`` on ``grid``.

    ``t_rho`` defaults to ``eps * layer.tau_rho(rho)``; the "after" suprema run
    over ``t >= t_rho``, the composite supremum over the whole grid.
    """
    t = full.t if grid is None else np.asarray(grid, dtype=float)
    yf = full.at(t)
    u_full, v_full = yf[:, : full.n_slow], yf[:, full.n_slow:]
    u_red = slow.u_at(t)
    sys = slow.system
    v_qss = np.empty_like(v_full)
    seed = slow._seed_near(t[0])
    for i, (ti, ui) in enumerate(zip(t, u_red)):
        seed = qss_root(sys, ui, ti, seed)
        v_qss[i] = seed
    v_comp = v_qss + layer.correction_at(t / eps)
    err_u = np.linalg.norm(u_full - u_red, axis=1)
    err_v = np.linalg.norm(v_full - v_qss, axis=1)
    err_c = np.linalg.norm(v_full - v_comp, axis=1)
    if t_rho is None:
        t_rho = eps * layer.tau_rho(rho)
    after = t >= t_rho
    sup_after = (lambda e: float(np.max(e[after])) if after.any() else math.nan)
    return ErrorCurves(t, u_full, v_full, u_red, v_qss, v_comp, err_u, err_v, err_c, float(t_rho),
                       float(np.max(err_c)), float(np.max(err_u)), sup_after(err_u), sup_after(err_v))


def convergence_order(eps_values, errors):
    """Least-squares slope of log(error) against log(eps); ``None`` for fewer than two points."""
    e = np.asarray(eps_values, float)
    r = np.asarray(errors, float)
    ok = np.isfinite(r) & (r > 0)
    if ok.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(e[ok]), np.log(r[ok]), 1)
    return float(slope)
