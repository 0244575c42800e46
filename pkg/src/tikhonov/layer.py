"""Initial layer in fast time, its exponential decay fit and the basin audit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FastSlowSystem, State, Trajectory, jacobian
from .errors import Divergence, IntegrationError
from .integrate import IntegratorConfig, integrate
from .reduction import solve_qss
from .smalldense import spectral_bound

LAYER_CFG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)
DIVERGENCE_BOUND = 1e6
FIT_WINDOW = (1e-8, 1e-1)

INSIDE, OUTSIDE, INCONCLUSIVE = "inside", "outside", "inconclusive"


class LayerSolution:
    """Layer solution ``v_hat_0(tau)`` and its correction ``v_tilde_0 = v_hat_0 - phi(u_hat, 0)``.

    ``C`` and ``kappa_est`` bound the correction as ``||v_tilde_0(tau)|| <= C exp(-kappa_est tau)``
    on the fit window.
    """

    def __init__(self, traj: Trajectory, phi0: np.ndarray, correction: np.ndarray, converged: bool,
                 C: float, kappa_est: float, fit_mask: np.ndarray):
        self.traj = traj
        self.phi0 = phi0
        self.correction = correction
        self.converged = converged
        self.C = C
        self.kappa_est = kappa_est
        self.fit_mask = fit_mask

    def __repr__(self):
        return (f"LayerSolution(tau_max={self.tau[-1]:g}, converged={self.converged}, "
                f"C={self.C:.4g}, kappa_est={self.kappa_est:.6g})")

    @property
    def tau(self) -> np.ndarray:
        return self.traj.t

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.correction, axis=1)

    def correction_at(self, tau):
        """Interpolated correction; zero (its limit) beyond the computed span."""
        tau = np.asarray(tau, dtype=float)
        inside = np.clip(tau, self.tau[0], self.tau[-1])
        cols = [np.interp(inside, self.tau, self.correction[:, j]) for j in range(self.correction.shape[1])]
        out = np.stack(cols, axis=-1)
        return np.where((tau > self.tau[-1])[..., None], 0.0, out)

    def tau_rho(self, rho: float) -> float:
        """First sampled tau with ``||v_tilde_0(tau)|| <= rho`` (inf if never)."""
        hit = np.flatnonzero(self.norms <= rho)
        return float(self.tau[hit[0]]) if hit.size else math.inf

    def fit_window_start(self) -> float:
        idx = np.flatnonzero(self.fit_mask)
        return float(self.tau[idx[0]]) if idx.size else math.inf


def _fit_decay(tau, norms, window):
    """Log-linear least squares for the rate; the prefactor is the tightest
    one that bounds every sample of the window."""
    scale = norms[0]
    if scale == 0.0:
        return 0.0, math.inf, np.zeros(len(norms), bool)
    mask = (norms >= max(window[0] * scale, 1e-14)) & (norms <= window[1] * scale)
    if mask.sum() < 3:
        return math.nan, math.nan, mask
    slope, _ = np.polyfit(tau[mask], np.log(norms[mask]), 1)
    kappa = -float(slope)
    C = float(np.exp(np.max(np.log(norms[mask]) + kappa * tau[mask])))
    return C, kappa, mask


def integrate_layer(sys: FastSlowSystem, u_hat, v_hat, tau_max: float, cfg: Optional[IntegratorConfig] = None,
                    n_out: int = 4001, v_seed=None) -> LayerSolution:
    """Integrate ``dv/dtau = g(u_hat, v, 0, 0)`` from ``v_hat`` with frozen slow arguments.

    The correction is integrated directly, so tolerances apply to the
    decaying quantity.  Raises ``Divergence`` once ``||v|| > 1e6``.
    """
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    cfg = cfg or LAYER_CFG
    u_hat = np.asarray(u_hat, float).reshape(sys.n)
    v_hat = np.asarray(v_hat, float).reshape(sys.m)
    phi0 = solve_qss(sys, u_hat, 0.0, v_seed).v_root

    def rhs(tau, w):
        v = phi0 + w
        if np.linalg.norm(v) > DIVERGENCE_BOUND:
            raise Divergence(f"layer left the ball of radius {DIVERGENCE_BOUND:g} at tau={tau:.4g}")
        return sys.eval_g(u_hat, v, 0.0, 0.0)

    grid = np.linspace(0.0, tau_max, n_out)
    w0 = v_hat - phi0
    traj_w = integrate(rhs, w0, (0.0, tau_max), cfg, t_eval=grid, meta={"kind": "layer", "system": sys.name})
    corr = np.array(traj_w.y)
    corr[0] = w0  # exact by construction
    traj = Trajectory(traj_w.t, phi0 + corr, meta=traj_w.meta)
    norms = np.linalg.norm(corr, axis=1)
    converged = bool(norms[-1] <= 1e-8 * (1.0 + np.linalg.norm(v_hat)))
    C, kappa, mask = _fit_decay(traj.t, norms, FIT_WINDOW)
    return LayerSolution(traj, phi0, corr, converged, C, kappa, mask)


def spectral_margin(sys: FastSlowSystem, u, v, t: float = 0.0) -> float:
    """``-s(g_v(u, v, t, 0))``."""
    return -spectral_bound(jacobian(sys, "g_v", State(t, u, v), 0.0))


def basin_check(sys: FastSlowSystem, u_hat, v_hat, kappa_prime: Optional[float] = None, v_seed=None) -> str:
    """Does the frozen layer starting at ``v_hat`` reach ``phi(u_hat, 0)``?

    Integrates to ``tau = 200 / kappa_prime`` (``kappa_prime`` defaults to the
    spectral margin at the root).  Returns ``"inside"``, ``"outside"`` (divergence
    or a competing root) or ``"inconclusive"``.
    """
    u_hat = np.asarray(u_hat, float).reshape(sys.n)
    v_hat = np.asarray(v_hat, float).reshape(sys.m)
    q = solve_qss(sys, u_hat, 0.0, v_seed)
    phi0 = q.v_root
    if kappa_prime is None:
        kappa_prime = spectral_margin(sys, u_hat, phi0)
    tau_max = 200.0 / kappa_prime if kappa_prime > 0 else 200.0
    try:
        lay = integrate_layer(sys, u_hat, v_hat, tau_max, v_seed=phi0)
    except Divergence:
        return OUTSIDE
    except IntegrationError:
        return INCONCLUSIVE
    v_end = lay.traj.y[-1]
    if np.linalg.norm(v_end - phi0) <= 1e-6:
        return INSIDE
    if np.linalg.norm(sys.eval_g(u_hat, v_end, 0.0, 0.0)) <= 1e-8:
        return OUTSIDE
    return INCONCLUSIVE
