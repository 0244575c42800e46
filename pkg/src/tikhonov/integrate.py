"""ODE integration engines: fixed-step RK4, adaptive Dormand-Prince 5(4),
and damped backward Euler for very stiff runs.

All engines land exactly on the requested output times; between accepted
steps a :class:`~tikhonov.core.Trajectory` interpolates linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Trajectory
from .errors import MaxStepsExceeded, NonFiniteOutput, NonFiniteState, StepUnderflow, SingularMatrix
from .smalldense import lu_solve

METHODS = ("rk4_fixed", "rk45_adaptive", "backward_euler")

RHS = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    For ``rk4_fixed`` and ``backward_euler`` the step is ``max_step`` (each
    output interval is split into equal sub-steps no longer than it).
    """

    method: str = "rk45_adaptive"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    min_step: float = 1e-13
    max_steps: int = 10 ** 8
    first_step: Optional[float] = None
    newton_max_iters: int = 25

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.min_step < self.max_step:
            raise ValueError("min_step must be smaller than max_step")
        if self.method != "rk45_adaptive" and not math.isfinite(self.max_step):
            raise ValueError(f"{self.method} needs a finite max_step (the fixed step)")

    def replace(self, **kw) -> "IntegratorConfig":
        from dataclasses import replace

        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _output_times(t_span, t_eval):
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    if t_eval is None:
        return None
    te = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(te) <= 0):
        raise ValueError("output grid must be strictly increasing")
    tol = 1e-12 * max(1.0, abs(t1))
    if te[0] < t0 - tol or te[-1] > t1 + tol:
        raise ValueError("output grid must lie inside t_span")
    return np.clip(te, t0, t1)


def integrate(rhs: RHS, y0, t_span, cfg: IntegratorConfig = IntegratorConfig(),
              t_eval: Optional[Sequence[float]] = None, n_slow: Optional[int] = None,
              meta: Optional[dict] = None, jac: Optional[Callable] = None) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``t_span``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> ndarray``.
    y0 : array_like
        Initial state at ``t_span[0]``.
    t_span : (float, float)
    cfg : IntegratorConfig
    t_eval : sequence of float, optional
        Output grid.  When omitted every accepted step is recorded.
    n_slow : int, optional
        Split index stored on the returned trajectory.
    jac : callable, optional
        ``jac(t, y)`` for backward Euler; finite differences otherwise.

    Raises
    ------
    StepUnderflow, MaxStepsExceeded, NonFiniteState
    """
    y0 = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("initial state is not finite")
    grid = _output_times(t_span, t_eval)
    if cfg.method == "rk45_adaptive":
        ts, ys, stats = _dopri(rhs, y0, t_span, cfg, grid)
    else:
        ts, ys, stats = _fixed(rhs, y0, t_span, cfg, grid, jac)
    info = {"method": cfg.method, "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol,
            "max_step": cfg.max_step, **stats}
    info.update(meta or {})
    return Trajectory(ts, ys, n_slow=n_slow, meta=info)


def _error_norm(err, y, y_new, cfg):
    sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _initial_step(rhs, t0, y0, f0, cfg, span):
    if cfg.first_step is not None:
        return min(cfg.first_step, cfg.max_step)
    sc = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, cfg.max_step, span)
    try:
        f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
        d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    except NonFiniteOutput:
        return h0 * 1e-3
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, cfg.max_step, span)


def _dopri(rhs, y0, t_span, cfg, grid):
    t0, t_end = float(t_span[0]), float(t_span[1])
    t, y = t0, y0.copy()
    f = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFiniteState(f"rhs is not finite at t={t}")
    h = _initial_step(rhs, t, y, f, cfg, t_end - t0)

    ts, ys = [], []
    k_out = 0
    if grid is None:
        ts.append(t), ys.append(y.copy())
    else:
        while k_out < len(grid) and grid[k_out] <= t0:
            ts.append(t0), ys.append(y.copy())
            k_out += 1

    n_steps = n_rej = nfev = 0
    K = np.empty((7, len(y)))
    target = t_end if grid is None else (grid[k_out] if k_out < len(grid) else t_end)
    while t < t_end and (grid is None or k_out < len(grid)):
        if n_steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"exceeded {cfg.max_steps} steps at t={t}")
        h = min(h, cfg.max_step)
        clipped = False
        h_unclipped = h
        if t + h >= target - 1e-14 * max(1.0, abs(target)):
            h = target - t
            clipped = True
        if h < cfg.min_step and not clipped:
            raise StepUnderflow(f"step {h:.3e} below min_step at t={t:.6g}")

        K[0] = f
        ok = True
        try:
            for s in range(1, 7):
                ys_ = y + h * (np.dot(_A[s], K[:s]))
                K[s] = rhs(t + _C[s] * h, ys_)
            nfev += 6
            y_new = y + h * np.dot(_B[:6], K[:6])
            if not np.all(np.isfinite(K)) or not np.all(np.isfinite(y_new)):
                ok = False
        except NonFiniteOutput:
            ok = False
        err = _error_norm(h * np.dot(_E, K), y, y_new, cfg) if ok else math.inf

        if err <= 1.0:
            t = target if clipped else t + h
            y = y_new
            f = K[6].copy()
            n_steps += 1
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h_next = h * fac
            if clipped:
                h_next = max(h_next, h_unclipped)
            h = h_next
            if grid is None:
                ts.append(t), ys.append(y.copy())
            elif clipped:
                ts.append(t), ys.append(y.copy())
                k_out += 1
                if k_out < len(grid):
                    target = grid[k_out]
        else:
            n_rej += 1
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = h * fac
            if h < cfg.min_step:
                raise StepUnderflow(f"step {h:.3e} below min_step at t={t:.6g}")
    return np.array(ts), np.array(ys), {"n_steps": n_steps, "n_rejected": n_rej, "nfev": nfev}


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _fd_jac(rhs, t, y, f0):
    J = np.empty((len(y), len(y)))
    for j in range(len(y)):
        dh = max(1e-7, 1e-7 * abs(y[j]))
        yp = y.copy()
        yp[j] += dh
        J[:, j] = (np.asarray(rhs(t, yp), float) - f0) / dh
    return J


def _backward_euler_step(rhs, t, y, h, cfg, jac):
    """Damped Newton on ``Y - y - h f(t + h, Y) = 0``."""
    t1 = t + h
    Y = y.copy()
    eye = np.eye(len(y))
    for _ in range(cfg.newton_max_iters):
        fY = np.asarray(rhs(t1, Y), float)
        G = Y - y - h * fY
        J = jac(t1, Y) if jac is not None else _fd_jac(rhs, t1, Y, fY)
        try:
            dY = lu_solve(eye - h * J, -G)
        except SingularMatrix as exc:
            raise StepUnderflow(f"backward Euler Newton matrix singular at t={t1:.6g}") from exc
        g0 = np.linalg.norm(G)
        lam = 1.0
        while True:
            Yn = Y + lam * dY
            try:
                Gn = Yn - y - h * np.asarray(rhs(t1, Yn), float)
                if np.all(np.isfinite(Gn)) and (np.linalg.norm(Gn) <= (1 - 1e-4 * lam) * g0 or g0 == 0):
                    break
            except NonFiniteOutput:
                pass
            lam *= 0.5
            if lam < 1e-6:
                break
        Y = Yn
        if np.all(np.abs(lam * dY) <= cfg.rel_tol * np.abs(Y) + cfg.abs_tol):
            return Y
    raise StepUnderflow(f"backward Euler Newton did not converge at t={t1:.6g}")


def _fixed(rhs, y0, t_span, cfg, grid, jac):
    t0, t_end = float(t_span[0]), float(t_span[1])
    if grid is None:
        n = max(1, int(math.ceil((t_end - t0) / cfg.max_step - 1e-12)))
        grid = np.linspace(t0, t_end, n + 1)
    t, y = t0, y0.copy()
    ts, ys = [], []
    n_steps = 0
    for target in grid:
        if target <= t:
            ts.append(t), ys.append(y.copy())
            continue
        n_sub = max(1, int(math.ceil((target - t) / cfg.max_step - 1e-12)))
        h = (target - t) / n_sub
        if h < cfg.min_step:
            raise StepUnderflow(f"fixed step {h:.3e} below min_step")
        for i in range(n_sub):
            if n_steps >= cfg.max_steps:
                raise MaxStepsExceeded(f"exceeded {cfg.max_steps} steps")
            if cfg.method == "rk4_fixed":
                y = _rk4_step(rhs, t, y, h)
            else:
                y = _backward_euler_step(rhs, t, y, h, cfg, jac)
            t = target if i == n_sub - 1 else t + h
            n_steps += 1
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(f"state became non-finite at t={t:.6g}")
        ts.append(t), ys.append(y.copy())
    return np.array(ts), np.array(ys), {"n_steps": n_steps, "n_rejected": 0}
