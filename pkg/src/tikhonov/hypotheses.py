"""Numerical audits of the standing assumptions A1-A5 along a slow solution.

* A1 (smoothness) cannot be checked by sampling; the model's ``smooth`` flag
  is reported as declared.
* A2 (isolated root): minimum LU pivot of ``g_v`` along the QSS chain.
* A3 (spectral margin): ``kappa' = -max_t s(g_v(u_bar(t), phi, t, 0))`` on a grid
  plus the declared limit equilibrium, and a Monte-Carlo version on the tube.
* A4 (basin): the frozen layer from the initial value reaches ``phi(u_hat, 0)``.
* A5 (dichotomy of the reduced Jacobian ``J_f = f_u + f_v phi_u``): either the
  eigenvalue shortcut at the limit equilibrium or measured propagator bounds.

Infinite-horizon suprema are replaced by the audit grid plus the limit point;
the grid is stored in the report so refinement studies can be repeated.
"""

from __future__ import annotations

import json
import math
import os
import platform
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import FastSlowSystem, jacobian_at
from .errors import (IntegrationError, NoConvergence, NoEquilibriumDeclared, SingularJacobian,
                     TikhonovError)
from .layer import INSIDE, basin_check, integrate_layer
from .reduction import SlowSolution, integrate_reduced, qss_root, solve_qss
from .smalldense import PIVOT_RTOL, expm, norm2, spectral_bound, spectral_bounds
from .integrate import IntegratorConfig, integrate

SEED_ENV = "TIKHONOV_SEED"
A5_TOL = 1e-8              # equilibrium route: s(J) must be below -A5_TOL * (1 + ||J||)
A5_MIN_RATE = 1e-3         # propagator route: smallest decay rate accepted as a dichotomy
A5_CFG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)
ROUTES = ("equilibrium", "propagator")


def default_rng(rng=None) -> np.random.Generator:
    """``rng`` if given, else a generator seeded from ``$TIKHONOV_SEED`` (default 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        rng = int(os.environ.get(SEED_ENV, "0"))
    return np.random.default_rng(rng)


class A3Result(NamedTuple):
    kappa_prime: float
    worst_t: float
    passed: bool


class TubeResult(NamedTuple):
    kappa: float
    passed: bool
    worst_t: float
    n_samples: int


class A5Result(NamedTuple):
    route: str
    K1: float
    alpha1: float
    passed: bool


def _limit_point(slow: SlowSolution):
    """Declared equilibrium nearest the end of the slow curve, with its QSS root."""
    sys = slow.system
    u_star = sys.nearest_equilibrium(slow.u[-1])
    if u_star is None:
        return None
    t_end = float(slow.t[-1])
    v_star = qss_root(sys, u_star, t_end, slow.vbar[-1])
    return u_star, v_star, t_end


def _audit_grid(slow: SlowSolution, grid):
    t = slow.t if grid is None else np.asarray(grid, dtype=float)
    lo, hi = slow.span
    if t.min() < lo or t.max() > hi:
        raise ValueError("audit grid leaves the slow solution's span")
    return t


def check_a3(slow: SlowSolution, grid=None) -> A3Result:
    """Spectral margin ``kappa'`` of ``g_v`` along the slow curve.

    ``worst_t`` is ``inf`` when the declared limit equilibrium is the worst point.
    """
    sys = slow.system
    t = _audit_grid(slow, grid)
    u = slow.u_at(t)
    v = slow.phi_at(t)
    mats = [jacobian_at(sys, "g_v", ui, vi, ti, 0.0) for ti, ui, vi in zip(t, u, v)]
    times = list(t)
    limit = _limit_point(slow)
    if limit is not None:
        u_star, v_star, t_end = limit
        mats.append(jacobian_at(sys, "g_v", u_star, v_star, t_end, 0.0))
        times.append(math.inf)
    bounds = spectral_bounds(np.array(mats))
    worst = int(np.argmax(bounds))
    kappa = -float(bounds[worst])
    return A3Result(kappa, float(times[worst]), kappa > 0.0)


def _ball(rng, count, dim, radius):
    x = rng.normal(size=(count, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * (radius * rng.uniform(size=(count, 1)) ** (1.0 / dim))


def check_a3_tube(slow: SlowSolution, delta: float, eps0: float, samples: int = 64, grid=None,
                  rng=None) -> TubeResult:
    """Monte-Carlo margin of ``g_v`` over the tube ``T_delta`` and ``eps in [0, eps0]``.

    At every grid time (and at the limit equilibrium) ``samples`` points are
    drawn uniformly from the Euclidean balls of radius ``delta`` around
    ``u_bar(t)`` and ``phi(u_bar(t), t)``.  The tube centre at ``eps = 0`` is
    always included, so ``delta = eps0 = 0`` reproduces ``check_a3``.
    """
    if delta < 0 or eps0 < 0:
        raise ValueError("delta and eps0 must be non-negative")
    sys = slow.system
    if eps0 > sys.eps_max:
        raise ValueError(f"eps0 exceeds eps_max={sys.eps_max}")
    rng = default_rng(rng)
    t = _audit_grid(slow, grid)
    centres = [(ti, ui, vi) for ti, ui, vi in zip(t, slow.u_at(t), slow.phi_at(t))]
    limit = _limit_point(slow)
    if limit is not None:
        centres.append((math.inf, limit[0], limit[1]))

    mats, owner = [], []
    for ti, ui, vi in centres:
        t_eval = slow.t[-1] if math.isinf(ti) else ti
        du = _ball(rng, samples, sys.n, delta)
        dv = _ball(rng, samples, sys.m, delta)
        eps = rng.uniform(0.0, eps0, size=samples)
        mats.append(jacobian_at(sys, "g_v", ui, vi, t_eval, 0.0))
        owner.append(ti)
        for k in range(samples):
            mats.append(jacobian_at(sys, "g_v", ui + du[k], vi + dv[k], t_eval, float(eps[k])))
            owner.append(ti)
    bounds = spectral_bounds(np.array(mats))
    worst = int(np.argmax(bounds))
    kappa = -float(bounds[worst])
    return TubeResult(kappa, kappa > 0.0, float(owner[worst]), len(mats))


def reduced_jacobian(sys: FastSlowSystem, u, t: float, v_seed=None) -> np.ndarray:
    """``J_f = f_u + f_v phi_u`` at ``(u, phi(u, t), t, 0)``."""
    q = solve_qss(sys, u, t, v_seed)
    f_u = jacobian_at(sys, "f_u", q.u, q.v_root, t, 0.0)
    f_v = jacobian_at(sys, "f_v", q.u, q.v_root, t, 0.0)
    return f_u + f_v @ q.phi_u


def _a5_equilibrium(slow: SlowSolution) -> A5Result:
    limit = _limit_point(slow)
    if limit is None:
        raise NoEquilibriumDeclared(f"model {slow.system.name!r} declares no equilibrium")
    u_star, v_star, t_end = limit
    J = reduced_jacobian(slow.system, u_star, t_end, v_star)
    s = spectral_bound(J)
    scale = 1.0 + float(np.max(np.abs(J)))
    if not s < -A5_TOL * scale:
        return A5Result("equilibrium", math.inf, -s / 2.0, False)
    alpha = -s / 2.0
    taus = np.linspace(0.0, 40.0 / alpha, 401)
    K = max(norm2(expm(J * tau)) * math.exp(alpha * tau) for tau in taus)
    return A5Result("equilibrium", float(K), float(alpha), True)


def _a5_propagator(slow: SlowSolution, grid, eps_probe: float) -> A5Result:
    sys = slow.system
    t = _audit_grid(slow, grid)
    seeds = slow.phi_at(t)
    Js = np.array([reduced_jacobian(sys, ui, ti, si) for ti, ui, si in zip(t, slow.u_at(t), seeds)])
    k = sys.n

    def D(tt):
        i = int(np.clip(np.searchsorted(t, tt) - 1, 0, len(t) - 2))
        w = (tt - t[i]) / (t[i + 1] - t[i])
        return (1.0 - w) * Js[i] + w * Js[i + 1]

    def rhs(tt, y):
        return (D(tt) @ y.reshape(k, k)).ravel() / eps_probe

    steps = [integrate(rhs, np.eye(k).ravel(), (t[i], t[i + 1]), A5_CFG, t_eval=[t[i], t[i + 1]]).y[-1]
             .reshape(k, k) for i in range(len(t) - 1)]
    N = len(t)
    max_lag = (N - 1) // 2 if N > 4 else N - 1
    lag_t, norms, rows = [], [], []
    current = np.broadcast_to(np.eye(k), (N, k, k)).copy()
    for lag in range(1, max_lag + 1):
        n_start = N - lag
        current = np.array(steps[lag - 1:lag - 1 + n_start]) @ current[:n_start]
        nrm = norm2(current)
        norms.append(nrm)
        lag_t.append(t[lag:lag + n_start] - t[:n_start])
        rows.append(np.max(nrm))
    envelope = np.array(rows)
    mean_lag = np.array([np.mean(x) for x in lag_t])
    ok = envelope > 1e-300
    if ok.sum() < 2:
        return A5Result("propagator", math.nan, math.nan, False)
    slope, _ = np.polyfit(mean_lag[ok], np.log(envelope[ok]), 1)
    alpha = -float(slope) / 2.0
    if not alpha > A5_MIN_RATE:
        return A5Result("propagator", math.inf, alpha, False)
    K = max(1.0, max(float(np.max(n * np.exp(alpha * d / eps_probe))) for n, d in zip(norms, lag_t)))
    return A5Result("propagator", K, alpha, bool(np.isfinite(K)))


def check_a5(slow: SlowSolution, route: str = "equilibrium", eps_probe: float = 1.0, grid=None) -> A5Result:
    """Exponential stability of the reduced linearisation.

    ``equilibrium``: pass iff ``s(J_f(u*)) < 0`` at the declared limit point;
    ``alpha1`` is half the margin and ``K1`` the smallest constant bounding
    ``||exp(J_f tau)|| exp(alpha1 tau)``.
    ``propagator``: integrates ``eps_probe x' = J_f(u_bar(t)) x`` between
    grid points, takes ``alpha1`` as half the decay rate of the envelope
    ``max_s ||X(s + h, s)||`` and ``K1`` as the smallest constant covering
    every measured pair.
    """
    if route == "equilibrium":
        return _a5_equilibrium(slow)
    if route == "propagator":
        return _a5_propagator(slow, grid, eps_probe)
    raise ValueError(f"route must be one of {ROUTES}")


@dataclass
class HypothesisReport:
    system: str
    passed: bool
    failing: list
    a1: dict
    a2: dict
    a3: dict
    a3_tube: dict
    a4: dict
    a5: dict
    grid: list
    settings: dict
    versions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"system": self.system, "verdict": "PASS" if self.passed else "FAIL", "failing": self.failing,
                "A1": self.a1, "A2": self.a2, "A3": self.a3, "A3_tube": self.a3_tube, "A4": self.a4,
                "A5": self.a5, "grid": self.grid, "settings": self.settings, "versions": self.versions}

    def to_json(self, **kw) -> str:
        return json.dumps(_jsonable(self.to_dict()), **kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _versions() -> dict:
    from . import __version__

    return {"tikhonov": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _skipped(reason: str) -> dict:
    return {"pass": False, "skipped": reason}


def full_report(sys: FastSlowSystem, u_hat, v_hat, t_span=(0.0, 200.0), grid_points: int = 201,
                eps0: Optional[float] = None, delta: float = 0.05, samples: int = 64, v_seed=None,
                rng=None, bound: Optional[float] = None) -> HypothesisReport:
    """Run every audit from the initial state ``(u_hat, v_hat)``; overall PASS is their conjunction."""
    u_hat = np.asarray(u_hat, float).reshape(sys.n)
    v_hat = np.asarray(v_hat, float).reshape(sys.m)
    eps0 = sys.eps_max / 2.0 if eps0 is None else eps0
    grid = np.linspace(float(t_span[0]), float(t_span[1]), grid_points)
    settings = {"t_span": list(map(float, t_span)), "grid_points": grid_points, "eps0": eps0, "delta": delta,
                "samples": samples, "seed": os.environ.get(SEED_ENV, "0") if rng is None else "caller",
                "a5_tol": A5_TOL, "a5_min_rate": A5_MIN_RATE, "pivot_rtol": PIVOT_RTOL}
    a1 = {"pass": bool(sys.smooth), "declared": "by model author"}
    report = dict(a1=a1, a2=None, a3=None, a3_tube=None, a4=None, a5=None)

    slow = None
    try:
        slow = integrate_reduced(sys, u_hat, t_span, t_eval=grid, v_seed=v_seed, bound=bound)
        min_pivot = float(min(q.pivot_ratio for q in slow.qss_chain))
        report["a2"] = {"pass": min_pivot >= PIVOT_RTOL, "isolated": min_pivot >= PIVOT_RTOL,
                        "min_pivot": min_pivot}
    except (SingularJacobian, NoConvergence) as exc:
        report["a2"] = {"pass": False, "isolated": False, "min_pivot": getattr(exc, "pivot", math.nan),
                        "error": f"{type(exc).__name__}: {exc}"}
    except (IntegrationError, TikhonovError) as exc:
        report["a2"] = {"pass": False, "isolated": None, "error": f"{type(exc).__name__}: {exc}"}

    if slow is None:
        for key in ("a3", "a3_tube", "a4", "a5"):
            report[key] = _skipped("no slow solution (A2 failed)")
    else:
        a3 = check_a3(slow, grid)
        report["a3"] = {"pass": a3.passed, "kappa_prime": a3.kappa_prime, "worst_t": a3.worst_t}
        tube = check_a3_tube(slow, delta, eps0, samples, grid, default_rng(rng))
        report["a3_tube"] = {"pass": tube.passed, "kappa": tube.kappa, "worst_t": tube.worst_t,
                             "delta": delta, "eps0": eps0, "n_samples": tube.n_samples}

        phi0 = slow.qss_chain[0].v_root
        verdict = basin_check(sys, u_hat, v_hat, a3.kappa_prime if a3.passed else None, v_seed=phi0)
        a4 = {"pass": verdict == INSIDE, "verdict": verdict}
        if verdict == INSIDE:
            tau_max = 200.0 / a3.kappa_prime
            lay = integrate_layer(sys, u_hat, v_hat, tau_max, v_seed=phi0)
            a4.update(C=lay.C, kappa_est=lay.kappa_est)
        report["a4"] = a4

        routes = {}
        for route in ROUTES:
            try:
                r = check_a5(slow, route, grid=grid)
                routes[route] = {"pass": r.passed, "K1": r.K1, "alpha1": r.alpha1}
            except NoEquilibriumDeclared as exc:
                routes[route] = _skipped(str(exc))
        primary = "equilibrium" if "skipped" not in routes["equilibrium"] else "propagator"
        ran = [r["pass"] for r in routes.values() if "skipped" not in r]
        report["a5"] = dict(route=primary, **routes[primary], routes=routes, routes_agree=len(set(ran)) <= 1)

    failing = [name for name, key in (("A1", "a1"), ("A2", "a2"), ("A3", "a3"), ("A3_tube", "a3_tube"),
                                      ("A4", "a4"), ("A5", "a5")) if not report[key]["pass"]]
    return HypothesisReport(system=sys.name, passed=not failing, failing=failing, grid=grid.tolist(),
                            settings=settings, versions=_versions(), **report)
