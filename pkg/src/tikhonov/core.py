"""Fast-slow system abstraction, states, trajectories and derivative access.

A system in Tikhonov form is

    u' = f(u, v, t, eps),      eps v' = g(u, v, t, eps)

with ``u`` in R^n (slow) and ``v`` in R^m (fast).  Model functions always
receive ``eps`` explicitly; ``eps = 0`` is a legal evaluation point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import NonFiniteOutput

Field = Callable[[np.ndarray, np.ndarray, float, float], np.ndarray]

JACOBIAN_KINDS = ("g_v", "g_u", "f_u", "f_v", "g_t", "f_t", "g_eps", "f_eps")


def _frozen(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FastSlowSystem:
    """A registered pair (f, g) with its dimensions and optional metadata.

    Parameters
    ----------
    n, m : int
        Slow and fast dimensions.
    f, g : callable
        ``f(u, v, t, eps) -> R^n`` and ``g(u, v, t, eps) -> R^m``.
    eps_max : float
        Largest admissible eps.
    jacobians : mapping, optional
        Analytic derivatives keyed by one of ``JACOBIAN_KINDS``; each has the
        signature of ``f``.  Missing entries fall back to finite differences.
    equilibria : sequence of arrays, optional
        Known equilibria of the reduced equation (used as limit points by
        the hypothesis audits).
    qss_seed : callable, optional
        ``(u, t) -> v`` initial guess for the quasi-steady-state Newton solve.
    reduced_override : callable, optional
        ``(u, t) -> R^n`` replacing ``f(u, phi(u, t), t, 0)`` as the reduced
        field.  Only used for comparison runs with reduced equations that do
        not follow from ``f``.
    smooth : bool
        Smoothness declared by the model author (not machine-checkable).
    """

    n: int
    m: int
    f: Field
    g: Field
    eps_max: float
    name: str = "custom"
    jacobians: Mapping[str, Field] = field(default_factory=dict)
    equilibria: tuple = ()
    qss_seed: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    reduced_override: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    smooth: bool = True
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"dimensions must be positive, got n={self.n}, m={self.m}")
        if not self.eps_max > 0:
            raise ValueError("eps_max must be positive")
        unknown = set(self.jacobians) - set(JACOBIAN_KINDS)
        if unknown:
            raise ValueError(f"unknown jacobian kinds: {sorted(unknown)}")
        object.__setattr__(self, "equilibria", tuple(_frozen(e) for e in self.equilibria))

    def eval_f(self, u, v, t, eps) -> np.ndarray:
        return _checked(self.f(u, v, t, eps), (self.n,), "f")

    def eval_g(self, u, v, t, eps) -> np.ndarray:
        return _checked(self.g(u, v, t, eps), (self.m,), "g")

    def seed(self, u, t) -> np.ndarray:
        if self.qss_seed is None:
            return np.zeros(self.m)
        return np.asarray(self.qss_seed(np.asarray(u, float), t), dtype=float).reshape(self.m)

    def nearest_equilibrium(self, u) -> Optional[np.ndarray]:
        if not self.equilibria:
            return None
        u = np.asarray(u, float)
        return min(self.equilibria, key=lambda e: float(np.linalg.norm(e - u)))


def _checked(value, shape, what) -> np.ndarray:
    out = np.asarray(value, dtype=float).reshape(shape)
    if not np.isfinite(out).all():
        raise NonFiniteOutput(f"{what} returned non-finite values: {out}")
    return out


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "u", _frozen(np.atleast_1d(self.u)))
        object.__setattr__(self, "v", _frozen(np.atleast_1d(self.v)))
        if not (np.isfinite(self.t) and np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("state components must be finite")

    @property
    def y(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])


class Trajectory:
    """Time-indexed samples ``y[i]`` at strictly increasing ``t[i]``.

    ``y`` stacks slow then fast components; ``n_slow`` tells where to split.
    Queries between samples use linear interpolation.
    """

    def __init__(self, t, y, n_slow=None, meta=None):
        t = np.array(t, dtype=float)
        y = np.array(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a trajectory needs at least 2 samples")
        if y.shape[0] != len(t):
            raise ValueError("t and y lengths differ")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        t.setflags(write=False)
        y.setflags(write=False)
        self.t = t
        self.y = y
        self.n_slow = y.shape[1] if n_slow is None else int(n_slow)
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.t)

    def __repr__(self):
        return f"Trajectory({len(self)} samples, t=[{self.t[0]:g}, {self.t[-1]:g}], dim={self.y.shape[1]})"

    @property
    def u(self) -> np.ndarray:
        return self.y[:, : self.n_slow]

    @property
    def v(self) -> np.ndarray:
        return self.y[:, self.n_slow:]

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def state(self, i: int) -> State:
        return State(self.t[i], self.u[i], self.v[i])

    def states(self):
        return [self.state(i) for i in range(len(self))]

    def at(self, t) -> np.ndarray:
        """Linear interpolation; ``t`` scalar gives shape (k,), array gives (len(t), k)."""
        lo, hi = self.span
        tol = 1e-12 * max(1.0, abs(hi))
        if np.ndim(t) == 0:
            tq = float(t)
            if not lo - tol <= tq <= hi + tol:
                raise ValueError(f"query outside trajectory span [{lo}, {hi}]")
            i = min(max(int(np.searchsorted(self.t, tq)), 1), len(self.t) - 1)
            t0, t1 = self.t[i - 1], self.t[i]
            w = min(max((tq - t0) / (t1 - t0), 0.0), 1.0)
            return (1.0 - w) * self.y[i - 1] + w * self.y[i]
        tq = np.asarray(t, dtype=float)
        if np.any(tq < lo - tol) or np.any(tq > hi + tol):
            raise ValueError(f"query outside trajectory span [{lo}, {hi}]")
        tq = np.clip(tq, lo, hi)
        cols = [np.interp(tq, self.t, self.y[:, j]) for j in range(self.y.shape[1])]
        return np.stack(cols, axis=-1)


def eval_rhs(sys: FastSlowSystem, s: State, eps: float):
    """Return ``(du, dv) = (f, g / eps)`` at state ``s``."""
    if not 0.0 < eps <= sys.eps_max:
        raise ValueError(f"eps must lie in (0, {sys.eps_max}], got {eps}")
    du = sys.eval_f(s.u, s.v, s.t, eps)
    dv = sys.eval_g(s.u, s.v, s.t, eps) / eps
    return du, dv


def full_rhs(sys: FastSlowSystem, eps: float):
    """Right-hand side ``rhs(t, y)`` of the full system in slow time."""
    if not 0.0 < eps <= sys.eps_max:
        raise ValueError(f"eps must lie in (0, {sys.eps_max}], got {eps}")
    n = sys.n

    def rhs(t, y):
        u, v = y[:n], y[n:]
        return np.concatenate([sys.eval_f(u, v, t, eps), sys.eval_g(u, v, t, eps) / eps])

    return rhs


def fast_time_rhs(sys: FastSlowSystem, eps: float):
    """The same system in fast time tau = t / eps: ``u_tau = eps f``, ``v_tau = g``."""
    n = sys.n

    def rhs(tau, y):
        u, v = y[:n], y[n:]
        t = eps * tau
        return np.concatenate([eps * sys.eval_f(u, v, t, eps), sys.eval_g(u, v, t, eps)])

    return rhs


def _fd_step(x: float) -> float:
    return max(1e-6, 1e-6 * abs(x))


def jacobian(sys: FastSlowSystem, which: str, s: State, eps: float) -> np.ndarray:
    """Jacobian block ``which`` at ``s``; rows index outputs, columns inputs.

    Uses the registered analytic derivative when present, otherwise central
    differences with per-column step ``max(1e-6, 1e-6 |x_j|)``.  Derivatives
    in t or eps switch to a one-sided second-order stencil at the lower
    boundary 0.
    """
    return jacobian_at(sys, which, s.u, s.v, s.t, eps)


def jacobian_at(sys: FastSlowSystem, which: str, u, v, t: float, eps: float) -> np.ndarray:
    """``jacobian`` on loose arrays, skipping the ``State`` wrapper (hot loops)."""
    if which not in JACOBIAN_KINDS:
        raise ValueError(f"unknown jacobian kind {which!r}")
    out_fn, wrt = which.split("_", 1)
    rows = sys.m if out_fn == "g" else sys.n
    evaluate = sys.eval_g if out_fn == "g" else sys.eval_f
    u, v = np.array(u, float), np.array(v, float)

    analytic = sys.jacobians.get(which)
    if analytic is not None:
        shape = (rows,) if wrt in ("t", "eps") else (rows, sys.n if wrt == "u" else sys.m)
        return _checked(analytic(u, v, t, eps), shape, which)

    if wrt in ("u", "v"):
        x = u if wrt == "u" else v
        J = np.empty((rows, len(x)))
        for j in range(len(x)):
            h = _fd_step(x[j])
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            if wrt == "u":
                fp, fm = evaluate(xp, v, t, eps), evaluate(xm, v, t, eps)
            else:
                fp, fm = evaluate(u, xp, t, eps), evaluate(u, xm, t, eps)
            J[:, j] = (fp - fm) / (2 * h)
        return J

    x0 = t if wrt == "t" else eps

    def at(x):
        return evaluate(u, v, x, eps) if wrt == "t" else evaluate(u, v, t, x)

    h = _fd_step(x0)
    if x0 - h >= 0.0:
        return (at(x0 + h) - at(x0 - h)) / (2 * h)
    return (-3.0 * at(x0) + 4.0 * at(x0 + h) - at(x0 + 2 * h)) / (2 * h)


def finite_difference_only(sys: FastSlowSystem) -> FastSlowSystem:
    """Copy of ``sys`` with analytic Jacobians stripped."""
    from dataclasses import replace

    return replace(sys, jacobians={})


def check_jacobians(sys: FastSlowSystem, states: Sequence[State], eps_values: Sequence[float],
                    rel_tol: float = 1e-5) -> float:
    """Worst relative disagreement between analytic and finite-difference Jacobians.

    Raises ``AssertionError`` when the disagreement exceeds ``rel_tol``.
    """
    fd = finite_difference_only(sys)
    worst = 0.0
    for s, eps in zip(states, eps_values):
        for kind in sys.jacobians:
            a = jacobian(sys, kind, s, eps)
            b = jacobian(fd, kind, s, eps)
            scale = max(1.0, float(np.max(np.abs(a))))
            worst = max(worst, float(np.max(np.abs(a - b))) / scale)
    if worst > rel_tol:
        raise AssertionError(f"analytic and finite-difference Jacobians disagree: {worst:.3e}")
    return worst
