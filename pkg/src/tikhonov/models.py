"""Built-in fast-slow models with closed-form oracles.

* Predator-prey with fast prey migration between a grazing patch and a
  refuge.  Slow variables ``(n, p)`` (total prey, predators), fast variable
  ``n2`` (prey in the refuge).
* Allee dynamics from mating-stage structure.  Slow variable ``z`` (total
  females), fast variable ``y`` (searching females).

The total-prey equation carries ``+ a p`` on ``n2`` (sum of the two patch
equations), and the reduced system is the Lotka-Volterra pair
``n' = n (rbar - a M2 p)``, ``p' = p (b M2 n - d)``.  The uncorrected
variant with ``a M1`` and without the factor ``p`` in the predator equation
is kept behind ``predprey_system(..., literal_eq7=True)`` so that the two can
be compared; it has the wrong equilibrium and no first integral.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import FastSlowSystem

ALLEE_REGIMES = ("allee", "no_positive_equilibrium", "single_positive")


@dataclass(frozen=True)
class PredPreyParams:
    """Migration rates ``m1, m2``; patch growth rates ``r1, r2``; predation
    ``a``; conversion ``b``; predator death ``d``.  Defaults are the reference parameter set."""

    m1: float = 2.0
    m2: float = 1.0
    r1: float = 1.0
    r2: float = 2.0
    a: float = 1.0
    b: float = 0.9
    d: float = 1.0

    def __post_init__(self):
        for k, val in asdict(self).items():
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"predator-prey parameter {k} must be positive, got {val}")

    @property
    def M1(self) -> float:
        return self.m1 / (self.m1 + self.m2)

    @property
    def M2(self) -> float:
        return self.m2 / (self.m1 + self.m2)

    @property
    def rbar(self) -> float:
        return self.M2 * self.r1 + self.M1 * self.r2

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AlleeParams:
    """Reproduction ``beta``, baseline mortality ``mu``, extra mortality of
    searching females ``lam`` and the encounter product ``xiK``.

    JSON configs use the key ``lambda`` for ``lam``.
    """

    beta: float = 10.0
    mu: float = 1.0
    lam: float = 1.0
    xiK: float = 3.0

    def __post_init__(self):
        if not (self.beta > self.mu > 0):
            raise ValueError("Allee model needs beta > mu > 0")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.xiK <= 0:
            raise ValueError("xiK must be positive")

    @property
    def R0(self) -> float:
        return self.beta / self.mu

    @property
    def ratio(self) -> float:
        return (self.beta + self.lam) / (self.beta - self.mu)

    @property
    def nuK_over_mu(self) -> float:
        # K = (beta - mu) / nu forces nu K / mu = R0 - 1
        return self.R0 - 1.0

    def as_dict(self) -> dict:
        return {"beta": self.beta, "mu": self.mu, "lambda": self.lam, "xiK": self.xiK}

    @classmethod
    def from_dict(cls, d: dict) -> "AlleeParams":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**d)


# ---------------------------------------------------------------- predator-prey

def predprey_equilibrium(p: PredPreyParams, eps: float):
    """Positive equilibrium ``(n1*, n2*, p*)`` of the patch model at ``eps``."""
    den = p.m2 - eps * p.r2
    if den <= 0:
        raise ValueError("equilibrium requires m2 - eps r2 > 0")
    return (p.d / p.b, p.m1 * p.d / (p.b * den), p.r1 / p.a + p.m1 * p.r2 / (p.a * den))


def predprey_jacobian_star(p: PredPreyParams, eps: float) -> np.ndarray:
    """Jacobian of the patch model (coordinates ``n1, n2, p``) at its positive equilibrium."""
    n1, n2, ps = predprey_equilibrium(p, eps)
    return np.array([
        [p.r1 - p.a * ps - p.m1 / eps, p.m2 / eps, -p.a * n1],
        [p.m1 / eps, p.r2 - p.m2 / eps, 0.0],
        [p.b * ps, 0.0, p.b * n1 - p.d],
    ])


def predprey_char_coeffs(p: PredPreyParams, eps: float):
    """Closed-form coefficients ``(a1, a2, a3)`` of the characteristic cubic of eps*J*."""
    alpha = p.m1 * p.m2 / (p.m2 - eps * p.r2)
    beta = p.a * p.d / p.b
    gamma = p.b * predprey_equilibrium(p, eps)[2]
    return (alpha + p.m2 - eps * p.r2, eps ** 2 * beta * gamma, eps ** 2 * beta * gamma * (p.m2 - eps * p.r2))


def patch_rhs(p: PredPreyParams, eps: float):
    """Right-hand side of the original two-patch model in ``(n1, n2, p)``."""

    def rhs(t, y):
        n1, n2, q = y
        return np.array([
            n1 * (p.r1 - p.a * q) + (p.m2 * n2 - p.m1 * n1) / eps,
            n2 * p.r2 + (p.m1 * n1 - p.m2 * n2) / eps,
            q * (p.b * n1 - p.d),
        ])

    return rhs


def predprey_reduced_equilibrium(p: PredPreyParams, literal_eq7: bool = False) -> np.ndarray:
    if literal_eq7:
        return np.array([p.d / (p.b * p.M2), p.rbar / (p.a * p.M1)])
    return np.array([p.d / (p.b * p.M2), p.rbar / (p.a * p.M2)])


def lotka_volterra_integral(p: PredPreyParams, n, q):
    """First integral of the corrected reduced system."""
    return p.b * p.M2 * n - p.d * np.log(n) + p.a * p.M2 * q - p.rbar * np.log(q)


def predprey_system(p: PredPreyParams = PredPreyParams(), literal_eq7: bool = False) -> FastSlowSystem:
    """Predator-prey model; slow ``u = (n, p)``, fast ``v = (n2,)``."""
    m1, m2, r1, r2, a, b, d = p.m1, p.m2, p.r1, p.r2, p.a, p.b, p.d
    msum = m1 + m2

    def f(u, v, t, eps):
        n, q = u
        n2 = v[0]
        return np.array([n * (r1 - a * q) + n2 * (r2 - r1 + a * q), q * (b * n - b * n2 - d)])

    def g(u, v, t, eps):
        n = u[0]
        n2 = v[0]
        return np.array([eps * n2 * r2 + m1 * n - n2 * msum])

    def f_u(u, v, t, eps):
        n, q = u
        n2 = v[0]
        return np.array([[r1 - a * q, -a * n + a * n2], [b * q, b * n - b * n2 - d]])

    def f_v(u, v, t, eps):
        n, q = u
        return np.array([[r2 - r1 + a * q], [-b * q]])

    def g_u(u, v, t, eps):
        return np.array([[m1, 0.0]])

    def g_v(u, v, t, eps):
        return np.array([[eps * r2 - msum]])

    def zero_t(rows):
        return lambda u, v, t, eps: np.zeros(rows)

    def g_eps(u, v, t, eps):
        return np.array([v[0] * r2])

    reduced = None
    if literal_eq7:
        M1, M2, rbar = p.M1, p.M2, p.rbar

        def reduced(u, t):
            n, q = u
            return np.array([n * (rbar - a * M1 * q), b * M2 * n - d])

    return FastSlowSystem(
        n=2, m=1, f=f, g=g,
        eps_max=0.5 * m2 / r2,
        name="predprey-literal-eq7" if literal_eq7 else "predprey",
        jacobians={"f_u": f_u, "f_v": f_v, "g_u": g_u, "g_v": g_v,
                   "g_t": zero_t(1), "f_t": zero_t(2), "g_eps": g_eps, "f_eps": zero_t(2)},
        equilibria=(predprey_reduced_equilibrium(p, literal_eq7),),
        qss_seed=lambda u, t: np.array([p.M1 * u[0]]),
        reduced_override=reduced,
        params=p.as_dict(),
    )


# ---------------------------------------------------------------- Allee model

def classify_allee(ratio: float, xiK: float) -> str:
    """Count distinct positive roots of ``(1 - z)(1 + xiK z) = ratio``."""
    # xiK z^2 - (xiK - 1) z + (ratio - 1) = 0
    disc = (xiK - 1.0) ** 2 - 4.0 * xiK * (ratio - 1.0)
    if disc < 0:
        return "no_positive_equilibrium"
    sq = math.sqrt(disc)
    roots = {((xiK - 1.0) - sq) / (2 * xiK), ((xiK - 1.0) + sq) / (2 * xiK)}
    positive = [r for r in roots if r > 0]
    if len(positive) == 2:
        return "allee"
    return "single_positive" if positive else "no_positive_equilibrium"


def allee_regime(p: AlleeParams) -> str:
    return classify_allee(p.ratio, p.xiK)


def parabola_max(xiK: float) -> float:
    """Maximum of ``(1 - z)(1 + xiK z)`` over z (attained at (xiK-1)/(2 xiK))."""
    return (1.0 + xiK) ** 2 / (4.0 * xiK)


def allee_equilibria(p: AlleeParams):
    """Equilibria ``(0, z2, z3)`` of the reduced Allee equation (positive ones only if they exist)."""
    k, r = p.xiK, p.ratio
    disc = (k - 1.0) ** 2 - 4.0 * k * (r - 1.0)
    eq = [0.0]
    if disc >= 0:
        sq = math.sqrt(disc)
        eq += sorted(z for z in {((k - 1.0) - sq) / (2 * k), ((k - 1.0) + sq) / (2 * k)} if z > 0)
    return tuple(eq)


def allee_phi(p: AlleeParams, z):
    return z / (1.0 + p.xiK * z)


def allee_reduced_rhs(p: AlleeParams, z):
    return (p.R0 - 1.0) * z * (1.0 - z) - (p.beta + p.lam) / p.mu * allee_phi(p, z)


def allee_layer_exact(p: AlleeParams, z_hat: float, y_hat: float, tau):
    """Exact solution of the linear layer equation ``y' = -y (1 + xiK z_hat) + z_hat``."""
    rate = 1.0 + p.xiK * z_hat
    phi0 = allee_phi(p, z_hat)
    return phi0 + (y_hat - phi0) * np.exp(-rate * np.asarray(tau, float))


def allee_system(p: AlleeParams = AlleeParams()) -> FastSlowSystem:
    """Allee model in Tikhonov form; slow ``u = (z,)``, fast ``v = (y,)``."""
    R0m1 = p.R0 - 1.0
    repro = (p.beta + p.lam) / p.mu
    lam_mu = p.lam / p.mu
    k = p.xiK

    def f(u, v, t, eps):
        z, y = u[0], v[0]
        return np.array([R0m1 * z * (1.0 - z) - repro * y])

    def g(u, v, t, eps):
        z, y = u[0], v[0]
        return np.array([-eps * (1.0 + lam_mu + R0m1 * z) * y - k * y * z + z - y])

    def f_u(u, v, t, eps):
        return np.array([[R0m1 * (1.0 - 2.0 * u[0])]])

    def f_v(u, v, t, eps):
        return np.array([[-repro]])

    def g_u(u, v, t, eps):
        y = v[0]
        return np.array([[-eps * R0m1 * y - k * y + 1.0]])

    def g_v(u, v, t, eps):
        z = u[0]
        return np.array([[-eps * (1.0 + lam_mu + R0m1 * z) - k * z - 1.0]])

    def g_eps(u, v, t, eps):
        return np.array([-(1.0 + lam_mu + R0m1 * u[0]) * v[0]])

    def zero(u, v, t, eps):
        return np.zeros(1)

    return FastSlowSystem(
        n=1, m=1, f=f, g=g,
        eps_max=0.2,
        name="allee",
        jacobians={"f_u": f_u, "f_v": f_v, "g_u": g_u, "g_v": g_v,
                   "g_t": zero, "f_t": zero, "g_eps": g_eps, "f_eps": zero},
        equilibria=tuple(np.array([z]) for z in allee_equilibria(p)),
        qss_seed=lambda u, t: np.array([allee_phi(p, u[0])]),
        params=p.as_dict(),
    )


PREDPREY_DEFAULT_INIT = (3.0, 1.0, 2.0)   # (n, p, n2): slow first, then fast
ALLEE_DEFAULT_INIT = (0.2, 0.0)           # (z, y)
