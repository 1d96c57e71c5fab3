"""Built-in problem instances with analytically known optima and constants.

Each factory returns an ObjectiveSpec whose G/L/mu are exact for the
norm the intended solver uses (see each docstring), so theorem-derived
step sizes and iteration counts are honest rather than estimated.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .oracles import Box, ObjectiveSpec, Simplex
from .whitebox import ZsgInstance

__all__ = [
    "quadratic",
    "linear_simplex",
    "linf_center",
    "log_sum_exp",
    "matching_pennies",
    "rps",
    "OBJECTIVES",
    "GAMES",
    "make_objective",
    "make_game",
]


def quadratic(d: int = 10, kappa: float = 10.0, half_width: float = 3.0) -> ObjectiveSpec:
    """f(x) = (1/2) sum_i lam_i x_i^2 on the box [-w, w]^d, lam = linspace(1, kappa).

    Minimum 0 at the origin; L = kappa, PL constant mu = 1, G is the exact
    l2 gradient bound over the box.  Constants are for the l2 norm.
    """
    if d < 1 or kappa < 1:
        raise ConfigError("quadratic needs d >= 1 and kappa >= 1")
    lam = np.linspace(1.0, kappa, d)

    def f(x):
        return 0.5 * float(lam @ (x * x))

    def fbatch(X):
        return 0.5 * (X * X) @ lam

    def grad(x):
        return lam * x

    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=half_width * float(np.linalg.norm(lam)),
        L=float(lam.max()),
        mu=float(lam.min()),
        f_star=0.0,
        exact_gradient=grad,
        domain=Box(np.full(d, -half_width), np.full(d, half_width)),
        name=f"quadratic(d={d},kappa={kappa:g})",
        batch_evaluator=fbatch,
    )


def linear_simplex(d: int = 16, p: float = 1.0) -> ObjectiveSpec:
    """f(x) = <c, x> on the probability simplex, c_i = i/(d-1).

    Minimum 0 at the first vertex.  G is ||c||_inf for the l1 norm
    (entropy methods) and ||c||_2 for the euclidean one; pass p to pick.
    """
    if d < 1:
        raise ConfigError("linear_simplex needs d >= 1")
    c = np.arange(d, dtype=float) / (d - 1) if d > 1 else np.zeros(1)
    G = float(np.max(np.abs(c))) if p == 1.0 else float(np.linalg.norm(c))

    def f(x):
        return float(c @ x)

    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=max(G, 1e-12),
        f_star=float(c.min()),
        exact_gradient=lambda x: c.copy(),
        domain=Simplex(dim_n=d, scale=1.0),
        name=f"linear-simplex(d={d})",
        batch_evaluator=lambda X: X @ c,
    )


def linf_center(d: int = 8) -> ObjectiveSpec:
    """f(x) = ||x - u||_inf on the simplex, u uniform; minimum 0 at u.

    1-Lipschitz for both l1 and l2 (since ||.||_inf <= either).
    """
    if d < 1:
        raise ConfigError("linf_center needs d >= 1")
    u = np.full(d, 1.0 / d)

    def f(x):
        return float(np.max(np.abs(x - u)))

    def grad(x):
        r = np.asarray(x, dtype=float) - u
        i = int(np.argmax(np.abs(r)))
        g = np.zeros(d)
        g[i] = math.copysign(1.0, r[i]) if r[i] != 0.0 else 0.0
        return g

    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=1.0,
        f_star=0.0,
        exact_gradient=grad,
        domain=Simplex(dim_n=d, scale=1.0),
        name=f"linf-center(d={d})",
        batch_evaluator=lambda X: np.max(np.abs(X - u[None, :]), axis=1),
    )


def log_sum_exp(
    d: int = 8, spread: float = 2.0, offset: float = 1.5, support: int = 2
) -> ObjectiveSpec:
    """f(x) = log sum_j exp(spread*x_j + c_j) on the simplex, c asymmetric.

    The first `support` coordinates carry offset 0, the rest `offset`.
    For offset > spread/support the exact minimizer spreads its mass
    evenly over the first `support` coordinates (stationarity equalizes
    spread*x_j + c_j there; the remaining coordinates stay strictly
    worse), so

        f_star = log(support*e^{spread/support} + (d-support)*e^{offset}).

    The optimum sits on a face with strict complementarity, so the gap is
    linear in the off-face mass.  For the l1 norm, G = spread and
    L = spread^2 (softmax-covariance Hessian bound).
    """
    if d < 2 or not (1 <= support < d):
        raise ConfigError("log_sum_exp needs d >= 2 and 1 <= support < d")
    if not (offset > spread / support):
        raise ConfigError("log_sum_exp needs offset > spread/support for a face optimum")
    c = np.full(d, offset)
    c[:support] = 0.0

    def f(x):
        s = spread * np.asarray(x, dtype=float) + c
        mx = s.max()
        return float(mx + np.log(np.sum(np.exp(s - mx))))

    def fbatch(X):
        S = spread * X + c[None, :]
        mx = S.max(axis=1, keepdims=True)
        return (mx + np.log(np.sum(np.exp(S - mx), axis=1, keepdims=True))).ravel()

    def grad(x):
        s = spread * np.asarray(x, dtype=float) + c
        s -= s.max()
        p = np.exp(s)
        p /= p.sum()
        return spread * p

    f_star = math.log(support * math.exp(spread / support) + (d - support) * math.exp(offset))
    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=spread,
        L=spread * spread,
        f_star=f_star,
        exact_gradient=grad,
        domain=Simplex(dim_n=d, scale=1.0),
        name=f"log-sum-exp(d={d})",
        batch_evaluator=fbatch,
    )


def matching_pennies() -> ZsgInstance:
    return ZsgInstance(A=np.array([[1.0, -1.0], [-1.0, 1.0]]))


def rps() -> ZsgInstance:
    return ZsgInstance(
        A=np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    )


OBJECTIVES = {
    "quadratic": quadratic,
    "linear-simplex": linear_simplex,
    "linf-center": linf_center,
    "log-sum-exp": log_sum_exp,
}

GAMES = {
    "matching-pennies": matching_pennies,
    "rps": rps,
}


def make_objective(name: str, **kwargs) -> ObjectiveSpec:
    if name not in OBJECTIVES:
        raise ConfigError(
            f"unknown objective {name!r}; known: {sorted(OBJECTIVES)} "
            f"(games: {sorted(GAMES)})"
        )
    return OBJECTIVES[name](**kwargs)


def make_game(name: str) -> ZsgInstance:
    if name not in GAMES:
        raise ConfigError(f"unknown game {name!r}; known: {sorted(GAMES)}")
    return GAMES[name]()
