"""Noisy function-evaluation oracles and the problem/domain vocabulary.

The central object is NoisyOracle: a deterministic evaluation oracle
f~(x) = f(x) + eta(x) with |eta(x)| < theta everywhere.  The perturbation is
a fixed function of x, not drawn fresh per call, so repeated queries at the
same point return the same value.  Two counters are kept:

* ``charged_queries`` counts what the cost model charges.  Estimation and
  solver routines bump it via :meth:`NoisyOracle.charge_queries` according
  to their own accounting; plain evaluation does not touch it.
* ``actual_evals`` counts classical evaluations actually performed, one per
  point, batched or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "dual_exponent",
    "NormSpec",
    "EuclideanBall",
    "Simplex",
    "Box",
    "Spectraplex",
    "ObjectiveSpec",
    "NoisyOracle",
    "project_simplex",
]


def dual_exponent(p: float) -> float:
    """Holder conjugate q of p: 1/p + 1/q = 1.  p=1 maps to inf and back."""
    if p != p or p < 1.0:
        raise ConfigError(f"norm exponent must satisfy p >= 1, got {p!r}")
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormSpec:
    """An l_p norm with its dual and the l_inf comparison constants.

    vartheta is the smallest c with ||x||_p <= c * ||x||_inf, and
    vartheta_star plays the same role for the dual norm q.  Their product
    is at most d.
    """

    p: float
    d: int
    q: float = field(init=False)
    vartheta: float = field(init=False)
    vartheta_star: float = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be positive, got {self.d}")
        q = dual_exponent(self.p)
        object.__setattr__(self, "q", q)
        lift = 1.0 if math.isinf(self.p) else float(self.d) ** (1.0 / self.p)
        dual_lift = 1.0 if math.isinf(q) else float(self.d) ** (1.0 / q)
        object.__setattr__(self, "vartheta", lift)
        object.__setattr__(self, "vartheta_star", dual_lift)

    def norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(np.ravel(x), ord=self.p))

    def dual_norm(self, g: np.ndarray) -> float:
        return float(np.linalg.norm(np.ravel(g), ord=self.q))


def project_simplex(x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {z >= 0, sum z = scale} (sort-based)."""
    x = np.asarray(x, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - scale
    idx = np.arange(1, x.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    tau = css[rho - 1] / rho
    return np.maximum(x - tau, 0.0)


@dataclass(frozen=True)
class EuclideanBall:
    center: np.ndarray
    radius: float
    kind: str = field(default="euclidean_ball", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ConfigError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return float(np.linalg.norm(np.asarray(x) - self.center)) <= self.radius + tol

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        delta = x - self.center
        nrm = float(np.linalg.norm(delta))
        if nrm <= self.radius:
            return x
        return self.center + delta * (self.radius / nrm)

    def diameter(self, p: float = 2.0) -> float:
        # antipodal points along an axis for p >= 2, along the diagonal for p < 2
        if p >= 2.0:
            return 2.0 * self.radius
        return 2.0 * self.radius * self.dim ** (1.0 / p - 0.5)

    def start(self) -> np.ndarray:
        return self.center.copy()


@dataclass(frozen=True)
class Simplex:
    dim_n: int
    scale: float = 1.0
    kind: str = field(default="simplex", init=False)

    def __post_init__(self):
        if self.dim_n < 1 or self.scale <= 0:
            raise ConfigError("simplex needs dim >= 1 and scale > 0")

    @property
    def dim(self) -> int:
        return self.dim_n

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - self.scale) <= tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        return project_simplex(x, self.scale)

    def diameter(self, p: float = 1.0) -> float:
        # distance between two vertices
        if math.isinf(p):
            return self.scale
        return self.scale * 2.0 ** (1.0 / p)

    def start(self) -> np.ndarray:
        return np.full(self.dim_n, self.scale / self.dim_n)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ConfigError("box needs lo <= hi of matching shape")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def diameter(self, p: float = 2.0) -> float:
        return float(np.linalg.norm(self.hi - self.lo, ord=p))

    def start(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Spectraplex:
    """Symmetric PSD matrices with unit trace; points are (n, n) arrays."""

    n: int
    kind: str = field(default="spectraplex", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("spectraplex order must be >= 1")

    @property
    def dim(self) -> int:
        return self.n * self.n

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x)
        if x.shape != (self.n, self.n) or np.max(np.abs(x - x.T)) > tol:
            return False
        w = np.linalg.eigvalsh(0.5 * (x + x.T))
        return bool(w.min() >= -tol and abs(float(np.trace(x)) - 1.0) <= tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        x = 0.5 * (np.asarray(x, dtype=float) + np.asarray(x, dtype=float).T)
        w, v = np.linalg.eigh(x)
        w = project_simplex(w, 1.0)
        return (v * w) @ v.T

    def diameter(self, p: float = 1.0) -> float:
        # trace-norm diameter of the unit spectraplex
        return 2.0

    def start(self) -> np.ndarray:
        return np.eye(self.n) / self.n


Domain = Union[EuclideanBall, Simplex, Box, Spectraplex]


@dataclass
class ObjectiveSpec:
    """A problem instance: exact evaluator plus the constants solvers consume.

    G is the Lipschitz constant and L the smoothness constant, both with
    respect to whatever norm the consuming solver's geometry uses; mu is a
    PL or strong-convexity constant when one holds.  exact_gradient backs
    the surrogate/exact estimation backends and is never consulted by
    solver update rules directly.
    """

    evaluator: Callable[[np.ndarray], float]
    d: int
    G: float
    L: Optional[float] = None
    mu: Optional[float] = None
    f_star: Optional[float] = None
    exact_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Domain] = None
    name: str = ""
    # vectorized evaluator over (k, d) batches; falls back to a row loop when absent
    batch_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def value(self, x: np.ndarray) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float)))


# splitmix64 finalizer constants
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _C1
    z ^= z >> np.uint64(27)
    z *= _C2
    z ^= z >> np.uint64(31)
    return z


class NoisyOracle:
    """Deterministic theta-bounded perturbation of an exact evaluator.

    noise modes:

    * ``hash``: eta(x) derived by mixing the seed with the IEEE-754 bit
      patterns of x's coordinates (splitmix64-style), mapped into the open
      interval (-theta, theta).  Uncorrelated across distinct points,
      reproducible across runs and platforms.
    * ``sinusoid``: eta(x) = 0.9 * theta * sin(1e3 * sum(x)), a smooth
      adversarial-style perturbation with a known closed form.
    * ``none``: eta = 0 regardless of theta.
    """

    def __init__(
        self,
        base: Union[ObjectiveSpec, Callable[[np.ndarray], float]],
        theta: float,
        noise_mode: str = "hash",
        seed: int = 0,
    ):
        if not (theta >= 0.0 and math.isfinite(theta)):
            raise ConfigError(f"theta must be finite and >= 0, got {theta!r}")
        if noise_mode not in ("hash", "sinusoid", "none"):
            raise ConfigError(f"unknown noise mode {noise_mode!r}")
        if isinstance(base, ObjectiveSpec):
            self._f = base.evaluator
            self._fbatch = base.batch_evaluator
            self._d = base.d
        else:
            self._f = base
            self._fbatch = None
            self._d = None
        self.theta = float(theta)
        self.noise_mode = noise_mode
        self.seed = int(seed)
        self._seed_mixed = _mix64(np.asarray([np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)]))[0]
        self._salts = np.empty(0, dtype=np.uint64)
        self.charged_queries = 0
        self.actual_evals = 0

    def _coord_salts(self, ncols: int) -> np.ndarray:
        # array ops wrap mod 2^64 silently, which is what splitmix64 wants
        if self._salts.size < ncols:
            idx = np.arange(1, ncols + 1, dtype=np.uint64) * _GAMMA
            self._salts = _mix64(idx)
        return self._salts

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._d is not None and X.shape[-1] != self._d:
            raise ValueError(f"expected points of dimension {self._d}, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("oracle queried at a non-finite point")
        return X

    def _eta_batch(self, X: np.ndarray) -> np.ndarray:
        if self.theta == 0.0 or self.noise_mode == "none":
            return np.zeros(X.shape[0])
        if self.noise_mode == "sinusoid":
            return 0.9 * self.theta * np.sin(1e3 * X.sum(axis=1))
        bits = np.ascontiguousarray(X).view(np.uint64)
        salts = self._coord_salts(X.shape[1])
        h = np.full(X.shape[0], self._seed_mixed, dtype=np.uint64)
        for i in range(X.shape[1]):
            h = _mix64(h ^ bits[:, i] ^ salts[i])
        # (h>>11 + 0.5) / 2^53 lies strictly inside (0, 1), so eta stays
        # strictly inside (-theta, theta)
        u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return self.theta * (2.0 * u - 1.0)

    def evaluate(self, x: np.ndarray) -> float:
        """One perturbed evaluation; bumps actual_evals by 1."""
        x = self._check(np.atleast_1d(np.asarray(x, dtype=float)))
        val = float(self._f(x)) + float(self._eta_batch(x[None, :])[0])
        self.actual_evals += 1
        return val

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Perturbed evaluations at the rows of X; bumps actual_evals by len(X)."""
        X = self._check(np.asarray(X, dtype=float))
        if X.ndim != 2:
            raise ValueError(f"expected a (k, d) batch, got shape {X.shape}")
        if self._fbatch is not None:
            base = np.asarray(self._fbatch(X), dtype=float)
        else:
            base = np.asarray([float(self._f(row)) for row in X])
        vals = base + self._eta_batch(X)
        self.actual_evals += X.shape[0]
        return vals

    def charge_queries(self, n: int) -> None:
        if n < 0 or int(n) != n:
            raise ValueError(f"charge must be a nonnegative integer, got {n!r}")
        self.charged_queries += int(n)
