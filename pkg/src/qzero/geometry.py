"""Mirror maps, Bregman machinery, and symmetric matrix calculus.

Three setups are provided: euclidean (Phi = half squared l2 norm),
simplex_entropy (negative entropy on the positive orthant), and
spectraplex_entropy (von Neumann entropy on positive definite matrices).
Points in the spectraplex setup are (n, n) symmetric arrays; everything
else works on flat vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np

from .errors import ConfigError, DomainError, NumericError
from .oracles import Box, EuclideanBall, NormSpec, Simplex, Spectraplex

__all__ = [
    "MirrorGeometry",
    "euclidean_geometry",
    "simplex_geometry",
    "spectraplex_geometry",
    "bregman_divergence",
    "three_point_identity_residual",
    "bregman_project",
    "mirror_step",
    "SymEigResult",
    "sym_eig",
    "spd_log",
    "spd_exp",
]

# floor applied before logs; multiplicative updates cannot create exact zeros
# from positive starts, so this only guards underflow
_LOG_FLOOR = 1e-300


class SymEigResult(NamedTuple):
    """Descending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(M: np.ndarray) -> SymEigResult:
    """Full spectral decomposition of a symmetric M, eigenvalues descending."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("sym_eig requires finite entries")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale > 0 and float(np.max(np.abs(M - M.T))) > 1e-10 * max(1.0, scale):
        raise ValueError("matrix is not symmetric within tolerance")
    try:
        w, v = np.linalg.eigh(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    return SymEigResult(w[::-1].copy(), v[:, ::-1].copy())


def spd_log(M: np.ndarray) -> np.ndarray:
    w, v = sym_eig(M)
    if w[-1] <= 0.0:
        raise DomainError(f"matrix log needs positive eigenvalues, min is {w[-1]:.3e}")
    return (v * np.log(w)) @ v.T


def spd_exp(M: np.ndarray) -> np.ndarray:
    w, v = sym_eig(M)
    return (v * np.exp(w)) @ v.T


def _entropy(x: np.ndarray) -> float:
    x = np.maximum(x, 0.0)
    pos = x > 0
    return float(np.sum(x[pos] * np.log(x[pos])))


@dataclass(frozen=True)
class MirrorGeometry:
    """A mirror map Phi with its norm and strong-convexity modulus mu."""

    setup: str
    norm: NormSpec
    mu: float

    def phi(self, x: np.ndarray) -> float:
        if self.setup == "euclidean":
            return 0.5 * float(np.sum(np.asarray(x) ** 2))
        if self.setup == "simplex_entropy":
            return _entropy(np.asarray(x, dtype=float))
        w = np.linalg.eigvalsh(np.asarray(x, dtype=float))
        return _entropy(w)

    def grad_phi(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.setup == "euclidean":
            return x.copy()
        if self.setup == "simplex_entropy":
            self._check_interior(x)
            return 1.0 + np.log(np.maximum(x, _LOG_FLOOR))
        self._check_interior(x)
        return np.eye(x.shape[0]) + spd_log(x)

    def grad_phi_inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.setup == "euclidean":
            return z.copy()
        if self.setup == "simplex_entropy":
            return np.exp(z - 1.0)
        return spd_exp(z - np.eye(z.shape[0]))

    def _check_interior(self, x: np.ndarray) -> None:
        if self.setup == "simplex_entropy":
            if np.any(np.asarray(x) <= 0.0):
                raise DomainError("entropy mirror map needs strictly positive coordinates")
        elif self.setup == "spectraplex_entropy":
            if np.linalg.eigvalsh(np.asarray(x, dtype=float)).min() <= 0.0:
                raise DomainError("matrix entropy needs a positive definite point")


def euclidean_geometry(d: int) -> MirrorGeometry:
    return MirrorGeometry("euclidean", NormSpec(2.0, d), 1.0)


def simplex_geometry(d: int, scale: float = 1.0) -> MirrorGeometry:
    # negative entropy is (1/scale)-strongly convex in l1 on the scaled simplex
    return MirrorGeometry("simplex_entropy", NormSpec(1.0, d), 1.0 / scale)


def spectraplex_geometry(n: int) -> MirrorGeometry:
    # von Neumann entropy, 1/2-strongly convex in trace norm
    return MirrorGeometry("spectraplex_entropy", NormSpec(1.0, n * n), 0.5)


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(np.asarray(a) * np.asarray(b)))


def bregman_divergence(geom: MirrorGeometry, x: np.ndarray, x_bar: np.ndarray) -> float:
    """D_Phi(x, x_bar) = Phi(x) - Phi(x_bar) - <grad Phi(x_bar), x - x_bar>."""
    x = np.asarray(x, dtype=float)
    x_bar = np.asarray(x_bar, dtype=float)
    if geom.setup == "euclidean":
        return 0.5 * float(np.sum((x - x_bar) ** 2))
    if geom.setup == "simplex_entropy":
        geom._check_interior(x_bar)
        if np.any(x < 0.0):
            raise DomainError("bregman_divergence needs x >= 0 in the entropy setup")
        xs = np.maximum(x, _LOG_FLOOR)
        # x*log(x/xbar) - x + xbar, with 0 log 0 = 0
        terms = np.where(x > 0.0, x * (np.log(xs) - np.log(x_bar)), 0.0)
        return float(np.sum(terms) - np.sum(x) + np.sum(x_bar))
    geom._check_interior(x_bar)
    wx = np.linalg.eigvalsh(x)
    if wx.min() < -1e-12:
        raise DomainError("bregman_divergence needs x PSD in the spectraplex setup")
    val = _entropy(wx) - float(np.trace(x @ spd_log(x_bar)))
    return val - float(np.trace(x)) + float(np.trace(x_bar))


def three_point_identity_residual(
    geom: MirrorGeometry, x: np.ndarray, x_bar: np.ndarray, w: np.ndarray
) -> float:
    lhs = _inner(geom.grad_phi(x) - geom.grad_phi(x_bar), np.asarray(x) - np.asarray(w))
    rhs = (
        bregman_divergence(geom, x, x_bar)
        + bregman_divergence(geom, w, x)
        - bregman_divergence(geom, w, x_bar)
    )
    return lhs - rhs


def bregman_project(geom: MirrorGeometry, x_bar: np.ndarray, domain) -> np.ndarray:
    """argmin_{x in domain} D_Phi(x, x_bar), using the per-setup closed form."""
    x_bar = np.asarray(x_bar, dtype=float)
    if geom.setup == "euclidean":
        return domain.project(x_bar)
    if geom.setup == "simplex_entropy" and isinstance(domain, Simplex):
        geom._check_interior(x_bar)
        return x_bar * (domain.scale / float(np.sum(x_bar)))
    if geom.setup == "spectraplex_entropy" and isinstance(domain, Spectraplex):
        geom._check_interior(x_bar)
        return x_bar / float(np.trace(x_bar))
    raise ConfigError(
        f"no Bregman projection for geometry {geom.setup!r} onto {type(domain).__name__}"
    )


def mirror_step(geom: MirrorGeometry, x: np.ndarray, g: np.ndarray, eta: float, domain) -> np.ndarray:
    """x+ = Project(grad_phi_inverse(grad_phi(x) - eta*g)) with overflow guards."""
    if eta <= 0:
        raise ConfigError("mirror step needs eta > 0")
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if geom.setup == "euclidean":
        return domain.project(x - eta * g)
    if geom.setup == "simplex_entropy":
        geom._check_interior(x)
        z = np.log(np.maximum(x, _LOG_FLOOR)) - eta * g
        z -= z.max()  # renormalization cancels the shift; guards overflow
        y = np.exp(z)
        return y * (domain.scale / float(np.sum(y)))
    geom._check_interior(x)
    z = spd_log(x) - eta * g
    w, v = sym_eig(z)
    w = w - w[0]
    y = (v * np.exp(w)) @ v.T
    return y / float(np.trace(y))
