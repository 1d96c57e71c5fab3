"""First-order methods driven by estimated (sub)gradients.

Six entry points sharing one trace format:

* ``qpsm`` : projected subgradient, euclidean geometry, nonsmooth.
* ``qmd``  : mirror descent under a supplied geometry, nonsmooth.
* ``qda``  : dual averaging (lazy mirror descent), nonsmooth.
* ``qgd_convex``: gradient descent with adaptive estimation targets,
  smooth convex, needs f_star.
* ``qgd_pl``    : gradient descent at a fixed target, smooth + PL.
* ``qmp``  : mirror-prox extragradient, smooth convex, two estimates
  per iteration, averages the z half-iterates.

qpsm is mirror descent under the euclidean map; both run the same loop,
so matching seed, step size, and iteration count give bit-identical
iterates.

Charging: the nonsmooth methods charge exactly T * ceil(8*log2(d/rho));
qgd_* and qmp charge the per-estimate cost of their backend (plus one
query per value check in qgd_convex).  Trace f-values and gaps come from
the exact evaluator and never touch the oracle counters.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import MirrorGeometry, euclidean_geometry, mirror_step
from .gradients import (
    GradientEstimator,
    SubgradientConfig,
    per_estimate_charge,
    subgradient_estimate,
    theta_budget_estimate,
)
from .oracles import NormSpec, NoisyOracle, ObjectiveSpec

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "RunTrace",
    "solve",
    "qpsm_solve",
    "qgd_convex_solve",
    "qgd_pl_solve",
    "qmd_solve",
    "qda_solve",
    "qmp_solve",
    "solver_theta_budget",
    "expected_charged_queries",
    "default_radius",
]

_METHODS = ("qpsm", "qgd_convex", "qgd_pl", "qmd", "qda", "qmp")


@dataclass
class SolverConfig:
    method: str
    epsilon: float
    R: Optional[float] = None
    T: Optional[int] = None
    eta: Optional[float] = None
    seed: int = 0
    backend: str = "surrogate"
    sigma_schedule: Optional[Sequence[float]] = None
    sigma: Optional[float] = None
    x0: Optional[np.ndarray] = None
    r1: Optional[float] = None
    rho: Optional[float] = None
    c_qmp: float = 4.0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {_METHODS}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.T is not None and self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T!r}")


@dataclass
class TraceRecord:
    iter: int
    f_value: float
    gap: float  # NaN when f_star unknown
    charged_queries: int
    actual_evals: int
    wallclock_ms: float


@dataclass
class RunTrace:
    method: str
    records: list = field(default_factory=list)
    final_point: Optional[np.ndarray] = None
    final_average: Optional[np.ndarray] = None
    seed: int = 0
    config: dict = field(default_factory=dict)
    theta_budget: float = math.inf
    theta_warned: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def charged_queries(self) -> int:
        return self.records[-1].charged_queries if self.records else 0

    @property
    def actual_evals(self) -> int:
        return self.records[-1].actual_evals if self.records else 0

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.records])


def _gap(problem: ObjectiveSpec, fval: float) -> float:
    return fval - problem.f_star if problem.f_star is not None else math.nan


def _start(problem: ObjectiveSpec, cfg: SolverConfig) -> np.ndarray:
    if cfg.x0 is not None:
        x0 = np.asarray(cfg.x0, dtype=float)
        if not problem.domain.contains(x0):
            raise ConfigError("x0 is not in the feasible set")
        return x0
    return problem.domain.start()


def _default_R(problem: ObjectiveSpec, geom: MirrorGeometry, cfg: SolverConfig) -> float:
    if cfg.R is not None:
        if cfg.R <= 0:
            raise ConfigError(f"R must be positive, got {cfg.R!r}")
        return cfg.R
    dom = problem.domain
    if geom.setup == "simplex_entropy" and dom.kind == "simplex":
        # divergence from the uniform start to any vertex of the scaled simplex
        return math.sqrt(max(dom.scale * math.log(problem.d), 1e-12)) if problem.d > 1 else 1.0
    if geom.setup == "euclidean":
        return dom.diameter(2.0)
    raise ConfigError("R not supplied and no default is known for this domain/geometry")


def default_radius(problem: ObjectiveSpec, geom: MirrorGeometry, cfg: SolverConfig) -> float:
    """Radius bound the solvers resolve when cfg.R is absent (public for sweeps)."""
    return _default_R(problem, geom, cfg)


def solver_theta_budget(
    method: str,
    *,
    epsilon: float,
    G: float,
    d: int,
    R: float,
    mu: Optional[float] = None,
    L: Optional[float] = None,
    K: Optional[float] = None,
    norms: Optional[NormSpec] = None,
    sigma: Optional[float] = None,
) -> float:
    """Admissible oracle noise for each method, at constant 1.

    The proof-exact constants push these budgets below float64 resolution
    at desk scale (the implied finite-difference step underflows), so the
    asymptotic forms are used with constant 1; the rate and robustness
    checks in the acceptance suite are calibrated against that choice.
    """
    if method == "qpsm":
        return epsilon**5 / (G**4 * R**4 * d**4.5)
    if method in ("qmd", "qda"):
        if mu is None or K is None or norms is None:
            raise ConfigError("qmd/qda budget needs mu, K, norms")
        return (mu * epsilon**5) / (
            G**4 * R**2 * K**2 * norms.vartheta_star**2 * norms.vartheta * d**3
        )
    if method == "qmp":
        if mu is None or L is None or K is None or norms is None:
            raise ConfigError("qmp budget needs mu, L, K, norms")
        log_arg = max(math.sqrt(d) * norms.vartheta_star * L * K * G / (mu * epsilon), 2.0)
        return (mu**4 * epsilon**4) / (
            L**5 * norms.vartheta**2 * norms.vartheta_star**4
            * G**2 * K**4 * math.log(log_arg) ** 2
        )
    if method in ("qgd_pl", "qgd_convex"):
        if sigma is None or L is None:
            raise ConfigError("qgd budget needs sigma and L")
        return theta_budget_estimate(sigma, d, G, L, math.sqrt(d))
    raise ConfigError(f"unknown method {method!r}")


def expected_charged_queries(
    method: str,
    T: int,
    d: int,
    *,
    rho: Optional[float] = None,
    backend: Optional[str] = None,
    sigma: Optional[float] = None,
    sigmas: Optional[Sequence[float]] = None,
    value_checks: int = 0,
    G: float = 1.0,
) -> int:
    """Closed-form audit of what a run must have charged."""
    if method in ("qpsm", "qmd", "qda"):
        return T * per_estimate_charge("subgradient", rho, d)
    if method == "qgd_pl":
        return T * per_estimate_charge(backend, sigma, d, G)
    if method == "qmp":
        return 2 * T * per_estimate_charge(backend, sigma, d, G)
    if method == "qgd_convex":
        return sum(per_estimate_charge(backend, s, d, G) for s in sigmas) + value_checks
    raise ConfigError(f"unknown method {method!r}")


class _Recorder:
    def __init__(self, trace: RunTrace, problem: ObjectiveSpec, oracle: NoisyOracle):
        self.trace = trace
        self.problem = problem
        self.oracle = oracle
        self.t0 = time.perf_counter()

    def emit(self, it: int, point: np.ndarray):
        fval = float(self.problem.value(point))
        self.trace.records.append(
            TraceRecord(
                iter=it,
                f_value=fval,
                gap=_gap(self.problem, fval),
                charged_queries=self.oracle.charged_queries,
                actual_evals=self.oracle.actual_evals,
                wallclock_ms=(time.perf_counter() - self.t0) * 1e3,
            )
        )


def _echo(cfg: SolverConfig, **resolved) -> dict:
    out = {
        "method": cfg.method,
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
        "backend": cfg.backend,
    }
    out.update(resolved)
    return out


def _warn_budget(trace: RunTrace, theta: float, budget: float, method: str):
    trace.theta_budget = budget
    if theta > budget:
        trace.theta_warned = True
        warnings.warn(
            f"{method}: oracle theta {theta:.3e} exceeds the method budget {budget:.3e}; "
            "accuracy guarantees are void (robustness mode)",
            stacklevel=3,
        )


def _nonsmooth_solve(
    problem: ObjectiveSpec,
    oracle: NoisyOracle,
    cfg: SolverConfig,
    geom: MirrorGeometry,
    lazy: bool,
) -> RunTrace:
    """Shared loop for qpsm (euclidean), qmd, and qda (lazy=True)."""
    d, G = problem.d, problem.G
    eps = cfg.epsilon
    R = _default_R(problem, geom, cfg)
    mu = geom.mu
    norms = geom.norm
    if cfg.method == "qpsm":
        T = cfg.T if cfg.T is not None else math.ceil((3.0 * R * G / eps) ** 2)
        eta = cfg.eta if cfg.eta is not None else R / (G * math.sqrt(T))
        r1 = cfg.r1 if cfg.r1 is not None else eps / (6.0 * G * math.sqrt(d))
    else:
        T = cfg.T if cfg.T is not None else math.ceil((6.0 * G * R / (math.sqrt(mu) * eps)) ** 2)
        eta = cfg.eta if cfg.eta is not None else (R / G) * math.sqrt(mu / T)
        r1 = cfg.r1 if cfg.r1 is not None else eps / (6.0 * G * norms.vartheta)
    rho = cfg.rho if cfg.rho is not None else 1.0 / (3.0 * T)
    # noiseless oracles floor the sizing theta; see SubgradientConfig
    sub = SubgradientConfig(r1=r1, rho=rho, theta=max(oracle.theta, 2.0**-46), d=d, G=G)
    K = problem.domain.diameter(norms.p)
    budget = solver_theta_budget(
        cfg.method, epsilon=eps, G=G, d=d, R=R, mu=mu, K=K, norms=norms
    )
    trace = RunTrace(
        method=cfg.method,
        seed=cfg.seed,
        config=_echo(cfg, T=T, eta=eta, r1=r1, rho=rho, R=R),
        meta={"T": T, "eta": eta, "r1": r1, "rho": rho, "R": R,
              "sub_charge": per_estimate_charge("subgradient", rho, d)},
    )
    _warn_budget(trace, oracle.theta, budget, cfg.method)
    rng = np.random.default_rng(cfg.seed)
    x = _start(problem, cfg)
    S = np.zeros(d)
    xbar = np.zeros(d)
    rec = _Recorder(trace, problem, oracle)
    rec.emit(0, x)
    for t in range(1, T + 1):
        est = subgradient_estimate(oracle, x, G, sub, norms, rng)
        xbar += (x - xbar) / t
        if lazy:
            S += est.k
            if geom.setup == "simplex_entropy":
                w = -eta * S
                w -= w.max()
                w = np.exp(w)
                x = problem.domain.scale * w / w.sum()
            else:
                x = problem.domain.project(-eta * S)
        else:
            x = mirror_step(geom, x, est.k, eta, problem.domain)
        rec.emit(t, xbar)
    trace.final_point = x
    trace.final_average = xbar
    return trace


def qpsm_solve(problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig) -> RunTrace:
    if cfg.method != "qpsm":
        raise ConfigError(f"config method {cfg.method!r} is not qpsm")
    return _nonsmooth_solve(problem, oracle, cfg, euclidean_geometry(problem.d), lazy=False)


def qmd_solve(
    problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig, geom: MirrorGeometry
) -> RunTrace:
    if cfg.method != "qmd":
        raise ConfigError(f"config method {cfg.method!r} is not qmd")
    _check_geom(problem, geom)
    return _nonsmooth_solve(problem, oracle, cfg, geom, lazy=False)


def qda_solve(
    problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig, geom: MirrorGeometry
) -> RunTrace:
    if cfg.method != "qda":
        raise ConfigError(f"config method {cfg.method!r} is not qda")
    if geom.setup not in ("simplex_entropy", "euclidean"):
        raise ConfigError(f"dual averaging has no closed form for setup {geom.setup!r}")
    _check_geom(problem, geom)
    return _nonsmooth_solve(problem, oracle, cfg, geom, lazy=True)


def _check_geom(problem: ObjectiveSpec, geom: MirrorGeometry):
    dom = problem.domain
    if geom.setup == "simplex_entropy" and dom.kind != "simplex":
        raise ConfigError("entropy geometry needs a simplex domain")
    if geom.setup == "spectraplex_entropy" and dom.kind != "spectraplex":
        raise ConfigError("matrix-entropy geometry needs a spectraplex domain")
    if geom.norm.d != problem.d:
        raise ConfigError(
            f"geometry dimension {geom.norm.d} does not match problem dimension {problem.d}"
        )


def qgd_pl_solve(problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig) -> RunTrace:
    if cfg.method != "qgd_pl":
        raise ConfigError(f"config method {cfg.method!r} is not qgd_pl")
    if problem.mu is None or problem.mu <= 0:
        raise ConfigError("qgd_pl needs the PL constant problem.mu")
    if problem.L is None or problem.L <= 0:
        raise ConfigError("qgd_pl needs the smoothness constant problem.L")
    d, G, L, mu = problem.d, problem.G, problem.L, problem.mu
    eps = cfg.epsilon
    eta = cfg.eta if cfg.eta is not None else 1.0 / L
    x = _start(problem, cfg)
    if cfg.T is not None:
        T = cfg.T
    else:
        if problem.f_star is None:
            raise ConfigError("qgd_pl needs f_star (or an explicit T) to size the run")
        delta0 = float(problem.value(x)) - problem.f_star
        T = max(1, math.ceil((L / mu) * math.log(max(2.0 * delta0 / eps, 1.0))))
    sigma = cfg.sigma if cfg.sigma is not None else min(math.sqrt(eps * mu / (5.0 * d)), G)
    budget = solver_theta_budget("qgd_pl", epsilon=eps, G=G, d=d, R=1.0, L=L, sigma=sigma)
    trace = RunTrace(
        method="qgd_pl",
        seed=cfg.seed,
        config=_echo(cfg, T=T, eta=eta, sigma=sigma),
        meta={"T": T, "eta": eta, "sigma": sigma,
              "per_charge": per_estimate_charge(cfg.backend, sigma, d, G)},
    )
    _warn_budget(trace, oracle.theta, budget, "qgd_pl")
    rng = np.random.default_rng(cfg.seed)
    estimator = GradientEstimator(problem, oracle, cfg.backend, NormSpec(2.0, d), rng)
    rec = _Recorder(trace, problem, oracle)
    rec.emit(0, x)
    for t in range(1, T + 1):
        est = estimator.estimate(x, sigma)
        x = problem.domain.project(x - eta * est.k)
        rec.emit(t, x)
    trace.final_point = x
    trace.final_average = x
    return trace


def qgd_convex_solve(problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig) -> RunTrace:
    if cfg.method != "qgd_convex":
        raise ConfigError(f"config method {cfg.method!r} is not qgd_convex")
    if problem.f_star is None:
        raise ConfigError("qgd_convex needs f_star to set per-iteration targets")
    if problem.L is None or problem.L <= 0:
        raise ConfigError("qgd_convex needs the smoothness constant problem.L")
    if cfg.R is None:
        raise ConfigError("qgd_convex needs R (sublevel-set radius bound)")
    d, G, L, R = problem.d, problem.G, problem.L, cfg.R
    eps = cfg.epsilon
    eta = cfg.eta if cfg.eta is not None else 1.0 / L
    T_max = cfg.T if cfg.T is not None else math.ceil(4.0 * L * R**2 / eps)
    sigma_floor = min(eps / (4.0 * R * math.sqrt(d)), G)
    budget = solver_theta_budget(
        "qgd_convex", epsilon=eps, G=G, d=d, R=R, L=L, sigma=sigma_floor
    )
    trace = RunTrace(
        method="qgd_convex",
        seed=cfg.seed,
        config=_echo(cfg, T_max=T_max, eta=eta, R=R),
        meta={"T_max": T_max, "eta": eta, "R": R, "sigmas": [], "value_checks": 0},
    )
    _warn_budget(trace, oracle.theta, budget, "qgd_convex")
    rng = np.random.default_rng(cfg.seed)
    estimator = GradientEstimator(problem, oracle, cfg.backend, NormSpec(2.0, d), rng)
    rec = _Recorder(trace, problem, oracle)
    x = _start(problem, cfg)
    schedule = list(cfg.sigma_schedule) if cfg.sigma_schedule is not None else None
    for t in range(T_max + 1):
        # one charged evaluation per visited point drives both the record
        # and the stopping rule
        delta_noisy = oracle.evaluate(x) - problem.f_star
        oracle.charge_queries(1)
        trace.meta["value_checks"] += 1
        rec.emit(t, x)
        if delta_noisy <= eps or t == T_max:
            break
        if schedule is not None:
            sigma_t = float(schedule[min(t, len(schedule) - 1)])
        else:
            sigma_t = min(delta_noisy / (4.0 * R * math.sqrt(d)), G)
        trace.meta["sigmas"].append(sigma_t)
        est = estimator.estimate(x, sigma_t)
        x = problem.domain.project(x - eta * est.k)
    trace.final_point = x
    trace.final_average = x
    trace.meta["T"] = len(trace.records) - 1
    return trace


def qmp_solve(
    problem: ObjectiveSpec, oracle: NoisyOracle, cfg: SolverConfig, geom: MirrorGeometry
) -> RunTrace:
    if cfg.method != "qmp":
        raise ConfigError(f"config method {cfg.method!r} is not qmp")
    if problem.L is None or problem.L <= 0:
        raise ConfigError("qmp needs the smoothness constant problem.L")
    _check_geom(problem, geom)
    d, G, L = problem.d, problem.G, problem.L
    mu = geom.mu
    norms = geom.norm
    eps = cfg.epsilon
    R = _default_R(problem, geom, cfg)
    K = problem.domain.diameter(norms.p)
    eta = cfg.eta if cfg.eta is not None else mu / L
    T = cfg.T if cfg.T is not None else max(1, math.ceil(cfg.c_qmp * L * R**2 / (mu * eps)))
    sigma = cfg.sigma if cfg.sigma is not None else min(
        eps * mu / (12.0 * norms.vartheta_star * L * K), G
    )
    budget = solver_theta_budget(
        "qmp", epsilon=eps, G=G, d=d, R=R, mu=mu, L=L, K=K, norms=norms
    )
    trace = RunTrace(
        method="qmp",
        seed=cfg.seed,
        config=_echo(cfg, T=T, eta=eta, sigma=sigma, R=R),
        meta={"T": T, "eta": eta, "sigma": sigma, "R": R, "K": K,
              "per_charge": per_estimate_charge(cfg.backend, sigma, d, G)},
    )
    _warn_budget(trace, oracle.theta, budget, "qmp")
    rng = np.random.default_rng(cfg.seed)
    estimator = GradientEstimator(problem, oracle, cfg.backend, norms, rng)
    rec = _Recorder(trace, problem, oracle)
    x = _start(problem, cfg)
    zbar = np.zeros(d)
    rec.emit(0, x)
    for t in range(1, T + 1):
        gx = estimator.estimate(x, sigma)
        z = mirror_step(geom, x, gx.k, eta, problem.domain)
        gz = estimator.estimate(z, sigma)
        x = mirror_step(geom, x, gz.k, eta, problem.domain)
        zbar += (z - zbar) / t
        rec.emit(t, zbar)
    trace.final_point = x
    trace.final_average = zbar
    return trace


def solve(
    problem: ObjectiveSpec,
    oracle: NoisyOracle,
    cfg: SolverConfig,
    geom: Optional[MirrorGeometry] = None,
) -> RunTrace:
    """Dispatch on cfg.method; geometry defaults to euclidean when omitted."""
    if cfg.method == "qpsm":
        return qpsm_solve(problem, oracle, cfg)
    if cfg.method == "qgd_convex":
        return qgd_convex_solve(problem, oracle, cfg)
    if cfg.method == "qgd_pl":
        return qgd_pl_solve(problem, oracle, cfg)
    if geom is None:
        geom = euclidean_geometry(problem.d)
    if cfg.method == "qmd":
        return qmd_solve(problem, oracle, cfg, geom)
    if cfg.method == "qda":
        return qda_solve(problem, oracle, cfg, geom)
    return qmp_solve(problem, oracle, cfg, geom)
