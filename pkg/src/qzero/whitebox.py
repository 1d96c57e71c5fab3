"""SDP, LP, and zero-sum-game solving by eigenvalue/max reduction.

The dual SDP  min r_p*y0 + b'y  s.t.  y0*I + sum_i y_i A_i >= C, y >= 0
is solved by eliminating y0 and minimizing

    f(y~) = lambda_max(C/r_d - sum_i y~_i A_i) + (b/r_p)' y~

over the simplex after the substitution y = r_d * y~ (one slack
coordinate with A = 0 and b~ = 0 absorbs l1 mass below r_d).  The
dilated objective r_p*r_d*f equals the dual objective, so solving f to
epsilon/(r_p*r_d) solves the SDP to epsilon.  LPs are the diagonal
specialization: lambda_max becomes a max over columns.  Zero-sum games
embed as a pair of LPs (one per player) whose dual certificates bound
the game value from both sides, enabling certified early stopping.

Query accounting: LP-family oracles charge ceil(sqrt(n)) per evaluated
point for the internal maximum-finding step and count n column scans as
actual work; the subgradient routine layers its own ceil(8*log2(d/rho))
charge per estimate on top.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericError
from .geometry import simplex_geometry, mirror_step, sym_eig
from .gradients import SubgradientConfig, subgradient_estimate, per_estimate_charge
from .oracles import NoisyOracle, ObjectiveSpec, Simplex
from .solvers import RunTrace, SolverConfig, TraceRecord, qmd_solve, solver_theta_budget

__all__ = [
    "SdpInstance",
    "LpInstance",
    "ZsgInstance",
    "DualCertificate",
    "FeasibilityReport",
    "sdp_eig_objective",
    "solve_sdp_dual",
    "lp_objective",
    "solve_lp",
    "solve_zsg",
    "check_dual_feasibility",
    "load_sdp",
    "save_sdp",
    "load_lp",
    "save_lp",
    "load_zsg",
    "save_zsg",
    "save_certificate",
    "load_certificate",
]


# ---------------------------------------------------------------------------
# instance types


@dataclass
class SdpInstance:
    """max tr(CX) s.t. tr(A_i X) <= b_i, tr X = r_p, X >= 0."""

    m: int
    n: int
    A: list
    b: np.ndarray
    C: np.ndarray
    r_p: float
    r_d: float
    s: Optional[int] = None  # max nonzeros per row, cost reporting only

    def __post_init__(self):
        self.A = [np.asarray(Ai, dtype=float) for Ai in self.A]
        self.b = np.asarray(self.b, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        if self.s is None:
            nz = [int(np.max(np.count_nonzero(M, axis=1), initial=0))
                  for M in self.A + [self.C]]
            self.s = max(nz) if nz else 0

    def validate(self, strict_b: bool = True):
        if len(self.A) != self.m or self.b.shape != (self.m,):
            raise ConfigError(f"expected {self.m} constraint matrices and b entries")
        if self.C.shape != (self.n, self.n):
            raise ConfigError(f"C shape {self.C.shape} does not match n={self.n}")
        if self.r_p < 1 or self.r_d < 1:
            raise ConfigError("trace/l1 bounds r_p, r_d must be >= 1")
        for name, M in [("C", self.C)] + [(f"A{i + 1}", Ai) for i, Ai in enumerate(self.A)]:
            if M.shape != (self.n, self.n):
                raise ConfigError(f"{name} shape {M.shape} does not match n={self.n}")
            if np.max(np.abs(M - M.T), initial=0.0) > 1e-12:
                raise ConfigError(f"{name} is not symmetric within 1e-12")
            w, _ = sym_eig(M)
            opnorm = float(np.max(np.abs(w))) if w.size else 0.0
            if opnorm > 1.0 + 1e-12:
                raise ConfigError(f"operator norm of {name} is {opnorm:.6f} > 1")
        bnorm = float(np.max(np.abs(self.b), initial=0.0))
        if bnorm > self.r_p + 1e-12:
            msg = (f"||b||_inf = {bnorm:.6g} exceeds r_p = {self.r_p:.6g}; the "
                   "eigenvalue objective is then (1 + ||b||_inf/r_p)-Lipschitz, not 2")
            if strict_b:
                raise ConfigError(msg)
            warnings.warn(msg, stacklevel=2)

    def lipschitz(self) -> float:
        bnorm = float(np.max(np.abs(self.b), initial=0.0))
        return 1.0 + max(1.0, bnorm / self.r_p)


@dataclass
class LpInstance:
    """max c'x s.t. Ax <= b, 1'x = r_p, x >= 0; A entries in [-1, 1]."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    r_p: float
    r_d: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def validate(self, strict_b: bool = True):
        if self.A.ndim != 2:
            raise ConfigError("A must be a matrix")
        if self.b.shape != (self.m,) or self.c.shape != (self.n,):
            raise ConfigError("b/c dimensions do not match A")
        if self.r_p < 1 or self.r_d < 1:
            raise ConfigError("bounds r_p, r_d must be >= 1")
        if np.max(np.abs(self.A), initial=0.0) > 1.0 + 1e-12:
            raise ConfigError("A entries must lie in [-1, 1]")
        if np.max(np.abs(self.c), initial=0.0) > 1.0 + 1e-12:
            raise ConfigError("c entries must lie in [-1, 1]")
        bnorm = float(np.max(np.abs(self.b), initial=0.0))
        if bnorm > self.r_p + 1e-12:
            msg = f"||b||_inf = {bnorm:.6g} exceeds r_p = {self.r_p:.6g}"
            if strict_b:
                raise ConfigError(msg)
            warnings.warn(msg, stacklevel=2)

    def lipschitz(self) -> float:
        bnorm = float(np.max(np.abs(self.b), initial=0.0))
        return 1.0 + max(1.0, bnorm / self.r_p)


@dataclass
class ZsgInstance:
    """Payoff matrix of min_{x in simplex_n} max_{y in simplex_m} y'Ax."""

    A: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def validate(self):
        if self.A.ndim != 2 or self.A.size == 0:
            raise ConfigError("payoff matrix must be a nonempty 2-d array")
        if np.max(np.abs(self.A)) > 1.0 + 1e-12:
            raise ConfigError("payoff entries must lie in [-1, 1]")


@dataclass
class DualCertificate:
    y0: float
    y: np.ndarray
    objective: float  # r_p*y0 + b'y
    min_slack_eig: float
    meta: dict = field(default_factory=dict)


@dataclass
class FeasibilityReport:
    ok: bool
    conditions: dict  # name -> (passed, margin)


# ---------------------------------------------------------------------------
# objectives


def sdp_eig_objective(inst: SdpInstance, y_tilde: np.ndarray) -> float:
    """lambda_max(C/r_d - sum_i y~_i A_i) + (b/r_p)'y~ for y~ on the simplex."""
    y_tilde = np.asarray(y_tilde, dtype=float)
    if y_tilde.shape != (inst.m,):
        raise ConfigError(f"expected a {inst.m}-dim simplex point, got shape {y_tilde.shape}")
    if abs(float(y_tilde.sum()) - 1.0) > 1e-10 or float(y_tilde.min(initial=1.0)) < -1e-10:
        raise ConfigError("y~ must lie on the simplex within 1e-10")
    M = inst.C / inst.r_d
    for yi, Ai in zip(y_tilde, inst.A):
        M = M - yi * Ai
    w, _ = sym_eig(M)
    return float(w[0] + (inst.b / inst.r_p) @ y_tilde)


def lp_objective(inst: LpInstance, y: np.ndarray, counter: Optional[NoisyOracle] = None):
    """max_j {c_j - <A_j, y>} + (b/r_p)'y and the maximizing column.

    Lowest index wins ties.  When a counter oracle is supplied, the
    maximum-finding cost model is recorded on it: ceil(sqrt(n)) charged
    queries and n actual column scans.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.m,):
        raise ConfigError(f"expected a {inst.m}-dim point, got shape {y.shape}")
    if float(y.min(initial=0.0)) < -1e-12:
        raise ConfigError("y must be nonnegative")
    scores = inst.c - inst.A.T @ y
    j = int(np.argmax(scores))
    if counter is not None:
        counter.charge_queries(math.ceil(math.sqrt(inst.n)))
        counter.actual_evals += inst.n
    return float(scores[j] + (inst.b / inst.r_p) @ y), j


# ---------------------------------------------------------------------------
# internal dilated problems on the slack-augmented simplex


def _sdp_problem(inst: SdpInstance) -> ObjectiveSpec:
    d = inst.m + 1
    stack = np.stack(inst.A) if inst.m else np.zeros((0, inst.n, inst.n))
    b_tilde = inst.b / inst.r_p
    C_scaled = inst.C / inst.r_d

    def f(y):
        M = C_scaled - np.tensordot(y[: inst.m], stack, axes=1)
        return float(np.linalg.eigvalsh(M)[-1] + b_tilde @ y[: inst.m])

    def fbatch(Y):
        M = C_scaled[None] - np.tensordot(Y[:, : inst.m], stack, axes=([1], [0]))
        return np.linalg.eigvalsh(M)[:, -1] + Y[:, : inst.m] @ b_tilde

    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=inst.lipschitz(),
        domain=Simplex(dim_n=d, scale=1.0),
        name="sdp-eig-dual",
        batch_evaluator=fbatch,
    )


def _lp_problem(inst: LpInstance) -> ObjectiveSpec:
    d = inst.m + 1
    b_tilde = inst.b / inst.r_p
    c_scaled = inst.c / inst.r_d

    def f(y):
        return float(np.max(c_scaled - inst.A.T @ y[: inst.m]) + b_tilde @ y[: inst.m])

    def fbatch(Y):
        scores = c_scaled[None, :] - Y[:, : inst.m] @ inst.A
        return scores.max(axis=1) + Y[:, : inst.m] @ b_tilde

    return ObjectiveSpec(
        evaluator=f,
        d=d,
        G=inst.lipschitz(),
        domain=Simplex(dim_n=d, scale=1.0),
        name="lp-max-dual",
        batch_evaluator=fbatch,
    )


class LpEvalOracle(NoisyOracle):
    """Noisy oracle whose every point evaluation also books the internal
    maximum-finding cost: ceil(sqrt(n)) charged, n column scans actual."""

    def __init__(self, base, theta, n_cols, seed=0, noise_mode="hash"):
        super().__init__(base, theta, noise_mode=noise_mode, seed=seed)
        self.n_cols = n_cols
        self.scan_charge = math.ceil(math.sqrt(n_cols))

    def evaluate(self, x):
        v = super().evaluate(x)
        self.charge_queries(self.scan_charge)
        self.actual_evals += self.n_cols - 1
        return v

    def evaluate_batch(self, X):
        v = super().evaluate_batch(X)
        k = int(np.asarray(X).shape[0])
        self.charge_queries(k * self.scan_charge)
        self.actual_evals += k * (self.n_cols - 1)
        return v


# ---------------------------------------------------------------------------
# SDP solver


def _extract_sdp(inst: SdpInstance, y_tilde_avg: np.ndarray) -> DualCertificate:
    y = inst.r_d * np.maximum(y_tilde_avg[: inst.m], 0.0)
    S = -inst.C.copy()
    for yi, Ai in zip(y, inst.A):
        S = S + yi * Ai
    w, _ = sym_eig(S)
    y0 = float(-w[-1])  # -lambda_min(sum y_i A_i - C) = lambda_max(C - sum y_i A_i)
    slack = S + y0 * np.eye(inst.n)
    ws, _ = sym_eig(slack)
    objective = float(inst.r_p * y0 + inst.b @ y)
    return DualCertificate(
        y0=y0,
        y=y,
        objective=objective,
        min_slack_eig=float(ws[-1]),
        meta={"l1_norm": float(abs(y0) + np.abs(y).sum())},
    )


def solve_sdp_dual(
    inst: SdpInstance,
    epsilon: float,
    oracle_theta: float = 0.0,
    seed: int = 0,
    T: Optional[int] = None,
    feas_tol: float = 1e-8,
):
    """Mirror descent on the dilated eigenvalue objective; returns
    (DualCertificate, RunTrace).

    The oracle noise amplitude is min(oracle_theta, method budget) so a
    loose user theta never voids the accuracy guarantee.  A post-hoc
    audit warns when ||(y0, y)||_1 exceeds r_d, the signature of an r_d
    chosen too small (or an unbounded dual).
    """
    if not (0 < epsilon < 1):
        raise ConfigError(f"epsilon must lie in (0,1), got {epsilon!r}")
    inst.validate(strict_b=False)
    problem = _sdp_problem(inst)
    d = problem.d
    eps_inner = epsilon / (inst.r_p * inst.r_d)
    R = math.sqrt(math.log(d)) if d > 1 else 1.0
    geom = simplex_geometry(d, scale=1.0)
    budget = solver_theta_budget(
        "qmd", epsilon=eps_inner, G=problem.G, d=d, R=R, mu=1.0, K=2.0, norms=geom.norm
    )
    theta = min(oracle_theta, budget)
    oracle = NoisyOracle(problem, theta, seed=seed)
    cfg = SolverConfig(method="qmd", epsilon=eps_inner, R=R, seed=seed, T=T)
    trace = qmd_solve(problem, oracle, cfg, geom)
    cert = _extract_sdp(inst, trace.final_average)
    if cert.min_slack_eig < -max(feas_tol, 1e-6):
        raise NumericError(
            f"slack matrix lost feasibility: lambda_min = {cert.min_slack_eig:.3e}"
        )
    cert.meta.update(
        charged_queries=trace.charged_queries,
        actual_evals=trace.actual_evals,
        theta=theta,
        epsilon=epsilon,
        r_d_audit_ok=cert.meta["l1_norm"] <= inst.r_d + 1e-9,
    )
    if not cert.meta["r_d_audit_ok"]:
        warnings.warn(
            f"||(y0, y)||_1 = {cert.meta['l1_norm']:.4g} exceeds r_d = {inst.r_d}; "
            "the dual bound was too small for this instance",
            stacklevel=2,
        )
    return cert, trace


# ---------------------------------------------------------------------------
# LP solver


def _extract_lp(inst: LpInstance, y_tilde_avg: np.ndarray) -> DualCertificate:
    y = inst.r_d * np.maximum(y_tilde_avg[: inst.m], 0.0)
    deficits = inst.c - inst.A.T @ y
    y0 = float(np.max(deficits))
    slack = y0 - deficits  # y0*1 + A'y - c
    objective = float(inst.r_p * y0 + inst.b @ y)
    return DualCertificate(
        y0=y0,
        y=y,
        objective=objective,
        min_slack_eig=float(slack.min()),
        meta={"l1_norm": float(abs(y0) + np.abs(y).sum()),
              "slack_vector": slack},
    )


def solve_lp(
    inst: LpInstance,
    epsilon: float,
    oracle_theta: float = 0.0,
    seed: int = 0,
    T: Optional[int] = None,
):
    """Diagonal specialization of solve_sdp_dual; returns (cert, trace)."""
    if not (0 < epsilon < 1):
        raise ConfigError(f"epsilon must lie in (0,1), got {epsilon!r}")
    inst.validate(strict_b=False)
    problem = _lp_problem(inst)
    d = problem.d
    eps_inner = epsilon / (inst.r_p * inst.r_d)
    R = math.sqrt(math.log(d)) if d > 1 else 1.0
    geom = simplex_geometry(d, scale=1.0)
    budget = solver_theta_budget(
        "qmd", epsilon=eps_inner, G=problem.G, d=d, R=R, mu=1.0, K=2.0, norms=geom.norm
    )
    theta = min(oracle_theta, budget)
    oracle = LpEvalOracle(problem, theta, n_cols=inst.n, seed=seed)
    cfg = SolverConfig(method="qmd", epsilon=eps_inner, R=R, seed=seed, T=T)
    trace = qmd_solve(problem, oracle, cfg, geom)
    cert = _extract_lp(inst, trace.final_average)
    cert.meta.update(
        charged_queries=trace.charged_queries,
        actual_evals=trace.actual_evals,
        theta=theta,
        epsilon=epsilon,
        scan_charge=oracle.scan_charge,
        r_d_audit_ok=cert.meta["l1_norm"] <= inst.r_d + 1e-9,
    )
    if not cert.meta["r_d_audit_ok"]:
        warnings.warn(
            f"||(y0, y)||_1 = {cert.meta['l1_norm']:.4g} exceeds r_d = {inst.r_d}",
            stacklevel=2,
        )
    return cert, trace


# ---------------------------------------------------------------------------
# zero-sum games


def _zsg_embed(A: np.ndarray) -> LpInstance:
    """LP whose optimum is max_{y in simplex_m} min_j (A'y)_j.

    Variables (y, u, w) >= 0 with game payoff lambda = u - w:
    rows [-A' | 1 | -1] <= 0 enforce lambda <= (A'y)_j, the two
    [+-1' | 0 | 0] rows pin sum(y) = 1.  r_p = r_d = 2 cover
    sum(y) + |lambda| and the dual (x, v_+, v_-) masses.
    """
    m, n = A.shape
    M = np.zeros((n + 2, m + 2))
    M[:n, :m] = -A.T
    M[:n, m] = 1.0
    M[:n, m + 1] = -1.0
    M[n, :m] = 1.0
    M[n + 1, :m] = -1.0
    b = np.zeros(n + 2)
    b[n] = 1.0
    b[n + 1] = -1.0
    c = np.zeros(m + 2)
    c[m] = 1.0
    c[m + 1] = -1.0
    return LpInstance(A=M, b=b, c=c, r_p=2.0, r_d=2.0)


class _LpDescent:
    """One anytime mirror-descent stream on an embedded LP, stepped
    externally so two orientations can run in lockstep."""

    def __init__(self, inst: LpInstance, epsilon: float, theta: float, seed: int,
                 t_cap: int):
        self.inst = inst
        self.problem = _lp_problem(inst)
        d = self.problem.d
        self.geom = simplex_geometry(d, scale=1.0)
        eps_inner = epsilon / (inst.r_p * inst.r_d)
        self.R = math.sqrt(math.log(d)) if d > 1 else 1.0
        budget = solver_theta_budget(
            "qmd", epsilon=eps_inner, G=self.problem.G, d=d, R=self.R,
            mu=1.0, K=2.0, norms=self.geom.norm,
        )
        self.theta = min(theta, budget)
        self.oracle = LpEvalOracle(self.problem, self.theta, n_cols=inst.n, seed=seed)
        rho = 1.0 / (3.0 * t_cap)
        r1 = eps_inner / (6.0 * self.problem.G * self.geom.norm.vartheta)
        self.sub = SubgradientConfig(r1=r1, rho=rho,
                                     theta=max(self.theta, 2.0**-46), d=d,
                                     G=self.problem.G)
        self.rng = np.random.default_rng(seed)
        self.x = self.problem.domain.start()
        self.xbar = np.zeros(d)
        self.t = 0

    def step(self):
        self.t += 1
        est = subgradient_estimate(
            self.oracle, self.x, self.problem.G, self.sub, self.geom.norm, self.rng
        )
        self.xbar += (self.x - self.xbar) / self.t
        # anytime step size: eta_t = (R/G) / sqrt(t), mu = 1
        eta = (self.R / self.problem.G) / math.sqrt(self.t)
        self.x = mirror_step(self.geom, self.x, est.k, eta, self.problem.domain)

    def extract(self) -> DualCertificate:
        return _extract_lp(self.inst, self.xbar)


def solve_zsg(
    inst: ZsgInstance,
    epsilon: float,
    oracle_theta: float = 0.0,
    seed: int = 0,
    t_cap: int = 1_500_000,
    check_every: int = 512,
):
    """Game value and both mixed strategies; returns (value, x, y, trace).

    Two embedded LPs are descended in lockstep: one for the row player's
    max-min on A, one for the other side on -A'.  Each extraction yields
    a feasible dual certificate, so obj1 + obj2 upper-bounds the sum of
    the two suboptimalities; when it drops below epsilon the midpoint
    (obj1 - obj2)/2 is certified within epsilon/2 of the game value and
    the loop stops.  The iteration cap is the theorem count at unit
    constant (the proof-exact constant is not desk-runnable); hitting
    the cap uncertified emits a warning.
    """
    if not (0 < epsilon < 1):
        raise ConfigError(f"epsilon must lie in (0,1), got {epsilon!r}")
    inst.validate()
    A = inst.A
    lp_x = _zsg_embed(A)         # dual variables -> column player's x
    lp_y = _zsg_embed(-A.T)      # dual variables -> row player's y
    # theorem iteration count at unit constant for the harder orientation
    d_big = max(lp_x.m, lp_y.m) + 1
    R = math.sqrt(math.log(d_big))
    eps_inner = epsilon / 4.0  # r_p*r_d = 4 for both embeddings
    T = min(int(math.ceil((2.0 * R / eps_inner) ** 2)), t_cap)
    run_x = _LpDescent(lp_x, epsilon, oracle_theta, seed, T)
    run_y = _LpDescent(lp_y, epsilon, oracle_theta, seed + 1, T)
    trace = RunTrace(
        method="zsg",
        seed=seed,
        config={"method": "zsg", "epsilon": epsilon, "seed": seed, "T_cap": T,
                "check_every": check_every},
    )
    t0 = time.perf_counter()
    cert_x = cert_y = None
    certified = False

    def record(t):
        nonlocal cert_x, cert_y, certified
        cert_x, cert_y = run_x.extract(), run_y.extract()
        width = cert_x.objective + cert_y.objective
        lam = 0.5 * (cert_x.objective - cert_y.objective)
        trace.records.append(
            TraceRecord(
                iter=t,
                f_value=lam,
                gap=width,
                charged_queries=run_x.oracle.charged_queries + run_y.oracle.charged_queries,
                actual_evals=run_x.oracle.actual_evals + run_y.oracle.actual_evals,
                wallclock_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
        certified = width <= epsilon
        return certified

    for t in range(1, T + 1):
        run_x.step()
        run_y.step()
        if t % check_every == 0 or t == T:
            if record(t):
                break
    if not trace.records:
        record(T)
    if not certified:
        warnings.warn(
            f"zsg gap certificate {trace.records[-1].gap:.4g} did not reach "
            f"epsilon = {epsilon} within {T} iterations",
            stacklevel=2,
        )
    value = 0.5 * (cert_x.objective - cert_y.objective)

    def strategy(cert, k):
        z = np.maximum(cert.y[:k], 0.0)
        total = z.sum()
        if total < 0.5:
            warnings.warn("degenerate dual mass; returning uniform strategy", stacklevel=3)
            return np.full(k, 1.0 / k)
        return z / total

    x = strategy(cert_x, inst.n)
    y = strategy(cert_y, inst.m)
    trace.final_point = x
    trace.final_average = y
    trace.meta = {
        "T_run": run_x.t,
        "certified": certified,
        "value": value,
        "obj_x": cert_x.objective,
        "obj_y": cert_y.objective,
        "per_iter_charge_x": per_estimate_charge("subgradient", run_x.sub.rho, run_x.problem.d)
        + 2 * run_x.problem.d * run_x.oracle.scan_charge,
        "per_iter_charge_y": per_estimate_charge("subgradient", run_y.sub.rho, run_y.problem.d)
        + 2 * run_y.problem.d * run_y.oracle.scan_charge,
    }
    return value, x, y, trace


# ---------------------------------------------------------------------------
# certification


def check_dual_feasibility(
    inst: SdpInstance, cert: DualCertificate, tol: float = 1e-8
) -> FeasibilityReport:
    """Recompute the slack spectrum and sign conditions for a certificate."""
    S = cert.y0 * np.eye(inst.n) - inst.C
    for yi, Ai in zip(cert.y, inst.A):
        S = S + yi * Ai
    w, _ = sym_eig(S)
    lam_min = float(w[-1])
    y_min = float(np.min(cert.y, initial=0.0))
    obj = float(inst.r_p * cert.y0 + inst.b @ cert.y)
    conditions = {
        "slack_psd": (lam_min >= -tol, lam_min),
        "y_nonneg": (y_min >= -tol, y_min),
        "objective_match": (abs(obj - cert.objective) <= 1e-9, abs(obj - cert.objective)),
    }
    return FeasibilityReport(ok=all(p for p, _ in conditions.values()), conditions=conditions)


# ---------------------------------------------------------------------------
# file formats


def save_sdp(path: str, inst: SdpInstance):
    lines = [f"SDP {inst.m} {inst.n} {inst.r_p:.17g} {inst.r_d:.17g}"]
    lines.append("b " + " ".join(f"{v:.17g}" for v in inst.b))
    for idx, M in enumerate([inst.C] + list(inst.A)):
        lines.append(f"MAT {idx}")
        for i in range(inst.n):
            for j in range(i, inst.n):
                if M[i, j] != 0.0:
                    lines.append(f"{i} {j} {M[i, j]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_sdp(path: str) -> SdpInstance:
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip()]
    if not tokens or not tokens[0].startswith("SDP"):
        raise ConfigError(f"{path}: missing SDP header")
    head = tokens[0].split()
    if len(head) != 5:
        raise ConfigError(f"{path}: header needs 'SDP m n r_p r_d'")
    m, n = int(head[1]), int(head[2])
    r_p, r_d = float(head[3]), float(head[4])
    brow = tokens[1].split()
    if brow[0] != "b" or len(brow) != m + 1:
        raise ConfigError(f"{path}: expected 'b' row with {m} values")
    b = np.array([float(v) for v in brow[1:]])
    mats = [np.zeros((n, n)) for _ in range(m + 1)]
    current = None
    for line in tokens[2:]:
        parts = line.split()
        if parts[0] == "MAT":
            current = int(parts[1])
            if not (0 <= current <= m):
                raise ConfigError(f"{path}: matrix index {current} out of range 0..{m}")
            continue
        if current is None or len(parts) != 3:
            raise ConfigError(f"{path}: malformed triplet line {line!r}")
        i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        mats[current][i, j] = v
        mats[current][j, i] = v
    inst = SdpInstance(m=m, n=n, A=mats[1:], b=b, C=mats[0], r_p=r_p, r_d=r_d)
    inst.validate(strict_b=True)
    return inst


def save_lp(path: str, inst: LpInstance):
    lines = [f"LP {inst.m} {inst.n} {inst.r_p:.17g} {inst.r_d:.17g}"]
    lines.append(" ".join(f"{v:.17g}" for v in inst.b))
    lines.append(" ".join(f"{v:.17g}" for v in inst.c))
    for row in inst.A:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_lp(path: str) -> LpInstance:
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip()]
    if not tokens or not tokens[0].startswith("LP"):
        raise ConfigError(f"{path}: missing LP header")
    head = tokens[0].split()
    if len(head) != 5:
        raise ConfigError(f"{path}: header needs 'LP m n r_p r_d'")
    m, n = int(head[1]), int(head[2])
    if len(tokens) != 3 + m:
        raise ConfigError(f"{path}: expected b, c, and {m} matrix rows")
    b = np.array([float(v) for v in tokens[1].split()])
    c = np.array([float(v) for v in tokens[2].split()])
    A = np.array([[float(v) for v in tokens[3 + i].split()] for i in range(m)])
    if b.size != m or c.size != n or A.shape != (m, n):
        raise ConfigError(f"{path}: dimension mismatch against header")
    inst = LpInstance(A=A, b=b, c=c, r_p=float(head[3]), r_d=float(head[4]))
    inst.validate(strict_b=True)
    return inst


def load_zsg(path: str) -> ZsgInstance:
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    inst = ZsgInstance(A=A)
    inst.validate()
    return inst


def save_zsg(path: str, inst: ZsgInstance):
    np.savetxt(path, inst.A, delimiter=",", fmt="%.17g")


def save_certificate(path: str, cert: DualCertificate):
    lines = [
        "CERT",
        f"y0 {cert.y0:.17g}",
        "y " + " ".join(f"{v:.17g}" for v in cert.y),
        f"objective {cert.objective:.17g}",
        f"min_slack_eig {cert.min_slack_eig:.17g}",
        f"charged_queries {cert.meta.get('charged_queries', 0)}",
        f"actual_evals {cert.meta.get('actual_evals', 0)}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_certificate(path: str) -> DualCertificate:
    with open(path) as fh:
        tokens = [ln.strip() for ln in fh if ln.strip()]
    if not tokens or tokens[0] != "CERT":
        raise ConfigError(f"{path}: missing CERT header")
    kv = {}
    for line in tokens[1:]:
        key, _, rest = line.partition(" ")
        kv[key] = rest
    return DualCertificate(
        y0=float(kv["y0"]),
        y=np.array([float(v) for v in kv["y"].split()]) if kv["y"] else np.zeros(0),
        objective=float(kv["objective"]),
        min_slack_eig=float(kv["min_slack_eig"]),
        meta={
            "charged_queries": int(kv.get("charged_queries", 0)),
            "actual_evals": int(kv.get("actual_evals", 0)),
        },
    )
