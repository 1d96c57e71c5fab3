"""First-order methods over noisy-oracle gradient estimates: trajectories,
averaged-iterate gaps, early termination, charge accounting, determinism."""

import math
import warnings

import numpy as np
import pytest

from qzero.errors import ConfigError
from qzero.geometry import euclidean_geometry, simplex_geometry, spectraplex_geometry
from qzero.gradients import GradientEstimator
from qzero.oracles import (
    Box,
    EuclideanBall,
    NormSpec,
    NoisyOracle,
    ObjectiveSpec,
    Simplex,
)
from qzero.problems import linear_simplex, linf_center, quadratic
from qzero.solvers import (
    SolverConfig,
    expected_charged_queries,
    qda_solve,
    qgd_convex_solve,
    qgd_pl_solve,
    qmd_solve,
    qmp_solve,
    qpsm_solve,
    solve,
    solver_theta_budget,
)


def ball_sq_problem():
    return ObjectiveSpec(
        evaluator=lambda x: float(x @ x),
        d=2,
        G=2.0,
        L=2.0,
        f_star=0.0,
        exact_gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
        domain=EuclideanBall(center=np.zeros(2), radius=1.0),
        name="ballsq",
        batch_evaluator=lambda X: np.sum(X * X, axis=1),
    )


def lin3_problem(c=(0.0, 1.0, 2.0), G=2.0, L=None):
    c = np.asarray(c, dtype=float)
    return ObjectiveSpec(
        evaluator=lambda x: float(c @ x),
        d=3,
        G=G,
        L=L,
        f_star=0.0,
        exact_gradient=lambda x: c.copy(),
        domain=Simplex(dim_n=3, scale=1.0),
        name="lin3",
        batch_evaluator=lambda X: X @ c,
    )


def const3_problem(value=0.25, with_gradient=False):
    return ObjectiveSpec(
        evaluator=lambda x: value,
        d=3,
        G=1.0,
        L=1.0,
        f_star=value,
        exact_gradient=(lambda x: np.zeros(3)) if with_gradient else None,
        domain=Simplex(dim_n=3, scale=1.0),
        name="const3",
        batch_evaluator=lambda X: np.full(len(X), value),
    )


def on_simplex(x, tol=1e-9):
    return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)


# ---------------------------------------------------------------- config plumbing


def test_solver_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(method="newton", epsilon=0.1, seed=0)
    with pytest.raises(ConfigError):
        SolverConfig(method="qpsm", epsilon=0.0, seed=0)
    with pytest.raises(ConfigError):
        SolverConfig(method="qpsm", epsilon=0.1, seed=0, T=0)


def test_solve_dispatch_matches_direct_calls():
    prob = linear_simplex(d=4)
    cfg = SolverConfig(method="qpsm", epsilon=0.3, seed=0, T=50)
    t1 = solve(prob, NoisyOracle(prob, 0.0, noise_mode="none", seed=0), cfg)
    t2 = qpsm_solve(prob, NoisyOracle(prob, 0.0, noise_mode="none", seed=0), cfg)
    np.testing.assert_array_equal(t1.final_point, t2.final_point)
    assert [r.f_value for r in t1.records] == [r.f_value for r in t2.records]


def test_solver_theta_budget_requires_method_fields():
    assert solver_theta_budget("qpsm", epsilon=0.1, G=1.0, d=4, R=1.0) > 0
    with pytest.raises(ConfigError):
        solver_theta_budget("qmd", epsilon=0.1, G=1.0, d=4, R=1.0)  # no mu/K/norms
    with pytest.raises(ConfigError):
        solver_theta_budget("banana", epsilon=0.1, G=1.0, d=4, R=1.0)


def test_expected_charged_queries_rejects_unknown_method():
    with pytest.raises(ConfigError):
        expected_charged_queries("banana", 10, 4)


# ---------------------------------------------------------------- qpsm


def test_qpsm_ball_averaged_gap():
    prob = ball_sq_problem()
    hits = 0
    for seed in range(30):
        oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=seed)
        tr = qpsm_solve(prob, oracle, SolverConfig(
            method="qpsm", epsilon=0.05, seed=seed, x0=np.array([1.0, 0.0])))
        assert float(np.linalg.norm(tr.final_average)) <= 1.0 + 1e-9
        if tr.records[-1].gap <= 0.05:
            hits += 1
    assert hits >= 20


def test_qpsm_linear_simplex_hits_epsilon():
    prob = linear_simplex(d=4)
    for seed in range(5):
        oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=seed)
        tr = qpsm_solve(prob, oracle, SolverConfig(method="qpsm", epsilon=0.1, seed=seed))
        assert tr.records[-1].gap <= 0.1
        assert on_simplex(tr.final_average)


def test_qpsm_single_step_structure():
    prob = linear_simplex(d=4)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qpsm_solve(prob, oracle, SolverConfig(method="qpsm", epsilon=0.1, seed=0, T=1))
    assert len(tr.records) == 2
    np.testing.assert_array_equal(tr.final_average, prob.domain.start())
    np.testing.assert_allclose(
        tr.final_point, [0.73570225, 0.26429775, 0.0, 0.0], atol=1e-6)
    assert on_simplex(tr.final_point)


def test_qpsm_overdriven_theta_sets_warn_flag():
    prob = linear_simplex(d=4)
    oracle = NoisyOracle(prob, 0.05, noise_mode="hash", seed=0)
    with pytest.warns(UserWarning, match="exceeds the method budget"):
        tr = qpsm_solve(prob, oracle, SolverConfig(method="qpsm", epsilon=0.1, seed=0, T=30))
    assert tr.theta_warned is True
    assert tr.theta_budget < 0.05


# ---------------------------------------------------------------- qgd_convex


def test_qgd_convex_terminates_within_iteration_cap():
    prob = ObjectiveSpec(
        evaluator=lambda x: 0.5 * float(x @ x), d=2, G=4.0, L=1.0, mu=1.0, f_star=0.0,
        exact_gradient=lambda x: np.asarray(x, dtype=float),
        domain=Box(np.array([-2.0, -2.0]), np.array([2.0, 2.0])), name="halfsq",
        batch_evaluator=lambda X: 0.5 * np.sum(X * X, axis=1))
    cap = math.ceil(4.0 * prob.L * 2.0 / 1e-3)
    hits = 0
    for seed in range(12):
        oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=seed)
        tr = qgd_convex_solve(prob, oracle, SolverConfig(
            method="qgd_convex", epsilon=1e-3, seed=seed, R=math.sqrt(2.0),
            x0=np.array([1.0, 1.0])))
        assert tr.meta["T"] <= cap
        if tr.records[-1].gap <= 1e-3:
            hits += 1
    assert hits >= 8


def test_qgd_convex_exact_run_tracks_expected_decay():
    prob = quadratic(d=2, kappa=10.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    R = math.sqrt(11.0)
    tr = qgd_convex_solve(prob, oracle, SolverConfig(
        method="qgd_convex", epsilon=1e-12, seed=0, backend="exact", R=R, T=60,
        x0=np.array([1.0, 1.0])))
    assert len(tr.records) == 61
    for rec in tr.records:
        assert rec.gap <= 4.0 * prob.L * R * R / (rec.iter + 8)
    assert tr.records[-1].gap <= 1e-5


def test_qgd_convex_at_optimum_terminates_immediately():
    prob = quadratic(d=2, kappa=10.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qgd_convex_solve(prob, oracle, SolverConfig(
        method="qgd_convex", epsilon=1e-3, seed=0, backend="exact", R=1.0, x0=np.zeros(2)))
    assert len(tr.records) == 1
    assert tr.meta["T"] == 0
    assert tr.charged_queries == 1


def test_qgd_convex_requires_f_star_and_R():
    no_star = ObjectiveSpec(
        evaluator=lambda x: float(x @ x), d=2, G=2.0, L=2.0,
        exact_gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
        domain=Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0])))
    oracle = NoisyOracle(no_star, 0.0, noise_mode="none", seed=0)
    with pytest.raises(ConfigError):
        qgd_convex_solve(no_star, oracle, SolverConfig(
            method="qgd_convex", epsilon=0.1, seed=0, R=1.0))
    prob = quadratic(d=2, kappa=2.0)
    with pytest.raises(ConfigError):
        qgd_convex_solve(prob, NoisyOracle(prob, 0.0, noise_mode="none", seed=0),
                         SolverConfig(method="qgd_convex", epsilon=0.1, seed=0))


# ---------------------------------------------------------------- qgd_pl


def test_qgd_pl_exact_backend_contracts_linearly():
    prob = quadratic(d=2, kappa=10.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qgd_pl_solve(prob, oracle, SolverConfig(
        method="qgd_pl", epsilon=1e-4, seed=0, backend="exact", x0=np.array([1.0, 1.0])))
    delta0 = tr.records[0].gap
    for rec in tr.records:
        assert rec.gap <= (1.0 - 1.0 / 10.0) ** rec.iter * delta0 + 1e-12


def test_qgd_pl_started_at_optimum_still_emits_records():
    prob = quadratic(d=2, kappa=10.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qgd_pl_solve(prob, oracle, SolverConfig(
        method="qgd_pl", epsilon=1e-4, seed=0, backend="exact", x0=np.zeros(2)))
    assert tr.meta["T"] == 1
    assert len(tr.records) == 2
    assert all(rec.gap == 0.0 for rec in tr.records)


def test_qgd_pl_requires_mu():
    no_mu = ObjectiveSpec(
        evaluator=lambda x: float(x @ x), d=2, G=2.0, L=2.0, f_star=0.0,
        exact_gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
        domain=Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0])))
    oracle = NoisyOracle(no_mu, 0.0, noise_mode="none", seed=0)
    with pytest.raises(ConfigError):
        qgd_pl_solve(no_mu, oracle, SolverConfig(method="qgd_pl", epsilon=0.1, seed=0))


# ---------------------------------------------------------------- qmd


def test_qmd_linear_on_simplex():
    prob = lin3_problem()
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qmd_solve(prob, oracle, SolverConfig(method="qmd", epsilon=0.05, seed=0),
                   simplex_geometry(3, scale=1.0))
    assert tr.records[-1].gap <= 0.05
    assert on_simplex(tr.final_average)


def test_qmd_linf_center_on_simplex():
    prob = linf_center(d=3)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qmd_solve(prob, oracle, SolverConfig(method="qmd", epsilon=0.2, seed=0),
                   simplex_geometry(3, scale=1.0))
    assert tr.records[-1].gap <= 0.2


def test_qmd_euclidean_geometry_reproduces_qpsm_bitwise():
    prob = quadratic(d=3, kappa=4.0)
    kw = dict(epsilon=0.5, T=200, eta=0.02, r1=1e-3, rho=1.0 / 600.0, seed=3,
              x0=np.array([1.0, 2.0, -1.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # theta deliberately above budget
        tr_a = qpsm_solve(prob, NoisyOracle(prob, 1e-4, noise_mode="hash", seed=3),
                          SolverConfig(method="qpsm", **kw))
        tr_b = qmd_solve(prob, NoisyOracle(prob, 1e-4, noise_mode="hash", seed=3),
                         SolverConfig(method="qmd", **kw), euclidean_geometry(3))
    assert len(tr_a.records) == len(tr_b.records) == 201
    assert all(ra.f_value == rb.f_value for ra, rb in zip(tr_a.records, tr_b.records))
    np.testing.assert_array_equal(tr_a.final_point, tr_b.final_point)


def test_qmd_geometry_dimension_mismatch():
    prob = lin3_problem()
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    with pytest.raises(ConfigError):
        qmd_solve(prob, oracle, SolverConfig(method="qmd", epsilon=0.1, seed=0, T=10),
                  simplex_geometry(4, scale=1.0))


# ---------------------------------------------------------------- qda


def test_qda_zero_gradients_keep_the_entropy_minimizer():
    prob = const3_problem()
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=1)
    tr = qda_solve(prob, oracle, SolverConfig(method="qda", epsilon=0.3, seed=1, T=20),
                   simplex_geometry(3, scale=1.0))
    uniform = np.full(3, 1.0 / 3.0)
    np.testing.assert_array_equal(tr.final_point, uniform)
    np.testing.assert_array_equal(tr.final_average, uniform)


def test_qda_single_step_closed_form():
    # one accumulated gradient (ln2, 0, 0) at eta=1: weights (1/2, 1, 1)
    prob = lin3_problem(c=(math.log(2.0), 0.0, 0.0), G=1.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=1)
    tr = qda_solve(prob, oracle, SolverConfig(method="qda", epsilon=0.3, seed=1, T=1, eta=1.0),
                   simplex_geometry(3, scale=1.0))
    np.testing.assert_allclose(tr.final_point, [0.2, 0.4, 0.4], atol=1e-6)


def test_qda_linear_gap():
    prob = lin3_problem()
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qda_solve(prob, oracle, SolverConfig(method="qda", epsilon=0.1, seed=0),
                   simplex_geometry(3, scale=1.0))
    assert tr.records[-1].gap <= 0.1
    assert on_simplex(tr.final_average)


def test_qda_rejects_geometry_without_closed_form():
    prob = lin3_problem()
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    with pytest.raises(ConfigError):
        qda_solve(prob, oracle, SolverConfig(method="qda", epsilon=0.1, seed=0, T=10),
                  spectraplex_geometry(2))


# ---------------------------------------------------------------- qmp


def test_qmp_constant_objective_keeps_start():
    prob = const3_problem(with_gradient=True)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qmp_solve(prob, oracle, SolverConfig(method="qmp", epsilon=0.1, seed=0, T=10,
                                              backend="exact"),
                   simplex_geometry(3, scale=1.0))
    uniform = np.full(3, 1.0 / 3.0)
    np.testing.assert_array_equal(tr.final_point, uniform)
    np.testing.assert_array_equal(tr.final_average, uniform)


def test_qmp_linear_exact_reference_run():
    prob = lin3_problem(c=(0.0, 0.1, 0.2), G=0.2, L=0.04)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qmp_solve(prob, oracle, SolverConfig(method="qmp", epsilon=0.05, seed=0,
                                              backend="exact"),
                   simplex_geometry(3, scale=1.0))
    assert tr.meta["T"] == 4
    assert tr.records[-1].gap == pytest.approx(0.002379, abs=1e-6)
    assert tr.records[-1].gap <= 0.05
    assert tr.charged_queries == 8
    assert on_simplex(tr.final_average)


def test_qmp_requires_L():
    prob = lin3_problem()  # L absent
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    with pytest.raises(ConfigError):
        qmp_solve(prob, oracle, SolverConfig(method="qmp", epsilon=0.1, seed=0),
                  simplex_geometry(3, scale=1.0))


# ---------------------------------------------------------------- audits


def test_descent_lemma_audit_on_a_quadratic():
    # mean one-step drop over 400 surrogate draws obeys the declared
    # bias/variance inflation of the smooth descent inequality
    prob = quadratic(d=5, kappa=5.0)
    lam = np.linspace(1.0, 5.0, 5)
    x = np.full(5, 0.5)
    g = lam * x
    eta = 1.0 / prob.L
    sigma = 0.2
    drops = np.empty(400)
    for s in range(drops.size):
        rng = np.random.default_rng(1000 + s)
        oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=s)
        est = GradientEstimator(prob, oracle, "surrogate", NormSpec(2.0, 5), rng)
        xp = prob.domain.project(x - eta * est.estimate(x, sigma).k)
        drops[s] = prob.value(xp) - prob.value(x)
    b_norm2 = 5 * (0.75 * sigma**2) ** 2
    sv2 = 5 * sigma**2
    bound = (-(eta / 2.0) * float(g @ g) + (eta / 2.0) * b_norm2
             + (eta**2 * prob.L / 2.0) * sv2)
    se = drops.std(ddof=1) / math.sqrt(drops.size)
    assert drops.mean() <= bound + 3.0 * se


def test_charged_queries_match_closed_forms():
    prob = quadratic(d=4, kappa=3.0)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qpsm_solve(prob, oracle, SolverConfig(method="qpsm", epsilon=0.5, seed=0, T=17))
    assert tr.charged_queries == expected_charged_queries("qpsm", 17, 4, rho=tr.meta["rho"])
    assert tr.charged_queries == oracle.charged_queries

    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qgd_pl_solve(prob, oracle, SolverConfig(
        method="qgd_pl", epsilon=1e-3, seed=0, T=9, backend="surrogate", x0=np.ones(4)))
    assert tr.charged_queries == expected_charged_queries(
        "qgd_pl", 9, 4, backend="surrogate", sigma=tr.meta["sigma"], G=prob.G)

    lin = lin3_problem(c=(0.0, 0.1, 0.2), G=0.2, L=0.04)
    oracle = NoisyOracle(lin, 0.0, noise_mode="none", seed=0)
    tr = qmp_solve(lin, oracle, SolverConfig(method="qmp", epsilon=0.05, seed=0, T=11),
                   simplex_geometry(3, scale=1.0))
    assert tr.charged_queries == expected_charged_queries(
        "qmp", 11, 3, backend="surrogate", sigma=tr.meta["sigma"], G=lin.G)

    quad = quadratic(d=2, kappa=10.0)
    oracle = NoisyOracle(quad, 0.0, noise_mode="none", seed=5)
    tr = qgd_convex_solve(quad, oracle, SolverConfig(
        method="qgd_convex", epsilon=1e-2, seed=5, R=math.sqrt(11.0),
        x0=np.array([1.0, 1.0])))
    assert tr.charged_queries == expected_charged_queries(
        "qgd_convex", 0, 2, backend="surrogate", sigmas=tr.meta["sigmas"],
        value_checks=tr.meta["value_checks"])


def test_identical_seed_gives_bit_identical_traces():
    prob = linear_simplex(d=5)
    cfg = SolverConfig(method="qpsm", epsilon=0.2, seed=11, T=150)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # fixed T leaves theta above budget
        tr1 = qpsm_solve(prob, NoisyOracle(prob, 1e-6, noise_mode="hash", seed=11), cfg)
        tr2 = qpsm_solve(prob, NoisyOracle(prob, 1e-6, noise_mode="hash", seed=11), cfg)
    assert [r.f_value for r in tr1.records] == [r.f_value for r in tr2.records]
    np.testing.assert_array_equal(tr1.final_point, tr2.final_point)
    np.testing.assert_array_equal(tr1.final_average, tr2.final_average)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr3 = qpsm_solve(prob, NoisyOracle(prob, 1e-6, noise_mode="hash", seed=12),
                         SolverConfig(method="qpsm", epsilon=0.2, seed=12, T=150))
    assert [r.f_value for r in tr1.records] != [r.f_value for r in tr3.records]


def test_records_carry_cumulative_counters():
    prob = linear_simplex(d=4)
    oracle = NoisyOracle(prob, 0.0, noise_mode="none", seed=0)
    tr = qpsm_solve(prob, oracle, SolverConfig(method="qpsm", epsilon=0.2, seed=0, T=25))
    charges = [r.charged_queries for r in tr.records]
    assert charges[0] == 0
    assert all(b > a for a, b in zip(charges, charges[1:]))
    assert charges[-1] == tr.charged_queries
    iters = [r.iter for r in tr.records]
    assert iters == list(range(26))
