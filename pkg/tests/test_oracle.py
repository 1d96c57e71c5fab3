"""Evaluation oracle: fixed noise, strict sup bound, query counters, norms."""

import math

import numpy as np
import pytest

from qzero.errors import ConfigError
from qzero.oracles import (
    Box,
    EuclideanBall,
    NormSpec,
    NoisyOracle,
    ObjectiveSpec,
    Simplex,
    Spectraplex,
    dual_exponent,
)
from qzero.problems import linear_simplex, quadratic


def sq_norm_problem(d=2):
    return ObjectiveSpec(
        evaluator=lambda x: float(np.dot(x, x)),
        d=d,
        G=4.0,
        domain=Box(np.full(d, -2.0), np.full(d, 2.0)),
        batch_evaluator=lambda X: np.sum(X * X, axis=1),
    )


def test_zero_theta_is_exact():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.0, noise_mode="none", seed=0)
    assert oracle.evaluate(np.array([1.0, 2.0])) == 5.0
    assert oracle.actual_evals == 1


def test_hash_noise_is_a_fixed_function_of_x():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.1, noise_mode="hash", seed=9)
    x = np.array([0.37, -1.2])
    assert oracle.evaluate(x) == oracle.evaluate(x)


def test_sinusoid_noise_vanishes_at_zero():
    prob = ObjectiveSpec(evaluator=lambda x: 0.0, d=2, G=1.0,
                         batch_evaluator=lambda X: np.zeros(len(X)))
    oracle = NoisyOracle(prob, theta=0.1, noise_mode="sinusoid", seed=0)
    assert oracle.evaluate(np.zeros(2)) == 0.0


def test_determinism_over_thousand_points():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.05, noise_mode="hash", seed=21)
    rng = np.random.default_rng(0)
    X = rng.uniform(-2.0, 2.0, (1000, 2))
    first = oracle.evaluate_batch(X)
    second = oracle.evaluate_batch(X)
    assert np.array_equal(first, second)


@pytest.mark.parametrize("mode", ["hash", "sinusoid"])
def test_noise_bound_is_strict(mode):
    prob = sq_norm_problem()
    theta = 0.03
    oracle = NoisyOracle(prob, theta=theta, noise_mode=mode, seed=5)
    rng = np.random.default_rng(1)
    X = rng.uniform(-2.0, 2.0, (10000, 2))
    exact = prob.batch_evaluator(X)
    noisy = oracle.evaluate_batch(X)
    assert np.all(np.abs(noisy - exact) < theta)


def test_batch_matches_scalar_and_counts_rows():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.1, noise_mode="hash", seed=3)
    X = np.array([[0.1, 0.2], [1.0, -1.0], [0.0, 0.0]])
    batch = oracle.evaluate_batch(X)
    singles = np.array([oracle.evaluate(x) for x in X])
    assert np.array_equal(batch, singles)
    assert oracle.actual_evals == 6


def test_charge_counter_identity_and_additivity():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.0, noise_mode="none", seed=0)
    assert oracle.charged_queries == 0
    oracle.charge_queries(5)
    assert oracle.charged_queries == 5
    oracle.charge_queries(0)
    assert oracle.charged_queries == 5
    oracle.charge_queries(3)
    oracle.charge_queries(4)
    assert oracle.charged_queries == 12
    with pytest.raises(ValueError):
        oracle.charge_queries(-1)


def test_invalid_inputs_are_rejected():
    oracle = NoisyOracle(sq_norm_problem(), theta=0.0, noise_mode="none", seed=0)
    with pytest.raises(ValueError):
        oracle.evaluate(np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        oracle.evaluate(np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ConfigError):
        NoisyOracle(sq_norm_problem(), theta=-0.1, noise_mode="hash", seed=0)
    with pytest.raises(ConfigError):
        NoisyOracle(sq_norm_problem(), theta=0.1, noise_mode="gauss", seed=0)


def test_dual_exponent_table():
    assert dual_exponent(2.0) == 2.0
    assert dual_exponent(1.0) == math.inf
    assert dual_exponent(4.0) == pytest.approx(4.0 / 3.0, abs=0.0, rel=1e-15)
    assert dual_exponent(math.inf) == 1.0
    with pytest.raises(ConfigError):
        dual_exponent(0.5)


def test_norm_spec_duality_and_comparison_constants():
    rng = np.random.default_rng(4)
    for p in (1.0, 2.0, 4.0, math.inf):
        spec = NormSpec(p, 6)
        if math.isfinite(spec.q) and math.isfinite(p):
            assert 1.0 / p + 1.0 / spec.q == pytest.approx(1.0, abs=1e-12)
        assert spec.vartheta * spec.vartheta_star <= 6.0 + 1e-9
        for _ in range(50):
            x = rng.normal(size=6)
            assert spec.norm(x) <= spec.vartheta * np.max(np.abs(x)) + 1e-12
            assert spec.dual_norm(x) <= spec.vartheta_star * np.max(np.abs(x)) + 1e-12


def test_holder_inequality_on_random_pairs():
    rng = np.random.default_rng(8)
    for p in (1.0, 2.0, 3.0):
        spec = NormSpec(p, 5)
        for _ in range(200):
            x = rng.normal(size=5)
            g = rng.normal(size=5)
            assert g @ x <= spec.norm(x) * spec.dual_norm(g) + 1e-12


@pytest.mark.parametrize("prob,p,sampler", [
    (quadratic(d=5, kappa=4.0), 2.0, "box"),
    (linear_simplex(d=8), 1.0, "simplex"),
])
def test_declared_lipschitz_bound_holds_empirically(prob, p, sampler):
    rng = np.random.default_rng(12)
    n = 10000
    if sampler == "box":
        lo, hi = prob.domain.lo, prob.domain.hi
        X = rng.uniform(lo, hi, (n, prob.d))
        Y = rng.uniform(lo, hi, (n, prob.d))
    else:
        X = rng.dirichlet(np.ones(prob.d), n)
        Y = rng.dirichlet(np.ones(prob.d), n)
    fx = prob.batch_evaluator(X)
    fy = prob.batch_evaluator(Y)
    dist = np.linalg.norm(X - Y, ord=p, axis=1)
    keep = dist > 1e-12
    assert np.all(np.abs(fx - fy)[keep] <= prob.G * dist[keep] + 1e-9)


def test_simplex_membership_and_projection():
    dom = Simplex(dim_n=4, scale=1.0)
    rng = np.random.default_rng(3)
    for _ in range(100):
        y = dom.project(rng.normal(size=4))
        assert np.all(y >= -1e-12)
        assert abs(y.sum() - 1.0) <= 1e-12
        assert dom.contains(y)
    scaled = Simplex(dim_n=3, scale=2.5)
    y = scaled.project(np.array([5.0, -1.0, 0.5]))
    assert abs(y.sum() - 2.5) <= 1e-12


def test_ball_box_spectraplex_projection():
    ball = EuclideanBall(center=np.zeros(2), radius=1.0)
    assert np.allclose(ball.project(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-15)
    assert ball.contains(np.array([0.6, 0.8]))

    box = Box(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
    assert np.allclose(box.project(np.array([5.0, -3.0])), [1.0, 0.0])

    spx = Spectraplex(n=3)
    M = np.diag([2.0, 1.0, -0.5])
    P = spx.project(M)
    w = np.linalg.eigvalsh(P)
    assert np.all(w >= -1e-12)
    assert abs(np.trace(P) - 1.0) <= 1e-10
    assert spx.contains(P)


def test_objective_value_does_not_touch_counters():
    prob = sq_norm_problem()
    oracle = NoisyOracle(prob, theta=0.1, noise_mode="hash", seed=2)
    v = prob.value(np.array([1.0, 1.0]))
    assert v == 2.0
    assert oracle.actual_evals == 0 and oracle.charged_queries == 0
