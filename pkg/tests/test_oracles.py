from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdeg.core_math import MultiPoly, char_sum
from lowdeg.oracles import (ConcentratedDistribution, FunctionOracle, LatticeDistribution,
                            additive_plus_noise_oracle, certify_farness, far_oracle,
                            gaussian_distribution, noisy_poly_oracle, poly_oracle,
                            student_t_distribution, uniform_ball_distribution)

SUM = MultiPoly.linear([1, 1])


def test_poly_oracle_value_and_counter():
    f = poly_oracle(SUM)
    assert f((1, 2)) == 3
    assert f.n_queries == 1
    f.eval_batch(np.zeros((5, 2)))
    f.exact_many([(0, 0), (1, 1)])
    assert f.n_queries == 8


def test_oracle_needs_an_evaluator():
    with pytest.raises(ValueError):
        FunctionOracle(2)
    f = FunctionOracle(1, float_eval=lambda X: X[:, 0])
    assert not f.supports_exact
    with pytest.raises(TypeError):
        f.exact((1,))
    with pytest.raises(ValueError):
        f.eval_batch(np.zeros((1, 3)))


@pytest.mark.parametrize("d", [2, 3])
def test_char_sum_zero_on_poly_oracle(rng, d):
    p = MultiPoly.random(3, 2, rng)
    f = poly_oracle(p)
    for _ in range(20):
        a = [Fraction(int(v), 7) for v in rng.integers(-20, 21, 3)]
        b = [Fraction(int(v), 5) for v in rng.integers(-20, 21, 3)]
        assert char_sum(f, a, b, d) == 0


def test_noisy_alpha_zero_is_poly(rng):
    p = MultiPoly.random(2, 2, rng)
    X = rng.normal(size=(50, 2))
    np.testing.assert_array_equal(noisy_poly_oracle(p, 0.0).eval_batch(X), poly_oracle(p).eval_batch(X))


def test_noise_bounded_on_1e6_points(rng):
    p = MultiPoly.random(3, 2, rng)
    alpha = 1e-3
    f = noisy_poly_oracle(p, alpha, seed=4)
    X = rng.normal(size=(1_000_000, 3))
    assert np.max(np.abs(f.eval_batch(X) - p.eval_float(X))) <= alpha * (1 + 1e-9)


def test_noise_exact_path_bounded(rng):
    p = MultiPoly.random(2, 2, rng)
    alpha = Fraction(1, 100)
    f = noisy_poly_oracle(p, alpha, seed=1)
    for _ in range(200):
        x = [Fraction(int(v), 64) for v in rng.integers(-300, 300, 2)]
        assert abs(f.exact(x) - p(x)) <= alpha


@pytest.mark.parametrize("d", [1, 2, 3])
def test_noisy_char_sum_within_delta(rng, d):
    alpha = 1e-3
    f = noisy_poly_oracle(MultiPoly.random(2, d, rng), alpha, seed=d)
    for _ in range(500):
        s = char_sum(f, rng.normal(size=2), rng.normal(size=2), d)
        assert abs(s) <= 2 ** (d + 1) * alpha + 1e-9


def test_function_semantics_all_families(rng):
    dist = gaussian_distribution(2)
    fams = [poly_oracle(SUM), noisy_poly_oracle(SUM, 0.1, 3),
            additive_plus_noise_oracle([1.0, -2.0], 0.1, 3), far_oracle(SUM, dist, 0.1, 1.0, 2)]
    pts = rng.normal(size=(100, 2))
    reps = np.tile(pts, (100, 1))  # 10^4 queries
    for f in fams:
        v = f.eval_batch(reps).reshape(100, 100)
        assert np.all(v == v[:1])


def test_additive_examples(rng):
    f = additive_plus_noise_oracle([1, 1], 0.0)
    x, y = [Fraction(3, 4), Fraction(-1, 3)], [Fraction(2), Fraction(5, 7)]
    assert f([a + b for a, b in zip(x, y)]) - f(x) - f(y) == 0
    alpha = 1e-3
    g = additive_plus_noise_oracle([0.5, -1.0, 2.0], alpha, seed=5)
    for _ in range(500):
        u, v = rng.normal(size=3), rng.normal(size=3)
        assert abs(g(u + v) - g(u) - g(v)) <= 3 * alpha + 1e-12
        assert abs(g(-u) + g(u)) <= 2 * alpha + 1e-12


def test_far_oracle_jump_zero_is_poly():
    f = far_oracle(SUM, gaussian_distribution(2), 0.1, 0.0)
    assert f.label == "poly"


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.25])
def test_far_oracle_mass_and_farness(eps):
    dist = gaussian_distribution(3)
    p = MultiPoly.random(3, 2, np.random.default_rng(1))
    f = far_oracle(p, dist, eps, 1.0, seed=3)
    lo, hi = f.params["achieved_mass_interval"]
    assert hi >= 2 * eps and lo <= 4 * eps
    cert = certify_farness(f, dist, 2, eps, 1.0)
    assert cert["certified"], cert


def test_far_oracle_exact_and_float_agree(rng):
    dist = gaussian_distribution(2)
    f = far_oracle(SUM, dist, 0.1, 1.0, seed=7)
    for _ in range(200):
        x = [Fraction(int(v), 16) for v in rng.integers(-40, 40, 2)]
        assert f.exact(x) == Fraction(f.eval_batch(np.array([x], dtype=float))[0]).limit_denominator(10 ** 6)


def test_far_oracle_on_lattice_atoms():
    dist = LatticeDistribution(2, 2, 2.0, 3.0, deficit=0.05)
    f = far_oracle(SUM, dist, 0.2, 1.0, seed=1)
    assert 0.4 - 0.02 <= f.params["achieved_mass"] <= 0.8


def test_far_oracle_rejects_degenerate_distribution():
    point = ConcentratedDistribution(lambda rng, size: np.zeros((size, 2)), 2, 1.0)
    with pytest.raises(ValueError):
        far_oracle(SUM, point, 0.1, 1.0)


def test_distribution_concentration_checked():
    with pytest.raises(ValueError):
        gaussian_distribution(3, R=1.0, deficit=0.01)
    d = gaussian_distribution(3, deficit=0.01)
    assert d.measured_deficit <= 0.01
    u = uniform_ball_distribution(4, 2.0)
    assert u.measured_deficit == 0
    t = student_t_distribution(3, df=3.0)
    assert t.measured_deficit <= 0.05


def test_lattice_distribution_exact_samples(rng):
    dist = LatticeDistribution(3, 5, 1.0, 2.0, deficit=0.05)
    for _ in range(20):
        x = dist.sample_exact(rng)
        assert dist.lattice.contains(x)
    with pytest.raises(ValueError):
        LatticeDistribution(2, Fraction(3, 2), 1.0, 2.0)


@given(st.integers(0, 2 ** 32), st.floats(1e-9, 10))
def test_noise_hash_deterministic_in_seed(seed, alpha):
    f = noisy_poly_oracle(SUM, alpha, seed)
    g = noisy_poly_oracle(SUM, alpha, seed)
    X = np.random.default_rng(seed % 1000).normal(size=(20, 2))
    assert np.array_equal(f.eval_batch(X), g.eval_batch(X))
    assert np.all(np.abs(f.eval_batch(X) - X.sum(axis=1)) <= alpha * (1 + 1e-9))
