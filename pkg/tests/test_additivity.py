import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdeg.additivity_tester import (AdditivityConfig, AdditivityTester, approx_additivity_test,
                                      approximate_g_additive, contraction,
                                      mult_approx_additivity_test)
from lowdeg.additivity_tester import test_additivity as run_additivity_checks
from lowdeg.core_math import MultiPoly
from lowdeg.oracles import (FunctionOracle, additive_plus_noise_oracle, far_oracle,
                            gaussian_distribution, poly_oracle, student_t_distribution,
                            uniform_ball_distribution)
from lowdeg.verdict import Reject, RejectSite


def test_contraction_examples():
    assert contraction([0.5, 0.0]) == 25
    assert contraction([0.01, 0.0]) == 1
    assert contraction([Fraction(3, 50), Fraction(4, 50)]) == 5


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=5))
def test_contraction_property(p):
    k = contraction(p)
    r2 = Fraction(1, 2500)
    n2 = sum(Fraction(v) ** 2 for v in p)
    assert k >= 1 and n2 <= r2 * k * k
    if k > 1:
        assert n2 > r2 * (k - 1) ** 2


def test_config_defaults():
    cfg = AdditivityConfig.default(1e-3, 0.1, 3, R=4.0)
    assert cfg.delta == pytest.approx(3e-3) and cfg.delta_exact == 3 * Fraction(1e-3)
    assert cfg.r == Fraction(1, 50)
    assert cfg.n_main == 480 and cfg.n_add == 100
    assert cfg.n_approx == max(2, math.ceil(8 * math.log(10)))
    assert cfg.no_case_separation() == pytest.approx(21015 * 4.0 * 3 ** 1.5 * 1e-3)
    assert AdditivityConfig.default(1e-3, 0.1, 3).no_case_separation() is None
    with pytest.raises(ValueError):
        AdditivityConfig.default(-1.0, 0.1, 2)


@pytest.mark.parametrize("alpha", [0.0, 1e-6, 1e-3])
def test_identity_checks_accept_additive_noise(alpha, rng):
    f = additive_plus_noise_oracle([1.0, -2.0, 0.5], alpha, seed=3)
    for s in range(5):
        assert run_additivity_checks(f, AdditivityConfig.default(alpha, 0.1, 3),
                                     np.random.default_rng(s)).accepted


def test_exact_linear_statistics_vanish(rng):
    f = additive_plus_noise_oracle([1.5, -0.25], 0.0)
    for _ in range(50):
        x, y = [Fraction(v) for v in rng.normal(size=2)], [Fraction(v) for v in rng.normal(size=2)]
        neg = [-v for v in x]
        diff = [a - b for a, b in zip(x, y)]
        assert f(neg) + f(x) == 0
        assert f(diff) - (f(x) - f(y)) == 0


def test_square_norm_rejected_and_difference_statistic_large(rng):
    f = poly_oracle(MultiPoly(2, {(2, 0): 1, (0, 2): 1}))
    v = run_additivity_checks(f, AdditivityConfig.default(1e-3, 0.1, 2), rng)
    assert not v.accepted and v.reject_site in (RejectSite.ADD_SYMMETRY, RejectSite.ADD_DIFFERENCE)
    big = 0
    for _ in range(200):
        x, y = rng.normal(size=2), rng.normal(size=2)
        stat = abs(f(x - y) - f(x) + f(y))
        assert stat == pytest.approx(abs(2 * y @ y - 2 * x @ y), rel=1e-9, abs=1e-12)
        big += stat > 3e-3
    assert big >= 190


def test_approximate_g_yes_bounds(rng):
    alpha = 1e-3
    f = additive_plus_noise_oracle([1.0, 2.0], alpha, seed=1)
    cfg = AdditivityConfig.default(alpha, 0.1, 2)
    for _ in range(50):
        p = rng.normal(size=2) * rng.uniform(0.01, 5)
        g = approximate_g_additive(f, p, cfg, rng)
        assert not isinstance(g, Reject)
        assert abs(float(g) - float(f(p))) <= 2 * cfg.delta * contraction(p) + 1e-9


def test_approximate_g_exact_linear(rng):
    f = additive_plus_noise_oracle([3.0, -1.0], 0.0)
    cfg = AdditivityConfig.default(0.0, 0.1, 2)
    for _ in range(50):
        p = [Fraction(v) for v in rng.normal(size=2) * 3]
        assert approximate_g_additive(f, p, cfg, rng) == f(p)


@pytest.mark.parametrize("alpha", [1e-6, 1e-3])
def test_concentrated_yes_accepts(alpha):
    dist = gaussian_distribution(3)
    f = additive_plus_noise_oracle([0.5, -1.0, 2.0], alpha, seed=2)
    for s in range(5):
        v = approx_additivity_test(f, dist, alpha, 0.2, rng=np.random.default_rng(s))
        assert v.accepted and v.stats["no_case_separation"] > 0


def test_linear_plus_jump_rejected():
    dist = gaussian_distribution(2)
    f = far_oracle(MultiPoly.linear([1.0, -1.0]), dist, 0.2, 100.0, seed=5)
    rej = sum(not approx_additivity_test(f, dist, 1e-3, 0.2, rng=np.random.default_rng(s)).accepted
              for s in range(30))
    assert rej >= 25


@pytest.mark.parametrize("dist", [gaussian_distribution(3, sigma=5.0), student_t_distribution(3, 2.0),
                                  uniform_ball_distribution(3, 10.0)])
def test_mult_variant_accepts_exact_linear(dist):
    f = additive_plus_noise_oracle([1.0, 0.25, -3.0], 0.0)
    for s in range(5):
        assert mult_approx_additivity_test(f, dist, 0.0, 0.2, rng=np.random.default_rng(s)).accepted


def test_mult_variant_accepts_noisy_heavy_tails():
    f = additive_plus_noise_oracle([1.0, -1.0], 1e-3, seed=4)
    dist = student_t_distribution(2, 1.5)
    for s in range(5):
        v = mult_approx_additivity_test(f, dist, 1e-3, 0.2, rng=np.random.default_rng(s))
        assert v.accepted and v.stats["worst_ratio"] <= 1


def test_mult_threshold_scales_with_kappa(rng):
    # f = linear + c at one far point: the tolerated deviation there grows with kappa_p
    alpha, n = 1e-3, 2
    base = poly_oracle(MultiPoly.linear([1, 1]))
    far_pt = np.array([40.0, 0.0])
    kappa = contraction(far_pt)
    bound = 5 * 3 * alpha * n ** 1.5 * kappa

    def make(offset):
        def fl(X):
            out = base.eval_batch(X)
            out[np.all(X == far_pt, axis=1)] += offset
            return out
        return FunctionOracle(n, float_eval=fl)
    cfg = AdditivityConfig.default(alpha, 0.5, n, n_main=1, n_add=5)
    pick = lambda r: far_pt  # noqa: E731
    assert mult_approx_additivity_test(make(0.9 * bound), pick, alpha, 0.5, cfg, rng).accepted
    v = mult_approx_additivity_test(make(1.1 * bound), pick, alpha, 0.5, cfg, rng)
    assert v.reject_site == RejectSite.MAIN_MISMATCH


def test_outside_points_skipped_by_concentrated_variant(rng):
    f = additive_plus_noise_oracle([1.0, 1.0], 0.0)
    cfg = AdditivityConfig.default(0.0, 0.5, 2, R=1.0, n_add=3)
    v = approx_additivity_test(f, lambda r: np.array([5.0, 5.0]), 0.0, 0.5, cfg, rng)
    assert v.accepted and v.stats["degenerate"] and v.stats["skipped"] == cfg.n_main


def test_estimator_api():
    f = additive_plus_noise_oracle([1.0, 2.0], 1e-4, seed=0)
    dist = gaussian_distribution(2)
    for variant in ("concentrated", "multiplicative"):
        t = AdditivityTester(alpha=1e-4, eps=0.3, variant=variant, random_state=0).fit(f, dist)
        assert t.accepted_
    with pytest.raises(ValueError):
        AdditivityTester(variant="other").fit(f, dist)
