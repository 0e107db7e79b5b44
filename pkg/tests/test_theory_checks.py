import json
import math
from fractions import Fraction

import numpy as np
import pytest

from lowdeg.chebyshev import radial_cheb_coeffs
from lowdeg.core_math import MultiPoly, UniPoly
from lowdeg.theory_checks import (THEORY_CHECKS, CheckReport, check_additive_stability,
                                  check_chebyshev_invariants, check_degree_reduction,
                                  check_discrete_characterization, check_gajda_probe,
                                  check_indsum, check_local_to_global, check_median_bridging,
                                  check_median_close, check_sampler_fidelity,
                                  check_shifted_discrete_tv, reconstruct_from_slices)


def test_report_passes_iff_no_violations():
    assert CheckReport("x", 3, 0, 0.5).passed
    assert not CheckReport("x", 3, 1, -0.5).passed


def test_report_json_round_trip_handles_inf_and_fractions():
    rep = CheckReport("x", 1, 0, math.inf, {"a": Fraction(1, 3), "v": np.float64(2.0)})
    d = json.loads(rep.to_json())
    assert d["lemma_id"] == "x" and d["passed"] is True
    assert d["parameters"]["v"] == 2.0


# median closeness

def test_median_equal_values_are_trivially_close(rng):
    rep = check_median_close(np.full(2000, 3.5), 0.1, rng, n_pairs=5000)
    assert rep.parameters["eta_hat"] == 0 and rep.parameters["m_hat"] == 0
    assert rep.passed


def test_median_bimodal_flags_vacuity(rng):
    v = np.concatenate([np.zeros(1000), np.full(1000, 10.0)])
    rep = check_median_close(v, 1.0, rng, n_pairs=20_000)
    assert rep.parameters["vacuous"]
    assert rep.passed


def test_median_gaussian_three_sigma_passes(rng):
    rep = check_median_close(rng.standard_normal(20_000), 3.0, rng)
    assert rep.passed and not rep.parameters["vacuous"]


def test_median_needs_enough_values(rng):
    with pytest.raises(ValueError):
        check_median_close(np.zeros(999), 1.0, rng)


def test_median_bridging_small(rng):
    rep = check_median_bridging(rng, n=2, n_points=5, draws=2000)
    assert rep.passed and rep.trials == 5


# slice reconstruction

@pytest.mark.parametrize("d,n", [(1, 1), (1, 3), (2, 2), (3, 2), (2, 4)])
def test_local_to_global_reconstructs_planted_polynomial(d, n, rng):
    rep = check_local_to_global(d, n, 2, rng)
    assert rep.passed
    assert rep.parameters["mismatches"] == 0
    assert rep.parameters["reconstructed_degree"] == d
    assert rep.parameters["radial_direction"] is not None


def test_reconstruction_is_exact(rng):
    p = MultiPoly.random(2, 2, rng)
    h = reconstruct_from_slices(p, 2, [Fraction(-1), Fraction(0), Fraction(1, 2)])
    assert (h - p).total_degree <= 0 and h((Fraction(7, 3), Fraction(-5, 2))) == p((Fraction(7, 3), Fraction(-5, 2)))


def test_reconstruction_rejects_duplicate_abscissae(rng):
    p = MultiPoly.random(2, 1, rng)
    with pytest.raises(ValueError):
        reconstruct_from_slices(p, 2, [0, Fraction(0)])


def test_local_to_global_dimension_limit(rng):
    with pytest.raises(ValueError):
        check_local_to_global(1, 5, 2, rng)


# radial Chebyshev coefficients

@pytest.mark.parametrize("d", [0, 1, 2, 3, 4])
def test_top_chebyshev_coefficient_of_monomial(d):
    p = MultiPoly(1, {(d + 1,): 1})
    exp = radial_cheb_coeffs(p, [1], d + 1)
    assert exp.coeffs[d + 1] == Fraction(1, 2 ** d)


@pytest.mark.parametrize("d,ell,n", [(1, 3, 2), (2, 4, 3), (3, 5, 1)])
def test_degree_reduction_holds(d, ell, n, rng):
    p = MultiPoly.random(n, d, rng) + MultiPoly.random(n, ell, rng)
    rep = check_degree_reduction(p, d, 1.0, rng, n_dirs=40, grid=2001)
    assert rep.passed
    assert rep.parameters["D_hat"] <= rep.parameters["D_bound"] * (1 + 1e-9)


def test_degree_reduction_on_low_degree_poly_has_nothing_dropped(rng):
    p = MultiPoly.random(2, 2, rng)
    rep = check_degree_reduction(p, 2, 1.0, rng, n_dirs=10, grid=501)
    assert rep.passed and rep.parameters["D_hat"] == 0 and rep.parameters["eps_hat"] == 0


def test_degree_reduction_limits(rng):
    with pytest.raises(ValueError):
        check_degree_reduction(MultiPoly(1, {(7,): 1}), 1, rng=rng)


# approximate polynomials on an interval

@pytest.mark.parametrize("d", [1, 2, 3])
def test_gajda_exact_polynomial_has_zero_difference(d):
    rep = check_gajda_probe(lambda x: x ** d - 0.5 * x + 1, d)
    assert rep.parameters["phi_hat"] < 1e-9
    assert rep.passed


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gajda_next_monomial(d):
    rep = check_gajda_probe(lambda x: x ** (d + 1), d)
    assert rep.passed and rep.parameters["phi_hat"] > 0


def test_gajda_grid_input_with_noise(rng):
    xs = np.linspace(0, 1, 1001)
    ys = 2 * xs - 1 + rng.uniform(-1e-3, 1e-3, xs.size)
    rep = check_gajda_probe((xs, ys), 1)
    assert rep.passed and rep.parameters["grid"] == 1001


def test_gajda_degree_limit():
    with pytest.raises(ValueError):
        check_gajda_probe(lambda x: x, 4)


# sums of discrete Gaussians

@pytest.mark.parametrize("z", [(2,), (2, 2)])
def test_indsum_even_coefficients_land_on_sublattice(z, rng):
    rep = check_indsum(4, z, (1.0,) * len(z), 100_000, rng)
    assert rep.parameters["gcd"] == 2
    assert rep.parameters["off_lattice"] == 0
    assert rep.passed


def test_indsum_rejects_bad_coefficients(rng):
    with pytest.raises(ValueError):
        check_indsum(2, (0, 0), (1.0, 1.0), 10, rng)
    with pytest.raises(ValueError):
        check_indsum(2, (1, 1, 1, 1), (1.0,) * 4, 10, rng)


def test_shifted_tv_reports_vacuity(rng):
    rep = check_shifted_discrete_tv(rng=rng, samples=20_000)
    assert rep.parameters["vacuous"]
    assert rep.parameters["tv_exact"] <= 1
    assert abs(rep.parameters["tv_sampled"] - rep.parameters["tv_exact"]) < 0.05


# discrete characterization

@pytest.mark.parametrize("d,M", [(1, 2), (2, 8), (3, 12)])
def test_discrete_characterization_polynomial_agrees(d, M):
    p = UniPoly([Fraction(k + 1, 3) for k in range(d + 1)])
    rep = check_discrete_characterization(p, d, Fraction(3, 2), M)
    assert rep.passed
    assert rep.parameters["all_differences_zero"] and rep.parameters["agrees_with_interpolant"]


def test_discrete_characterization_corrupted_value_deviates():
    p = UniPoly([Fraction(1), Fraction(-2), Fraction(1, 2)])
    vals = [p(Fraction(k, 8)) for k in range(9)]
    vals[6] += Fraction(1, 7)
    rep = check_discrete_characterization(vals, 2, 1, 8)
    assert rep.passed  # nonzero differences and a deviation, as required
    assert not rep.parameters["all_differences_zero"]
    assert rep.parameters["first_deviation"] == 6


def test_discrete_characterization_minimal_grid():
    rep = check_discrete_characterization([0, 1, 2], 1, 1, 2)
    assert rep.passed and rep.parameters["differences_checked"] == 1
    with pytest.raises(ValueError):
        check_discrete_characterization([0, 1], 1, 1, 1)


# Chebyshev, additive stability and samplers

def test_chebyshev_invariants_small(rng):
    rep = check_chebyshev_invariants(rng, d_orth=5, d_max=4, n_monic=40, grid=2001, n_stab=20)
    assert rep.passed, rep.parameters
    assert rep.parameters["monic_min_ratio"] >= 1 - 1e-9


def test_additive_stability_small(rng):
    rep = check_additive_stability(rng, n_funcs=5, samples=2000)
    assert rep.passed and rep.parameters["max_ratio"] <= 1


def test_sampler_fidelity_small(rng):
    rep = check_sampler_fidelity(rng, n_samples=100_000)
    assert rep.passed
    assert rep.parameters["chi2_pvalue"] >= 0.001


# registry

def test_registry_ids():
    assert set(THEORY_CHECKS) == {
        "median_close", "median_bridging", "local_to_global", "degree_reduction", "gajda_probe",
        "indsum", "discrete_characterization", "chebyshev_invariants", "additive_stability",
        "shifted_discrete_tv", "sampler_fidelity"}


@pytest.mark.parametrize("cid", ["local_to_global", "discrete_characterization", "gajda_probe"])
def test_registry_checks_are_deterministic(cid):
    a = THEORY_CHECKS[cid](np.random.default_rng(7))
    b = THEORY_CHECKS[cid](np.random.default_rng(7))
    assert a.to_json() == b.to_json()
    assert a.lemma_id == cid and a.passed
