from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdeg.core_math import (ComparisonPolicy, MultiPoly, UniPoly, alpha_coeffs, char_sum,
                              discrete_differential, forward_diff, lagrange_interpolate,
                              restrict_to_line, truncate)

fractions = st.fractions(min_value=-4, max_value=4, max_denominator=12)


def mono(n, exp, c=1):
    return MultiPoly(n, {tuple(exp): c})


X3 = mono(1, [3])


@st.composite
def multipolys(draw, n=None, max_deg=3):
    n = n or draw(st.integers(1, 3))
    k = draw(st.integers(1, 4))
    terms = {}
    for _ in range(k):
        exp = draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n))
        if sum(exp) <= max_deg:
            terms[tuple(exp)] = draw(fractions)
    return MultiPoly(n, terms)


# --- frozen examples ----------------------------------------------------------

@pytest.mark.parametrize("m, expected", [(1, (-1, 1)), (2, (-1, 2, -1)), (3, (-1, 3, -3, 1))])
def test_alpha_coeffs_examples(m, expected):
    assert alpha_coeffs(m).alphas == expected


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_alpha_coeffs_rejects_bad_order(bad):
    with pytest.raises(ValueError):
        alpha_coeffs(bad)


def test_char_sum_cubic_is_six():
    assert char_sum(X3, 0, 1, 2) == 6


def test_char_sum_constant_degree_zero():
    c = MultiPoly.constant(2, Fraction(7, 3))
    assert char_sum(c, (Fraction(1), Fraction(2)), (Fraction(-1), Fraction(5)), 0) == 0


def test_char_sum_query_count():
    calls = []

    def f(x):
        calls.append(x)
        return Fraction(0)
    char_sum(f, (Fraction(0),), (Fraction(1),), 3)
    assert len(calls) == 5


def test_forward_diff_examples():
    assert forward_diff(mono(1, [2]), 0, 1, 2) == 2
    assert forward_diff(MultiPoly(1, {(1,): 3, (0,): 1}), Fraction(5), Fraction(7, 2), 2) == 0
    assert forward_diff(mono(1, [1]), Fraction(3), Fraction(1, 2), 1) == Fraction(1, 2)


def test_discrete_differential_examples():
    h = Fraction(2, 3)
    assert discrete_differential(mono(1, [1]), Fraction(1), [h]) == -h
    # equal steps of length 3 on x^3: (-1)^3 * 3! = -6 (see the decisions ledger on the sign)
    assert discrete_differential(X3, 0, [1, 1, 1]) == -6
    assert discrete_differential(MultiPoly.constant(1, 4), 2, [1, Fraction(1, 3)]) == 0


def test_discrete_differential_errors():
    with pytest.raises(ValueError):
        discrete_differential(X3, 0, [])
    with pytest.raises(ValueError):
        discrete_differential(X3, 0, [1, 0])


def test_restrict_to_line_examples():
    assert restrict_to_line(mono(2, [1, 1]), (0, 0), (1, 1)) == UniPoly([0, 0, 1])
    p = MultiPoly(2, {(2, 0): 1, (0, 1): 1})
    assert restrict_to_line(p, (1, 0), (0, 1)) == UniPoly([1, 1])
    assert restrict_to_line(MultiPoly.constant(3, 5), (1, 2, 3), (4, 5, 6)) == UniPoly([5])


def test_truncate_examples():
    p = MultiPoly(2, {(2, 0): 3, (0, 1): 1})
    assert truncate(p, 1) == mono(2, [0, 1])
    q = mono(3, [1, 1, 1])
    assert truncate(q, 3) == q


def test_truncate_sup_bound_on_cube(rng):
    p = MultiPoly(2, {(0, 1): 1, (2, 1): Fraction(1, 10), (3, 0): Fraction(-1, 20)})
    X = rng.uniform(-1, 1, (2000, 2))
    gap = np.abs(p.eval_float(X) - truncate(p, 1).eval_float(X))
    assert gap.max() <= 0.1 + 0.05 + 1e-12


def test_lagrange_examples():
    assert lagrange_interpolate([(0, 1), (1, 2)]) == UniPoly([1, 1])
    assert lagrange_interpolate([(0, 0), (1, 1), (2, 4)]) == UniPoly([0, 0, 1])
    with pytest.raises(ValueError):
        lagrange_interpolate([(1, 2), (1, 3)])
    with pytest.raises(ValueError):
        lagrange_interpolate([])


def test_multipoly_drops_zeros_and_degree():
    p = MultiPoly(2, {(1, 0): 0, (2, 1): 3, (0, 0): 1})
    assert set(p.terms) == {(2, 1), (0, 0)}
    assert p.total_degree == 3
    assert MultiPoly(2).total_degree == 0


def test_multipoly_json_roundtrip():
    p = MultiPoly(3, {(1, 0, 2): Fraction(-7, 3), (0, 0, 0): 2})
    data = p.to_dict()
    assert data["n"] == 3 and all(isinstance(t["num"], str) for t in data["terms"])
    assert MultiPoly.from_json(p.to_json()) == p


def test_eval_scaled_int64_path_and_object_fallback_agree():
    p = MultiPoly(2, {(3, 0): Fraction(1, 7), (1, 2): -5, (0, 0): 2})
    small = np.array([[3, -4], [10, 7], [-2, 0]], dtype=np.int64)
    big = np.array([[10 ** 12, 7], [3, -4]], dtype=object)
    for nums, den in ((small, 9), (big, 9)):
        vals, scale = p.eval_scaled(nums, den)
        for row, v in zip(nums.tolist(), vals):
            assert Fraction(int(v), scale) == p.eval_exact([Fraction(x, den) for x in row])


def test_comparison_policy():
    tol = ComparisonPolicy.tolerant()
    assert tol.is_zero(1e-13)
    assert not tol.is_zero(1e-6)
    assert tol.is_zero(1e-6, scale=1e4)
    ex = ComparisonPolicy.exact()
    assert ex.is_exact and not ex.is_zero(Fraction(1, 10 ** 30))
    assert ComparisonPolicy.from_dict(tol.to_dict()) == tol


# --- properties ----------------------------------------------------------------

@given(st.integers(1, 12))
def test_alpha_sum_zero(m):
    assert sum(alpha_coeffs(m).alphas) == 0


@given(multipolys(), st.data())
def test_char_sum_vanishes_on_low_degree(p, data):
    pt = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    q = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    d = max(p.total_degree, data.draw(st.integers(0, 2)))
    assert char_sum(p, pt, q, d) == 0


@pytest.mark.parametrize("n, d", [(1, 1), (2, 2), (3, 2), (2, 3)])
def test_degree_d_plus_one_has_nonzero_char_sum(n, d):
    # random search over a small rational grid for a witness
    rng = np.random.default_rng(n * 10 + d)
    p = MultiPoly.random(n, d + 1, rng)
    while p.total_degree != d + 1:
        p = MultiPoly.random(n, d + 1, rng)
    grid = [Fraction(k, 2) for k in range(-4, 5)]
    for _ in range(200):
        pt = [grid[i] for i in rng.integers(0, len(grid), n)]
        q = [grid[i] for i in rng.integers(0, len(grid), n)]
        if char_sum(p, pt, q, d) != 0:
            return
    pytest.fail("no witness found")


@given(multipolys(), st.data())
def test_restriction_matches_evaluation(p, data):
    a = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    b = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    x = data.draw(fractions)
    u = restrict_to_line(p, a, b)
    assert u.degree <= p.total_degree
    assert u(x) == p([ai + x * bi for ai, bi in zip(a, b)])


def test_restriction_matches_evaluation_1000_triples(rng):
    p = MultiPoly.random(3, 3, rng)
    for _ in range(1000):
        a = [Fraction(int(v), 8) for v in rng.integers(-16, 17, 3)]
        b = [Fraction(int(v), 8) for v in rng.integers(-16, 17, 3)]
        x = Fraction(int(rng.integers(-16, 17)), 8)
        assert restrict_to_line(p, a, b)(x) == p([ai + x * bi for ai, bi in zip(a, b)])


@given(st.integers(1, 5), fractions, fractions.filter(lambda h: h != 0),
       st.lists(fractions, min_size=1, max_size=6))
def test_differential_equals_signed_forward_diff(m, x, h, coeffs):
    f = MultiPoly(1, {(k,): c for k, c in enumerate(coeffs)})
    assert discrete_differential(f, x, [h] * m) == (-1) ** m * forward_diff(f, x, h, m)


@given(multipolys(), st.integers(0, 3), st.data())
def test_truncate_idempotent_and_degree_bound(p, d, data):
    t = truncate(p, d)
    assert truncate(t, d) == t
    assert all(sum(e) <= d for e in t.terms)
    a = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    b = data.draw(st.lists(fractions, min_size=p.n, max_size=p.n))
    assert restrict_to_line(t, a, b).degree <= d


@given(st.lists(fractions, min_size=1, max_size=5), st.data())
def test_interpolation_reproduces(coeffs, data):
    u = UniPoly(coeffs)
    k = max(u.degree + 1, 1)
    xs = data.draw(st.lists(fractions, min_size=k, max_size=k, unique=True))
    assert lagrange_interpolate([(x, u(x)) for x in xs]) == u
