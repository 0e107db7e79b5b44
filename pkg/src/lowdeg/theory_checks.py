"""Empirical verifiers for the structural lemmas behind the testers.

Every check is deterministic given its generator and returns a
:class:`CheckReport`. ``worst_margin`` is the smallest value of
``bound - observed`` over the trials, so a negative margin marks a violation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .chebyshev import (ChebExpansion, anticoncentration_search, cheb_eval, cheb_nodes,
                        radial_cheb_coeffs, stability_bound)
from .core_math import (MultiPoly, UniPoly, as_fraction, lagrange_interpolate,
                        restrict_to_line)
from .oracles import additive_plus_noise_oracle, hash_noise_units
from .sampling import (_ratio, _table, discrete_gaussian_pmf, empirical_tv_discrete,
                       smoothing_bounds)
from .validation import check_rng, wilson_interval

__all__ = [
    "CheckReport",
    "check_median_close",
    "check_median_bridging",
    "check_local_to_global",
    "reconstruct_from_slices",
    "check_degree_reduction",
    "check_gajda_probe",
    "check_indsum",
    "check_discrete_characterization",
    "check_chebyshev_invariants",
    "check_additive_stability",
    "check_shifted_discrete_tv",
    "check_sampler_fidelity",
    "THEORY_CHECKS",
]

Z3 = 3.0  # three-sigma slack for every statistical comparison


@dataclass
class CheckReport:
    """Outcome of one theory check.

    A report passes when ``violations == 0``. ``parameters`` holds the
    inputs and the measured statistics.
    """

    lemma_id: str
    trials: int
    violations: int
    worst_margin: float
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"lemma_id": self.lemma_id, "trials": self.trials, "violations": self.violations,
                "worst_margin": _num(self.worst_margin), "passed": self.passed,
                "parameters": _jsonify(self.parameters)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else (None if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def _jsonify(x):
    if isinstance(x, dict):
        return {str(k): _jsonify(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonify(v) for v in x]
    if isinstance(x, (Fraction, float, np.floating)):
        return _num(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# median versus a random element


def check_median_close(values, delta: float, rng=None, n_pairs: int = 100_000) -> CheckReport:
    """Median-closeness: the fraction far from the median is at most four times the far-pair rate.

    ``eta_hat`` is the fraction of random pairs at distance at least
    ``delta``; ``m_hat`` the fraction of values at distance at least
    ``delta`` from the sample median. Passes when the three-sigma lower
    Wilson bound of ``m_hat`` does not exceed four times the upper bound of
    ``eta_hat``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 1000:
        raise ValueError("need at least 1000 sample values")
    rng = check_rng(rng)
    i = rng.integers(0, v.size, n_pairs)
    j = rng.integers(0, v.size, n_pairs)
    far_pairs = int(np.count_nonzero(np.abs(v[i] - v[j]) >= delta))
    med = float(np.median(v))
    far_med = int(np.count_nonzero(np.abs(v - med) >= delta))
    eta, m = far_pairs / n_pairs, far_med / v.size
    eta_hi = wilson_interval(far_pairs, n_pairs, Z3)[1]
    m_lo = wilson_interval(far_med, v.size, Z3)[0]
    bound = 4 * eta_hi
    return CheckReport("median_close", 1, int(m_lo > bound), bound - m_lo, {
        "delta": delta, "eta_hat": eta, "m_hat": m, "median": med,
        "vacuous": 4 * eta >= 1, "n_values": int(v.size), "n_pairs": n_pairs})


def check_median_bridging(rng=None, n: int = 3, alpha: float = 1e-3, n_points: int = 50,
                          draws: int = 10_000) -> CheckReport:
    """Median-closeness on the self-corrected values ``g_x(p) = f(p - x) + f(x)`` of an additive YES instance.

    ``delta`` is the measured 90% quantile of pairwise gaps, so the closeness
    hypothesis holds with ``eta`` about 0.1 and the check is not vacuous.
    """
    rng = check_rng(rng)
    f = additive_plus_noise_oracle(rng.standard_normal(n), alpha, seed=int(rng.integers(2 ** 31)))
    worst, bad = math.inf, 0
    for _ in range(n_points):
        p = rng.standard_normal(n) / 50
        xs = rng.standard_normal((draws, n))
        g = f.eval_batch(p[None, :] - xs) + f.eval_batch(xs)
        a, b = rng.integers(0, draws, (2, 20_000))
        delta = float(np.quantile(np.abs(g[a] - g[b]), 0.9))
        rep = check_median_close(g, delta, rng, n_pairs=100_000)
        worst = min(worst, rep.worst_margin)
        bad += rep.violations
    return CheckReport("median_bridging", n_points, bad, worst,
                       {"n": n, "alpha": alpha, "draws": draws})


# ---------------------------------------------------------------------------
# slice reconstruction


def _lift_last(u: UniPoly, n: int) -> MultiPoly:
    return MultiPoly(n, {(0,) * (n - 1) + (k,): c for k, c in enumerate(u.coeffs) if c})


def _basis(cs: Sequence, i: int) -> UniPoly:
    return lagrange_interpolate([(c, 1 if j == i else 0) for j, c in enumerate(cs)])


def reconstruct_from_slices(f: Callable, n: int, cs: Sequence) -> MultiPoly:
    """Polynomial built from its values on the grid ``cs^n`` by nested slice interpolation.

    ``h(x) = sum_i delta_{c_i}(x_n) h^{(c_i)}(x_1..x_{n-1})`` where
    ``delta_{c_i}`` is the Lagrange basis on ``cs`` and ``h^{(c_i)}`` is the
    reconstruction of the slice ``x_n = c_i``.

    Raises
    ------
    ValueError
        The abscissae are not distinct.
    """
    cs = [as_fraction(c) for c in cs]
    if len(set(cs)) != len(cs):
        raise ValueError("slice abscissae must be distinct")
    if n == 1:
        u = lagrange_interpolate([(c, f((c,))) for c in cs])
        return _lift_last(u, 1)
    out = MultiPoly(n)
    for i, c in enumerate(cs):
        sl = reconstruct_from_slices(lambda x, c=c: f(tuple(x) + (c,)), n - 1, cs)
        out = out + _lift_last(_basis(cs, i), n) * sl.extend(n)
    return out


def _top_coefficient_search(q: MultiPoly, k: int, rng, tries: int = 100):
    """Random rational direction whose radial restriction has a nonzero ``t^k`` coefficient."""
    for t in range(tries):
        a = [Fraction(int(v), 7) for v in rng.integers(-7, 8, q.n)]
        if not any(a):
            continue
        u = restrict_to_line(q, [0] * q.n, a)
        if u.degree == k:
            return a, t + 1
    return None, tries


def check_local_to_global(d: int, n: int, m: int = 2, rng=None) -> CheckReport:
    """Slice reconstruction reproduces a planted degree-``d`` polynomial.

    Also plants a degree ``d + 1`` term and confirms that a radial line of
    degree ``d + 1`` is found by searching random directions.
    """
    if not 1 <= n <= 4:
        raise ValueError("slice reconstruction is checked for 1 <= n <= 4")
    rng = check_rng(rng)
    p = MultiPoly.random(n, d, rng)
    cs = sorted({Fraction(int(v), 3) for v in rng.permutation(np.arange(-3 * m, 3 * m + 1))[: d + 1]})
    h = reconstruct_from_slices(p, n, cs)
    axis = [Fraction(k, 2) for k in range(-2 * m, 2 * m + 1)]
    grid = np.array(np.meshgrid(*[np.arange(len(axis))] * n)).reshape(n, -1).T
    mismatches = sum(1 for idx in grid if h([axis[i] for i in idx]) != p([axis[i] for i in idx]))
    degree_ok = h.total_degree == d
    top = MultiPoly(n, {tuple(int(v) for v in rng.multinomial(d + 1, [1 / n] * n)): 1})
    a, tries = _top_coefficient_search(p + top, d + 1, rng)
    violations = mismatches + int(not degree_ok) + int(a is None)
    return CheckReport("local_to_global", len(grid) + 2, violations, float(-violations), {
        "d": d, "n": n, "abscissae": [str(c) for c in cs], "grid_points": len(grid),
        "mismatches": mismatches, "reconstructed_degree": h.total_degree,
        "radial_direction": None if a is None else [str(v) for v in a], "search_tries": tries})


# ---------------------------------------------------------------------------
# radial Chebyshev coefficients


def _unit_directions(n: int, k: int, rng) -> list:
    out = []
    for v in rng.standard_normal((k, n)):
        v = v / np.linalg.norm(v)
        out.append([Fraction(x).limit_denominator(10 ** 6) for x in v])
    return out


def check_degree_reduction(p: MultiPoly, d: int, m: float = 1.0, rng=None, n_dirs: int = 200,
                           grid: int = 10_001) -> CheckReport:
    """High Chebyshev coefficients of radial restrictions are at most ``sqrt(2)`` times the fit error.

    For each direction ``a``, the degree-``d`` Chebyshev truncation of
    ``t -> p(a t)`` on ``[-1, 1]`` has grid sup error ``eps(a)``; each
    coefficient ``q_k(a)``, ``k > d``, must satisfy ``|q_k(a)| <= sqrt(2) eps(a)``.
    Also measures the grid sup of ``|p - p^{<=d}|`` on ``[-m, m]^n`` and checks
    it against the sum of the dropped coefficients times ``m^{|I|}``.
    """
    if p.total_degree > 6 or p.n > 4:
        raise ValueError("degree reduction is checked for degree <= 6 and n <= 4")
    rng = check_rng(rng)
    ell = max(p.total_degree, d)
    ts = np.concatenate([np.linspace(-1, 1, grid), np.cos(np.pi * np.arange(ell + 1) / max(ell, 1))])
    worst, bad, eps_max, trials = math.inf, 0, 0.0, 0
    for a in _unit_directions(p.n, n_dirs, rng):
        exp = radial_cheb_coeffs(p, a, ell)
        high = [float(c) for c in exp.coeffs[d + 1:]]
        resid = ChebExpansion((Fraction(0),) * (d + 1) + tuple(exp.coeffs[d + 1:]))
        eps = float(np.max(np.abs(resid(ts)))) if high else 0.0
        eps_max = max(eps, eps_max)
        for q in high:
            trials += 1
            margin = math.sqrt(2) * eps - abs(q)
            worst = min(worst, margin)
            bad += margin < -1e-12 * (1 + abs(q))
    low = p.truncate(d)
    dropped = p - low
    pts = rng.uniform(-m, m, (20_000, p.n))
    corners = np.array(np.meshgrid(*[[-m, m]] * p.n)).reshape(p.n, -1).T
    pts = np.vstack([pts, corners])
    D_hat = float(np.max(np.abs(dropped.eval_float(pts)))) if len(dropped) else 0.0
    D_bound = sum(abs(float(c)) * m ** sum(e) for e, c in dropped.terms.items())
    bad += D_hat > D_bound * (1 + 1e-9)
    worst = min(worst, D_bound - D_hat) if trials else D_bound - D_hat
    return CheckReport("degree_reduction", trials + 1, int(bad), worst, {
        "d": d, "poly_degree": p.total_degree, "n": p.n, "directions": n_dirs,
        "eps_hat": eps_max, "D_hat": D_hat, "D_bound": D_bound, "m": m})


# ---------------------------------------------------------------------------
# stability of approximate polynomials on an interval


def _max_difference(y: np.ndarray, d: int) -> float:
    """Largest ``|Delta_h^{(d+1)} f(x)|`` over all grid points and grid steps."""
    coef = np.array([(-1) ** (d + 1 - i) * math.comb(d + 1, i) for i in range(d + 2)], dtype=float)
    best = 0.0
    N = len(y)
    for s in range(1, (N - 1) // (d + 1) + 1):
        span = (d + 1) * s
        acc = np.zeros(N - span)
        for i, c in enumerate(coef):
            acc += c * y[i * s: i * s + N - span]
        best = max(best, float(np.max(np.abs(acc))))
    return best


def check_gajda_probe(f, d: int, interval=(0.0, 1.0), grid: int = 2001) -> CheckReport:
    """A function with small ``(d+1)``-th differences is close to a degree-``d`` polynomial.

    Measures ``phi`` = sup of ``|Delta_h^{(d+1)} f|`` over the grid, fits a
    degree-``d`` Chebyshev series by least squares and checks
    ``sup|f - fit| <= 2^{8 d^2} phi`` in log space, with a rounding allowance
    of ``1e-9 max|f|``.

    Parameters
    ----------
    f : callable or (xs, ys)
        Vectorized function, or values on an equispaced grid.
    """
    if d > 3:
        raise ValueError("the probe is run for d <= 3")
    if callable(f):
        xs = np.linspace(interval[0], interval[1], grid)
        ys = np.asarray(f(xs), dtype=float)
    else:
        xs, ys = (np.asarray(v, dtype=float) for v in f)
    phi = _max_difference(ys, d)
    fit = np.polynomial.Chebyshev.fit(xs, ys, d)
    err = float(np.max(np.abs(ys - fit(xs))))
    tol = 1e-9 * max(1.0, float(np.max(np.abs(ys))))
    log_bound = 8 * d * d + (math.log2(phi) if phi > 0 else -math.inf)
    excess = err - tol
    ok = excess <= 0 or (phi > 0 and math.log2(excess) <= log_bound)
    margin = (log_bound - math.log2(excess)) if excess > 0 and phi > 0 else (
        math.inf if excess <= 0 else -math.inf)
    return CheckReport("gajda_probe", 1, int(not ok), margin, {
        "d": d, "phi_hat": phi, "fit_error": err, "log2_bound": log_bound, "grid": len(xs)})


# ---------------------------------------------------------------------------
# sums of discrete Gaussians


def _dual_mass(B: int, s: float) -> float:
    """``sum_{m != 0} exp(-pi (B s m)^2)``: the smoothing slack of ``(1/B) Z`` at width ``s``."""
    return 2 * sum(math.exp(-math.pi * (B * s * m) ** 2) for m in range(1, 50))


def check_indsum(B: int, z: Sequence[int], s: Sequence[float], trials: int = 1_000_000,
                 rng=None) -> CheckReport:
    """Integer combinations of discrete Gaussians on ``(1/B) Z`` are close to a discrete Gaussian.

    Compares the empirical law of ``sum_i z_i y_i`` with ``G(gcd(z) L, sqrt(sum (z_i s_i)^2))``.
    Passes when the TV estimate is at most the estimator-noise budget plus
    ``4 k theta``, and every sum lies in ``gcd(z) L``.
    """
    z = [int(v) for v in z]
    if not 1 <= len(z) <= 3 or not any(z):
        raise ValueError("need one to three coefficients, not all zero")
    rng = check_rng(rng)
    total = np.zeros(trials, dtype=np.int64)
    for zi, si in zip(z, s):
        total += zi * _table(_ratio(Fraction(1, B), si)).draw(rng, trials)
    g = math.gcd(*z)
    S = math.sqrt(sum((zi * si) ** 2 for zi, si in zip(z, s)))
    support, probs = discrete_gaussian_pmf(Fraction(g, B), S)
    off_lattice = int(np.count_nonzero(total % g))
    tv = empirical_tv_discrete(total, support * g, probs)
    noise = 0.5 * float(np.sum(np.sqrt(probs * (1 - probs) / trials))) + math.sqrt(
        math.log(1000) / (2 * trials))
    theta = max(_dual_mass(B, si) for si in s)
    bound = 4 * len(z) * theta
    margin = noise + bound - tv
    return CheckReport("indsum", trials, int(margin < 0) + off_lattice, margin, {
        "B": B, "z": z, "s": list(s), "gcd": g, "target_width": S, "tv_hat": tv,
        "noise_budget": noise, "theorem_bound": bound, "off_lattice": off_lattice})


def check_shifted_discrete_tv(B: int = 4, d: int = 1, i: int = 1, t: int = 1,
                              rng=None, samples: int = 200_000) -> CheckReport:
    """Shifting ``G(iL, it)`` by a small ``p`` in ``(d+1)! L`` moves it at most ``98 d^2 eta``.

    ``eta`` is the closed-form upper bound ``1/B`` for the smoothing
    parameter of ``L = (1/B) Z``; ``p`` is the shortest nonzero point of
    ``(d+1)! L`` allowed by the radius ``d sqrt(eta)``. The exact TV on the
    truncated support and a sampled estimate are both reported; at desk
    scale the bound usually exceeds 1 and the report flags it as vacuous.
    """
    rng = check_rng(rng)
    eta = smoothing_bounds(1, B)[1]
    step = math.factorial(d + 1)  # p in units of 1/B
    radius = d * math.sqrt(eta)
    if step / B > radius:
        raise ValueError("no nonzero point of (d+1)! L lies within the radius; increase B")
    # in units of i/B the support is Z with width ratio B t
    ratio = _ratio(Fraction(i, B), i * t)
    tab = _table(ratio)
    ks = np.arange(-tab.jmax, tab.jmax + 1)
    shift = Fraction(step, i)  # p in units of i/B; an integer since p is in iL
    if shift.denominator != 1:
        raise ValueError("p must lie in iL")
    sh = int(shift)
    idx = {int(k): pr for k, pr in zip(ks, tab.probs)}
    sup = sorted(set(idx) | {k + sh for k in idx})
    tv = 0.5 * sum(abs(idx.get(k, 0.0) - idx.get(k - sh, 0.0)) for k in sup)
    a = tab.draw(rng, samples)
    b = tab.draw(rng, samples) + sh
    lo = min(a.min(), b.min())
    ha = np.bincount(a - lo)
    hb = np.bincount(b - lo)
    L = max(len(ha), len(hb))
    ha = np.pad(ha, (0, L - len(ha))) / samples
    hb = np.pad(hb, (0, L - len(hb))) / samples
    tv_emp = 0.5 * float(np.abs(ha - hb).sum())
    bound = 98 * d * d * eta
    return CheckReport("shifted_discrete_tv", 1, int(tv > bound), bound - tv, {
        "B": B, "d": d, "i": i, "t": t, "p": step / B, "eta_upper": eta, "tv_exact": tv,
        "tv_sampled": tv_emp, "bound": bound, "vacuous": bound >= 1})


# ---------------------------------------------------------------------------
# discrete characterization on a grid


def check_discrete_characterization(f_grid, d: int, a, M: int) -> CheckReport:
    """Vanishing ``(d+1)``-th differences on the grid force agreement with a degree-``d`` polynomial.

    ``f_grid`` holds the values at ``k a / M`` for ``k = 0..M`` (or is a
    callable). The recurrence ``sum_i alpha_i v_{k+i} = 0`` is run forward
    from the first ``d + 1`` values and compared with their interpolant and
    with the data. If every difference vanishes the data must agree
    everywhere; otherwise some later point must deviate.
    """
    if M < d + 1:
        raise ValueError("need M >= d + 1")
    a = as_fraction(a)
    xs = [a * k / M for k in range(M + 1)]
    vals = [as_fraction(f_grid(x)) for x in xs] if callable(f_grid) else [as_fraction(v) for v in f_grid]
    if len(vals) != M + 1:
        raise ValueError(f"expected {M + 1} grid values")
    w = [(-1) ** (d + 1 - i) * math.comb(d + 1, i) for i in range(d + 2)]
    diffs = [sum(c * vals[k + i] for i, c in enumerate(w)) for k in range(M - d)]
    all_zero = all(v == 0 for v in diffs)
    rec = list(vals[: d + 1])
    for k in range(d + 1, M + 1):
        rec.append(-sum(c * rec[k - d - 1 + i] for i, c in enumerate(w[:-1])))
    interp = lagrange_interpolate(list(zip(xs[: d + 1], vals[: d + 1])))
    recurrence_ok = all(interp(x) == r for x, r in zip(xs, rec))
    agrees = rec == vals
    violations = int(not recurrence_ok) + int(all_zero != agrees)
    return CheckReport("discrete_characterization", M + 1, violations, float(-violations), {
        "d": d, "a": str(a), "M": M, "differences_checked": len(diffs),
        "all_differences_zero": all_zero, "agrees_with_interpolant": agrees,
        "first_deviation": None if agrees else next(k for k in range(M + 1) if rec[k] != vals[k])})


# ---------------------------------------------------------------------------
# Chebyshev facts


def check_chebyshev_invariants(rng=None, d_orth: int = 10, d_max: int = 8, n_monic: int = 500,
                               grid: int = 10_000, n_stab: int = 200) -> CheckReport:
    """Discrete orthogonality, the monic extremal bound, interpolation stability and anti-concentration."""
    rng = check_rng(rng)
    xs = np.linspace(-1, 1, grid)
    bad, trials, worst = 0, 0, math.inf
    parts = {}

    # discrete orthogonality at the roots of T_{d+1}
    err = 0.0
    for d in range(d_orth + 1):
        c = cheb_nodes(d)
        for i in range(d + 1):
            for j in range(d + 1):
                s = float(np.sum(cheb_eval(i, c) * cheb_eval(j, c)))
                want = 0.0 if i != j else (d + 1 if i == 0 else (d + 1) / 2)
                err = max(err, abs(s - want))
                trials += 1
    bad += err > 1e-10
    worst = min(worst, 1e-10 - err)
    parts["orthogonality_max_error"] = err

    # monic polynomials have sup at least 2^{1-d}; 2^{1-d} T_d attains it
    monic_min_ratio = math.inf
    for d in range(1, d_max + 1):
        witness = float(np.max(np.abs(2.0 ** (1 - d) * cheb_eval(d, xs))))
        bad += abs(witness - 2.0 ** (1 - d)) > 1e-12
        trials += 1
        for _ in range(n_monic // d_max):
            if rng.random() < 0.5:
                roots = np.cos(np.pi * (np.arange(d) + 0.5) / d) + rng.normal(0, 0.05, d)
                coeffs = np.poly(roots)
            else:
                coeffs = np.concatenate([[1.0], rng.normal(0, 1, d)])
            sup = float(np.max(np.abs(np.polyval(coeffs, np.concatenate([xs, [-1.0, 1.0]])))))
            ratio = sup / 2.0 ** (1 - d)
            monic_min_ratio = min(monic_min_ratio, ratio)
            bad += ratio < 1 - 1e-9
            trials += 1
    parts["monic_min_ratio"] = monic_min_ratio
    worst = min(worst, monic_min_ratio - 1)

    # interpolation stability from Chebyshev node values
    stab_max = 0.0
    for _ in range(n_stab):
        d = int(rng.integers(0, d_max + 1))
        coeffs = rng.normal(0, 1, d + 1)
        node_vals = np.polyval(coeffs, cheb_nodes(d))
        bound = stability_bound(node_vals, d)
        sup = float(np.max(np.abs(np.polyval(coeffs, xs))))
        stab_max = max(stab_max, sup / bound if bound else 0.0)
        bad += sup > bound * (1 + 1e-9)
        trials += 1
    parts["stability_max_ratio"] = stab_max
    worst = min(worst, 1 - stab_max)

    # a coefficient of size eta forces a value of size 2^{-2d^2} eta
    anti_min = math.inf
    for d in range(1, d_max + 1):
        for _ in range(5):
            eta = float(10.0 ** rng.uniform(-4, 0))
            c = rng.normal(0, eta / 4, d + 1)
            k = int(rng.integers(1, d + 1))
            c[k] = eta * (1 if rng.random() < 0.5 else -1)
            p = UniPoly([Fraction(float(v)) for v in c])
            try:
                _, val = anticoncentration_search(p, eta, grid=20_001)
                anti_min = min(anti_min, val / (2.0 ** (-2 * d * d) * eta))
            except RuntimeError:
                bad += 1
            trials += 1
    parts["anticoncentration_min_ratio"] = anti_min
    return CheckReport("chebyshev_invariants", trials, int(bad), worst, parts)


# ---------------------------------------------------------------------------
# additive stability


def check_additive_stability(rng=None, n_funcs: int = 20, delta: float = 1e-3,
                             r: float = 1 / 50, samples: int = 10_000) -> CheckReport:
    """A ``delta``-additive function on ``B(0, r)`` is within ``9 n delta`` of an additive function.

    Each synthetic ``g`` is linear plus hashed noise of size ``delta / 3``,
    which makes it ``delta``-additive. The additive ``h`` is the sum of
    per-axis least-squares slopes through the origin.
    """
    rng = check_rng(rng)
    worst, bad, ratio_max = math.inf, 0, 0.0
    ts = np.linspace(-r, r, 201)
    for _ in range(n_funcs):
        n = int(rng.integers(1, 6))
        c = rng.normal(0, 1, n)
        seed = int(rng.integers(2 ** 31))

        def g(X):
            X = np.atleast_2d(X)
            u = hash_noise_units(X, seed).astype(float) / 2.0 ** 53
            return X @ c + (delta / 3) * (2 * u - 1)

        slopes = np.empty(n)
        for i in range(n):
            E = np.zeros((len(ts), n))
            E[:, i] = ts
            slopes[i] = float(ts @ g(E) / (ts @ ts))
        D = rng.standard_normal((samples, n))
        D *= (r * rng.random(samples) ** (1 / n) / np.linalg.norm(D, axis=1))[:, None]
        dev = float(np.max(np.abs(g(D) - D @ slopes)))
        bound = 9 * n * delta
        worst = min(worst, bound - dev)
        ratio_max = max(ratio_max, dev / bound)
        bad += dev > bound
    return CheckReport("additive_stability", n_funcs, bad, worst,
                       {"delta": delta, "r": r, "max_ratio": ratio_max})


# ---------------------------------------------------------------------------
# samplers


def check_sampler_fidelity(rng=None, n_samples: int = 1_000_000) -> CheckReport:
    """Chi-square fit of the 1-D discrete Gaussian and KS checks of Gaussian scaling and translation."""
    rng = check_rng(rng)
    parts = {}
    bad = 0
    step, s = Fraction(1, 4), 1.3
    idx, probs = discrete_gaussian_pmf(step, s)
    tab = _table(_ratio(step, s))
    draws = tab.draw(rng, n_samples)
    counts = np.bincount(draws - idx[0], minlength=len(idx))
    keep = probs * n_samples >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(probs[keep], probs[~keep].sum()) * n_samples
    if exp[-1] < 5:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    chi_p = float(stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue)
    parts["chi2_pvalue"] = chi_p
    bad += chi_p < 0.001
    x = rng.standard_normal(100_000)
    ks_scale = float(stats.kstest(3.0 * x, stats.norm(scale=3.0).cdf).pvalue)
    y = rng.standard_normal(100_000)
    ks_shift = float(stats.kstest(y + 2.5, stats.norm(loc=2.5).cdf).pvalue)
    parts["ks_scale_pvalue"] = ks_scale
    parts["ks_shift_pvalue"] = ks_shift
    bad += ks_scale < 0.01
    bad += ks_shift < 0.01
    margin = min(chi_p - 0.001, ks_scale - 0.01, ks_shift - 0.01)
    return CheckReport("sampler_fidelity", 3, int(bad), margin, parts)


# ---------------------------------------------------------------------------
# default suite


def _suite_median(rng):
    v = rng.standard_normal(20_000)
    return check_median_close(v, 3.0, rng)


def _suite_local(rng):
    reps = [check_local_to_global(d, n, 2, rng) for d, n in [(1, 2), (2, 2), (2, 3), (3, 2)]]
    return _merge("local_to_global", reps)


def _suite_degree(rng):
    reps = []
    for d, ell, n in [(1, 3, 2), (2, 4, 3), (3, 5, 2)]:
        p = MultiPoly.random(n, d, rng) + MultiPoly.random(n, ell, rng)
        reps.append(check_degree_reduction(p, d, 1.0, rng, n_dirs=100))
    return _merge("degree_reduction", reps)


def _suite_gajda(rng):
    reps = []
    for d in (1, 2, 3):
        coeffs = rng.normal(0, 1, d + 1)
        reps.append(check_gajda_probe(lambda x: np.polyval(coeffs, x), d))
        noise = rng.uniform(-1e-3, 1e-3, 2001)
        reps.append(check_gajda_probe(
            (np.linspace(0, 1, 2001), np.polyval(coeffs, np.linspace(0, 1, 2001)) + noise), d))
        reps.append(check_gajda_probe(lambda x: x ** (d + 1), d))
    return _merge("gajda_probe", reps)


def _suite_indsum(rng):
    reps = [check_indsum(1, (1, 1), (1.0, 1.0), 1_000_000, rng),
            check_indsum(4, (2,), (1.0,), 200_000, rng),
            check_indsum(4, (2, 2), (1.0, 1.5), 200_000, rng),
            check_indsum(2, (1, -2, 3), (2.0, 1.0, 1.0), 200_000, rng)]
    return _merge("indsum", reps)


def _suite_discrete(rng):
    reps = []
    for d, M in [(1, 2), (2, 8), (3, 12)]:
        p = UniPoly([Fraction(int(v), 5) for v in rng.integers(-9, 10, d + 1)])
        a = Fraction(3, 2)
        vals = [p(a * k / M) for k in range(M + 1)]
        reps.append(check_discrete_characterization(vals, d, a, M))
        vals[-1] += Fraction(1, 7)
        reps.append(check_discrete_characterization(vals, d, a, M))
    return _merge("discrete_characterization", reps)


def _merge(lemma_id: str, reports: list) -> CheckReport:
    return CheckReport(lemma_id, sum(r.trials for r in reports),
                       sum(r.violations for r in reports),
                       min(r.worst_margin for r in reports),
                       {"cases": [r.to_dict() for r in reports]})


THEORY_CHECKS: dict[str, Callable] = {
    "median_close": _suite_median,
    "median_bridging": lambda rng: check_median_bridging(rng),
    "local_to_global": _suite_local,
    "degree_reduction": _suite_degree,
    "gajda_probe": _suite_gajda,
    "indsum": _suite_indsum,
    "discrete_characterization": _suite_discrete,
    "chebyshev_invariants": lambda rng: check_chebyshev_invariants(rng),
    "additive_stability": lambda rng: check_additive_stability(rng),
    "shifted_discrete_tv": lambda rng: check_shifted_discrete_tv(rng=rng),
    "sampler_fidelity": lambda rng: check_sampler_fidelity(rng),
}
