"""Shared machinery of the continuous testers: the characterization schedule,
points held as integer numerators over a common denominator, and batched
evaluation of the self-corrected values ``g_q(p)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core_math import ComparisonPolicy, alpha_coeffs, as_fraction
from .verdict import Reject, RejectSite

# A point in exact mode is ``(nums, den)`` with value ``nums[j] / den``.
ScaledPoint = tuple


def char_schedule(d: int):
    """Standard deviations of ``p`` and ``q`` for one round of characterization tests.

    For each ``j = 1..d+1``: for each ``t = 0..d+1`` one test with
    ``p ~ N(0, j^2 (t^2+1) I), q ~ N(0, I)`` and one with
    ``p ~ N(0, j^2 I), q ~ N(0, (t^2+1) I)``; then one with both ``N(0, j^2 I)``.
    """
    ps, qs, sites = [], [], []
    for j in range(1, d + 2):
        for t in range(d + 2):
            w = math.sqrt(t * t + 1)
            ps.append(j * w), qs.append(1.0), sites.append(RejectSite.CHAR_SCALED_P)
            ps.append(float(j)), qs.append(w), sites.append(RejectSite.CHAR_SCALED_Q)
        ps.append(float(j)), qs.append(float(j)), sites.append(RejectSite.CHAR_EQUAL)
    return np.array(ps), np.array(qs), sites


def char_queries_per_round(d: int) -> int:
    return (d + 1) * (2 * (d + 2) + 1) * (d + 2)


def _slack(policy: ComparisonPolicy, scale):
    if policy.is_exact:
        return np.zeros_like(scale)
    return policy.abs_tol + policy.rel_tol * np.abs(scale)


def characterization(f, d: int, n_rounds: int, threshold, policy: ComparisonPolicy,
                     rng: np.random.Generator, exact: bool, block: int = 64):
    """Run ``n_rounds`` rounds of the characterization schedule.

    Returns ``None`` when every test passes, else a :class:`Reject`. A test
    fires when ``|sum_i alpha_i f(p + i q)| > threshold``.

    In float mode rounds are evaluated in blocks of up to ``block`` rounds,
    so a rejection may be reported after the rest of its block was queried.
    In exact mode tests run one by one.
    """
    ps, qs, sites = char_schedule(d)
    T = len(sites)
    n = f.n
    alphas = alpha_coeffs(d + 1).alphas
    alpha_arr = np.array(alphas, dtype=float)
    offsets = np.arange(d + 2, dtype=float)
    thr_exact = as_fraction(threshold)
    done = 0
    while done < n_rounds:
        b = min(block, n_rounds - done)
        Z = rng.standard_normal((b, T, 2, n))
        P = Z[:, :, 0, :] * ps[None, :, None]
        Q = Z[:, :, 1, :] * qs[None, :, None]
        if not exact:
            X = P[None] + offsets[:, None, None, None] * Q[None]
            vals = f.eval_batch(X.reshape(-1, n)).reshape(d + 2, b * T)
            stat = alpha_arr @ vals
            scale = np.abs(alpha_arr) @ np.abs(vals)
            bad = np.abs(stat) > float(threshold) + _slack(policy, scale)
            if bad.any():
                k = int(np.argmax(bad))
                rnd, test = divmod(k, T)
                return Reject(sites[test], {
                    "round": done + rnd, "p": P[rnd, test].tolist(), "q": Q[rnd, test].tolist(),
                    "statistic": float(stat[k]), "threshold": float(threshold)})
        else:
            for rnd in range(b):
                for test in range(T):
                    p = from_floats(P[rnd, test])
                    q = from_floats(Q[rnd, test])
                    pts = [combine(p, q, i) for i in range(d + 2)]
                    nums, scale = evaluate_exact(f, pts)
                    s = sum(a * v for a, v in zip(alphas, nums))
                    if Fraction(abs(s), scale) > thr_exact:
                        return Reject(sites[test], {
                            "round": done + rnd, "p": P[rnd, test].tolist(),
                            "q": Q[rnd, test].tolist(), "statistic": Fraction(s, scale),
                            "threshold": thr_exact})
        done += b
    return None


# ---------------------------------------------------------------------------
# exact points


def from_floats(x) -> ScaledPoint:
    """Exact value of a float vector as integer numerators over a power of two."""
    ratios = [float(v).as_integer_ratio() for v in np.ravel(x)]
    den = max(r[1] for r in ratios)
    return tuple(num * (den // d) for num, d in ratios), den


def from_any(x) -> ScaledPoint:
    """Exact point from floats, ints or Fractions."""
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], int) and isinstance(x[0], tuple):
        return x
    vals = [v if isinstance(v, Fraction) else as_fraction(v) for v in np.ravel(np.asarray(x, dtype=object))]
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return tuple(v.numerator * (den // v.denominator) for v in vals), den


def _align(a: ScaledPoint, b: ScaledPoint):
    (na, da), (nb, db) = a, b
    if da == db:
        return na, nb, da
    den = da * db // math.gcd(da, db)
    fa, fb = den // da, den // db
    return tuple(v * fa for v in na), tuple(v * fb for v in nb), den


def combine(p: ScaledPoint, q: ScaledPoint, i: int) -> ScaledPoint:
    """``p + i q``."""
    na, nb, den = _align(p, q)
    return tuple(a + i * b for a, b in zip(na, nb)), den


def scale_point(c: Fraction, p: ScaledPoint) -> ScaledPoint:
    """``c p`` for a rational ``c``."""
    nums, den = p
    return tuple(v * c.numerator for v in nums), den * c.denominator


def norm2(p: ScaledPoint) -> Fraction:
    nums, den = p
    return Fraction(sum(v * v for v in nums), den * den)


def to_float(p: ScaledPoint) -> np.ndarray:
    nums, den = p
    return np.array([float(Fraction(v, den)) for v in nums])


def evaluate_exact(f, points: Sequence[ScaledPoint]):
    """Exact values at several points: ``(numerators, scale)``."""
    den = 1
    for _, d in points:
        if den % d:
            den = den * d // math.gcd(den, d)
    nums = [tuple(v * (den // d) for v in pn) for pn, d in points]
    return f.exact_scaled(nums, den)


# ---------------------------------------------------------------------------
# self-corrected values


def g_values_exact(f, p: ScaledPoint, qs, d: int):
    """Exact ``g_q(p) = sum_{i=1}^{d+1} alpha_i f(p + i q)`` for each row ``q`` of ``qs``.

    Returns
    -------
    numerators : list of int
    scale : int
        ``g`` for row ``k`` equals ``numerators[k] / scale``.
    """
    alphas = np.array(alpha_coeffs(d + 1).alphas[1:], dtype=object)
    N = len(qs)
    ratios = [float(v).as_integer_ratio() for v in np.ravel(qs)]
    qden = max(r[1] for r in ratios)
    pn, pd = p
    den = pd * qden // math.gcd(pd, qden)
    P = np.array([v * (den // pd) for v in pn], dtype=object)
    Q = np.array([num * (den // dd) for num, dd in ratios], dtype=object).reshape(N, -1)
    X = np.concatenate([P[None, :] + i * Q for i in range(1, d + 2)], axis=0)
    vals, scale = f.exact_scaled(X, den)
    vals = np.asarray(vals, dtype=object).reshape(d + 1, N)
    return list(alphas @ vals), scale


def g_values_float(f, p, qs, d: int):
    """Float ``g_q(p)`` for each row ``q``, with a rounding-error scale per value."""
    a = np.array(alpha_coeffs(d + 1).alphas[1:], dtype=float)
    N = len(qs)
    steps = np.arange(1, d + 2, dtype=float)
    X = np.asarray(p, dtype=float)[None, None, :] + steps[None, :, None] * np.asarray(qs)[:, None, :]
    vals = f.eval_batch(X.reshape(-1, f.n)).reshape(N, d + 1)
    return vals @ a, np.abs(vals) @ np.abs(a)


def rational_multiplier(c: float, p: ScaledPoint, radius: Fraction) -> Fraction:
    """Rational close to ``c`` with ``|c| |p| < radius`` exactly."""
    cf = Fraction(c)
    n2 = norm2(p)
    r2 = radius * radius
    for _ in range(64):
        if cf * cf * n2 < r2:
            return cf
        cf *= 1 - Fraction(1, 2 ** 40)
    raise RuntimeError("could not place an interpolation node inside the ball")
