"""Distribution-free tester for functions that are exactly degree-``d`` polynomials.

The tester first checks that ``sum_i alpha_i f(p + i q)`` vanishes on a fixed
schedule of Gaussian pairs, then compares ``f`` against its self-corrected
version ``g`` on samples from the input distribution. ``g`` is evaluated in
a small ball by majority over random directions and extended outward by
interpolation along the line through the origin.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import _selfcorrect as sc
from .core_math import ComparisonPolicy, lagrange_value, lebesgue_value
from .validation import check_degree, check_eps, check_positive, check_rng, check_scalar
from .verdict import BaseTester, Reject, RejectSite, Verdict

__all__ = [
    "ExactTesterConfig",
    "characterization_test",
    "query_g_in_ball",
    "query_g",
    "low_degree_test",
    "LowDegreeTester",
    "default_inball_reps",
    "exact_query_budget",
]

# constants of the default repetition counts
CHAR_CONSTANT = 900
MAIN_CONSTANT = 48
BOUNDARY_SHRINK = 1 - Fraction(1, 2 ** 20)


def default_inball_reps(d: int, eps: float) -> int:
    """Smallest ``N >= 1`` with ``(7d)^-N <= eps / (4d)``."""
    base = 7 * max(d, 1)
    return max(1, math.ceil(math.log(4 * max(d, 1) / eps) / math.log(base) - 1e-12))


@dataclass(frozen=True)
class ExactTesterConfig:
    """Resolved parameters of the exact tester.

    Attributes
    ----------
    d, eps : degree and farness.
    r : radius of the ball where ``g`` is queried directly, ``(3d)^-6``.
    n_char : characterization rounds, ``ceil(900 d^2)``.
    n_main : samples from the distribution, ``ceil(48 / eps)``.
    n_inball : directions per in-ball query.
    comparison : policy for float comparisons.
    arithmetic : ``"auto"`` (float characterization, exact self-correction
        when the oracle allows it), ``"exact"`` or ``"float"``.
    """

    d: int
    eps: float
    r: Fraction
    n_char: int
    n_main: int
    n_inball: int
    comparison: ComparisonPolicy = field(default_factory=ComparisonPolicy)
    arithmetic: str = "auto"
    block: int = 64

    @classmethod
    def default(cls, d: int, eps: float, **overrides) -> "ExactTesterConfig":
        d = check_degree(d)
        eps = check_eps(eps)
        dd = max(d, 1)
        base = cls(d=d, eps=eps, r=Fraction(1, (3 * dd) ** 6),
                   n_char=math.ceil(CHAR_CONSTANT * dd * dd),
                   n_main=math.ceil(MAIN_CONSTANT / eps),
                   n_inball=default_inball_reps(d, eps))
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "r" in overrides:
            overrides["r"] = Fraction(overrides["r"])
        return replace(base, **overrides)

    def __post_init__(self):
        for name in ("n_char", "n_main", "n_inball"):
            check_scalar(getattr(self, name), name, numbers.Integral, min_val=1)
        if self.r <= 0:
            raise ValueError("ball radius must be positive")
        if self.arithmetic not in ("auto", "exact", "float"):
            raise ValueError(f"unknown arithmetic mode {self.arithmetic!r}")

    def char_exact(self, f) -> bool:
        return self.arithmetic == "exact"

    def selfcorrect_exact(self, f) -> bool:
        if self.arithmetic == "float":
            return False
        if self.arithmetic == "exact" and not f.supports_exact:
            raise TypeError("exact arithmetic requested but the oracle has no exact evaluator")
        return f.supports_exact

    def to_dict(self) -> dict:
        return {"d": self.d, "eps": self.eps, "r": str(self.r), "n_char": self.n_char,
                "n_main": self.n_main, "n_inball": self.n_inball,
                "comparison": self.comparison.to_dict(), "arithmetic": self.arithmetic}


def exact_query_budget(cfg: ExactTesterConfig) -> int:
    """Worst-case number of queries of one run."""
    d = cfg.d
    per_g = (d + 1) * cfg.n_inball * (d + 1)
    return cfg.n_char * sc.char_queries_per_round(d) + cfg.n_main * (1 + per_g)


def characterization_test(f, cfg: ExactTesterConfig, rng) -> Verdict:
    """Check that the order-``(d+1)`` differences of ``f`` vanish on the schedule."""
    rng = check_rng(rng)
    before = f.n_queries
    policy = ComparisonPolicy.exact() if cfg.char_exact(f) else cfg.comparison
    rej = sc.characterization(f, cfg.d, cfg.n_char, 0, policy, rng, cfg.char_exact(f), cfg.block)
    used = f.n_queries - before
    return Verdict.accept(used) if rej is None else Verdict.from_reject(rej, used)


def _prepare_point(p, exact: bool):
    return sc.from_any(p) if exact else np.asarray(p, dtype=float).ravel()


def _inside(p, radius: Fraction, exact: bool) -> bool:
    if exact:
        return sc.norm2(p) < radius * radius
    return float(np.dot(p, p)) < float(radius) ** 2


def _in_ball(f, p, cfg: ExactTesterConfig, rng, exact: bool, scales_out: list | None = None):
    qs = rng.standard_normal((cfg.n_inball, f.n))
    if exact:
        nums, scale = sc.g_values_exact(f, p, qs, cfg.d)
        for j in range(1, len(nums)):
            if nums[j] != nums[0]:
                return Reject(RejectSite.INBALL_INCONSISTENT, {
                    "p": sc.to_float(p).tolist(), "g_first": Fraction(nums[0], scale),
                    "g_other": Fraction(nums[j], scale), "index": j})
        return Fraction(nums[0], scale)
    vals, scales = sc.g_values_float(f, p, qs, cfg.d)
    for j in range(1, len(vals)):
        if cfg.comparison.exceeds(vals[j] - vals[0], 0, scales[0] + scales[j]):
            return Reject(RejectSite.INBALL_INCONSISTENT, {
                "p": list(p), "g_first": float(vals[0]), "g_other": float(vals[j]), "index": j})
    if scales_out is not None:
        scales_out.append(float(scales[0]))
    return float(vals[0])


def query_g_in_ball(f, p, cfg: ExactTesterConfig, rng):
    """Majority-consistent value of ``g`` at a point of the small ball.

    Returns the value of ``g_{q_1}(p)`` or a :class:`Reject` when two
    directions disagree.
    """
    rng = check_rng(rng)
    exact = cfg.selfcorrect_exact(f)
    pp = _prepare_point(p, exact)
    if not _inside(pp, cfg.r, exact):
        raise ValueError("point must lie strictly inside the small ball")
    return _in_ball(f, pp, cfg, rng, exact)


def _query_g(f, pp, cfg: ExactTesterConfig, rng, exact: bool, err: list | None = None):
    """Self-corrected value; in float mode ``err`` receives the rounding scale of the result.

    The scale of an extrapolated value is the Lebesgue constant of the nodes
    at 1 times the largest node scale, which is how much float rounding in
    the node values can move the interpolant.
    """
    scales: list = []
    if _inside(pp, cfg.r, exact):
        v = _in_ball(f, pp, cfg, rng, exact, scales)
        if err is not None and scales:
            err.append(scales[0])
        return v
    d = cfg.d
    pf = sc.to_float(pp) if exact else pp
    norm = float(np.linalg.norm(pf))
    xs, ys = [], []
    for i in range(1, d + 2):
        c = i * float(cfg.r) / ((d + 1) * norm) * float(BOUNDARY_SHRINK)
        if exact:
            c = sc.rational_multiplier(c, pp, cfg.r)
            node = sc.scale_point(c, pp)
        else:
            node = c * pp
        v = _in_ball(f, node, cfg, rng, exact, scales)
        if isinstance(v, Reject):
            return v
        xs.append(c)
        ys.append(v)
    if err is not None and scales:
        err.append(lebesgue_value(xs, 1.0) * max(scales))
    one = Fraction(1) if exact else 1.0
    return lagrange_value(xs, ys, one)


def query_g(f, p, cfg: ExactTesterConfig, rng):
    """Self-corrected value ``g(p)`` at any point, or a :class:`Reject`."""
    rng = check_rng(rng)
    exact = cfg.selfcorrect_exact(f)
    return _query_g(f, _prepare_point(p, exact), cfg, rng, exact)


def low_degree_test(f, d: int, dist, eps: float, cfg: ExactTesterConfig | None = None,
                    rng=None) -> Verdict:
    """One run of the exact low-degree tester.

    Parameters
    ----------
    f : FunctionOracle
    d : int
    dist : callable
        ``dist(rng)`` returns one point.
    eps : float
    cfg : ExactTesterConfig, optional
        Defaults to ``ExactTesterConfig.default(d, eps)``.
    """
    cfg = cfg or ExactTesterConfig.default(d, eps)
    if cfg.d != d:
        raise ValueError("configuration degree does not match d")
    rng = check_rng(rng)
    before = f.n_queries
    verdict = characterization_test(f, cfg, rng)
    if not verdict.accepted:
        verdict.queries_used = f.n_queries - before
        return verdict
    exact = cfg.selfcorrect_exact(f)
    for it in range(cfg.n_main):
        pp = _prepare_point(dist(rng), exact)
        err: list = []
        g = _query_g(f, pp, cfg, rng, exact, err)
        if isinstance(g, Reject):
            return Verdict.from_reject(g, f.n_queries - before, main_iteration=it)
        if exact:
            nums, scale = sc.evaluate_exact(f, [pp])
            fp = Fraction(nums[0], scale)
            differs = fp != g
        else:
            fp = float(f.eval_batch(pp[None, :])[0])
            differs = cfg.comparison.exceeds(fp - g, 0, abs(fp) + abs(g) + sum(err))
        if differs:
            return Verdict.from_reject(Reject(RejectSite.MAIN_MISMATCH, {
                "p": sc.to_float(pp).tolist() if exact else pp.tolist(),
                "f": fp, "g": g}), f.n_queries - before, main_iteration=it)
    return Verdict.accept(f.n_queries - before)


class LowDegreeTester(BaseTester):
    """Estimator wrapper around :func:`low_degree_test`.

    Parameters
    ----------
    degree : int
    eps : float
    r, n_char, n_main, n_inball : optional overrides of the defaults.
    rel_tol, abs_tol : float
        Tolerances for float comparisons.
    arithmetic : {"auto", "exact", "float"}
    random_state : int, Generator or None

    Examples
    --------
    >>> from lowdeg import MultiPoly, poly_oracle, LowDegreeTester
    >>> f = poly_oracle(MultiPoly(2, {(1, 1): 1}))
    >>> t = LowDegreeTester(degree=2, eps=0.2, n_char=5, random_state=0)
    >>> t.test(f, lambda rng: rng.standard_normal(2)).accepted
    True
    """

    def __init__(self, degree=1, eps=0.1, r=None, n_char=None, n_main=None, n_inball=None,
                 rel_tol=1e-9, abs_tol=1e-12, arithmetic="auto", random_state=None):
        self.degree = degree
        self.eps = eps
        self.r = r
        self.n_char = n_char
        self.n_main = n_main
        self.n_inball = n_inball
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.arithmetic = arithmetic
        self.random_state = random_state

    def _make_config(self, f):
        check_positive(self.r, "r", allow_none=True)
        return ExactTesterConfig.default(
            self.degree, self.eps, r=self.r, n_char=self.n_char, n_main=self.n_main,
            n_inball=self.n_inball, arithmetic=self.arithmetic,
            comparison=ComparisonPolicy.tolerant(self.rel_tol, self.abs_tol))

    def _run(self, f, dist, cfg, rng):
        if dist is None:
            raise ValueError("the tester needs a sampling distribution")
        return low_degree_test(f, cfg.d, dist, cfg.eps, cfg, rng)
