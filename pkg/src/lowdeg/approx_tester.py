"""Tester for functions pointwise close to a degree-``d`` polynomial.

The characterization sums may be up to ``delta = 2^(d+1) alpha`` in absolute
value, in-ball self-correction tolerates gaps of ``2^(d+2) delta`` and the
extension out of the small ball interpolates at Chebyshev nodes, which keeps
the amplification of node errors polynomial in the extrapolation distance.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import _selfcorrect as sc
from .chebyshev import Log2Value, cheb_nodes
from .core_math import ComparisonPolicy, as_fraction, lagrange_value, lebesgue_value
from .exact_tester import CHAR_CONSTANT, MAIN_CONSTANT
from .validation import check_degree, check_eps, check_rng, check_scalar
from .verdict import BaseTester, Reject, RejectSite, Verdict

__all__ = [
    "ApproxTesterConfig",
    "approx_characterization_test",
    "approx_query_g_in_ball",
    "approx_query_g",
    "approx_low_degree_test",
    "ApproxLowDegreeTester",
    "certified_threshold",
    "theoretical_threshold",
]


def _approx_inball_reps(d: int, eps: float) -> int:
    """Smallest ``N >= 1`` with ``(7d)^-N <= eps / (4(d+1))``."""
    base = 7 * max(d, 1)
    return max(1, math.ceil(math.log(4 * (d + 1) / eps) / math.log(base) - 1e-12))


def certified_threshold(d: int, delta, R: float, r) -> Fraction:
    """``(12 R / r)^d 2^(d+4) delta``: the bound on ``|g(p) - ApproxQuery-g(p)|`` for ``|p| <= R``.

    Any function pointwise ``alpha``-close to a degree-``d`` polynomial stays
    below this value, so it is a safe practical threshold.
    """
    return (12 * as_fraction(R) / as_fraction(r)) ** d * 2 ** (d + 4) * as_fraction(delta)


def theoretical_threshold(n: int, d: int, delta, R: float) -> Log2Value:
    """``2 * 2^((2n)^(45 d)) * R^d * delta``, held in log2 form."""
    base = Log2Value.of(as_fraction(R) ** d * as_fraction(delta))
    return base * Log2Value(1.0, 1 + (2 * n) ** (45 * d))


@dataclass(frozen=True)
class ApproxTesterConfig:
    """Resolved parameters of the approximate tester.

    ``final_threshold`` selects the rejection threshold of the main loop:
    ``"practical"`` uses ``practical_threshold`` and ``"theoretical"``
    compares in log2 space against :func:`theoretical_threshold`.
    """

    d: int
    eps: float
    alpha: Fraction
    R: Fraction
    n: int
    r: Fraction
    n_char: int
    n_main: int
    n_inball: int
    practical_threshold: Fraction
    final_threshold: str = "practical"
    comparison: ComparisonPolicy = field(default_factory=ComparisonPolicy)
    arithmetic: str = "auto"
    block: int = 64

    @classmethod
    def default(cls, d: int, eps: float, alpha: float, R: float, n: int,
                **overrides) -> "ApproxTesterConfig":
        d = check_degree(d)
        eps = check_eps(eps)
        alpha_f = as_fraction(alpha)
        if alpha_f < 0:
            raise ValueError("noise bound must be non-negative")
        dd = max(d, 1)
        r = Fraction(1, (4 * dd) ** 6)
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "r" in overrides:
            r = as_fraction(overrides.pop("r"))
        delta = 2 ** (d + 1) * alpha_f
        practical = overrides.pop("practical_threshold", None)
        practical = certified_threshold(d, delta, R, r) if practical is None else as_fraction(practical)
        base = cls(d=d, eps=eps, alpha=alpha_f, R=as_fraction(R), n=int(n), r=r,
                   n_char=math.ceil(CHAR_CONSTANT * dd * dd),
                   n_main=math.ceil(MAIN_CONSTANT / eps),
                   n_inball=_approx_inball_reps(d, eps), practical_threshold=practical)
        return replace(base, **overrides)

    def __post_init__(self):
        for name in ("n_char", "n_main", "n_inball"):
            check_scalar(getattr(self, name), name, numbers.Integral, min_val=1)
        if self.final_threshold not in ("practical", "theoretical"):
            raise ValueError("final_threshold must be 'practical' or 'theoretical'")
        if self.arithmetic not in ("auto", "exact", "float"):
            raise ValueError(f"unknown arithmetic mode {self.arithmetic!r}")
        if self.R <= 0 or self.r <= 0:
            raise ValueError("radii must be positive")

    @property
    def delta(self) -> Fraction:
        return 2 ** (self.d + 1) * self.alpha

    @property
    def inball_gap(self) -> Fraction:
        return 2 ** (self.d + 2) * self.delta

    @property
    def theoretical(self) -> Log2Value:
        return theoretical_threshold(self.n, self.d, self.delta, self.R)

    def selfcorrect_exact(self, f) -> bool:
        if self.arithmetic == "float":
            return False
        if self.arithmetic == "exact" and not f.supports_exact:
            raise TypeError("exact arithmetic requested but the oracle has no exact evaluator")
        return f.supports_exact

    def to_dict(self) -> dict:
        return {"d": self.d, "eps": self.eps, "alpha": float(self.alpha), "R": float(self.R),
                "n": self.n, "r": str(self.r), "delta": float(self.delta),
                "inball_gap": float(self.inball_gap), "n_char": self.n_char,
                "n_main": self.n_main, "n_inball": self.n_inball,
                "practical_threshold": float(self.practical_threshold),
                "theoretical_threshold_log2": self.theoretical.to_dict(),
                "final_threshold": self.final_threshold,
                "comparison": self.comparison.to_dict(), "arithmetic": self.arithmetic}


def approx_characterization_test(f, cfg: ApproxTesterConfig, rng) -> Verdict:
    """Characterization schedule with rejection when ``|char_sum| > delta``."""
    rng = check_rng(rng)
    before = f.n_queries
    exact = cfg.arithmetic == "exact"
    policy = ComparisonPolicy.exact() if exact else cfg.comparison
    rej = sc.characterization(f, cfg.d, cfg.n_char, cfg.delta, policy, rng, exact, cfg.block)
    used = f.n_queries - before
    return Verdict.accept(used) if rej is None else Verdict.from_reject(rej, used)


def _in_ball(f, p, cfg: ApproxTesterConfig, rng, exact: bool, scales_out: list | None = None):
    qs = rng.standard_normal((cfg.n_inball, f.n))
    gap = cfg.inball_gap
    if exact:
        nums, scale = sc.g_values_exact(f, p, qs, cfg.d)
        limit = gap * scale
        for j in range(1, len(nums)):
            if abs(nums[j] - nums[0]) > limit:
                return Reject(RejectSite.INBALL_INCONSISTENT, {
                    "p": sc.to_float(p).tolist(), "g_first": Fraction(nums[0], scale),
                    "g_other": Fraction(nums[j], scale), "index": j, "gap": gap})
        return Fraction(nums[0], scale)
    vals, scales = sc.g_values_float(f, p, qs, cfg.d)
    for j in range(1, len(vals)):
        if cfg.comparison.exceeds(vals[j] - vals[0], float(gap), scales[0] + scales[j]):
            return Reject(RejectSite.INBALL_INCONSISTENT, {
                "p": list(p), "g_first": float(vals[0]), "g_other": float(vals[j]), "index": j,
                "gap": gap})
    if scales_out is not None:
        scales_out.append(float(scales[0]))
    return float(vals[0])


def _prepare(p, exact):
    return sc.from_any(p) if exact else np.asarray(p, dtype=float).ravel()


def _inside(p, radius: Fraction, exact: bool) -> bool:
    if exact:
        return sc.norm2(p) < radius * radius
    return float(np.dot(p, p)) < float(radius) ** 2


def approx_query_g_in_ball(f, p, cfg: ApproxTesterConfig, rng):
    """In-ball self-correction with gap tolerance ``2^(d+2) delta``."""
    rng = check_rng(rng)
    exact = cfg.selfcorrect_exact(f)
    pp = _prepare(p, exact)
    if not _inside(pp, cfg.r, exact):
        raise ValueError("point must lie strictly inside the small ball")
    return _in_ball(f, pp, cfg, rng, exact)


def chebyshev_multipliers(d: int, r, norm: float) -> np.ndarray:
    """Node multipliers ``(r/|p|) cos(pi (i + 1/2) / (d + 1))``, ``i = 0..d``."""
    return cheb_nodes(d, float(r) / norm)


def _query_g(f, pp, cfg: ApproxTesterConfig, rng, exact: bool, stats: dict | None = None,
             err: list | None = None):
    scales: list = []
    if _inside(pp, cfg.r, exact):
        v = _in_ball(f, pp, cfg, rng, exact, scales)
        if err is not None and scales:
            err.append(scales[0])
        return v
    pf = sc.to_float(pp) if exact else pp
    norm = float(np.linalg.norm(pf))
    xs, ys = [], []
    for c in chebyshev_multipliers(cfg.d, cfg.r, norm):
        if exact:
            c = sc.rational_multiplier(float(c), pp, cfg.r)
            node = sc.scale_point(c, pp)
        else:
            c = float(c)
            node = c * pp
        v = _in_ball(f, node, cfg, rng, exact, scales)
        if isinstance(v, Reject):
            return v
        xs.append(c)
        ys.append(v)
    leb = lebesgue_value(xs, 1.0)
    if stats is not None:
        stats["max_lebesgue"] = max(stats.get("max_lebesgue", 0.0), leb)
    if err is not None and scales:
        # float rounding in the node values moves the extrapolant by up to leb * scale
        err.append(leb * max(scales))
    return lagrange_value(xs, ys, Fraction(1) if exact else 1.0)


def approx_query_g(f, p, cfg: ApproxTesterConfig, rng):
    """Self-corrected value at ``p`` by Chebyshev-node extrapolation, or a :class:`Reject`."""
    rng = check_rng(rng)
    exact = cfg.selfcorrect_exact(f)
    return _query_g(f, _prepare(p, exact), cfg, rng, exact)


def _exceeds_final(diff, cfg: ApproxTesterConfig, scale: float) -> bool:
    if cfg.final_threshold == "theoretical":
        return Log2Value.of(abs(diff)) > cfg.theoretical
    if isinstance(diff, Fraction):
        return abs(diff) > cfg.practical_threshold
    return cfg.comparison.exceeds(diff, float(cfg.practical_threshold), scale)


def approx_low_degree_test(f, d: int, dist, alpha: float, eps: float,
                           cfg: ApproxTesterConfig | None = None, rng=None) -> Verdict:
    """One run of the approximate low-degree tester.

    Samples outside ``B(0, R)`` are skipped without querying ``f``. When
    every sample is skipped the run accepts and ``stats["degenerate"]`` is set.
    """
    if cfg is None:
        cfg = ApproxTesterConfig.default(d, eps, alpha, dist.R, f.n)
    if cfg.d != d:
        raise ValueError("configuration degree does not match d")
    rng = check_rng(rng)
    before = f.n_queries
    verdict = approx_characterization_test(f, cfg, rng)
    if not verdict.accepted:
        verdict.queries_used = f.n_queries - before
        return verdict
    exact = cfg.selfcorrect_exact(f)
    R2 = cfg.R * cfg.R
    stats = {"skipped": 0, "max_deviation": 0.0}
    for it in range(cfg.n_main):
        pp = _prepare(dist(rng), exact)
        outside = sc.norm2(pp) > R2 if exact else float(np.dot(pp, pp)) > float(R2)
        if outside:
            stats["skipped"] += 1
            continue
        err: list = []
        g = _query_g(f, pp, cfg, rng, exact, stats, err)
        if isinstance(g, Reject):
            return Verdict.from_reject(g, f.n_queries - before, main_iteration=it, **stats)
        if exact:
            nums, scale = sc.evaluate_exact(f, [pp])
            fp = Fraction(nums[0], scale)
        else:
            fp = float(f.eval_batch(pp[None, :])[0])
        diff = fp - g
        stats["max_deviation"] = max(stats["max_deviation"], abs(float(diff)))
        if _exceeds_final(diff, cfg, abs(float(fp)) + abs(float(g)) + sum(err)):
            return Verdict.from_reject(Reject(RejectSite.MAIN_MISMATCH, {
                "p": sc.to_float(pp).tolist() if exact else pp.tolist(), "f": fp, "g": g,
                "threshold": cfg.final_threshold}), f.n_queries - before,
                main_iteration=it, **stats)
    stats["degenerate"] = stats["skipped"] == cfg.n_main
    return Verdict.accept(f.n_queries - before, **stats)


class ApproxLowDegreeTester(BaseTester):
    """Estimator wrapper around :func:`approx_low_degree_test`.

    Parameters
    ----------
    degree, eps, alpha : tester parameters.
    R : float, optional
        Mass radius; taken from the distribution's ``R`` when omitted.
    final_threshold : {"practical", "theoretical"}
    practical_threshold : float, optional
        Defaults to :func:`certified_threshold`.
    """

    def __init__(self, degree=1, eps=0.1, alpha=0.0, R=None, r=None, n_char=None,
                 n_main=None, n_inball=None, final_threshold="practical",
                 practical_threshold=None, rel_tol=1e-9, abs_tol=1e-12, arithmetic="auto",
                 random_state=None):
        self.degree = degree
        self.eps = eps
        self.alpha = alpha
        self.R = R
        self.r = r
        self.n_char = n_char
        self.n_main = n_main
        self.n_inball = n_inball
        self.final_threshold = final_threshold
        self.practical_threshold = practical_threshold
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.arithmetic = arithmetic
        self.random_state = random_state

    def fit(self, f, dist=None):
        if dist is None:
            raise ValueError("the tester needs a sampling distribution")
        self._dist_R = getattr(dist, "R", None)
        return super().fit(f, dist)

    def _make_config(self, f):
        R = self.R if self.R is not None else self._dist_R
        if R is None:
            raise ValueError("mass radius R is required")
        return ApproxTesterConfig.default(
            self.degree, self.eps, self.alpha, R, f.n, r=self.r, n_char=self.n_char,
            n_main=self.n_main, n_inball=self.n_inball, final_threshold=self.final_threshold,
            practical_threshold=self.practical_threshold, arithmetic=self.arithmetic,
            comparison=ComparisonPolicy.tolerant(self.rel_tol, self.abs_tol))

    def _run(self, f, dist, cfg, rng):
        return approx_low_degree_test(f, cfg.d, dist, cfg.alpha, cfg.eps, cfg, rng)
