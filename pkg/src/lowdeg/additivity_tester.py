"""Approximate additivity testers.

Both testers check three additivity identities on Gaussian samples and then
compare ``f(p)`` with a self-corrected value obtained by contracting ``p``
into a small ball by an integer factor ``kappa_p`` and scaling back up.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import _selfcorrect as sc
from .core_math import ComparisonPolicy, as_fraction
from .validation import check_eps, check_rng, check_scalar
from .verdict import BaseTester, Reject, RejectSite, Verdict

__all__ = [
    "AdditivityConfig",
    "contraction",
    "test_additivity",
    "approximate_g_additive",
    "approx_additivity_test",
    "mult_approx_additivity_test",
    "AdditivityTester",
]

NO_CASE_CONSTANT = 21015


def contraction(p, r=Fraction(1, 50)) -> int:
    """Smallest integer ``k >= 1`` with ``|p| / k <= r``, computed exactly.

    >>> contraction([0.5, 0.0])
    25
    """
    r = as_fraction(r)
    pt = sc.from_any(p)
    q = sc.norm2(pt) / (r * r)
    if q <= 1:
        return 1
    k = math.isqrt(q.numerator // q.denominator)
    while k * k < q:
        k += 1
    return k


@dataclass(frozen=True)
class AdditivityConfig:
    """Parameters of the additivity testers.

    Attributes
    ----------
    alpha : float
        Pointwise noise bound of YES instances; ``delta = 3 alpha``.
    r : Fraction
        Radius of the contraction ball.
    n_add, n_main, n_approx : int
        Iterations of the identity checks, outer samples, and directions per
        self-corrected value.
    final_factor : float
        The main comparison rejects when ``|f(p) - g(p)| > final_factor * delta * n^1.5 * kappa_p``.
    """

    alpha: float
    eps: float
    n: int
    R: float | None = None
    r: Fraction = Fraction(1, 50)
    n_add: int = 100
    n_main: int = 1
    n_approx: int = 1
    final_factor: float = 5.0
    no_case_constant: float = NO_CASE_CONSTANT
    comparison: ComparisonPolicy = field(default_factory=ComparisonPolicy)
    arithmetic: str = "auto"

    @classmethod
    def default(cls, alpha: float, eps: float, n: int, R: float | None = None,
                **overrides) -> "AdditivityConfig":
        check_scalar(alpha, "alpha", numbers.Real, min_val=0)
        eps = check_eps(eps)
        base = cls(alpha=float(alpha), eps=eps, n=int(n), R=None if R is None else float(R),
                   n_main=math.ceil(48 / eps), n_approx=max(2, math.ceil(8 * math.log(1 / eps))))
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "r" in overrides:
            overrides["r"] = as_fraction(overrides["r"])
        return replace(base, **overrides)

    def __post_init__(self):
        for name in ("n_add", "n_main", "n_approx"):
            check_scalar(getattr(self, name), name, numbers.Integral, min_val=1)
        if self.r <= 0:
            raise ValueError("contraction radius must be positive")
        if self.arithmetic not in ("auto", "exact", "float"):
            raise ValueError(f"unknown arithmetic mode {self.arithmetic!r}")

    @property
    def delta(self) -> float:
        return 3 * self.alpha

    @property
    def delta_exact(self) -> Fraction:
        return 3 * as_fraction(self.alpha)

    def no_case_separation(self) -> float | None:
        """Guaranteed NO-case gap ``21015 R n^1.5 alpha`` (``None`` without ``R``)."""
        if self.R is None:
            return None
        return self.no_case_constant * self.R * self.n ** 1.5 * self.alpha

    def use_exact(self, f) -> bool:
        if self.arithmetic == "float":
            return False
        if self.arithmetic == "exact" and not f.supports_exact:
            raise TypeError("exact arithmetic requested but the oracle has no exact evaluator")
        return f.supports_exact

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "delta": self.delta, "eps": self.eps, "n": self.n,
                "R": self.R, "r": str(self.r), "n_add": self.n_add, "n_main": self.n_main,
                "n_approx": self.n_approx, "final_factor": self.final_factor,
                "no_case_separation": self.no_case_separation(),
                "comparison": self.comparison.to_dict(), "arithmetic": self.arithmetic}


class _Arith:
    """Point arithmetic and evaluation in one of the two modes."""

    def __init__(self, f, cfg: AdditivityConfig):
        self.f = f
        self.cfg = cfg
        self.exact = cfg.use_exact(f)
        self.delta = cfg.delta_exact if self.exact else cfg.delta

    def point(self, x):
        return sc.from_any(x) if self.exact else np.asarray(x, dtype=float).ravel()

    def lin(self, a, x, b=0, y=None):
        """``a x + b y`` for integer ``a, b``."""
        if self.exact:
            if y is None:
                nums, den = x
                return tuple(a * v for v in nums), den
            return sc.combine(sc.scale_point(Fraction(a), x), y, b)
        return a * x if y is None else a * x + b * y

    def shrink(self, x, k: int):
        if self.exact:
            nums, den = x
            return nums, den * k
        return x / k

    def values(self, points):
        """Values at ``points`` and the rounding-error scale of their sum."""
        if self.exact:
            nums, scale = sc.evaluate_exact(self.f, points)
            return [Fraction(v, scale) for v in nums], 0.0
        vals = self.f.eval_batch(np.vstack(points))
        return list(vals), float(np.abs(vals).sum())

    def exceeds(self, value, threshold, scale) -> bool:
        if self.exact:
            return abs(value) > threshold
        return self.cfg.comparison.exceeds(value, threshold, scale)

    def to_list(self, x):
        return sc.to_float(x).tolist() if self.exact else list(map(float, x))


def _additivity_checks(ar: _Arith, rng, n_iter: int):
    n = ar.f.n
    s2 = math.sqrt(2)
    for it in range(n_iter):
        x, y, z = rng.standard_normal((3, n))
        X, Y = ar.point(x), ar.point(y)
        v, s = ar.values([ar.lin(-1, X), X])
        if ar.exceeds(v[0] + v[1], ar.delta, s):
            return Reject(RejectSite.ADD_SYMMETRY, {
                "iteration": it, "x": x.tolist(), "statistic": v[0] + v[1]})
        v, s = ar.values([ar.lin(1, X, -1, Y), X, Y])
        stat = v[0] - (v[1] - v[2])
        if ar.exceeds(stat, ar.delta, s):
            return Reject(RejectSite.ADD_DIFFERENCE, {
                "iteration": it, "x": x.tolist(), "y": y.tolist(), "statistic": stat})
        # u + w equals (x - y)/sqrt(2) up to rounding; defining the sum exactly
        # keeps the identity exact for additive functions
        U, W = ar.point((x - z) / s2), ar.point((z - y) / s2)
        v, s = ar.values([ar.lin(1, U, 1, W), U, W])
        stat = v[0] - (v[1] + v[2])
        if ar.exceeds(stat, ar.delta, s):
            return Reject(RejectSite.ADD_SQRT2, {
                "iteration": it, "x": x.tolist(), "y": y.tolist(), "z": z.tolist(),
                "statistic": stat})
    return None


def test_additivity(f, cfg: AdditivityConfig, rng) -> Verdict:
    """Check symmetry, difference and sqrt(2)-scaled additivity ``n_add`` times."""
    rng = check_rng(rng)
    before = f.n_queries
    rej = _additivity_checks(_Arith(f, cfg), rng, cfg.n_add)
    used = f.n_queries - before
    return Verdict.accept(used) if rej is None else Verdict.from_reject(rej, used)


test_additivity.__test__ = False  # not a pytest test


def _approx_g(ar: _Arith, P, rng):
    cfg = ar.cfg
    k = contraction(P, cfg.r)
    Pk = ar.shrink(P, k)
    xs = rng.standard_normal((cfg.n_approx, ar.f.n))
    pts = []
    for x in xs:
        Xp = ar.point(x)
        pts.append(ar.lin(1, Pk, -1, Xp))
        pts.append(Xp)
    v, s = ar.values(pts)
    g = [v[2 * j] + v[2 * j + 1] for j in range(cfg.n_approx)]
    per = s / max(cfg.n_approx, 1)
    for j in range(1, len(g)):
        if ar.exceeds(g[j] - g[0], 2 * ar.delta, 2 * per):
            return Reject(RejectSite.APPROX_G_INCONSISTENT, {
                "p": ar.to_list(P), "kappa": k, "g_first": g[0], "g_other": g[j], "index": j}), k
    return k * g[0], k


def approximate_g_additive(f, p, cfg: AdditivityConfig, rng):
    """Self-corrected value ``kappa_p (f(p/kappa_p - x_1) + f(x_1))``, or a :class:`Reject`.

    Rejects when two directions give values more than ``2 delta`` apart.
    """
    rng = check_rng(rng)
    ar = _Arith(f, cfg)
    val, _ = _approx_g(ar, ar.point(p), rng)
    return val


def _main_loop(f, dist, cfg: AdditivityConfig, rng, skip_outside: bool) -> Verdict:
    rng = check_rng(rng)
    before = f.n_queries
    ar = _Arith(f, cfg)
    stats = {"no_case_separation": cfg.no_case_separation()}
    rej = _additivity_checks(ar, rng, cfg.n_add)
    if rej is not None:
        return Verdict.from_reject(rej, f.n_queries - before, **stats)
    n3 = cfg.n ** 3
    factor = as_fraction(cfg.final_factor)
    R2 = None if cfg.R is None else as_fraction(cfg.R) ** 2
    skipped = 0
    worst = 0.0
    for it in range(cfg.n_main):
        x = dist.sample(rng, 1)[0] if hasattr(dist, "sample") else dist(rng)
        P = ar.point(x)
        if skip_outside and R2 is not None:
            inside = sc.norm2(P) <= R2 if ar.exact else float(np.dot(P, P)) <= float(R2)
            if not inside:
                skipped += 1
                continue
        g, k = _approx_g(ar, P, rng)
        if isinstance(g, Reject):
            return Verdict.from_reject(g, f.n_queries - before, main_iteration=it,
                                       skipped=skipped, **stats)
        v, s = ar.values([P])
        diff = v[0] - g
        if ar.exact:
            bound2 = (factor * ar.delta * k) ** 2 * n3
            bad = diff * diff > bound2
            ratio = math.sqrt(float(diff * diff / bound2)) if bound2 else math.inf if diff else 0.0
        else:
            bound = cfg.final_factor * cfg.delta * k * cfg.n ** 1.5
            bad = cfg.comparison.exceeds(diff, bound, s + abs(g))
            ratio = abs(diff) / bound if bound else (math.inf if diff else 0.0)
        worst = max(worst, ratio)
        if bad:
            return Verdict.from_reject(Reject(RejectSite.MAIN_MISMATCH, {
                "p": ar.to_list(P), "kappa": k, "f": v[0], "g": g}),
                f.n_queries - before, main_iteration=it, skipped=skipped,
                worst_ratio=worst, **stats)
    return Verdict.accept(f.n_queries - before, skipped=skipped, worst_ratio=worst,
                          degenerate=skip_outside and skipped == cfg.n_main, **stats)


def approx_additivity_test(f, dist, alpha: float, eps: float, cfg: AdditivityConfig | None = None,
                           rng=None) -> Verdict:
    """Additivity tester for ``(eps, R)``-concentrated distributions.

    Samples outside ``B(0, R)`` are skipped; ``R`` defaults to ``dist.R``.
    """
    if cfg is None:
        cfg = AdditivityConfig.default(alpha, eps, f.n, getattr(dist, "R", None))
    elif cfg.R is None and getattr(dist, "R", None) is not None:
        cfg = replace(cfg, R=float(dist.R))
    return _main_loop(f, dist, cfg, rng, skip_outside=True)


def mult_approx_additivity_test(f, dist, alpha: float, eps: float,
                                cfg: AdditivityConfig | None = None, rng=None) -> Verdict:
    """Distribution-free variant whose error bound grows with ``kappa_p``; nothing is skipped."""
    cfg = cfg or AdditivityConfig.default(alpha, eps, f.n)
    return _main_loop(f, dist, cfg, rng, skip_outside=False)


class AdditivityTester(BaseTester):
    """Estimator wrapper for both additivity testers.

    Parameters
    ----------
    alpha, eps : float
    variant : {"concentrated", "multiplicative"}
    R : float, optional
        Mass radius; read from the distribution when omitted.
    """

    def __init__(self, alpha=0.0, eps=0.1, variant="concentrated", R=None, r=None, n_add=None,
                 n_main=None, n_approx=None, rel_tol=1e-9, abs_tol=1e-12, arithmetic="auto",
                 random_state=None):
        self.alpha = alpha
        self.eps = eps
        self.variant = variant
        self.R = R
        self.r = r
        self.n_add = n_add
        self.n_main = n_main
        self.n_approx = n_approx
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
        if self.variant not in ("concentrated", "multiplicative"):
            raise ValueError(f"unknown variant {self.variant!r}")
        R = self.R if self.R is not None else self._dist_R
        return AdditivityConfig.default(
            self.alpha, self.eps, f.n, R, r=self.r, n_add=self.n_add, n_main=self.n_main,
            n_approx=self.n_approx, arithmetic=self.arithmetic,
            comparison=ComparisonPolicy.tolerant(self.rel_tol, self.abs_tol))

    def _run(self, f, dist, cfg, rng):
        skip = self.variant == "concentrated"
        return _main_loop(f, dist, cfg, rng, skip_outside=skip)
