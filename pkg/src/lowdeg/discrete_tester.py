"""Low-degree tester for distributions supported on the lattice ``(1/B) Z^n``.

All points are held as integer vectors over a known denominator (``B`` for
the sample lattice, ``B'`` for the finer query lattice) and every comparison
is exact.
"""

from __future__ import annotations

import math
import numbers
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .core_math import alpha_coeffs, as_fraction, lagrange_value
from .sampling import MAX_TABLE_RATIO, SamplerRegimeWarning, smoothing_bounds, _table, _ratio
from .validation import check_degree, check_eps, check_rng, check_scalar
from .verdict import BaseTester, Reject, RejectSite, Verdict

__all__ = [
    "DiscreteTesterConfig",
    "discrete_characterization_test",
    "discrete_query_g",
    "discrete_low_degree_test",
    "DiscreteLowDegreeTester",
    "theorem_query_lattice_density",
    "interpolation_multipliers",
]

CHAR_CONSTANT = 900
MAIN_CONSTANT = 48


def theorem_query_lattice_density(n: int, d: int, B: int, R: float) -> int:
    """Smallest multiple of ``B`` that is at least ``16 max{n^(5/2+2d) d^(2d), B^2 R^2 / sqrt(n)}``."""
    need = 16 * max(n ** (2.5 + 2 * d) * d ** (2 * d), B * B * R * R / math.sqrt(n))
    return int(B * math.ceil(need / B))


def _discrete_inball_reps(d: int, eps: float) -> int:
    """Smallest ``N >= 1`` with ``(4(d+2))^-N <= eps / (2(d+1))``."""
    return max(1, math.ceil(math.log(2 * (d + 1) / eps) / math.log(4 * (d + 2)) - 1e-12))


@dataclass(frozen=True)
class DiscreteTesterConfig:
    """Resolved parameters of the lattice tester.

    Attributes
    ----------
    B : int
        Density of the sample lattice ``(1/B) Z^n``.
    B_prime : int
        Density of the query lattice ``(1/B') Z^n``; a multiple of ``B``.
    r_squared : Fraction
        Square of the small-ball radius ``d sqrt(n) / (2B)``.
    regime : dict
        Which parameter conditions of the theory hold; violations only warn.
    debug : bool
        Audit every query for lattice membership and float contamination.
    """

    d: int
    eps: float
    n: int
    R: Fraction
    B: int
    B_prime: int
    r_squared: Fraction
    n_char: int
    n_main: int
    n_inball: int
    regime: dict = field(default_factory=dict)
    debug: bool = True
    block: int = 16

    @classmethod
    def default(cls, d: int, eps: float, n: int, R: float, B: int, B_prime: int | None = None,
                **overrides) -> "DiscreteTesterConfig":
        d = check_degree(d)
        if d < 1:
            raise ValueError("the lattice tester needs d >= 1")
        eps = check_eps(eps)
        B = int(check_scalar(B, "B", numbers.Integral, min_val=1))
        theorem_bp = theorem_query_lattice_density(n, d, B, float(R))
        if B_prime is None:
            # the guaranteed density can exceed what the table sampler supports
            B_prime = min(theorem_bp, B * (MAX_TABLE_RATIO // B))
        B_prime = int(B_prime)
        if B_prime % B:
            raise ValueError("B' must be a multiple of B")
        lo, hi = smoothing_bounds(n, B)
        regime = {
            "theorem_B_prime": theorem_bp,
            "B_prime_in_regime": B_prime >= theorem_bp,
            "smoothing_upper": hi,
            "unit_width_above_smoothing": 1.0 >= hi,
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        base = cls(d=d, eps=eps, n=int(n), R=as_fraction(R), B=B, B_prime=B_prime,
                   r_squared=Fraction(d * d * n, 4 * B * B),
                   n_char=math.ceil(CHAR_CONSTANT * d * d),
                   n_main=math.ceil(MAIN_CONSTANT / eps),
                   n_inball=_discrete_inball_reps(d, eps), regime=regime)
        cfg = replace(base, **overrides)
        if not regime["B_prime_in_regime"]:
            warnings.warn(f"B'={B_prime} is below the guaranteed requirement {theorem_bp}; "
                          "running out of regime", SamplerRegimeWarning, stacklevel=2)
        if not regime["unit_width_above_smoothing"]:
            warnings.warn("unit-width discrete Gaussians are below the smoothing bound "
                          f"sqrt(n)/B={hi:.3g}", SamplerRegimeWarning, stacklevel=2)
        return cfg

    def __post_init__(self):
        for name in ("n_char", "n_main", "n_inball"):
            check_scalar(getattr(self, name), name, numbers.Integral, min_val=1)

    def to_dict(self) -> dict:
        return {"d": self.d, "eps": self.eps, "n": self.n, "R": float(self.R), "B": self.B,
                "B_prime": self.B_prime, "r": math.sqrt(self.r_squared), "n_char": self.n_char,
                "n_main": self.n_main, "n_inball": self.n_inball, "regime": self.regime}


class _Audit:
    """Counts queries off the fine lattice and non-integer coordinates."""

    def __init__(self, f, B_prime: int, enabled: bool):
        self.f = f
        self.B_prime = B_prime
        self.enabled = enabled
        self.checked = 0
        self.violations = 0
        self.float_ops = 0

    def query(self, X: np.ndarray, den: int):
        """Evaluate ``f`` at the rows of ``X / den``; ``X`` is an integer array."""
        X = np.asarray(X)
        if self.enabled:
            if X.dtype.kind in "iu":
                self.violations += int(np.count_nonzero((X * self.B_prime) % den))
            else:
                for v in X.ravel():
                    if not isinstance(v, (int, np.integer)):
                        self.float_ops += 1
                    elif (int(v) * self.B_prime) % den:
                        self.violations += 1
            self.checked += len(X)
        return self.f.exact_scaled(X, den)

    def stats(self) -> dict:
        return {"membership_checked": self.checked, "membership_violations": self.violations,
                "float_ops": self.float_ops}


def _draw(rng, n: int, step_ratio: float, size: int) -> np.ndarray:
    """Integer draws ``k`` with PMF proportional to ``exp(-pi k^2 / step_ratio^2)``."""
    return _table(_ratio(1.0, step_ratio)).draw(rng, (size, n))


def _characterization(audit: _Audit, cfg: DiscreteTesterConfig, rng):
    d, n, B = cfg.d, cfg.n, cfg.B
    alphas = np.array(alpha_coeffs(d + 1).alphas, dtype=object)
    plan = []  # (p multiplier, p width, q multiplier, q width, site)
    for j in range(1, d + 2):
        for t in range(d + 2):
            w = math.sqrt(t * t + 1)
            plan.append((j, w, 1, 1.0, RejectSite.CHAR_SCALED_P))
            plan.append((j, 1.0, 1, w, RejectSite.CHAR_SCALED_Q))
        plan.append((j, 1.0, j, 1.0, RejectSite.CHAR_EQUAL))
    offsets = np.arange(d + 2, dtype=np.int64)
    done = 0
    while done < cfg.n_char:
        b = min(cfg.block, cfg.n_char - done)
        P = np.empty((b, len(plan), n), dtype=np.int64)
        Q = np.empty_like(P)
        for k, (jp, wp, jq, wq, _) in enumerate(plan):
            P[:, k] = jp * _draw(rng, n, B * wp, b)
            Q[:, k] = jq * _draw(rng, n, B * wq, b)
        X = P[None] + offsets[:, None, None, None] * Q[None]  # units of 1/B
        vals, scale = audit.query(X.reshape(-1, n), B)
        vals = np.asarray(vals, dtype=object).reshape(d + 2, b * len(plan))
        stat = alphas @ vals
        for k, s in enumerate(stat):
            if s != 0:
                rnd, test = divmod(k, len(plan))
                return Reject(plan[test][4], {
                    "round": done + rnd,
                    "p": [Fraction(int(v), B) for v in P[rnd, test]],
                    "q": [Fraction(int(v), B) for v in Q[rnd, test]],
                    "statistic": Fraction(s, scale)})
        done += b
    return None


def discrete_characterization_test(f, cfg: DiscreteTesterConfig, rng) -> Verdict:
    """Characterization schedule with discrete-Gaussian pairs and exact zero tests."""
    rng = check_rng(rng)
    before = f.n_queries
    audit = _Audit(f, cfg.B_prime, cfg.debug)
    rej = _characterization(audit, cfg, rng)
    used = f.n_queries - before
    if rej is None:
        return Verdict.accept(used, **audit.stats())
    return Verdict.from_reject(rej, used, **audit.stats())


def _in_ball(audit: _Audit, p_fine: np.ndarray, cfg: DiscreteTesterConfig, rng):
    """``p_fine``: integer coordinates over ``B'``."""
    d = cfg.d
    qs = _draw(rng, cfg.n, float(cfg.B_prime), cfg.n_inball)
    X = np.concatenate([p_fine[None, :] + i * qs for i in range(1, d + 2)], axis=0)
    vals, scale = audit.query(X, cfg.B_prime)
    alphas = np.array(alpha_coeffs(d + 1).alphas[1:], dtype=object)
    g = list(alphas @ np.asarray(vals, dtype=object).reshape(d + 1, cfg.n_inball))
    for j in range(1, len(g)):
        if g[j] != g[0]:
            return Reject(RejectSite.INBALL_INCONSISTENT, {
                "p": [Fraction(int(v), cfg.B_prime) for v in p_fine],
                "g_first": Fraction(g[0], scale), "g_other": Fraction(g[j], scale), "index": j})
    return Fraction(g[0], scale)


def _nearest_int_of_sqrt(num: int, den: int) -> int:
    """Nearest integer to ``sqrt(num / den)`` (ties round up)."""
    fl = math.isqrt(num // den)
    return fl + 1 if 4 * num >= (2 * fl + 1) ** 2 * den else fl


def interpolation_multipliers(k: np.ndarray, cfg: DiscreteTesterConfig):
    """Fine-lattice interpolation nodes on the segment from 0 towards ``k / B``.

    Returns
    -------
    ms : list of int
        Node ``i`` is ``ms[i] * k0 / B'`` with ``k0 = k / gcd(k)``.
    k0 : ndarray
    multipliers : list of Fraction
        ``c_i`` such that node ``i`` equals ``c_i * k / B``.

    Raises
    ------
    ValueError
        Fewer than ``d + 1`` fine-lattice points lie strictly inside the small ball.
    """
    d, B, Bp = cfg.d, cfg.B, cfg.B_prime
    ints = [int(v) for v in k]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    k0 = [v // g for v in ints]
    norm0 = sum(v * v for v in k0)
    # m |k0| / B' < r  <=>  4 m^2 |k0|^2 B^2 < d^2 n B'^2
    lhs_unit = 4 * norm0 * B * B
    rhs = d * d * cfg.n * Bp * Bp
    m_max = math.isqrt(rhs // lhs_unit)
    while m_max > 0 and m_max * m_max * lhs_unit >= rhs:
        m_max -= 1
    if m_max < d + 1:
        raise ValueError(
            f"only {m_max} query-lattice points lie on the segment inside the small ball; "
            f"need {d + 1} (increase B')")
    ms = []
    for i in range(1, d + 2):
        # target m = i r B' / ((d+1) |k0|), squared: i^2 d^2 n B'^2 / (4 B^2 |k0|^2 (d+1)^2)
        t = _nearest_int_of_sqrt(i * i * rhs, lhs_unit * (d + 1) ** 2)
        t = min(max(t, i), m_max - (d + 1 - i))
        if ms and t <= ms[-1]:
            t = ms[-1] + 1
        ms.append(t)
    multipliers = [Fraction(m * B, g * Bp) for m in ms]
    return ms, np.array(k0, dtype=np.int64), multipliers


def _query_g(audit: _Audit, k: np.ndarray, cfg: DiscreteTesterConfig, rng):
    """``k``: integer coordinates of ``p`` over ``B``."""
    scale_up = cfg.B_prime // cfg.B
    norm2 = Fraction(int(sum(int(v) * int(v) for v in k)), cfg.B * cfg.B)
    if norm2 < cfg.r_squared:
        return _in_ball(audit, k.astype(np.int64) * scale_up, cfg, rng)
    ms, k0, cs = interpolation_multipliers(k, cfg)
    ys = []
    for m in ms:
        v = _in_ball(audit, m * k0, cfg, rng)
        if isinstance(v, Reject):
            return v
        ys.append(v)
    return lagrange_value(cs, ys, Fraction(1))


def discrete_query_g(f, p, cfg: DiscreteTesterConfig, rng):
    """Self-corrected value at a sample-lattice point ``p``, or a :class:`Reject`."""
    rng = check_rng(rng)
    k = _lattice_coords(p, cfg.B)
    return _query_g(_Audit(f, cfg.B_prime, cfg.debug), k, cfg, rng)


def _lattice_coords(p, B: int) -> np.ndarray:
    out = []
    for v in np.ravel(np.asarray(p, dtype=object)):
        y = as_fraction(v) * B
        if y.denominator != 1:
            raise ValueError(f"sample {p!r} is not a point of the lattice (1/{B})Z^n")
        out.append(int(y))
    return np.array(out, dtype=np.int64)


def _sample_coords(dist, rng, B: int) -> np.ndarray:
    if hasattr(dist, "sample_int") and getattr(dist, "B", None) == B:
        return dist.sample_int(rng, 1)[0].astype(np.int64)
    if hasattr(dist, "sample_exact"):
        return _lattice_coords(dist.sample_exact(rng), B)
    return _lattice_coords(dist(rng), B)


def discrete_low_degree_test(f, d: int, dist, eps: float, cfg: DiscreteTesterConfig,
                             rng=None) -> Verdict:
    """One run of the lattice tester; samples outside ``B(0, R)`` are skipped."""
    if cfg.d != d:
        raise ValueError("configuration degree does not match d")
    rng = check_rng(rng)
    before = f.n_queries
    audit = _Audit(f, cfg.B_prime, cfg.debug)
    rej = _characterization(audit, cfg, rng)
    if rej is not None:
        return Verdict.from_reject(rej, f.n_queries - before, **audit.stats())
    R2B = cfg.R * cfg.R * cfg.B * cfg.B
    skipped = 0
    for it in range(cfg.n_main):
        k = _sample_coords(dist, rng, cfg.B)
        if int(sum(int(v) * int(v) for v in k)) > R2B:
            skipped += 1
            continue
        g = _query_g(audit, k, cfg, rng)
        if isinstance(g, Reject):
            return Verdict.from_reject(g, f.n_queries - before, main_iteration=it,
                                       skipped=skipped, **audit.stats())
        vals, scale = audit.query(np.array([k], dtype=np.int64), cfg.B)
        fp = Fraction(vals[0], scale)
        if fp != g:
            return Verdict.from_reject(Reject(RejectSite.MAIN_MISMATCH, {
                "p": [Fraction(int(v), cfg.B) for v in k], "f": fp, "g": g}),
                f.n_queries - before, main_iteration=it, skipped=skipped, **audit.stats())
    return Verdict.accept(f.n_queries - before, skipped=skipped,
                          degenerate=skipped == cfg.n_main, **audit.stats())


class DiscreteLowDegreeTester(BaseTester):
    """Estimator wrapper around :func:`discrete_low_degree_test`."""

    def __init__(self, degree=1, eps=0.1, B=1, B_prime=None, R=None, n_char=None,
                 n_main=None, n_inball=None, debug=True, random_state=None):
        self.degree = degree
        self.eps = eps
        self.B = B
        self.B_prime = B_prime
        self.R = R
        self.n_char = n_char
        self.n_main = n_main
        self.n_inball = n_inball
        self.debug = debug
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
        return DiscreteTesterConfig.default(
            self.degree, self.eps, f.n, R, self.B, self.B_prime, n_char=self.n_char,
            n_main=self.n_main, n_inball=self.n_inball, debug=self.debug)

    def _run(self, f, dist, cfg, rng):
        return discrete_low_degree_test(f, cfg.d, dist, cfg.eps, cfg, rng)
