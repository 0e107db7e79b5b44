"""Query-counted function oracles, test distributions and instance families."""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core_math import MultiPoly, as_exact_point, as_fraction, is_exact_point, scale_points
from .sampling import (
    DiscreteGaussianSpec,
    LatticeSpec,
    sample_discrete_gaussian_int,
)
from .validation import wilson_interval

__all__ = [
    "FunctionOracle",
    "ConcentratedDistribution",
    "LatticeDistribution",
    "gaussian_distribution",
    "uniform_ball_distribution",
    "student_t_distribution",
    "poly_oracle",
    "noisy_poly_oracle",
    "far_oracle",
    "additive_plus_noise_oracle",
    "certify_farness",
    "hash_noise_units",
]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_QUANT_BITS = 40
_UNIT_BITS = 53


class FunctionOracle:
    """A real function on R^n seen only through counted queries.

    Parameters
    ----------
    n : int
        Input dimension.
    float_eval : callable, optional
        Maps an ``(m, n)`` float array to ``m`` float values.
    scaled_eval : callable, optional
        Exact path: maps integer numerators ``(m, n)`` and a common
        denominator to ``(numerators, scale)`` of the values.
    label : str
        Provenance string.
    declared_bound : float, optional
        Bound the caller claims for ``|f|`` on the relevant ball. Recorded,
        never enforced.
    params : dict, optional
        Construction parameters, kept for reports.

    Notes
    -----
    Every evaluated point adds one to :attr:`n_queries`, whichever path is
    used. Float and exact evaluation of the same point can differ by float
    rounding; each path on its own is a deterministic function of the point.
    """

    def __init__(self, n: int, float_eval: Callable | None = None,
                 scaled_eval: Callable | None = None, label: str = "",
                 declared_bound: float | None = None, params: dict | None = None):
        if float_eval is None and scaled_eval is None:
            raise ValueError("an oracle needs a float or an exact evaluator")
        self.n = int(n)
        self._float_eval = float_eval
        self._scaled_eval = scaled_eval
        self.label = label
        self.declared_bound = declared_bound
        self.params = dict(params or {})
        self._count = 0
        self._lock = threading.Lock()

    @property
    def n_queries(self) -> int:
        return self._count

    @property
    def supports_exact(self) -> bool:
        return self._scaled_eval is not None

    def _tick(self, k: int):
        with self._lock:
            self._count += k

    def eval_batch(self, X) -> np.ndarray:
        """Float values at the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n:
            raise ValueError(f"expected points of dimension {self.n}")
        self._tick(X.shape[0])
        if self._float_eval is not None:
            return np.asarray(self._float_eval(X), dtype=float)
        pts = [as_exact_point(row) for row in X]
        nums, den = scale_points(pts)
        vals, scale = self._scaled_eval(nums, den)
        return np.array([float(Fraction(v, scale)) for v in vals])

    def exact_scaled(self, nums, den: int):
        """Exact values at the points ``nums / den``.

        Returns
        -------
        values : list of int
        scale : int
            Value ``k`` equals ``values[k] / scale``.
        """
        if self._scaled_eval is None:
            raise TypeError(f"oracle {self.label!r} has no exact evaluator")
        m = len(nums)
        self._tick(m)
        return self._scaled_eval(nums, den)

    def exact_many(self, points: Sequence) -> list[Fraction]:
        pts = [as_exact_point(p) for p in points]
        nums, den = scale_points(pts)
        vals, scale = self.exact_scaled(nums, den)
        return [Fraction(v, scale) for v in vals]

    def exact(self, x) -> Fraction:
        return self.exact_many([x])[0]

    def __call__(self, x):
        """Evaluate one point, exactly when possible."""
        if np.ndim(x) == 0:
            x = (x,)
        if self.supports_exact and is_exact_point(x):
            return self.exact(x)
        return float(self.eval_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def __repr__(self):
        return f"FunctionOracle(n={self.n}, label={self.label!r}, queries={self._count})"


# ---------------------------------------------------------------------------
# distributions


class ConcentratedDistribution:
    """A sampler together with a radius ``R`` holding most of its mass.

    Parameters
    ----------
    sampler : callable
        ``sampler(rng, size)`` returns a float array of shape ``(size, n)``.
    n : int
    R : float
        Mass radius.
    deficit : float
        Claimed bound on ``Pr[|x| > R]``.
    verify : bool
        Check the claim on 10^5 samples. Construction fails only when the
        3-sigma Wilson lower bound of the measured deficit exceeds the claim.
    """

    def __init__(self, sampler: Callable, n: int, R: float, deficit: float = 0.0,
                 label: str = "", verify: bool = True, seed: int = 0):
        if R <= 0:
            raise ValueError("mass radius must be positive")
        if not 0 <= deficit < 1:
            raise ValueError("mass deficit must lie in [0, 1)")
        self._sampler = sampler
        self.n = int(n)
        self.R = float(R)
        self.deficit = float(deficit)
        self.label = label
        self.measured_deficit = None
        if verify:
            X = self.sample(np.random.default_rng(seed), 100_000)
            outside = int(np.count_nonzero(np.einsum("ij,ij->i", X, X) > self.R ** 2))
            lo, _ = wilson_interval(outside, X.shape[0], z=3.0)
            self.measured_deficit = outside / X.shape[0]
            if lo > self.deficit:
                raise ValueError(
                    f"distribution {label!r} puts {self.measured_deficit:.4f} of its mass "
                    f"outside radius {R}, above the claimed {deficit}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        X = np.asarray(self._sampler(rng, size), dtype=float)
        return X.reshape(size, self.n)

    def __call__(self, rng: np.random.Generator):
        return self.sample(rng, 1)[0]


class LatticeDistribution(ConcentratedDistribution):
    """Discrete Gaussian ``G((1/B) Z^n, s)``, optionally shifted by a lattice vector.

    Exact samples are tuples of Fractions; :meth:`sample_int` returns the
    integer coordinates over ``B``.
    """

    def __init__(self, n: int, B, s: float, R: float, deficit: float = 0.0,
                 center: Sequence[int] | None = None, label: str = "", verify: bool = True,
                 seed: int = 0):
        self.lattice = LatticeSpec(n, as_fraction(B))
        if self.lattice.B.denominator != 1:
            raise ValueError("lattice density B must be an integer")
        self.B = int(self.lattice.B)
        self.spec = DiscreteGaussianSpec(self.lattice, float(s))
        self.center = np.zeros(n, dtype=np.int64) if center is None else np.asarray(center, np.int64)
        super().__init__(lambda rng, size: self.sample_int(rng, size) / self.B, n, R,
                         deficit, label or f"discrete_gaussian(B={B}, s={s})", verify, seed)

    def sample_int(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_discrete_gaussian_int(self.spec, rng, size) + self.center

    def sample_exact(self, rng: np.random.Generator) -> tuple:
        k = self.sample_int(rng, 1)[0]
        return tuple(Fraction(int(v), self.B) for v in k)


def gaussian_distribution(n: int, sigma: float = 1.0, mean=None, R: float | None = None,
                          deficit: float = 0.01, **kw) -> ConcentratedDistribution:
    """``N(mean, sigma^2 I)`` with ``R`` defaulting to a radius leaving ``deficit / 2`` outside."""
    from scipy.stats import chi

    mu = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
    if R is None:
        R = float(np.linalg.norm(mu) + sigma * chi.ppf(1 - deficit / 2, n))
    return ConcentratedDistribution(
        lambda rng, size: mu + sigma * rng.standard_normal((size, n)), n, R, deficit,
        label=f"gaussian(sigma={sigma})", **kw)


def uniform_ball_distribution(n: int, radius: float = 1.0, **kw) -> ConcentratedDistribution:
    """Uniform on the closed ball of the given radius."""

    def sampler(rng, size):
        z = rng.standard_normal((size, n))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return z * radius * rng.random((size, 1)) ** (1.0 / n)

    return ConcentratedDistribution(sampler, n, radius, 0.0, label=f"uniform_ball({radius})", **kw)


def student_t_distribution(n: int, df: float = 3.0, R: float | None = None,
                           deficit: float = 0.05, **kw) -> ConcentratedDistribution:
    """Independent Student-t coordinates: heavy tails, no bounded support."""
    if R is None:
        probe = np.random.default_rng(12345).standard_t(df, size=(200_000, n))
        R = float(np.quantile(np.linalg.norm(probe, axis=1), 1 - deficit / 2))
    return ConcentratedDistribution(lambda rng, size: rng.standard_t(df, size=(size, n)),
                                    n, R, deficit, label=f"student_t(df={df})", **kw)


# ---------------------------------------------------------------------------
# noise hashing


def _mix_py(z: int) -> int:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _hash_rows_py(keys: Sequence[Sequence[int]], seed: int) -> list[int]:
    base = _mix_py(seed & _MASK)
    out = []
    for row in keys:
        h = base
        for k in row:
            h = _mix_py(h ^ (k & _MASK))
        out.append(h >> (64 - _UNIT_BITS))
    return out


def hash_noise_units(X, seed: int) -> np.ndarray:
    """53-bit integers hashed from ``(seed, floor(x * 2^40))`` for float rows ``X``.

    Agrees with the exact path on every float point, since scaling by a power
    of two and flooring are exact in float64.
    """
    X = np.asarray(X, dtype=float)
    scaled = np.floor(X * float(1 << _QUANT_BITS))
    if np.all(np.abs(scaled) < 2.0 ** 62):
        keys = scaled.astype(np.int64).view(np.uint64)
        with np.errstate(over="ignore"):
            h = np.full(X.shape[0], _mix_py(seed & _MASK), dtype=np.uint64)
            for j in range(X.shape[1]):
                h = _mix_np(h ^ keys[:, j])
        return (h >> np.uint64(64 - _UNIT_BITS)).astype(np.int64)
    rows = [[int(v) for v in row] for row in scaled]
    return np.array(_hash_rows_py(rows, seed), dtype=np.int64)


def _hash_exact(nums, den: int, seed: int) -> list[int]:
    keys = [[(int(v) << _QUANT_BITS) // den for v in row] for row in nums]
    return _hash_rows_py(keys, seed)


# ---------------------------------------------------------------------------
# instance families


def _poly_parts(p: MultiPoly):
    def fl(X):
        return p.eval_float(X)

    def sc(nums, den):
        return p.eval_scaled(nums, den)

    return fl, sc


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _add_scaled(v1, s1, v2, s2):
    s = _lcm(s1, s2)
    f1, f2 = s // s1, s // s2
    return [a * f1 + b * f2 for a, b in zip(v1, v2)], s


def poly_oracle(p: MultiPoly, label: str | None = None) -> FunctionOracle:
    """Oracle for the polynomial ``p`` (exact on rational points)."""
    fl, sc = _poly_parts(p)
    return FunctionOracle(p.n, fl, sc, label or "poly", params={"poly": p.to_dict()})


def noisy_poly_oracle(p: MultiPoly, alpha: float, seed: int = 0) -> FunctionOracle:
    """``p(x) + noise(x)`` with deterministic hashed noise in ``[-alpha, alpha]``.

    The noise is ``alpha * (2 u / 2^53 - 1)`` where ``u`` is a 53-bit hash of
    the seed and of the point quantized to a ``2^-40`` grid.
    """
    if alpha < 0:
        raise ValueError("noise bound must be non-negative")
    if alpha == 0:
        return poly_oracle(p, label="noisy_poly(alpha=0)")
    a_frac = as_fraction(alpha)
    alpha_f = float(alpha)
    unit = float(1 << _UNIT_BITS)

    def fl(X):
        u = hash_noise_units(X, seed)
        return p.eval_float(X) + alpha_f * (2.0 * u / unit - 1.0)

    def sc(nums, den):
        pv, ps = p.eval_scaled(nums, den)
        units = _hash_exact(nums, den, seed)
        nv = [a_frac.numerator * (2 * u - (1 << _UNIT_BITS)) for u in units]
        ns = a_frac.denominator << _UNIT_BITS
        return _add_scaled(pv, ps, nv, ns)

    return FunctionOracle(p.n, fl, sc, f"noisy_poly(alpha={alpha})",
                          params={"poly": p.to_dict(), "alpha": alpha, "seed": seed})


def additive_plus_noise_oracle(c: Sequence, alpha: float, seed: int = 0) -> FunctionOracle:
    """``<c, x> + noise(x)`` with the hashed noise of :func:`noisy_poly_oracle`."""
    orc = noisy_poly_oracle(MultiPoly.linear(list(c)), alpha, seed)
    orc.label = f"additive_plus_noise(alpha={alpha})"
    orc.params = {"c": [float(v) for v in c], "alpha": alpha, "seed": seed}
    return orc


def far_oracle(p: MultiPoly, dist: ConcentratedDistribution, eps: float, jump: float,
               seed: int = 0, direction: Sequence[float] | None = None,
               n_samples: int = 100_000) -> FunctionOracle:
    """``p(x) + jump * 1[<sigma, x> > theta]`` with a half-space of mass about ``3 eps``.

    ``theta`` is the empirical ``1 - 3 eps`` quantile of ``<sigma, x>`` under
    ``dist``. The achieved mass is re-measured on fresh samples and recorded in
    ``oracle.params["achieved_mass"]``; construction fails when the 3-sigma
    Wilson interval misses ``[2 eps, min(4 eps, 0.5)]``.
    """
    if jump < 0:
        raise ValueError("jump must be non-negative")
    if jump == 0:
        return poly_oracle(p)
    if not 0 < eps <= 0.25:
        raise ValueError("farness must lie in (0, 0.25]")
    rng = np.random.default_rng(seed)
    if direction is None:
        sigma = rng.standard_normal(p.n)
    else:
        sigma = np.asarray(direction, dtype=float)
    sigma = sigma / np.linalg.norm(sigma)
    proj = dist.sample(rng, n_samples) @ sigma
    target = min(3 * eps, max(2 * eps, 0.45))
    # the observed value whose strict tail is closest to the target; unlike a
    # plain quantile this copes with atoms of lattice distributions
    cands = np.unique(proj)
    tails = 1.0 - np.searchsorted(np.sort(proj), cands, side="right") / proj.size
    theta = float(cands[int(np.argmin(np.abs(tails - target)))])
    fresh = dist.sample(rng, n_samples) @ sigma
    hits = int(np.count_nonzero(fresh > theta))
    lo, hi = wilson_interval(hits, n_samples, z=3.0)
    upper = min(4 * eps, 0.5)
    if hi < 2 * eps or lo > upper:
        raise ValueError(
            f"could not place a jump region of mass in [{2 * eps}, {upper}] "
            f"(achieved {hits / n_samples:.4f}); the distribution may be degenerate")

    sig_frac = [Fraction(float(v)) for v in sigma]
    sig_nums, sig_den = scale_points([sig_frac])
    sig_nums = sig_nums[0]
    th = Fraction(theta)
    jump_frac = as_fraction(jump)
    jump_f = float(jump)

    def indicator_exact(row, den):
        # <sigma, row/den> > theta  <=>  sum(s_j row_j) * th.den > th.num * sig_den * den
        dot = sum(s * int(v) for s, v in zip(sig_nums, row))
        return dot * th.denominator > th.numerator * sig_den * den

    def fl(X):
        dots = X @ sigma
        ind = dots > theta
        close = np.abs(dots - theta) <= 1e-9 * (1.0 + abs(theta) + np.abs(X) @ np.abs(sigma))
        for k in np.flatnonzero(close):
            nums, den = scale_points([as_exact_point(X[k])])
            ind[k] = indicator_exact(nums[0], den)
        return p.eval_float(X) + jump_f * ind

    def sc(nums, den):
        pv, ps = p.eval_scaled(nums, den)
        jv = [jump_frac.numerator if indicator_exact(row, den) else 0 for row in nums]
        return _add_scaled(pv, ps, jv, jump_frac.denominator)

    params = {"poly": p.to_dict(), "eps": eps, "jump": jump, "seed": seed,
              "theta": theta, "direction": sigma.tolist(),
              "achieved_mass": hits / n_samples, "achieved_mass_interval": [lo, hi]}
    return FunctionOracle(p.n, fl, sc, f"far(eps={eps}, jump={jump})", params=params)


def certify_farness(f: FunctionOracle, dist: ConcentratedDistribution, d: int, eps: float,
                    jump: float, n_samples: int = 20_000, seed: int = 0) -> dict:
    """Empirical farness certificate via a least-squares degree-``d`` fit.

    Fits a polynomial of total degree ``d`` to ``f`` on samples from ``dist``
    and measures the fraction of fresh samples where ``|f - fit| > jump / 4``.
    Queries made here are counted on ``f`` like any others.
    """
    from itertools import combinations_with_replacement

    rng = np.random.default_rng(seed)
    n = f.n
    monos = [()]
    for k in range(1, d + 1):
        monos.extend(combinations_with_replacement(range(n), k))

    def design(X):
        cols = [np.prod(X[:, list(m)], axis=1) if m else np.ones(X.shape[0]) for m in monos]
        return np.column_stack(cols)

    X = dist.sample(rng, n_samples)
    coef, *_ = np.linalg.lstsq(design(X), f.eval_batch(X), rcond=None)
    Y = dist.sample(rng, n_samples)
    resid = np.abs(f.eval_batch(Y) - design(Y) @ coef)
    far = int(np.count_nonzero(resid > jump / 4))
    lo, hi = wilson_interval(far, n_samples, z=3.0)
    return {"far_fraction": far / n_samples, "interval": [lo, hi], "certified": lo >= eps}
