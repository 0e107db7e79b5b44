"""Gaussian and lattice discrete-Gaussian samplers plus total-variation helpers.

The continuous sampler uses numpy's ziggurat normal generator. Discrete
samples come from an integer inverse-CDF table, so the lattice path never
touches floating point after the table is built.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core_math import as_fraction

__all__ = [
    "GaussianSpec",
    "LatticeSpec",
    "DiscreteGaussianSpec",
    "sample_gaussian",
    "sample_discrete_gaussian_1d",
    "sample_discrete_gaussian",
    "sample_discrete_gaussian_int",
    "discrete_gaussian_pmf",
    "tv_bound_shifted",
    "smoothing_bounds",
    "empirical_tv_projected",
    "empirical_tv_discrete",
    "SamplerRegimeWarning",
]

# integer CDF resolution of the discrete sampler
_CDF_BITS = 62


# widest width/step ratio the inverse-CDF tables accept (about 6M entries)
MAX_TABLE_RATIO = 2 ** 18


class SamplerRegimeWarning(UserWarning):
    """A sampler is used outside the parameter regime of the theory."""


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian ``N(mean, variance_scale * I)`` on R^n."""

    n: int
    mean: tuple = ()
    variance_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not self.variance_scale > 0:
            raise ValueError("variance must be positive")
        mean = tuple(float(v) for v in self.mean) if len(self.mean) else (0.0,) * self.n
        if len(mean) != self.n:
            raise ValueError("mean has the wrong length")
        object.__setattr__(self, "mean", mean)


@dataclass(frozen=True)
class LatticeSpec:
    """Scaled integer lattice ``t * (1/B) Z^n``."""

    n: int
    B: Fraction = Fraction(1)
    t: int = 1

    def __post_init__(self):
        B = as_fraction(self.B)
        if self.n < 1 or B <= 0 or self.t == 0:
            raise ValueError("invalid lattice specification")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "t", int(self.t))

    @property
    def step(self) -> Fraction:
        return Fraction(abs(self.t)) / self.B

    def contains(self, x) -> bool:
        """Exact membership: ``B * x_i`` is an integer multiple of ``t``."""
        if np.ndim(x) == 0:
            x = (x,)
        if len(x) != self.n:
            return False
        for v in x:
            if isinstance(v, float):
                v = Fraction(v)
            y = as_fraction(v) * self.B
            if y.denominator != 1 or y.numerator % self.t:
                return False
        return True


@dataclass(frozen=True)
class DiscreteGaussianSpec:
    """Discrete Gaussian on a lattice, mass proportional to ``exp(-pi |x|^2 / s^2)``."""

    lattice: LatticeSpec
    s: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("width must be positive")


def sample_gaussian(spec: GaussianSpec, rng: np.random.Generator, size: int | None = None):
    """Draw from ``N(mean, sigma^2 I)``; returns shape ``(n,)`` or ``(size, n)``."""
    shape = (spec.n,) if size is None else (size, spec.n)
    z = rng.standard_normal(shape)
    return np.asarray(spec.mean) + math.sqrt(spec.variance_scale) * z


class _IntegerCDF:
    """Inverse-CDF table for ``j -> exp(-pi j^2 / ratio^2)`` on ``|j| <= ceil(12 ratio)``."""

    def __init__(self, ratio: float):
        self.ratio = ratio
        self.jmax = int(math.ceil(12 * ratio))
        js = np.arange(-self.jmax, self.jmax + 1)
        w = np.exp(-math.pi * (js / ratio) ** 2)
        self.probs = w / w.sum()
        total = 1 << _CDF_BITS
        cum = np.floor(np.cumsum(self.probs) * total).astype(np.int64)
        cum[-1] = total
        np.maximum.accumulate(cum, out=cum)
        self.cum = cum
        self.total = total

    def draw(self, rng: np.random.Generator, size):
        u = rng.integers(0, self.total, size=size, dtype=np.int64)
        return np.searchsorted(self.cum, u, side="right").astype(np.int64) - self.jmax


@lru_cache(maxsize=256)
def _table(ratio: float) -> _IntegerCDF:
    return _IntegerCDF(ratio)


def _ratio(step, s) -> float:
    ratio = float(s) / float(step)
    if ratio < 0.1:
        raise ValueError(f"width {s} is below the practical floor step/10 for step {step}")
    if ratio > MAX_TABLE_RATIO:
        raise ValueError(f"width/step ratio {ratio:.3g} exceeds the table sampler's limit "
                         f"{MAX_TABLE_RATIO}")
    # round so that equal widths computed along different paths share a table
    return float(f"{ratio:.15g}")


def discrete_gaussian_pmf(step, s) -> tuple[np.ndarray, np.ndarray]:
    """Target PMF of the 1-D discrete Gaussian on ``step * Z``.

    Returns
    -------
    indices : ndarray of int
        Multipliers ``j`` of ``step`` on the truncated support.
    probs : ndarray
        Normalized probabilities.
    """
    tab = _table(_ratio(step, s))
    return np.arange(-tab.jmax, tab.jmax + 1), tab.probs.copy()


def sample_discrete_gaussian_1d(step, s, rng: np.random.Generator, size: int | None = None,
                                as_index: bool = False):
    """Sample ``G(step * Z, s)``.

    Parameters
    ----------
    step : rational
        Lattice spacing.
    s : float
        Width; PMF at ``j * step`` is proportional to ``exp(-pi j^2 step^2 / s^2)``.
    size : int, optional
        Number of samples; ``None`` for a single draw.
    as_index : bool
        Return the integer multipliers ``j`` instead of the lattice values.

    Returns
    -------
    Fraction, or ndarray of int / object
    """
    step = as_fraction(step)
    tab = _table(_ratio(step, s))
    j = tab.draw(rng, 1 if size is None else size)
    if as_index:
        return int(j[0]) if size is None else j
    if size is None:
        return int(j[0]) * step
    return np.array([int(v) * step for v in j], dtype=object)


def sample_discrete_gaussian_int(spec: DiscreteGaussianSpec, rng: np.random.Generator,
                                 size: int | None = None) -> np.ndarray:
    """Integer coordinates ``k`` of discrete-Gaussian lattice samples.

    The sampled point is ``k * step`` with ``step = t / B``. The density
    factorizes over coordinates, so each coordinate is an independent 1-D draw.
    """
    lat = spec.lattice
    tab = _table(_ratio(lat.step, spec.s))
    shape = (lat.n,) if size is None else (size, lat.n)
    return tab.draw(rng, shape)


def sample_discrete_gaussian(spec: DiscreteGaussianSpec, rng: np.random.Generator) -> tuple:
    """One lattice sample as a tuple of Fractions."""
    k = sample_discrete_gaussian_int(spec, rng)
    step = spec.lattice.step
    return tuple(int(v) * step for v in k)


def tv_bound_shifted(k: int, r: float) -> float:
    """Certified bound ``k r / 2`` on TV(N(0, kI), N(p, kI)) for ``|p| <= r``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return k * r / 2


def smoothing_bounds(n: int, B) -> tuple[float, float]:
    """Closed-form bounds ``(sqrt(n/pi)/B, sqrt(n)/B)`` on the smoothing parameter of (1/B)Z^n."""
    if n < 1 or B <= 0:
        raise ValueError("need n >= 1 and B > 0")
    B = float(B)
    return math.sqrt(n / math.pi) / B, math.sqrt(n) / B


def empirical_tv_projected(X, Y, direction=None, bins: int = 30) -> float:
    """Binned TV estimate between two samples after projecting onto a direction.

    For two isotropic Gaussians with equal covariance the projection onto the
    mean difference is a sufficient statistic, so no information is lost.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1 and Y.shape[0] == 1:
        X, Y = X.T, Y.T
    if direction is None:
        direction = np.ones(X.shape[1])
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    a, b = X @ u, Y @ u
    lo = min(np.quantile(a, 0.0005), np.quantile(b, 0.0005))
    hi = max(np.quantile(a, 0.9995), np.quantile(b, 0.9995))
    edges = np.concatenate(([-np.inf], np.linspace(lo, hi, bins - 1), [np.inf]))
    ha = np.histogram(a, edges)[0] / len(a)
    hb = np.histogram(b, edges)[0] / len(b)
    return 0.5 * float(np.abs(ha - hb).sum())


def empirical_tv_discrete(samples, support, probs) -> float:
    """TV between the empirical law of integer ``samples`` and a PMF on ``support``.

    Mass outside ``support`` counts fully toward the distance.
    """
    samples = np.asarray(samples, dtype=np.int64).ravel()
    support = np.asarray(support, dtype=np.int64)
    order = np.argsort(support)
    support, probs = support[order], np.asarray(probs, dtype=float)[order]
    vals, counts = np.unique(samples, return_counts=True)
    emp = counts / samples.size
    idx = np.searchsorted(support, vals)
    idx_c = np.clip(idx, 0, len(support) - 1)
    inside = support[idx_c] == vals
    matched = np.zeros(len(support))
    matched[idx_c[inside]] = emp[inside]
    return 0.5 * (float(np.abs(matched - probs).sum()) + float(emp[~inside].sum()))


def warn_regime(message: str):
    warnings.warn(message, SamplerRegimeWarning, stacklevel=3)
