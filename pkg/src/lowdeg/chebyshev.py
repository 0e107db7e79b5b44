"""Chebyshev polynomials, node interpolation bounds and radial-line extrapolation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Sequence

import numpy as np

from .core_math import (
    MultiPoly,
    UniPoly,
    as_fraction,
    lagrange_value,
    restrict_to_line,
)

__all__ = [
    "Log2Value",
    "ChebExpansion",
    "cheb_eval",
    "cheb_nodes",
    "stability_bound",
    "monomial_to_cheb",
    "anticoncentration_search",
    "isolating_exponents",
    "verify_isolating",
    "radial_cheb_coeffs",
    "extrapolate_radial",
    "extrapolation_bound",
]


@total_ordering
class Log2Value:
    """Non-negative number stored as ``mantissa * 2**exponent``.

    ``mantissa`` lies in ``[1, 2)`` (or is 0) and ``exponent`` is an arbitrary
    Python int, so values like ``2**(10**100)`` are representable and ordered
    exactly.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: float = 0.0, exponent: int = 0):
        if mantissa < 0 or not math.isfinite(mantissa):
            raise ValueError("mantissa must be finite and non-negative")
        if mantissa == 0:
            self.mantissa, self.exponent = 0.0, 0
            return
        m, e = math.frexp(mantissa)  # m in [0.5, 1)
        self.mantissa = m * 2.0
        self.exponent = int(exponent) + e - 1

    @classmethod
    def of(cls, x) -> "Log2Value":
        """From a non-negative int, Fraction or float."""
        if isinstance(x, Log2Value):
            return x
        if isinstance(x, (int, Fraction)) and x > 0:
            x = Fraction(x)
            e = x.numerator.bit_length() - x.denominator.bit_length()
            m = float(x / Fraction(2) ** e) if abs(e) < 1000 else float(
                Fraction(x.numerator, x.denominator) * Fraction(2) ** (-e))
            return cls(m, e)
        return cls(abs(float(x)) if x != 0 else 0.0, 0)

    @classmethod
    def from_log2(cls, log2: float, extra_exponent: int = 0) -> "Log2Value":
        """Value ``2**(log2 + extra_exponent)``."""
        whole = math.floor(log2)
        return cls(2.0 ** (log2 - whole), whole + int(extra_exponent))

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0

    def log2(self) -> float:
        if self.is_zero:
            return -math.inf
        return float(self.exponent) + math.log2(self.mantissa)

    def __float__(self):
        if self.is_zero:
            return 0.0
        if self.exponent > 1023:
            return math.inf
        return math.ldexp(self.mantissa, self.exponent) if self.exponent > -1100 else 0.0

    def __mul__(self, other):
        other = Log2Value.of(other)
        if self.is_zero or other.is_zero:
            return Log2Value()
        return Log2Value(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def _key(self):
        return (0, 0, 0.0) if self.is_zero else (1, self.exponent, self.mantissa)

    def __eq__(self, other):
        return self._key() == Log2Value.of(other)._key()

    def __lt__(self, other):
        return self._key() < Log2Value.of(other)._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.is_zero:
            return "Log2Value(0)"
        return f"Log2Value(2^{self.log2():.6g})"

    def to_dict(self) -> dict:
        return {"mantissa": self.mantissa, "exponent": str(self.exponent), "log2": self.log2()}


# ---------------------------------------------------------------------------
# polynomials and nodes


def cheb_eval(k: int, x):
    """``T_k(x)`` by the three-term recurrence; works on scalars, Fractions and arrays."""
    if k < 0:
        raise ValueError("index must be non-negative")
    if k == 0:
        return x * 0 + 1
    prev, cur = x * 0 + 1, x
    for _ in range(k - 1):
        prev, cur = cur, 2 * x * cur - prev
    return cur


def cheb_nodes(d: int, m: float = 1.0) -> np.ndarray:
    """Roots of ``T_{d+1}`` scaled to ``[-m, m]``, in decreasing order."""
    if d < 0 or m <= 0:
        raise ValueError("need d >= 0 and m > 0")
    k = np.arange(d + 1)
    nodes = m * np.cos(np.pi * (k + 0.5) / (d + 1))
    if d % 2 == 0:
        nodes[d // 2] = 0.0  # cos(pi/2) is not exactly zero in float
    return nodes


def stability_bound(node_values: Sequence, d: int) -> float:
    """Sup bound ``sqrt(2) (d+1) max|v|`` for a degree-``d`` polynomial with these node values."""
    if len(node_values) != d + 1:
        raise ValueError(f"expected {d + 1} node values")
    return math.sqrt(2) * (d + 1) * max((abs(float(v)) for v in node_values), default=0.0)


@lru_cache(maxsize=None)
def _beta_table(r: int) -> tuple:
    out = []
    for k in range(r + 1):
        if (r - k) % 2:
            continue
        if k == 0:
            out.append((0, Fraction(math.comb(r, r // 2), 2 ** r)))
        else:
            out.append((k, Fraction(2 * math.comb(r, (r - k) // 2), 2 ** r)))
    return tuple(out)


def monomial_to_cheb(r: int) -> dict[int, Fraction]:
    """Exact coefficients ``beta_k`` with ``t**r = sum_k beta_k T_k(t)``."""
    if r < 0:
        raise ValueError("power must be non-negative")
    return dict(_beta_table(r))


@dataclass(frozen=True)
class ChebExpansion:
    """``f(t) = sum_k coeffs[k] T_k(t / scale)``."""

    coeffs: tuple
    scale: Fraction = Fraction(1)

    @classmethod
    def from_unipoly(cls, p: UniPoly, scale=1) -> "ChebExpansion":
        """Exact conversion of ``p`` (as a function of ``t``) on ``[-scale, scale]``."""
        s = as_fraction(scale)
        out = [Fraction(0)] * max(1, len(p.coeffs))
        for r, c in enumerate(p.coeffs):
            cr = c * s ** r  # t**r = s**r (t/s)**r
            for k, b in _beta_table(r):
                out[k] += cr * b
        return cls(tuple(out), s)

    def to_unipoly(self) -> UniPoly:
        """Back to the monomial basis in ``t``."""
        acc = UniPoly()
        u = UniPoly([0, 1 / self.scale])
        prev, cur = UniPoly([1]), u
        for k, c in enumerate(self.coeffs):
            tk = prev if k == 0 else cur
            acc = acc + tk * c
            if k >= 1:
                prev, cur = cur, u * cur * 2 - prev
        return acc

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coeffs) if c]
        return nz[-1] if nz else -1

    def __call__(self, t):
        """Clenshaw evaluation."""
        x = t / self.scale if isinstance(t, (int, Fraction)) else t / float(self.scale)
        b1 = b2 = x * 0
        for c in reversed(self.coeffs[1:]):
            cc = c if isinstance(x, (int, Fraction)) else float(c)
            b1, b2 = 2 * x * b1 - b2 + cc, b1
        c0 = self.coeffs[0] if isinstance(x, (int, Fraction)) else float(self.coeffs[0])
        return x * b1 - b2 + c0

    def truncate(self, d: int) -> "ChebExpansion":
        return ChebExpansion(tuple(self.coeffs[: d + 1]), self.scale)


# ---------------------------------------------------------------------------
# anti-concentration


def anticoncentration_search(p: UniPoly, eta: float, m: float = 1.0,
                             grid: int = 100_001) -> tuple[float, float]:
    """Find ``x`` in ``[-m, m]`` with ``|p(x)| >= 2**(-2 d^2) m^d eta``.

    A dense grid locates the best cell, then golden-section search refines it.

    Raises
    ------
    ValueError
        No coefficient of positive degree reaches ``eta`` in absolute value.
    RuntimeError
        The guaranteed value was not found; this would contradict the anti-concentration bound.
    """
    d = max(p.degree, 0)
    if not any(abs(c) >= as_fraction(eta) for c in p.coeffs[1:]):
        raise ValueError("no coefficient of positive degree reaches eta")
    coeffs = np.array([float(c) for c in p.coeffs][::-1])
    xs = np.linspace(-m, m, grid)
    vals = np.abs(np.polyval(coeffs, xs))
    i = int(np.argmax(vals))
    best_x, best_v = float(xs[i]), float(vals[i])
    lo, hi = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, grid - 1)])
    g = (math.sqrt(5) - 1) / 2
    f = lambda x: abs(float(np.polyval(coeffs, x)))  # noqa: E731
    a, b = lo + (1 - g) * (hi - lo), lo + g * (hi - lo)
    fa, fb = f(a), f(b)
    for _ in range(60):
        if fa > fb:
            hi, b, fb = b, a, fa
            a = lo + (1 - g) * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = f(b)
    for x, v in ((a, fa), (b, fb)):
        if v > best_v:
            best_x, best_v = x, v
    bound = 2.0 ** (-2 * d * d) * m ** d * float(eta)
    if best_v < bound:
        raise RuntimeError(f"anti-concentration bound {bound} not met (best {best_v})")
    return best_x, best_v


# ---------------------------------------------------------------------------
# isolating exponents


def _isolation_set_size(n: int, d: int) -> int:
    return sum(math.comb(n, s) * (2 * d) ** s for s in range(1, min(n, 4 * d) + 1))


def verify_isolating(y: Sequence[int], d: int, rng: np.random.Generator | None = None,
                     exhaustive_limit: int = 10 ** 7, spot_checks: int = 200_000) -> bool:
    """Check ``<y, z> != 0`` for nonzero ``z`` in ``{-d..d}^n`` with at most ``4d`` nonzeros.

    Exhaustive when the set has at most ``exhaustive_limit`` elements, else
    randomized spot checks.
    """
    y = np.asarray(y, dtype=object if max(y, default=0) > 2 ** 40 else np.int64)
    n = len(y)
    values = np.array([v for v in range(-d, d + 1) if v], dtype=np.int64)
    if _isolation_set_size(n, d) <= exhaustive_limit:
        for s in range(1, min(n, 4 * d) + 1):
            combos = np.array(list(itertools.product(values, repeat=s)), dtype=np.int64)
            for support in itertools.combinations(range(n), s):
                if np.any(combos @ y[list(support)] == 0):
                    return False
        return True
    rng = rng or np.random.default_rng(0)
    for _ in range(spot_checks // 1000):
        z = np.zeros((1000, n), dtype=np.int64)
        size = rng.integers(1, min(n, 4 * d) + 1, size=1000)
        for row, s in enumerate(size):
            idx = rng.choice(n, size=s, replace=False)
            z[row, idx] = rng.choice(values, size=s)
        if np.any(z @ y == 0):
            return False
    return True


def isolating_exponents(n: int, d: int, rng: np.random.Generator, k: int | None = None,
                        max_tries: int = 100) -> tuple[int, ...]:
    """Random ``y`` in ``{0..k}^n`` (``k = n^{8d}`` by default) that isolates short integer vectors."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    k = n ** (8 * d) if k is None else k
    k = max(k, 1)
    for _ in range(max_tries):
        if k < 2 ** 62:
            y = tuple(int(v) for v in rng.integers(0, k + 1, size=n))
        else:
            y = tuple(int(rng.integers(0, 2 ** 62)) * (k // 2 ** 62) for _ in range(n))
        if verify_isolating(y, d, rng):
            return y
    raise RuntimeError("failed to sample isolating exponents")


# ---------------------------------------------------------------------------
# radial lines


def radial_cheb_coeffs(p: MultiPoly, a, ell: int) -> ChebExpansion:
    """Chebyshev coefficients of ``t -> p(a t)`` on ``[-1, 1]``, exactly."""
    if p.total_degree > ell:
        raise ValueError("polynomial degree exceeds the cap")
    u = restrict_to_line(p, [0] * p.n, a)
    exp = ChebExpansion.from_unipoly(u)
    coeffs = tuple(exp.coeffs) + (Fraction(0),) * (ell + 1 - len(exp.coeffs))
    return ChebExpansion(coeffs[: ell + 1])


def extrapolation_bound(d: int, t_target: float, node_scale: float, eta_in) -> Log2Value:
    """``sqrt(2) (d+1)^2 (2 t_target / node_scale)^d eta_in`` in log2 form."""
    eta = Log2Value.of(eta_in)
    if eta.is_zero:
        return Log2Value()
    lg = 0.5 + 2 * math.log2(d + 1) + d * (1 + math.log2(t_target) - math.log2(node_scale))
    return Log2Value.from_log2(lg) * eta


def extrapolate_radial(node_values: Sequence[tuple], t_target, d: int, eta_in=0,
                       node_scale: float | None = None):
    """Interpolate ``(c_i, v_i)`` at ``t_target`` and bound the effect of node errors.

    Parameters
    ----------
    node_values : sequence of (c, v)
        ``d + 1`` distinct abscissae, normally scaled Chebyshev nodes.
    t_target : scalar
        Evaluation point, at least ``max |c_i|``.
    eta_in : scalar
        Bound on the error of each ``v_i``.
    node_scale : float, optional
        Scale ``m`` of the nodes ``m cos(...)``; inferred from the largest
        node when omitted.

    Returns
    -------
    value
        Exact when the inputs are rational.
    bound : Log2Value
    """
    if len(node_values) != d + 1:
        raise ValueError(f"expected {d + 1} nodes")
    xs = [c for c, _ in node_values]
    ys = [v for _, v in node_values]
    if len(set(xs)) != len(xs):
        raise ValueError("degenerate interpolation input: duplicate abscissae")
    if node_scale is None:
        node_scale = max(abs(float(c)) for c in xs) / math.cos(math.pi / (2 * (d + 1)))
    value = lagrange_value(xs, ys, t_target)
    return value, extrapolation_bound(d, abs(float(t_target)), node_scale, eta_in)
