"""Exact polynomial arithmetic, finite differences and the characterization sum.

Coefficients are stored as :class:`fractions.Fraction`. Evaluation at points
with rational coordinates is exact; evaluation at float points converts the
coefficients to float once and works in float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DiffCoeffs",
    "alpha_coeffs",
    "ComparisonPolicy",
    "MultiPoly",
    "UniPoly",
    "char_sum",
    "forward_diff",
    "discrete_differential",
    "restrict_to_line",
    "truncate",
    "lagrange_interpolate",
    "lagrange_value",
    "lebesgue_value",
    "as_fraction",
    "as_exact_point",
    "is_exact_point",
    "scale_points",
]


def as_fraction(x) -> Fraction:
    """Convert an int, Fraction or finite float to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError(f"cannot convert non-finite value {x!r} to a rational")
    return Fraction(xf)


def as_exact_point(x) -> tuple:
    """Return ``x`` as a tuple of Fractions (floats are converted exactly)."""
    if np.ndim(x) == 0:
        return (as_fraction(x),)
    return tuple(as_fraction(v) for v in x)


def is_exact_point(x) -> bool:
    """True when every coordinate is an int or a rational number."""
    if np.ndim(x) == 0:
        x = (x,)
    return all(isinstance(v, (int, Fraction, np.integer)) and not isinstance(v, bool)
               for v in x)


def scale_points(points: Sequence[Sequence[Fraction]]) -> tuple[list[list[int]], int]:
    """Write rational points over one common denominator.

    Returns
    -------
    numerators : list of list of int
        ``numerators[k][j] / denom == points[k][j]``.
    denom : int
    """
    denom = 1
    for pt in points:
        for v in pt:
            dv = v.denominator
            if denom % dv:
                denom = denom * dv // math.gcd(denom, dv)
    nums = [[v.numerator * (denom // v.denominator) for v in pt] for pt in points]
    return nums, denom


# ---------------------------------------------------------------------------
# finite-difference coefficients


@dataclass(frozen=True)
class DiffCoeffs:
    """Signed binomial weights of an order-``m`` forward difference.

    ``alphas[i] = (-1)**(i+1) * C(m, i)`` for ``i = 0..m``.
    """

    m: int
    alphas: tuple[int, ...]


@lru_cache(maxsize=None)
def alpha_coeffs(m: int) -> DiffCoeffs:
    """Signed binomial coefficients ``(-1)**(i+1) * C(m, i)``.

    Parameters
    ----------
    m : int
        Difference order, at least 1.
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"difference order must be a positive integer, got {m!r}")
    m = int(m)
    return DiffCoeffs(m, tuple((-1) ** (i + 1) * math.comb(m, i) for i in range(m + 1)))


# ---------------------------------------------------------------------------
# comparison policy


@dataclass(frozen=True)
class ComparisonPolicy:
    """How "is this statistic zero / above a threshold" is decided.

    ``EXACT`` compares values as given (meant for rationals). ``TOLERANT``
    widens every threshold by ``abs_tol + rel_tol * scale``, where ``scale``
    is the caller's estimate of the magnitude of the terms that produced the
    value.
    """

    kind: str = "tolerant"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("exact", "tolerant"):
            raise ValueError(f"unknown comparison kind {self.kind!r}")
        if self.rel_tol < 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be non-negative")

    @classmethod
    def exact(cls) -> "ComparisonPolicy":
        return cls("exact", 0.0, 0.0)

    @classmethod
    def tolerant(cls, rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> "ComparisonPolicy":
        return cls("tolerant", rel_tol, abs_tol)

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def slack(self, scale=0.0):
        """Extra room granted on top of a threshold."""
        if self.is_exact:
            return 0
        return self.abs_tol + self.rel_tol * abs(float(scale))

    def exceeds(self, value, threshold=0, scale=0.0) -> bool:
        """True when ``|value| > threshold`` beyond the policy's slack."""
        if self.is_exact:
            return abs(value) > threshold
        return abs(float(value)) > float(threshold) + self.slack(scale)

    def is_zero(self, value, scale=0.0) -> bool:
        return not self.exceeds(value, 0, scale)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rel_tol": self.rel_tol, "abs_tol": self.abs_tol}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ComparisonPolicy":
        return cls(data.get("kind", "tolerant"), float(data.get("rel_tol", 1e-9)),
                   float(data.get("abs_tol", 1e-12)))


# ---------------------------------------------------------------------------
# univariate polynomials


class UniPoly:
    """Dense univariate polynomial with rational coefficients ``c0 + c1 x + ...``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = 0 if isinstance(x, (int, Fraction)) else 0.0
        if isinstance(acc, float):
            for c in reversed(self.coeffs):
                acc = acc * x + float(c)
            return acc
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if isinstance(other, UniPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        other = other if isinstance(other, UniPoly) else UniPoly([other])
        k = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (k - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (k - len(other.coeffs))
        return UniPoly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return UniPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-(other if isinstance(other, UniPoly) else UniPoly([other])))

    def __mul__(self, other):
        if not isinstance(other, UniPoly):
            s = as_fraction(other)
            return UniPoly(c * s for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return UniPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return UniPoly(out)

    __rmul__ = __mul__

    def __repr__(self):
        return f"UniPoly({[str(c) for c in self.coeffs]})"


# ---------------------------------------------------------------------------
# multivariate polynomials


class MultiPoly:
    """Sparse multivariate polynomial with exact rational coefficients.

    Parameters
    ----------
    n : int
        Number of variables.
    terms : mapping
        Exponent tuple (length ``n``) to coefficient. Zero coefficients are
        dropped.

    Examples
    --------
    >>> p = MultiPoly(2, {(1, 1): 1})
    >>> p((2, 3))
    Fraction(6, 1)
    """

    __slots__ = ("n", "_terms", "_float_cache", "_int_cache")

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | None = None):
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise ValueError(f"dimension must be a positive integer, got {n!r}")
        self.n = int(n)
        clean: dict[tuple[int, ...], Fraction] = {}
        for exp, c in (terms or {}).items():
            e = tuple(int(v) for v in exp)
            if len(e) != self.n or any(v < 0 for v in e):
                raise ValueError(f"bad exponent {exp!r} for n={self.n}")
            c = as_fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
                if not clean[e]:
                    del clean[e]
        self._terms = dict(sorted(clean.items()))
        self._float_cache = None
        self._int_cache = None

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, n: int, c) -> "MultiPoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, j: int) -> "MultiPoly":
        e = [0] * n
        e[j] = 1
        return cls(n, {tuple(e): 1})

    @classmethod
    def linear(cls, coefs: Sequence) -> "MultiPoly":
        n = len(coefs)
        return cls(n, {tuple(int(i == j) for i in range(n)): c for j, c in enumerate(coefs)})

    @classmethod
    def random(cls, n: int, d: int, rng: np.random.Generator, n_terms: int = 4,
               coef_den: int = 8, max_num: int = 8) -> "MultiPoly":
        """Random sparse polynomial of total degree exactly ``d``.

        One term of degree ``d`` is always present; the other exponents are
        drawn uniformly among vectors of total degree at most ``d``.
        """
        if d < 0:
            raise ValueError("degree must be non-negative")
        terms: dict[tuple[int, ...], Fraction] = {}

        def draw_exp(total):
            cuts = np.sort(rng.integers(0, total + 1, size=n - 1)) if n > 1 else np.array([], int)
            parts = np.diff(np.concatenate(([0], cuts, [total])))
            return tuple(int(v) for v in parts)

        def draw_coef():
            num = 0
            while num == 0:
                num = int(rng.integers(-max_num, max_num + 1))
            return Fraction(num, int(rng.integers(1, coef_den + 1)))

        terms[draw_exp(d)] = draw_coef()
        for _ in range(max(0, n_terms - 1)):
            terms.setdefault(draw_exp(int(rng.integers(0, d + 1))), draw_coef())
        return cls(n, terms)

    # basic properties -----------------------------------------------------

    @property
    def terms(self) -> dict:
        """Copy of the exponent-to-coefficient map."""
        return dict(self._terms)

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.n == other.n and self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"MultiPoly(n={self.n}, 0)"
        parts = []
        for e, c in self._terms.items():
            mon = "*".join(f"x{j + 1}" + (f"^{k}" if k > 1 else "") for j, k in enumerate(e) if k)
            parts.append(f"({c})" + (f"*{mon}" if mon else ""))
        return f"MultiPoly(n={self.n}, {' + '.join(parts)})"

    # arithmetic -----------------------------------------------------------

    def _check_same_n(self, other):
        if other.n != self.n:
            raise ValueError("dimension mismatch")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.n, other)
        self._check_same_n(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return MultiPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.n, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            s = as_fraction(other)
            return MultiPoly(self.n, {e: c * s for e, c in self._terms.items()})
        self._check_same_n(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self.n, out)

    __rmul__ = __mul__

    # evaluation -----------------------------------------------------------

    def __call__(self, x):
        """Evaluate at one point; exact for rational coordinates."""
        if np.ndim(x) == 0:
            x = (x,)
        if len(x) != self.n:
            raise ValueError(f"expected a point of length {self.n}, got {len(x)}")
        if is_exact_point(x):
            return self.eval_exact(tuple(as_fraction(v) for v in x))
        return float(self.eval_float(np.asarray(x, dtype=float)[None, :])[0])

    def eval_exact(self, x: Sequence[Fraction]) -> Fraction:
        nums, den = scale_points([x])
        num, scale = self.eval_scaled([nums[0]], den)
        return Fraction(num[0], scale)

    def eval_scaled(self, nums, den: int):
        """Evaluate at integer points ``nums / den`` with integer arithmetic.

        Parameters
        ----------
        nums : sequence of int sequences, or 2-D integer/object array
        den : int
            Common positive denominator.

        Returns
        -------
        values : list of int
            Numerators of the values.
        scale : int
            Common denominator, so value ``k`` equals ``values[k] / scale``.
        """
        fn, lcm_den, deg = self._int_evaluator()
        dpow = [den ** k for k in range(deg + 1)]
        fast = self._int64_input(nums, den, deg)
        if fast is not None:
            out = fn([fast[:, j] for j in range(self.n)], [np.int64(v) for v in dpow])
            if np.ndim(out) == 0:
                return [int(out)] * fast.shape[0], lcm_den * dpow[deg]
            return out.tolist(), lcm_den * dpow[deg]
        arr = np.asarray(nums, dtype=object)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        cols = [arr[:, j] for j in range(self.n)]
        out = fn(cols, dpow)
        if np.ndim(out) == 0:
            out = [int(out)] * arr.shape[0]
        else:
            out = list(out)
        return out, lcm_den * dpow[deg]

    def _int64_input(self, nums, den: int, deg: int):
        """``nums`` as an int64 array when every intermediate provably fits, else ``None``."""
        if not isinstance(nums, np.ndarray) or nums.ndim != 2 or nums.size == 0:
            return None
        if nums.dtype.kind in "iu":
            arr = nums.astype(np.int64, copy=False)
        elif nums.dtype == object:
            try:
                arr = nums.astype(np.int64)
            except (OverflowError, TypeError):
                return None
        else:
            return None
        M = max(int(arr.max()), -int(arr.min()), 1)
        fn, lcm_den, _ = self._int_evaluator()
        bound = 0
        for e, c in self._terms.items():
            k = sum(e)
            bound += abs(c.numerator) * (lcm_den // c.denominator) * M ** k * den ** (deg - k)
        return arr if bound < 2 ** 62 else None

    def _int_evaluator(self):
        if self._int_cache is None:
            deg = self.total_degree
            lcm_den = 1
            for c in self._terms.values():
                lcm_den = lcm_den * c.denominator // math.gcd(lcm_den, c.denominator)
            pieces = []
            for e, c in self._terms.items():
                coef = c.numerator * (lcm_den // c.denominator)
                factors = [repr(coef)]
                for j, k in enumerate(e):
                    if k == 1:
                        factors.append(f"x[{j}]")
                    elif k > 1:
                        factors.append(f"x[{j}]**{k}")
                rest = deg - sum(e)
                if rest:
                    factors.append(f"D[{rest}]")
                pieces.append("*".join(factors))
            src = "def _ev(x, D):\n    return " + (" + ".join(pieces) if pieces else "0") + "\n"
            scope: dict = {}
            exec(compile(src, "<multipoly>", "exec"), scope)  # generated from ints only
            self._int_cache = (scope["_ev"], lcm_den, deg)
        return self._int_cache

    def eval_float(self, X) -> np.ndarray:
        """Vectorized float64 evaluation at the rows of ``X`` (shape ``(m, n)``)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n:
            raise ValueError(f"expected points of length {self.n}")
        if self._float_cache is None:
            exps = np.array(list(self._terms.keys()), dtype=int).reshape(-1, self.n)
            coefs = np.array([float(c) for c in self._terms.values()], dtype=float)
            self._float_cache = (exps, coefs)
        exps, coefs = self._float_cache
        out = np.zeros(X.shape[0])
        if not len(coefs):
            return out
        maxdeg = exps.max(axis=0)
        powers = []
        for j in range(self.n):
            pj = [None] * (maxdeg[j] + 1)
            if maxdeg[j] >= 1:
                pj[1] = X[:, j]
            for k in range(2, maxdeg[j] + 1):
                pj[k] = pj[k - 1] * X[:, j]
            powers.append(pj)
        for e, c in zip(exps, coefs):
            term = None
            for j, k in enumerate(e):
                if k:
                    term = powers[j][k] if term is None else term * powers[j][k]
            out += c if term is None else c * term
        return out

    def abs_bound_float(self, X) -> np.ndarray:
        """Sum of absolute term values at each row, a rounding-error scale."""
        X = np.abs(np.asarray(X, dtype=float))
        return MultiPoly(self.n, {e: abs(c) for e, c in self._terms.items()}).eval_float(X)

    # structure ------------------------------------------------------------

    def restrict_to_line(self, a, b) -> UniPoly:
        return restrict_to_line(self, a, b)

    def truncate(self, d: int) -> "MultiPoly":
        return truncate(self, d)

    def fix_last(self, value) -> "MultiPoly":
        """Substitute ``x_n = value`` and return a polynomial in ``n - 1`` variables."""
        if self.n < 2:
            raise ValueError("need at least two variables")
        v = as_fraction(value)
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self._terms.items():
            key = e[:-1]
            out[key] = out.get(key, Fraction(0)) + c * v ** e[-1]
        return MultiPoly(self.n - 1, out)

    def extend(self, n_new: int, position: int | None = None) -> "MultiPoly":
        """Embed into ``n_new`` variables (new variables appended at the end)."""
        pad = n_new - self.n
        if pad < 0:
            raise ValueError("cannot shrink dimension")
        return MultiPoly(n_new, {e + (0,) * pad: c for e, c in self._terms.items()})

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"exp": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                for e, c in self._terms.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MultiPoly":
        n = int(data["n"])
        terms = {}
        for t in data["terms"]:
            den = int(t["den"])
            if den == 0:
                raise ValueError("zero denominator in polynomial term")
            key = tuple(int(v) for v in t["exp"])
            terms[key] = terms.get(key, Fraction(0)) + Fraction(int(t["num"]), den)
        return cls(n, terms)

    @classmethod
    def from_json(cls, text: str) -> "MultiPoly":
        return cls.from_dict(json.loads(text))


def restrict_to_line(p: MultiPoly, a, b) -> UniPoly:
    """Exact univariate polynomial ``x -> p(a + x b)``."""
    a = as_exact_point(a)
    b = as_exact_point(b)
    if len(a) != p.n or len(b) != p.n:
        raise ValueError("line endpoints must match the polynomial dimension")
    lines = [UniPoly([aj, bj]) for aj, bj in zip(a, b)]
    cache: dict[tuple[int, int], UniPoly] = {}

    def power(j, k):
        if (j, k) not in cache:
            cache[(j, k)] = UniPoly([1]) if k == 0 else power(j, k - 1) * lines[j]
        return cache[(j, k)]

    out = UniPoly()
    for e, c in p.terms.items():
        term = UniPoly([c])
        for j, k in enumerate(e):
            if k:
                term = term * power(j, k)
        out = out + term
    return out


def truncate(p: MultiPoly, d: int) -> MultiPoly:
    """Keep only the terms of total degree at most ``d``."""
    if d < 0:
        raise ValueError("degree must be non-negative")
    return MultiPoly(p.n, {e: c for e, c in p.terms.items() if sum(e) <= d})


# ---------------------------------------------------------------------------
# interpolation


def lagrange_interpolate(nodes: Sequence[tuple]) -> UniPoly:
    """Unique polynomial of degree below ``len(nodes)`` through the pairs.

    Parameters
    ----------
    nodes : sequence of (x, y)
        Abscissae must be distinct. Values are converted to exact rationals.
    """
    if len(nodes) < 1:
        raise ValueError("need at least one interpolation node")
    xs = [as_fraction(x) for x, _ in nodes]
    ys = [as_fraction(y) for _, y in nodes]
    if len(set(xs)) != len(xs):
        raise ValueError("degenerate interpolation input: duplicate abscissae")
    out = UniPoly()
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        if not yi:
            continue
        basis = UniPoly([1])
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j != i:
                basis = basis * UniPoly([-xj, 1])
                denom *= xi - xj
        out = out + basis * (yi / denom)
    return out


def _basis_weights(xs, t):
    k = len(xs)
    if len(set(xs)) != k:
        raise ValueError("degenerate interpolation input: duplicate abscissae")
    weights = []
    for i in range(k):
        w = 1
        for j in range(k):
            if j != i:
                w = w * (t - xs[j]) / (xs[i] - xs[j])
        weights.append(w)
    return weights


def lagrange_value(xs: Sequence, ys: Sequence, t):
    """Value at ``t`` of the interpolant through ``(xs[i], ys[i])``.

    Works for Fractions (exact) and floats alike.
    """
    return sum(w * y for w, y in zip(_basis_weights(list(xs), t), ys))


def lebesgue_value(xs: Sequence, t) -> float:
    """Sum of absolute Lagrange basis values at ``t``."""
    return float(sum(abs(w) for w in _basis_weights([float(x) for x in xs], float(t))))


# ---------------------------------------------------------------------------
# difference statistics


def _evaluate_many(f: Callable, points: list, exact: bool):
    """Evaluate ``f`` at a list of points, preferring the exact path."""
    if exact:
        ex = getattr(f, "exact_many", None)
        if ex is not None:
            return ex(points)
        ex = getattr(f, "exact", None)
        if ex is not None:
            return [ex(p) for p in points]
        return [f(p) for p in points]
    batch = getattr(f, "eval_batch", None)
    if batch is not None:
        return list(batch(np.asarray(points, dtype=float)))
    return [f(p) for p in points]


def char_sum(f: Callable, p, q, d: int):
    """Characterization statistic ``sum_{i=0}^{d+1} alpha_i f(p + i q)``.

    Makes exactly ``d + 2`` queries. The sum is exact when ``p`` and ``q``
    have rational coordinates and ``f`` supports exact evaluation.
    """
    alphas = alpha_coeffs(d + 1).alphas
    if np.ndim(p) == 0:
        p, q = (p,), (q,)
    exact = is_exact_point(p) and is_exact_point(q)
    if exact:
        p = as_exact_point(p)
        q = as_exact_point(q)
        pts = [tuple(a + i * b for a, b in zip(p, q)) for i in range(d + 2)]
    else:
        pa = np.asarray(p, dtype=float)
        qa = np.asarray(q, dtype=float)
        pts = [pa + i * qa for i in range(d + 2)]
    vals = _evaluate_many(f, pts, exact)
    return sum(a * v for a, v in zip(alphas, vals))


def forward_diff(f: Callable, x, h, m: int):
    """Order-``m`` forward difference of a univariate ``f`` at ``x`` with step ``h``.

    Uses the closed form ``(-1)**(m+1) * sum_i alpha_i f(x + i h)`` with
    ``m + 1`` queries.
    """
    alphas = alpha_coeffs(m).alphas
    exact = is_exact_point((x, h))
    if exact:
        x, h = as_fraction(x), as_fraction(h)
    pts = [(x + i * h,) for i in range(m + 1)]
    vals = _evaluate_many(f, pts, exact)
    return (-1) ** (m + 1) * sum(a * v for a, v in zip(alphas, vals))


def discrete_differential(f: Callable, x, t: Sequence):
    """Subset-signed sum ``sum_{S} (-1)**|S| f(x + sum_{j in S} t_j)``.

    With ``k = len(t)`` this makes ``2**k`` queries. For equal steps
    ``t = (h,)*m`` it equals ``(-1)**m`` times the order-``m`` forward
    difference.
    """
    t = list(t)
    if not t:
        raise ValueError("step vector must be non-empty")
    if any(v == 0 for v in t):
        raise ValueError("all steps must be nonzero")
    exact = is_exact_point([x] + t)
    if exact:
        x = as_fraction(x)
        t = [as_fraction(v) for v in t]
    pts, signs = [], []
    for mask in range(1 << len(t)):
        shift = sum((t[j] for j in range(len(t)) if mask >> j & 1), 0)
        pts.append((x + shift,))
        signs.append(-1 if bin(mask).count("1") % 2 else 1)
    vals = _evaluate_many(f, pts, exact)
    return sum(s * v for s, v in zip(signs, vals))
