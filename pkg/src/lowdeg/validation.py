"""Input validation and small statistics helpers shared across modules."""

from __future__ import annotations

import math
import numbers

import numpy as np
from sklearn.utils import check_scalar

__all__ = ["check_rng", "check_degree", "check_eps", "check_positive", "wilson_interval",
           "check_scalar"]


def check_rng(seed) -> np.random.Generator:
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def check_degree(d, name: str = "d") -> int:
    return int(check_scalar(d, name, numbers.Integral, min_val=0))


def check_eps(eps, name: str = "eps") -> float:
    return float(check_scalar(eps, name, numbers.Real, min_val=0, max_val=1,
                              include_boundaries="neither"))


def check_positive(x, name: str, allow_none: bool = False):
    if x is None and allow_none:
        return None
    return check_scalar(x, name, numbers.Real, min_val=0, include_boundaries="neither")


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion.

    Returns ``(0.0, 1.0)`` when ``trials`` is zero.
    """
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    # the interval always contains p; rounding can push an endpoint past it
    return max(0.0, min(p, center - half)), min(1.0, max(p, center + half))
