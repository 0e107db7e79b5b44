"""Tester outcomes and the estimator base class shared by all testers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_rng

__all__ = ["RejectSite", "Reject", "Verdict", "BaseTester", "jsonable"]


class RejectSite(str, enum.Enum):
    """Which check produced a rejection."""

    CHAR_SCALED_P = "char_scaled_p"        # p has the larger variance
    CHAR_SCALED_Q = "char_scaled_q"        # q has the larger variance
    CHAR_EQUAL = "char_equal"              # p and q share the variance
    INBALL_INCONSISTENT = "inball_inconsistent"
    MAIN_MISMATCH = "main_mismatch"
    ADD_SYMMETRY = "add_symmetry"
    ADD_DIFFERENCE = "add_difference"
    ADD_SQRT2 = "add_sqrt2"
    APPROX_G_INCONSISTENT = "approx_g_inconsistent"


@dataclass
class Reject:
    """Rejection raised inside a subroutine, carrying where and why."""

    site: RejectSite
    witness: dict


def jsonable(x):
    """Recursively convert Fractions, numpy scalars and arrays to JSON types."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if hasattr(x, "to_dict"):
        return jsonable(x.to_dict())
    return x


@dataclass
class Verdict:
    """Accept or reject, with provenance.

    A rejection carries the offending samples and statistic in ``witness``.
    """

    decision: str
    reject_site: RejectSite | None = None
    witness: dict | None = None
    queries_used: int = 0
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.decision not in ("accept", "reject"):
            raise ValueError("decision must be 'accept' or 'reject'")
        if self.decision == "reject" and self.reject_site is None:
            raise ValueError("a rejection needs a site")
        if self.decision == "accept" and self.witness is not None:
            raise ValueError("an acceptance carries no witness")

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"

    @classmethod
    def accept(cls, queries: int = 0, **stats) -> "Verdict":
        return cls("accept", None, None, queries, stats)

    @classmethod
    def from_reject(cls, rej: Reject, queries: int = 0, **stats) -> "Verdict":
        return cls("reject", rej.site, rej.witness, queries, stats)

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "reject_site": None if self.reject_site is None else self.reject_site.value,
            "witness": jsonable(self.witness),
            "queries_used": self.queries_used,
            "stats": jsonable(self.stats),
        }


class BaseTester(BaseEstimator):
    """Estimator-style wrapper: ``fit`` runs the test and stores the outcome.

    Subclasses implement ``_make_config(f)`` and ``_run(f, dist, cfg, rng)``.
    After ``fit``: ``verdict_``, ``accepted_``, ``n_queries_`` and
    ``config_`` are set.
    """

    def fit(self, f, dist=None):
        cfg = self._make_config(f)
        rng = check_rng(self.random_state)
        before = f.n_queries
        verdict = self._run(f, dist, cfg, rng)
        verdict.queries_used = f.n_queries - before
        self.config_ = cfg
        self.verdict_ = verdict
        self.accepted_ = verdict.accepted
        self.n_queries_ = verdict.queries_used
        return self

    def test(self, f, dist=None) -> Verdict:
        """Run the tester once and return its verdict."""
        return self.fit(f, dist).verdict_

    def _make_config(self, f):  # pragma: no cover - abstract
        raise NotImplementedError

    def _run(self, f, dist, cfg, rng) -> Verdict:  # pragma: no cover - abstract
        raise NotImplementedError
