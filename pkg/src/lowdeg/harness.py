"""Experiment runner: JSON configs in, acceptance-rate reports out.

Runs are independent tester invocations whose generators are spawned from
one :class:`numpy.random.SeedSequence`, so a (config, seed) pair replays to
the same verdicts and query counts regardless of the worker count. The
number of worker processes comes from the ``LOWDEG_WORKERS`` environment
variable (default 1).
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import jsonschema
import numpy as np

from .additivity_tester import AdditivityTester
from .approx_tester import ApproxLowDegreeTester
from .core_math import MultiPoly
from .discrete_tester import DiscreteLowDegreeTester
from .exact_tester import LowDegreeTester
from .oracles import (LatticeDistribution, additive_plus_noise_oracle, far_oracle,
                      gaussian_distribution, noisy_poly_oracle, poly_oracle,
                      student_t_distribution, uniform_ball_distribution)
from .theory_checks import THEORY_CHECKS, CheckReport
from .validation import wilson_interval
from .verdict import jsonable

__all__ = [
    "CONFIG_SCHEMA",
    "INSTANCE_FAMILIES",
    "QUERY_CONSTANT",
    "RunReport",
    "load_config",
    "normalize_config",
    "build_instance",
    "run_experiment",
    "run_theory_suite",
    "query_bound",
    "worker_count",
]

WORKERS_ENV = "LOWDEG_WORKERS"

# documented constant C in  max queries <= C (d^5 + (d^2/eps) ln(1/eps))
QUERY_CONSTANT = 10_000

TESTERS = ("exact", "approx", "discrete", "additivity", "mult_additivity")

INSTANCE_FAMILIES = {
    "poly": "degree-d polynomial: explicit 'poly' or random from 'poly_seed'",
    "noisy_poly": "polynomial plus hashed noise in [-alpha, alpha] ('noise_seed')",
    "far": "polynomial plus 'jump' on a half-space of mass about 3 eps under the distribution",
    "additive_noise": "linear <c, x> plus hashed noise in [-alpha, alpha]",
    "linear_far": "linear <c, x> plus 'jump' on a half-space of mass about 3 eps",
}

DISTRIBUTIONS = {
    "gaussian": "N(mean, sigma^2 I); R from the chi quantile when omitted",
    "uniform_ball": "uniform on B(0, radius)",
    "student_t": "product Student-t with 'df' degrees of freedom",
    "lattice": "discrete Gaussian G((1/B) Z^n, s) with mass radius R",
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lowdeg experiment config",
    "type": "object",
    "required": ["tester", "instance", "n", "d", "eps", "distribution", "runs", "seed"],
    "additionalProperties": False,
    "properties": {
        "tester": {"enum": list(TESTERS)},
        "instance": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": list(INSTANCE_FAMILIES)},
                "poly": {"type": ["object", "null"]},
                "poly_seed": {"type": "integer", "minimum": 0},
                "c": {"type": ["array", "null"], "items": {"type": "number"}},
                "alpha": {"type": "number", "minimum": 0},
                "jump": {"type": "number", "minimum": 0},
                "noise_seed": {"type": "integer", "minimum": 0},
                "far_seed": {"type": "integer", "minimum": 0},
            },
        },
        "n": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "alpha": {"type": "number", "minimum": 0},
        "distribution": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(DISTRIBUTIONS)},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "df": {"type": "number", "exclusiveMinimum": 0},
                "B": {"type": "integer", "minimum": 1},
                "s": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "deficit": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "tester_params": {"type": "object"},
        "runs": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}


def worker_count() -> int:
    """Worker processes from ``LOWDEG_WORKERS`` (at least 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def query_bound(d: int, eps: float) -> float:
    """``d^5 + (d^2 / eps) ln(1/eps)`` with ``d`` floored at 1."""
    d = max(d, 1)
    return d ** 5 + d * d / eps * math.log(1 / eps)


# ---------------------------------------------------------------------------
# configs


def normalize_config(cfg: dict) -> dict:
    """Validate against :data:`CONFIG_SCHEMA` and fill every default explicitly."""
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    out = copy.deepcopy(cfg)
    out.setdefault("alpha", 0.0)
    out.setdefault("tester_params", {})
    out.setdefault("output", {})
    out["output"].setdefault("path", None)
    out["output"].setdefault("format", "json")
    inst = out["instance"]
    fam = inst["family"]
    if fam in ("poly", "noisy_poly", "far"):
        inst.setdefault("poly", None)
        inst.setdefault("poly_seed", 0)
    if fam in ("additive_noise", "linear_far"):
        inst.setdefault("c", None)
        inst.setdefault("poly_seed", 0)
    if fam in ("noisy_poly", "additive_noise"):
        inst.setdefault("alpha", out["alpha"])
        inst.setdefault("noise_seed", 0)
    if fam in ("far", "linear_far"):
        inst.setdefault("jump", 1.0)
        inst.setdefault("far_seed", 0)
    dist = out["distribution"]
    kind = dist["kind"]
    dist.setdefault("deficit", 0.01)
    if kind == "gaussian":
        dist.setdefault("sigma", 1.0)
        dist.setdefault("R", None)
    elif kind == "uniform_ball":
        dist.setdefault("radius", 1.0)
    elif kind == "student_t":
        dist.setdefault("df", 3.0)
        dist.setdefault("R", None)
    elif kind == "lattice":
        for key in ("B", "s", "R"):
            if dist.get(key) is None:
                raise jsonschema.ValidationError(f"lattice distributions need '{key}'")
    if out["tester"] == "discrete" and kind != "lattice":
        raise jsonschema.ValidationError("the discrete tester needs a lattice distribution")
    return out


def load_config(path: str) -> dict:
    with open(path) as fh:
        return normalize_config(json.load(fh))


def _distribution(spec: dict, n: int):
    kind = spec["kind"]
    if kind == "gaussian":
        return gaussian_distribution(n, spec["sigma"], R=spec["R"], deficit=spec["deficit"])
    if kind == "uniform_ball":
        return uniform_ball_distribution(n, spec["radius"])
    if kind == "student_t":
        return student_t_distribution(n, spec["df"], R=spec["R"], deficit=spec["deficit"])
    return LatticeDistribution(n, spec["B"], spec["s"], spec["R"], deficit=spec["deficit"])


def _poly(inst: dict, n: int, d: int) -> MultiPoly:
    if inst.get("poly") is not None:
        return MultiPoly.from_dict(inst["poly"])
    return MultiPoly.random(n, d, np.random.default_rng(inst["poly_seed"]))


def _linear(inst: dict, n: int) -> list:
    if inst.get("c") is not None:
        if len(inst["c"]) != n:
            raise ValueError("coefficient vector length must equal n")
        return list(inst["c"])
    rng = np.random.default_rng(inst["poly_seed"])
    return [float(v) for v in rng.integers(-8, 9, n) / 4]


def build_instance(cfg: dict):
    """Oracle and distribution described by a normalized config."""
    n, d, eps = cfg["n"], cfg["d"], cfg["eps"]
    inst = cfg["instance"]
    fam = inst["family"]
    dist = _distribution(cfg["distribution"], n)
    if fam == "poly":
        f = poly_oracle(_poly(inst, n, d))
    elif fam == "noisy_poly":
        f = noisy_poly_oracle(_poly(inst, n, d), inst["alpha"], inst["noise_seed"])
    elif fam == "far":
        f = far_oracle(_poly(inst, n, d), dist, eps, inst["jump"], inst["far_seed"])
    elif fam == "additive_noise":
        f = additive_plus_noise_oracle(_linear(inst, n), inst["alpha"], inst["noise_seed"])
    else:
        f = far_oracle(MultiPoly.linear(_linear(inst, n)), dist, eps, inst["jump"], inst["far_seed"])
    return f, dist


def _tester(cfg: dict, dist):
    t, d, eps, alpha = cfg["tester"], cfg["d"], cfg["eps"], cfg["alpha"]
    tp = dict(cfg["tester_params"])
    if t == "exact":
        est = LowDegreeTester(degree=d, eps=eps)
    elif t == "approx":
        est = ApproxLowDegreeTester(degree=d, eps=eps, alpha=alpha)
    elif t == "discrete":
        est = DiscreteLowDegreeTester(degree=d, eps=eps, B=dist.B)
    else:
        variant = "concentrated" if t == "additivity" else "multiplicative"
        est = AdditivityTester(alpha=alpha, eps=eps, variant=variant)
    return est.set_params(**tp)


# ---------------------------------------------------------------------------
# running


@dataclass
class RunReport:
    """Aggregated outcome of an experiment.

    ``runs`` holds one record per run in ``run_id`` order. The Wilson
    interval is at 95%.
    """

    config: dict
    runs: list
    acceptance_rate: float
    acceptance_interval: tuple
    mean_queries: float
    max_queries: int
    query_bound: float
    query_ratio: float
    reject_sites: dict
    instance: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, include_time: bool = True) -> dict:
        out = {
            "config": self.config, "runs": self.runs,
            "acceptance_rate": self.acceptance_rate,
            "acceptance_interval": list(self.acceptance_interval),
            "mean_queries": self.mean_queries, "max_queries": self.max_queries,
            "query_bound": self.query_bound, "query_ratio": self.query_ratio,
            "query_constant": QUERY_CONSTANT, "reject_sites": self.reject_sites,
            "instance": self.instance,
        }
        if include_time:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_time: bool = True) -> str:
        return json.dumps(jsonable(self.to_dict(include_time)), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run_id", "verdict", "reject_site", "queries", "seed_offset"])
        for r in self.runs:
            w.writerow([r["run_id"], r["verdict"], r["reject_site"] or "", r["queries"],
                        r["seed_offset"]])
        return buf.getvalue()

    def write(self, path: str, fmt: str = "json") -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv() if fmt == "csv" else self.to_json())


_WORKER_STATE: dict = {}


def _init_worker(cfg: dict):
    f, dist = build_instance(cfg)
    _WORKER_STATE["instance"] = (cfg, f, dist, _tester(cfg, dist))


def _run_chunk(chunk: Sequence[int], seed: int, runs: int) -> list:
    cfg, f, dist, est = _WORKER_STATE["instance"]
    children = np.random.SeedSequence(seed).spawn(runs)
    out = []
    for i in chunk:
        v = est.set_params(random_state=children[i]).fit(f, dist).verdict_
        out.append({"run_id": i, "verdict": v.decision,
                    "reject_site": None if v.reject_site is None else v.reject_site.value,
                    "queries": int(v.queries_used), "seed_offset": i,
                    "stats": jsonable(v.stats)})
    return out


def run_experiment(cfg: dict, runs: int | None = None, seed: int | None = None,
                   workers: int | None = None) -> RunReport:
    """Run a normalized (or raw) config; ``runs`` and ``seed`` override the config's values."""
    cfg = normalize_config(cfg)
    if runs is not None:
        cfg["runs"] = int(runs)
    if seed is not None:
        cfg["seed"] = int(seed)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    workers = worker_count() if workers is None else max(1, int(workers))
    n_runs, seed = cfg["runs"], cfg["seed"]
    t0 = time.perf_counter()
    _init_worker(cfg)
    f = _WORKER_STATE["instance"][1]
    if workers == 1 or n_runs == 1:
        records = _run_chunk(range(n_runs), seed, n_runs)
    else:
        chunks = [list(range(k, n_runs, workers)) for k in range(workers)]
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,)) as ex:
            parts = ex.map(_run_chunk, chunks, [seed] * len(chunks), [n_runs] * len(chunks))
            records = [r for part in parts for r in part]
        records.sort(key=lambda r: r["run_id"])
    wall = time.perf_counter() - t0
    acc = sum(r["verdict"] == "accept" for r in records)
    queries = [r["queries"] for r in records]
    sites: dict = {}
    for r in records:
        if r["reject_site"]:
            sites[r["reject_site"]] = sites.get(r["reject_site"], 0) + 1
    qb = query_bound(cfg["d"], cfg["eps"])
    return RunReport(
        config=cfg, runs=records, acceptance_rate=acc / n_runs,
        acceptance_interval=wilson_interval(acc, n_runs), mean_queries=float(np.mean(queries)),
        max_queries=int(max(queries)), query_bound=qb, query_ratio=max(queries) / qb,
        reject_sites=dict(sorted(sites.items())),
        instance={"label": f.label, "params": jsonable(f.params)}, wall_time=wall)


def run_theory_suite(selection: str | Sequence[str] = "all", seed: int = 0) -> list[CheckReport]:
    """Run theory checks by id (``"all"`` for every one), each with its own spawned generator.

    Raises
    ------
    KeyError
        An unknown check id.
    """
    ids = list(THEORY_CHECKS)
    if selection != "all":
        wanted = [selection] if isinstance(selection, str) else list(selection)
        unknown = [w for w in wanted if w not in THEORY_CHECKS]
        if unknown:
            raise KeyError(f"unknown theory check(s): {', '.join(unknown)}")
    else:
        wanted = ids
    # generators are keyed by position in the full registry so a single check
    # replays exactly as it runs inside the full suite
    children = np.random.SeedSequence(seed).spawn(len(ids))
    return [THEORY_CHECKS[w](np.random.default_rng(children[ids.index(w)])) for w in wanted]
