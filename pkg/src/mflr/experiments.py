"""Replication harness: repeated fits over fresh training data, aggregated per budget and strategy."""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import linalg
from .allocation import DENOMINATORS, allocate, single_fidelity_allocation
from .coefficients import SINGLE_FIDELITY, STRATEGY_NAMES, build_strategy
from .errors import (ConfigError, DataError, FormatError, InsufficientRows, MissingFidelity,
                     NumericalError)
from .estimators import NestedSampleSet, fit
from .features import InputDistribution, exact_cxx, full_quadratic, linear, sample_cxx
from .models import FAMILIES, evaluate_batch, get_family
from .statistics import ModelStats, exact_moments_exp, exact_stats_exp, stats_from_dataset, stats_from_samples

# --- datasets ---------------------------------------------------------------


@dataclass
class Dataset:
    """Tabulated outputs of every fidelity on common inputs ``Z`` (n, p); ``Y`` is (n, K)."""

    Z: np.ndarray
    Y: np.ndarray
    path: str = None

    @property
    def capacity(self):
        return self.Z.shape[0]

    @property
    def K(self):
        return self.Y.shape[1]

    def subset(self, idx):
        return Dataset(self.Z[idx], self.Y[idx], self.path)


def load_dataset(path):
    """Read a CSV with header ``z1..zp, y1..yK`` (one row per common input)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        zcols = [i for i, h in enumerate(header) if h.startswith("z")]
        ycols = [i for i, h in enumerate(header) if h.startswith("y")]
        if not zcols or len(zcols) + len(ycols) != len(header):
            raise FormatError(f"{path}: header must be z1..zp, y1..yK, got {header}")
        if [header[i] for i in zcols] != [f"z{j + 1}" for j in range(len(zcols))]:
            raise FormatError(f"{path}: input columns must be named z1..z{len(zcols)} in order")
        if not ycols:
            raise MissingFidelity(f"{path}: no output columns y1..yK")
        if [header[i] for i in ycols] != [f"y{k + 1}" for k in range(len(ycols))]:
            raise FormatError(f"{path}: output columns must be named y1..y{len(ycols)} in order")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for i, cell in enumerate(row):
                cell = cell.strip()
                if cell == "" or cell.lower() == "nan":
                    if i in ycols:
                        raise MissingFidelity(f"{path}:{lineno}: missing value for {header[i]}")
                    raise FormatError(f"{path}:{lineno}: missing value for {header[i]}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: {header[i]}={cell!r} is not a number") from None
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    A = np.array(rows)
    return Dataset(A[:, zcols], A[:, ycols], str(path))


class DatasetSampler:
    """Seeded nested subsets of a dataset: the first ``m_k`` rows of a shuffled index."""

    def __init__(self, data, replace=False):
        self.data = data
        self.replace = bool(replace)

    @property
    def capacity(self):
        return self.data.capacity

    def indices(self, rng, n):
        if self.replace:
            return rng.integers(0, self.capacity, size=n)
        if n > self.capacity:
            raise InsufficientRows(f"requested {n} rows but the dataset has {self.capacity}")
        return rng.permutation(self.capacity)[:n]

    def sample(self, m, rng, fmap):
        m = tuple(int(v) for v in m)
        if len(m) > self.data.K:
            raise MissingFidelity(f"allocation has {len(m)} fidelities, dataset has {self.data.K}")
        idx = self.indices(rng, m[-1])
        Z = self.data.Z[idx]
        Y = [self.data.Y[idx[: m[k]], k] for k in range(len(m))]
        return NestedSampleSet(Z=Z, X=fmap(Z), Y=Y, m=m)


# --- plan ---------------------------------------------------------------------

_MARGINAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "lo", "hi"],
    "properties": {"kind": {"enum": ["uniform", "loguniform"]}, "lo": {"type": "number"},
                   "hi": {"type": "number"}},
}

PLAN_PROPERTIES = {
    "family": {"enum": sorted(FAMILIES), "description": "built-in model family"},
    "family_options": {"type": "object", "description": "keyword options for the family factory"},
    "dataset": {"type": "string", "description": "CSV dataset (z1..zp, y1..yK) replacing model evaluation"},
    "costs": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1,
              "description": "per-evaluation costs w_1..w_K (default: the family's)"},
    "distribution": {"type": "array", "items": _MARGINAL, "minItems": 1,
                     "description": "input marginals (default: the family's)"},
    "features": {
        "type": "object", "additionalProperties": False,
        "properties": {"kind": {"enum": ["quadratic", "linear"]}, "standardize": {"type": "boolean"}},
        "description": "feature map: quadratic|linear monomials, optionally standardized to [-1, 1]",
    },
    "budgets": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1,
                "description": "computational budgets p"},
    "strategies": {"type": "array", "items": {"enum": list(STRATEGY_NAMES)}, "minItems": 1,
                   "uniqueItems": True, "description": "estimators to compare"},
    "stats": {
        "type": "object", "additionalProperties": False, "required": ["mode"],
        "properties": {"mode": {"enum": ["exact", "pilot", "file", "dataset"]},
                       "n_pilot": {"type": "integer", "minimum": 2}, "path": {"type": "string"}},
        "description": "where model statistics come from",
    },
    "cxx": {
        "type": "object", "additionalProperties": False, "required": ["mode"],
        "properties": {"mode": {"enum": ["exact", "sampled", "dataset"]},
                       "n": {"type": "integer", "minimum": 1}},
        "description": "how C_XX = E[x x^T] is obtained",
    },
    "replications": {"type": "integer", "minimum": 2, "description": "replication count R"},
    "seed": {"type": "integer", "minimum": 0, "description": "base seed for all randomness"},
    "eval_points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}},
                    "description": "prediction points (default: the family's)"},
    "workers": {"type": "integer", "minimum": 1, "description": "replication parallelism cap"},
    "allocation": {
        "type": "object", "additionalProperties": False,
        "properties": {"strict": {"type": "boolean"}, "denominator": {"enum": list(DENOMINATORS)}},
        "description": "allocation options",
    },
    "bootstrap_replace": {"type": "boolean", "description": "dataset draws with replacement (default false)"},
    "write_estimates": {"type": "boolean", "description": "write per-replication estimates.csv"},
}

PLAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["budgets", "strategies", "stats", "replications", "seed"],
    "properties": PLAN_PROPERTIES,
}


def schema_error_message(err):
    """Readable message naming the offending key for a jsonschema error."""
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        where = "/".join(str(p) for p in err.absolute_path)
        return f"unknown key {extra[0]!r}" + (f" in {where!r}" if where else "")
    if err.validator == "required":
        return err.message.replace("is a required property", "is a required key")
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"invalid value for {where!r}: {err.message}"


def validate_document(doc, schema):
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: (list(e.absolute_path), e.validator))
    if errors:
        raise ConfigError(schema_error_message(errors[0]))


@dataclass
class ExperimentPlan:
    budgets: list
    strategies: list
    stats: dict
    replications: int
    seed: int
    family: str = None
    family_options: dict = field(default_factory=dict)
    dataset: str = None
    costs: list = None
    distribution: list = None
    features: dict = field(default_factory=dict)
    cxx: dict = None
    eval_points: list = None
    workers: int = 1
    allocation: dict = field(default_factory=dict)
    bootstrap_replace: bool = False
    write_estimates: bool = True

    @classmethod
    def from_dict(cls, doc):
        validate_document(doc, PLAN_SCHEMA)
        plan = cls(**doc)
        plan.check()
        return plan

    def to_dict(self):
        out = {}
        for key in PLAN_PROPERTIES:
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return json.loads(json.dumps(out))

    def check(self):
        if self.family is None and self.dataset is None:
            raise ConfigError("plan needs 'family' or 'dataset'")
        if self.replications < 2:
            raise ConfigError("'replications' must be at least 2")
        mode = self.stats["mode"]
        if mode == "pilot" and "n_pilot" not in self.stats:
            raise ConfigError("stats mode 'pilot' needs 'n_pilot'")
        if mode == "file" and "path" not in self.stats:
            raise ConfigError("stats mode 'file' needs 'path'")
        if mode == "dataset" and self.dataset is None:
            raise ConfigError("stats mode 'dataset' needs a 'dataset'")
        if self.cxx is not None and self.cxx["mode"] == "dataset" and self.dataset is None:
            raise ConfigError("cxx mode 'dataset' needs a 'dataset'")
        if self.dataset is not None and self.family is None and self.costs is None:
            raise ConfigError("a dataset without 'family' needs explicit 'costs'")


# --- context --------------------------------------------------------------------


def make_feature_map(spec, dist, p):
    spec = spec or {}
    kind = spec.get("kind", "quadratic")
    bounds = None
    if spec.get("standardize", False):
        if dist is None:
            raise ConfigError("standardized features need a 'distribution' (or a family)")
        bounds = tuple(dist.bounds)
    return full_quadratic(p, bounds) if kind == "quadratic" else linear(p, bounds)


class _Context:
    """Everything a replication needs, built once per process."""

    def __init__(self, plan):
        self.plan = plan
        self.models = get_family(plan.family, **plan.family_options) if plan.family else None
        self.data = load_dataset(plan.dataset) if plan.dataset else None
        if plan.distribution is not None:
            self.dist = InputDistribution.from_spec(plan.distribution)
        else:
            self.dist = self.models.distribution if self.models else None
        costs = plan.costs if plan.costs is not None else self.models.costs
        self.costs = tuple(float(c) for c in costs)
        K = self.data.K if self.data is not None else self.models.K
        if len(self.costs) != K:
            raise ConfigError(f"'costs' has {len(self.costs)} entries for {K} fidelities")
        p = self.data.Z.shape[1] if self.data is not None else self.models.distribution.p
        self.fmap = make_feature_map(plan.features, self.dist, p)
        pts = plan.eval_points
        if pts is None:
            pts = self.models.prediction_points if self.models else []
        self.eval_points = np.array(pts, dtype=float).reshape(len(pts), p)
        if self.dist is not None and len(pts) and not self.dist.contains(self.eval_points):
            raise ConfigError("evaluation points lie outside the input distribution's support")
        self.X_eval = self.fmap(self.eval_points) if len(pts) else np.zeros((0, self.fmap.d))
        self.sampler = DatasetSampler(self.data, plan.bootstrap_replace) if self.data is not None else None
        self.fixed_stats = self._fixed_stats()
        self.c_xx = self._cxx()
        self.L = linalg.cholesky(self.c_xx)
        self.oracle = self._oracle()
        self.fixed_coeffs = (self._coefficients(self.fixed_stats)
                             if self.fixed_stats is not None else None)

    def _exact_ok(self):
        return (self.plan.family == "exp" and self.data is None and not self.fmap.standardized
                and self.fmap.p == 1 and np.array_equal(self.fmap.exponents[:, 0], np.arange(self.fmap.d)))

    def _fixed_stats(self):
        mode = self.plan.stats["mode"]
        if mode == "exact":
            if not self._exact_ok():
                raise ConfigError("exact statistics are available only for family 'exp' with "
                                  "unstandardized polynomial features")
            return exact_stats_exp(self.fmap.d - 1)
        if mode == "file":
            return ModelStats.from_json(self.plan.stats["path"])
        if mode == "dataset":
            return stats_from_dataset(self.data, self.fmap)
        return None

    def _cxx(self):
        spec = self.plan.cxx or {"mode": "dataset" if self.data is not None else "exact"}
        mode = spec["mode"]
        if mode == "dataset":
            return sample_cxx(self.fmap, self.data.Z)
        if self.dist is None:
            raise ConfigError(f"cxx mode {mode!r} needs a 'distribution'")
        if mode == "exact":
            return exact_cxx(self.fmap, self.dist)
        rng = np.random.default_rng(np.random.SeedSequence(self.plan.seed, spawn_key=(1,)))
        return sample_cxx(self.fmap, self.dist.sample(rng, spec.get("n", 100000)))

    def _oracle(self):
        """Reference C_XY, beta and predictions the replication means should match."""
        if self.data is not None:
            X = self.fmap(self.data.Z)
            c_xy = (X * self.data.Y[:, :1]).sum(axis=0) / X.shape[0]
        elif self._exact_ok():
            c_xy = exact_moments_exp(self.fmap.d - 1)[1]
        else:
            return None
        beta = linalg.cho_solve(self.L, c_xy)
        return {"c_xy": c_xy, "beta": beta, "pred": self.X_eval @ beta}

    def _coefficients(self, stats):
        out = {}
        for name in self.plan.strategies:
            try:
                out[name] = build_strategy(name, stats)
            except NumericalError as exc:
                out[name] = exc
        return out

    def pilot(self, rng):
        n = self.plan.stats["n_pilot"]
        if self.data is not None:
            idx = self.sampler.indices(rng, n)
            return stats_from_samples(self.fmap(self.data.Z[idx]), self.data.Y[idx],
                                      provenance=f"pilot({n})")
        Z = self.models.distribution.sample(rng, n)
        Y = np.column_stack([evaluate_batch(self.models, k, Z) for k in range(1, self.models.K + 1)])
        return stats_from_samples(self.fmap(Z), Y, provenance=f"pilot({n})")

    def draw(self, rng, m, n_sf):
        """Training stream for one budget: MF nested set plus the SF prefix."""
        K = len(m)
        L = max(m[-1], n_sf)
        counts = [max(m[0], n_sf)] + list(m[1:])
        if self.data is not None:
            idx = self.sampler.indices(rng, L)
            Z = self.data.Z[idx]
            Y = [self.data.Y[idx[: counts[k]], k] for k in range(K)]
        else:
            Z = self.models.distribution.sample(rng, L)
            Y = [evaluate_batch(self.models, k + 1, Z[: counts[k]]) for k in range(K)]
        X = self.fmap(Z)
        mf = NestedSampleSet(Z=Z[: m[-1]], X=X[: m[-1]], Y=[Y[k][: m[k]] for k in range(K)], m=m)
        sf = NestedSampleSet(Z=Z[:n_sf], X=X[:n_sf], Y=[Y[0][:n_sf]], m=(n_sf,)) if n_sf else None
        return mf, sf


def replication_rng(seed, r):
    """Generator for replication ``r``; independent of how many replications run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, r)))


def _replicate(ctx, r):
    plan = ctx.plan
    rng = replication_rng(plan.seed, r)
    if ctx.fixed_stats is not None:
        stats, coeffs = ctx.fixed_stats, ctx.fixed_coeffs
    else:
        stats = ctx.pilot(rng)
        coeffs = ctx._coefficients(stats)
    opts = plan.allocation or {}
    out = []
    for p in plan.budgets:
        n_sf = single_fidelity_allocation(ctx.costs, p).m[0] if SINGLE_FIDELITY in plan.strategies else 0
        try:
            m = allocate(stats, ctx.costs, p, strict=opts.get("strict", False),
                         denominator=opts.get("denominator", "printed")).m
            alloc_error = None
        except NumericalError as exc:
            # pilot statistics can be unusable; only the MF strategies depend on them
            m, alloc_error = (1,) * len(ctx.costs), f"{type(exc).__name__}: {exc}"
        mf, sf = ctx.draw(rng, m, n_sf)
        cell = {"m": None if alloc_error else m, "fits": {}}
        for name in plan.strategies:
            strat = coeffs[name]
            if alloc_error and name != SINGLE_FIDELITY:
                cell["fits"][name] = alloc_error
                continue
            if isinstance(strat, Exception):
                cell["fits"][name] = f"{type(strat).__name__}: {strat}"
                continue
            data = sf if name == SINGLE_FIDELITY else mf
            res = fit(data, strat, ctx.c_xx, costs=ctx.costs, L=ctx.L)
            cell["fits"][name] = (res.c_xy, res.beta, ctx.X_eval @ res.beta, res.cost)
        out.append(cell)
    return out


_WORKER_CTX = None


def _init_worker(plan):
    global _WORKER_CTX
    _WORKER_CTX = _Context(plan)


def _run_chunk(indices):
    return [_replicate(_WORKER_CTX, r) for r in indices]


def _run_replications(ctx, R, workers):
    if workers <= 1 or R < 2:
        return [_replicate(ctx, r) for r in range(R)]
    n_chunks = min(R, workers * 4)
    bounds = np.linspace(0, R, n_chunks + 1).astype(int)
    chunks = [list(range(bounds[i], bounds[i + 1])) for i in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx.plan,)) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [res for part in parts for res in part]


# --- aggregation -------------------------------------------------------------


def _summary(A):
    """Mean, covariance, trace and standard error of rows of ``A`` (n, d)."""
    n = A.shape[0]
    if n < 2:
        return None
    mean = A.mean(axis=0)
    D = A - mean
    cov = (D.T @ D) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return {"mean": mean.tolist(), "cov": cov.tolist(), "trace": float(linalg.trace(cov)),
            "stderr": np.sqrt(np.diag(cov) / n).tolist()}


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    cells: list
    oracle: dict
    stats: dict
    c_xx: list
    eval_points: list
    costs: list
    allocations: dict
    allocation_variation: dict
    pilot_cost: float
    estimates: dict = field(default=None, repr=False)

    def cell(self, budget, strategy):
        for c in self.cells:
            if c["budget"] == budget and c["strategy"] == strategy:
                return c
        raise KeyError((budget, strategy))

    def trace(self, budget, strategy, target="beta"):
        c = self.cell(budget, strategy)
        if target.startswith("pred@z"):
            j = int(target[6:]) - 1
            return c["pred"][j]["var"] if c["pred"] else None
        return c[target]["trace"] if c[target] else None

    def to_dict(self):
        return {
            # worker count is omitted so reports match across parallelism settings
            "plan": {k: v for k, v in self.plan.to_dict().items() if k != "workers"},
            "cells": self.cells,
            "oracle": self.oracle,
            "stats": self.stats,
            "c_xx": self.c_xx,
            "eval_points": self.eval_points,
            "costs": self.costs,
            "allocations": self.allocations,
            "allocation_variation": self.allocation_variation,
            "pilot_cost": self.pilot_cost,
        }

    def trace_rows(self):
        rows = []
        for c in self.cells:
            for target in ("cxy", "beta"):
                rows.append([c["budget"], c["strategy"], target, c[target]["trace"] if c[target] else None])
            for j, pr in enumerate(c["pred"]):
                rows.append([c["budget"], c["strategy"], f"pred@z{j + 1}", pr["var"]])
        return rows

    def write(self, outdir):
        """Write report.json, trace_cov.csv and (if kept) estimates.csv; returns the paths."""
        os.makedirs(outdir, exist_ok=True)
        paths = [os.path.join(outdir, "report.json"), os.path.join(outdir, "trace_cov.csv")]
        with open(paths[0], "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True, allow_nan=False)
            fh.write("\n")
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["budget", "strategy", "target", "trace"])
            for b, s, t, v in self.trace_rows():
                w.writerow([repr(b), s, t, "" if v is None else repr(v)])
        if self.estimates is not None:
            paths.append(os.path.join(outdir, "estimates.csv"))
            with open(paths[2], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["budget", "replication", "strategy", "component", "value"])
                for (b, s), (reps, cxy, beta, pred) in self.estimates.items():
                    for i, r in enumerate(reps):
                        for name, arr in (("cxy", cxy), ("beta", beta), ("pred@z", pred)):
                            for j, v in enumerate(arr[i]):
                                w.writerow([repr(b), r, s, f"{name}{j + 1}",
                                            repr(float(v))])
        return paths


def _oracle_dict(oracle):
    if oracle is None:
        return None
    return {k: [float(x) for x in v] for k, v in oracle.items()}


def run_experiment(plan, workers=None):
    """Run every replication and aggregate per (budget, strategy).

    Each replication derives its own generator from ``(seed, r)``, re-estimates
    statistics in pilot mode, allocates, draws one training stream per budget
    and fits all strategies on it. Results are collected by index, so the
    report does not depend on ``workers``.
    """
    if isinstance(plan, dict):
        plan = ExperimentPlan.from_dict(plan)
    ctx = _Context(plan)
    workers = plan.workers if workers is None else workers
    results = _run_replications(ctx, plan.replications, workers)
    R = plan.replications
    q = ctx.X_eval.shape[0]
    cells, estimates, allocations, variation = [], {}, {}, {}
    for b, p in enumerate(plan.budgets):
        used = [results[r][b]["m"] for r in range(R)]
        allocations[repr(float(p))] = [None if u is None else list(map(int, u)) for u in used] \
            if ctx.fixed_stats is None else [list(map(int, used[0]))]
        ms = np.array([u for u in used if u is not None], dtype=float)
        if ms.shape[0] >= 2:
            mean, std = ms.mean(axis=0), ms.std(axis=0, ddof=1)
            variation[repr(float(p))] = {"m_mean": mean.tolist(), "m_std": std.tolist(),
                                         "variation": (std / mean).tolist()}
        else:
            variation[repr(float(p))] = None
        for name in plan.strategies:
            reps, fails, cxy, beta, pred, cost = [], [], [], [], [], []
            for r in range(R):
                f = results[r][b]["fits"][name]
                if isinstance(f, str):
                    fails.append(f)
                    continue
                reps.append(r)
                cxy.append(f[0])
                beta.append(f[1])
                pred.append(f[2])
                cost.append(f[3])
            n = len(reps)
            cxy = np.array(cxy).reshape(n, ctx.fmap.d)
            beta = np.array(beta).reshape(n, ctx.fmap.d)
            pred = np.array(pred).reshape(n, q)
            pred_summ = []
            for j in range(q):
                col = pred[:, j]
                if n >= 2:
                    mu = float(col.mean())
                    var = float(((col - mu) ** 2).sum() / (n - 1))
                    pred_summ.append({"z": ctx.eval_points[j].tolist(), "mean": mu, "var": var,
                                      "stderr": math.sqrt(var / n)})
            cells.append({
                "budget": float(p),
                "strategy": name,
                "n_success": n,
                "n_failed": len(fails),
                "failures": sorted(set(fails)),
                "max_cost": max(cost) if cost else None,
                "cxy": _summary(cxy),
                "beta": _summary(beta),
                "pred": pred_summ,
            })
            if plan.write_estimates:
                estimates[(float(p), name)] = (reps, cxy, beta, pred)
    pilot_cost = 0.0
    if plan.stats["mode"] == "pilot":
        pilot_cost = float(plan.stats["n_pilot"] * sum(ctx.costs) * R)
    return ExperimentReport(
        plan=plan, cells=cells, oracle=_oracle_dict(ctx.oracle),
        stats=ctx.fixed_stats.to_dict() if ctx.fixed_stats is not None else None,
        c_xx=ctx.c_xx.tolist(), eval_points=ctx.eval_points.tolist(), costs=list(ctx.costs),
        allocations=allocations,
        allocation_variation=variation if ctx.fixed_stats is None else None,
        pilot_cost=pilot_cost, estimates=estimates if plan.write_estimates else None)


def allocation_variation(plan, n_pilot, R):
    """std/mean of every m_k across ``R`` pilot re-estimated allocations, per budget."""
    if isinstance(plan, dict):
        plan = ExperimentPlan.from_dict(plan)
    if R < 2:
        raise ConfigError("allocation_variation needs R >= 2")
    doc = plan.to_dict()
    doc["stats"] = {"mode": "pilot", "n_pilot": int(n_pilot)}
    doc["replications"] = int(R)
    plan = ExperimentPlan.from_dict(doc)
    ctx = _Context(plan)
    opts = plan.allocation or {}
    out = {}
    ms = {p: [] for p in plan.budgets}
    for r in range(R):
        stats = ctx.pilot(replication_rng(plan.seed, r))
        for p in plan.budgets:
            ms[p].append(allocate(stats, ctx.costs, p, strict=opts.get("strict", False),
                                  denominator=opts.get("denominator", "printed")).m)
    for p in plan.budgets:
        A = np.array(ms[p], dtype=float)
        mean, std = A.mean(axis=0), A.std(axis=0, ddof=1)
        out[float(p)] = {"m_mean": mean.tolist(), "m_std": std.tolist(), "variation": (std / mean).tolist()}
    return out
