"""Model hierarchies ``f^(1..K)`` with per-evaluation costs.

Index 0 in the Python containers is the high-fidelity model ``f^(1)``; the
public helpers take the 1-based fidelity index used throughout the docs.
"""

import csv
import threading
from dataclasses import dataclass, field

import numpy as np

from . import cdr
from .errors import ConfigError, DimensionMismatch
from .features import InputDistribution, Marginal, uniform


class CostLedger:
    """Thread-safe running total of model-evaluation cost."""

    def __init__(self):
        self._lock = threading.Lock()
        self.total = 0.0
        self.counts = {}

    def charge(self, k, cost, count=1):
        with self._lock:
            self.total += cost * count
            self.counts[k] = self.counts.get(k, 0) + count

    def merge(self, other):
        with self._lock:
            self.total += other.total
            for k, c in other.counts.items():
                self.counts[k] = self.counts.get(k, 0) + c

    def recount(self, costs):
        """Total recomputed as ``sum_k count_k * w_k`` (independent of charge order)."""
        return sum(self.counts.get(k, 0) * costs[k - 1] for k in sorted(self.counts))


@dataclass
class ModelSet:
    """Ordered fidelity hierarchy with costs ``w_1 > w_2 > ... > w_K > 0``.

    Each evaluator maps an ``(n, p)`` input batch to ``n`` outputs.
    """

    name: str
    evaluators: list
    costs: tuple
    distribution: InputDistribution
    prediction_points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.evaluators) != len(self.costs) or len(self.costs) < 1:
            raise ConfigError("need one cost per evaluator")
        w = np.asarray(self.costs, dtype=float)
        if np.any(w <= 0) or np.any(np.diff(w) >= 0):
            raise ConfigError(f"costs must be positive and strictly decreasing, got {list(w)}")
        self.costs = tuple(float(c) for c in w)

    @property
    def K(self):
        return len(self.evaluators)


def evaluate(models, k, z, ledger=None):
    """``f^(k)(z)`` at a single point, charging ``w_k`` to the ledger."""
    if not 1 <= k <= models.K:
        raise DimensionMismatch(f"fidelity index {k} outside 1..{models.K}")
    z = np.asarray(z, dtype=float).reshape(1, -1)
    if z.shape[1] != models.distribution.p:
        raise DimensionMismatch(f"input has {z.shape[1]} coordinates, model expects {models.distribution.p}")
    y = float(models.evaluators[k - 1](z)[0])
    if ledger is not None:
        ledger.charge(k, models.costs[k - 1])
    return y


def evaluate_batch(models, k, Z, ledger=None):
    """Batch form of :func:`evaluate`; same values as repeated single calls."""
    if not 1 <= k <= models.K:
        raise DimensionMismatch(f"fidelity index {k} outside 1..{models.K}")
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != models.distribution.p:
        raise DimensionMismatch(f"expected an (n, {models.distribution.p}) input batch, got {Z.shape}")
    if Z.shape[0] == 0:
        return np.empty(0)
    y = np.asarray(models.evaluators[k - 1](Z), dtype=float)
    if ledger is not None:
        ledger.charge(k, models.costs[k - 1], Z.shape[0])
    return y


def _exp_hi(Z):
    return 8.0 * np.exp(Z[:, 0])


def _exp_lo(Z):
    return 0.9 * 8.0 * np.exp(0.5 * Z[:, 0])


def exp_pair():
    """``f1 = 8 e^z``, ``f2 = 0.9 sqrt(8 f1) = 7.2 e^{z/2}`` on U(0, 5), costs (1, 0.001)."""
    return ModelSet("exp", [_exp_hi, _exp_lo], (1.0, 0.001), uniform(0.0, 5.0),
                    prediction_points=[[5.0]])


CDR_DISTRIBUTION = InputDistribution((
    Marginal("loguniform", 5.5e11, 1.5e12),
    Marginal("loguniform", 1.5e3, 9.5e3),
    Marginal("uniform", 200.0, 400.0),
    Marginal("uniform", 850.0, 1000.0),
    Marginal("uniform", 0.5, 1.5),
))

CDR_PREDICTION_POINT = [5.5e11, 6000.0, 300.0, 925.0, 1.0]


class _CdrEvaluator:
    # Picklable so process pools can ship it.
    def __init__(self, n, cfg):
        self.n = n
        self.cfg = cfg

    def __call__(self, Z):
        return cdr.max_temperature(Z, self.n, self.cfg)


def cdr_pair(cfg=None):
    """Fine/coarse grid pair of the steady 1D CDR problem; costs ``n_k / n_fine``."""
    cfg = cfg or cdr.CdrConfig()
    costs = (1.0, cfg.n_coarse / cfg.n_fine)
    return ModelSet("cdr1d", [_CdrEvaluator(cfg.n_fine, cfg), _CdrEvaluator(cfg.n_coarse, cfg)],
                    costs, CDR_DISTRIBUTION, prediction_points=[list(CDR_PREDICTION_POINT)],
                    metadata={"cdr": cfg.to_dict()})


FAMILIES = {
    "exp": ("8 exp(z) vs 7.2 exp(z/2), z ~ U(0,5); costs (1, 0.001)", exp_pair),
    "cdr1d": ("steady 1D convection-diffusion-reaction, fine vs coarse grid; "
              "z = [A, E, T_inlet, T_wall, phi]", cdr_pair),
}


def get_family(name, **options):
    try:
        factory = FAMILIES[name][1]
    except KeyError:
        raise ConfigError(f"unknown model family {name!r}; choose from {sorted(FAMILIES)}") from None
    if name == "cdr1d" and options:
        return factory(cdr.CdrConfig(**options))
    if options:
        raise ConfigError(f"family {name!r} takes no options")
    return factory()


def tabulate(models, n, seed, path=None, ledger=None):
    """Evaluate every fidelity on ``n`` common random inputs.

    Returns ``(Z, Y)`` with ``Y`` of shape ``(n, K)``; if ``path`` is given the
    table is also written in the dataset CSV layout ``z1..zp, y1..yK``.
    """
    rng = np.random.default_rng(seed)
    Z = models.distribution.sample(rng, n)
    Y = np.column_stack([evaluate_batch(models, k, Z, ledger) for k in range(1, models.K + 1)])
    if path is not None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"z{i + 1}" for i in range(Z.shape[1])] + [f"y{k + 1}" for k in range(models.K)])
            for zi, yi in zip(Z, Y):
                writer.writerow([repr(float(v)) for v in zi] + [repr(float(v)) for v in yi])
    return Z, Y
