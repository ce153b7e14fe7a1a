"""Second-order model statistics: sigma_k, rho_1k and the g^(k) covariances.

``g^(k)(z) = x(z) f^(k)(z)`` is the feature-weighted output whose cross
covariances ``C_1k`` and auto covariances ``C_kk`` drive the optimal control
variate coefficients.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConfigError, DimensionMismatch, InsufficientSamples, MissingFidelity
from .features import full_quadratic
from .models import evaluate_batch


@dataclass
class ModelStats:
    sigma: np.ndarray
    rho: np.ndarray
    C1k: list = None
    Ckk: list = None
    provenance: str = "unknown"
    mu: np.ndarray = field(default=None)

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        if self.sigma.shape != self.rho.shape or self.sigma.ndim != 1:
            raise DimensionMismatch("sigma and rho must be equal-length vectors")
        if self.mu is not None:
            self.mu = np.asarray(self.mu, dtype=float)
        if (self.C1k is None) != (self.Ckk is None):
            raise DimensionMismatch("C1k and Ckk must be given together")
        if self.C1k is not None:
            self.C1k = [np.asarray(C, dtype=float) for C in self.C1k]
            self.Ckk = [np.asarray(C, dtype=float) for C in self.Ckk]
            if len(self.C1k) != self.K or len(self.Ckk) != self.K:
                raise DimensionMismatch(f"need {self.K} C1k and Ckk matrices")

    @property
    def K(self):
        return self.sigma.shape[0]

    @property
    def has_matrices(self):
        return self.C1k is not None

    @property
    def d(self):
        return None if self.C1k is None else self.C1k[0].shape[0]

    def to_dict(self):
        out = {
            "K": int(self.K),
            "sigma": self.sigma.tolist(),
            "rho": self.rho.tolist(),
            "C1k": None if self.C1k is None else [C.tolist() for C in self.C1k],
            "Ckk": None if self.Ckk is None else [C.tolist() for C in self.Ckk],
            "provenance": self.provenance,
        }
        if self.mu is not None:
            out["mu"] = self.mu.tolist()
        return out

    @classmethod
    def from_dict(cls, doc):
        required = ("K", "sigma", "rho", "provenance")
        allowed = set(required) | {"C1k", "Ckk", "mu"}
        if not isinstance(doc, dict):
            raise ConfigError("statistics document must be a JSON object")
        for key in required:
            if key not in doc:
                raise ConfigError(f"statistics document is missing required key {key!r}")
        for key in doc:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in statistics document")
        K = doc["K"]
        if not isinstance(K, int) or K < 1:
            raise ConfigError("'K' must be a positive integer")
        for key in ("sigma", "rho"):
            if not isinstance(doc[key], list) or len(doc[key]) != K:
                raise ConfigError(f"{key!r} must be a list of length K={K}")
        return cls(sigma=doc["sigma"], rho=doc["rho"], C1k=doc.get("C1k"), Ckk=doc.get("Ckk"),
                   provenance=str(doc["provenance"]), mu=doc.get("mu"))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(doc)


def stats_from_samples(X, Y, provenance="sample", matrices=True):
    """Sample statistics from features ``X`` (n, d) and outputs ``Y`` (n, K).

    Pearson correlations use the same 1/(n-1) factor in numerator and
    denominator.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, K = Y.shape
    if n < 2:
        raise InsufficientSamples(f"need at least 2 common samples, got {n}")
    C = linalg.sample_cov(Y, Y)
    sigma = np.sqrt(np.diag(C))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = C[0] / (sigma[0] * sigma)
    rho[0] = 1.0
    C1k = Ckk = None
    if matrices:
        G1 = X * Y[:, :1]
        C1k, Ckk = [], []
        for k in range(K):
            Gk = X * Y[:, k:k + 1]
            C1k.append(linalg.sample_cov(G1, Gk))
            Ck = linalg.sample_cov(Gk, Gk)
            Ckk.append(0.5 * (Ck + Ck.T))
    return ModelStats(sigma=sigma, rho=rho, C1k=C1k, Ckk=Ckk, provenance=provenance, mu=Y.mean(axis=0))


def pilot_stats(models, fmap, n_pilot, seed, dist=None, ledger=None):
    """Estimate statistics from ``n_pilot`` fresh inputs evaluated by every model.

    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if n_pilot < 2:
        raise InsufficientSamples(f"n_pilot must be >= 2, got {n_pilot}")
    dist = dist or models.distribution
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = dist.sample(rng, n_pilot)
    Y = np.column_stack([evaluate_batch(models, k, Z, ledger) for k in range(1, models.K + 1)])
    return stats_from_samples(fmap(Z), Y, provenance=f"pilot({n_pilot})")


def stats_from_dataset(data, fmap):
    """Statistics over every row of a tabulated dataset (no model evaluation).

    ``data`` is anything with ``Z`` (n, p) and ``Y`` (n, K) arrays, such as a
    :class:`mflr.experiments.Dataset`.
    """
    Y = np.asarray(data.Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise MissingFidelity("dataset has no output columns")
    if not np.all(np.isfinite(Y)):
        raise MissingFidelity("dataset has missing fidelity values")
    return stats_from_samples(fmap(np.asarray(data.Z, dtype=float)), Y,
                              provenance=f"dataset({Y.shape[0]})")


# --- exact statistics of the exponential pair -------------------------------

_EXP_HI = 5.0


def _int_power_exp(a, b, L=_EXP_HI):
    """Closed form of int_0^L z^a e^{bz} dz for integer a >= 0, b != 0."""
    eL = math.exp(b * L)
    terms = []
    fact = 1.0
    for j in range(a + 1):
        # a!/(a-j)! accumulated incrementally
        if j > 0:
            fact *= a - j + 1
        terms.append((-1) ** j * fact * L ** (a - j) * eL / b ** (j + 1))
    terms.append(-((-1) ** a) * math.factorial(a) / b ** (a + 1))
    return math.fsum(terms)


def exp_moment(a, b):
    """E[Z^a e^{bZ}] for Z ~ U(0, 5)."""
    if b == 0:
        return _EXP_HI**a / (a + 1)
    return _int_power_exp(a, b) / _EXP_HI


def exact_moments_exp(degree=2):
    """Exact ``C_XX``, ``C_XY`` and ``E[f1]`` for the exponential pair with monomials up to ``degree``."""
    d = degree + 1
    cxx = np.array([[exp_moment(i + j, 0.0) for j in range(d)] for i in range(d)])
    cxy = np.array([8.0 * exp_moment(i, 1.0) for i in range(d)])
    return cxx, cxy, 8.0 * exp_moment(0, 1.0)


def exact_stats_exp(degree=2):
    """Exact statistics of the exponential pair for the monomials ``1, z, ..., z^degree``."""
    d = degree + 1
    a1, a2 = 8.0, 7.2
    b1, b2 = 1.0, 0.5
    mean_g = [np.array([a * exp_moment(i, b) for i in range(d)]) for a, b in ((a1, b1), (a2, b2))]

    def cross(ai, bi, aj, bj, mi, mj):
        E = np.array([[ai * aj * exp_moment(i + j, bi + bj) for j in range(d)] for i in range(d)])
        return E - np.outer(mi, mj)

    C11 = cross(a1, b1, a1, b1, mean_g[0], mean_g[0])
    C12 = cross(a1, b1, a2, b2, mean_g[0], mean_g[1])
    C22 = cross(a2, b2, a2, b2, mean_g[1], mean_g[1])
    mu = np.array([a1 * exp_moment(0, b1), a2 * exp_moment(0, b2)])
    var1 = a1 * a1 * exp_moment(0, 2 * b1) - mu[0] ** 2
    var2 = a2 * a2 * exp_moment(0, 2 * b2) - mu[1] ** 2
    cov12 = a1 * a2 * exp_moment(0, b1 + b2) - mu[0] * mu[1]
    sigma = np.sqrt([var1, var2])
    rho = np.array([1.0, cov12 / (sigma[0] * sigma[1])])
    return ModelStats(sigma=sigma, rho=rho, C1k=[C11, C12], Ckk=[C11, 0.5 * (C22 + C22.T)],
                      provenance="exact-oracle", mu=mu)


def exp_feature_map():
    """The quadratic map ``[1, z, z^2]`` used with the exponential pair."""
    return full_quadratic(1)
