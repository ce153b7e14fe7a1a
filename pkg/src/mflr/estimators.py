"""Single-fidelity and multifidelity estimators of C_XY, beta and the mean."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .coefficients import SINGLE_FIDELITY, CoefficientStrategy
from .errors import CountMismatch, DimensionMismatch, EmptyData, NonNestedData
from .models import evaluate_batch


@dataclass
class NestedSampleSet:
    """Nested training data: fidelity k is evaluated on the first ``m[k]`` inputs.

    ``Z`` (n, p) and ``X`` (n, d) hold at least ``m[-1]`` rows; ``Y[k]`` has
    exactly ``m[k]`` entries.
    """

    Z: np.ndarray
    X: np.ndarray
    Y: list
    m: tuple

    def __post_init__(self):
        self.m = tuple(int(v) for v in self.m)
        self.Z = np.asarray(self.Z, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        self.Y = [np.asarray(y, dtype=float).reshape(-1) for y in self.Y]
        if not self.m or self.m[0] < 1:
            raise EmptyData("no high-fidelity samples")
        if len(self.Y) != len(self.m):
            raise CountMismatch(f"{len(self.Y)} output arrays for {len(self.m)} counts")
        for k, (y, mk) in enumerate(zip(self.Y, self.m)):
            if y.shape[0] != mk:
                raise CountMismatch(f"fidelity {k + 1} has {y.shape[0]} outputs, expected {mk}")
        if any(b < a for a, b in zip(self.m, self.m[1:])):
            raise NonNestedData(f"counts must be nondecreasing, got {self.m}")
        if self.X.ndim != 2 or self.X.shape[0] < self.m[-1]:
            raise CountMismatch(f"need at least {self.m[-1]} feature rows")

    @property
    def K(self):
        return len(self.m)

    @property
    def d(self):
        return self.X.shape[1]

    @classmethod
    def from_fidelity_inputs(cls, Zs, Ys, fmap):
        """Build from per-fidelity input arrays, checking the prefix property."""
        Zs = [np.atleast_2d(np.asarray(z, dtype=float)) for z in Zs]
        m = [z.shape[0] for z in Zs]
        if any(b < a for a, b in zip(m, m[1:])):
            raise NonNestedData(f"counts must be nondecreasing, got {m}")
        for k in range(1, len(Zs)):
            if not np.array_equal(Zs[k][: m[k - 1]], Zs[k - 1]):
                raise NonNestedData(f"inputs of fidelity {k} are not a prefix of fidelity {k + 1}'s")
        Z = Zs[-1]
        return cls(Z=Z, X=fmap(Z), Y=Ys, m=m)


def sample_nested(models, fmap, m, rng, ledger=None, Z=None):
    """Draw (or reuse) an input stream and evaluate fidelity k on its first m_k rows."""
    m = tuple(int(v) for v in m)
    if Z is None:
        Z = models.distribution.sample(rng, m[-1])
    Z = np.asarray(Z, dtype=float)
    Y = [evaluate_batch(models, k + 1, Z[: m[k]], ledger) for k in range(len(m))]
    return NestedSampleSet(Z=Z[: m[-1]], X=fmap(Z[: m[-1]]), Y=Y, m=m)


def _block_mean(X, y, n):
    # fixed-order reduction so refits reproduce bit for bit
    return (X[:n] * y[:n, None]).sum(axis=0) / n


def _corrections(data):
    """Per-fidelity corrections (1/m_k) X Y^(k) - (1/m_{k-1}) X Y^(k) over the nested sets."""
    out = []
    for k in range(1, data.K):
        y = data.Y[k]
        if data.m[k] == data.m[k - 1]:
            out.append(np.zeros(data.d))
            continue
        out.append(_block_mean(data.X, y, data.m[k]) - _block_mean(data.X, y, data.m[k - 1]))
    return out


def sf_cxy(data):
    """(1/m_1) X_{m_1} Y^(1), high-fidelity data only."""
    if data.m[0] < 1:
        raise EmptyData("no high-fidelity samples")
    return _block_mean(data.X, data.Y[0], data.m[0])


def _scalars(alphas, K):
    vals = alphas.values if isinstance(alphas, CoefficientStrategy) else list(alphas)
    if len(vals) != K - 1:
        raise CountMismatch(f"need {K - 1} coefficients for {K} fidelities, got {len(vals)}")
    return [float(a) for a in vals]


def mf_cxy_scalar(data, alphas):
    """Multifidelity C_XY with scalar coefficients alpha_2..alpha_K."""
    a = _scalars(alphas, data.K)
    c = sf_cxy(data)
    for ak, delta in zip(a, _corrections(data)):
        c = c + ak * delta
    return c


def mf_cxy_matrix(data, As):
    """Multifidelity C_XY with matrix coefficients A_2..A_K."""
    vals = As.values if isinstance(As, CoefficientStrategy) else list(As)
    if len(vals) != data.K - 1:
        raise CountMismatch(f"need {data.K - 1} coefficients for {data.K} fidelities, got {len(vals)}")
    c = sf_cxy(data)
    for Ak, delta in zip(vals, _corrections(data)):
        Ak = np.asarray(Ak, dtype=float)
        if Ak.shape != (data.d, data.d):
            raise DimensionMismatch(f"coefficient shape {Ak.shape} does not match d={data.d}")
        c = c + Ak @ delta
    return c


def mfmc_mean(data, alphas):
    """Scalar multifidelity Monte Carlo estimate of E[f^(1)]."""
    a = _scalars(alphas, data.K)
    mu = math.fsum(data.Y[0]) / data.m[0]
    for k in range(1, data.K):
        y = data.Y[k]
        mu += a[k - 1] * (math.fsum(y) / data.m[k] - math.fsum(y[: data.m[k - 1]]) / data.m[k - 1])
    return mu


@dataclass
class FitResult:
    c_xy: np.ndarray
    beta: np.ndarray
    strategy: CoefficientStrategy
    m: tuple
    cost: float
    seed: object = None
    standardized: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "c_xy": [float(v) for v in self.c_xy],
            "beta": [float(v) for v in self.beta],
            "strategy": self.strategy.kind,
            "coefficients": self.strategy.to_dict()["values"],
            "m": list(self.m),
            "cost": float(self.cost),
            "seed": self.seed,
            "standardized": bool(self.standardized),
        }


def estimate_cxy(data, strategy):
    if strategy.kind == SINGLE_FIDELITY:
        return sf_cxy(data)
    if strategy.is_matrix:
        return mf_cxy_matrix(data, strategy)
    return mf_cxy_scalar(data, strategy)


def fit(data, strategy, c_xx, costs=None, seed=None, standardized=False, L=None):
    """Regression coefficients beta = C_XX^{-1} C_XY for the chosen strategy.

    ``L`` may pass a precomputed Cholesky factor of ``c_xx``.
    """
    c_xy = estimate_cxy(data, strategy)
    c_xx = np.asarray(c_xx, dtype=float)
    if c_xx.shape != (data.d, data.d):
        raise DimensionMismatch(f"C_XX shape {c_xx.shape} does not match d={data.d}")
    if L is None:
        L = linalg.cholesky(c_xx)
    beta = linalg.cho_solve(L, c_xy)
    m = data.m[:1] if strategy.kind == SINGLE_FIDELITY else data.m
    cost = math.fsum(mk * wk for mk, wk in zip(m, costs)) if costs is not None else float("nan")
    return FitResult(c_xy=c_xy, beta=beta, strategy=strategy, m=tuple(m), cost=cost, seed=seed,
                     standardized=standardized)


def predict(result, fmap, z):
    """f(z) = x(z)^T beta for one point or a batch of points."""
    beta = result.beta if isinstance(result, FitResult) else np.asarray(result, dtype=float)
    z = np.asarray(z, dtype=float)
    X = fmap(z)
    if X.shape[-1] != beta.shape[0]:
        raise DimensionMismatch(f"feature dimension {X.shape[-1]} does not match beta of length {beta.shape[0]}")
    return X @ beta if X.ndim == 2 else float(X @ beta)
