"""Control-variate coefficient strategies and closed-form estimator covariances."""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError, DegenerateStats, DimensionMismatch, MissingMatrixStats, NotPositiveDefinite

MF_MEAN = "mf-mean"
MF_ALPHA_STAR = "mf-alpha-star"
MF_A_STAR = "mf-a-star"
SINGLE_FIDELITY = "single-fidelity"
STRATEGY_NAMES = (SINGLE_FIDELITY, MF_MEAN, MF_ALPHA_STAR, MF_A_STAR)


@dataclass
class CoefficientStrategy:
    """Coefficients for fidelities 2..K.

    ``values`` holds K-1 scalars for the scalar strategies and K-1 (d, d)
    matrices for ``mf-a-star``. Single-fidelity carries no values.
    """

    kind: str
    values: list

    def __post_init__(self):
        if self.kind not in STRATEGY_NAMES:
            raise ConfigError(f"unknown strategy {self.kind!r}")
        if self.kind == MF_A_STAR:
            self.values = [np.asarray(v, dtype=float) for v in self.values]
            for A in self.values:
                if A.ndim != 2 or A.shape[0] != A.shape[1]:
                    raise DimensionMismatch("matrix coefficients must be square")
        else:
            self.values = [float(v) for v in self.values]
            if not all(np.isfinite(self.values)):
                raise DegenerateStats("scalar coefficients must be finite")

    @property
    def is_matrix(self):
        return self.kind == MF_A_STAR

    def matrices(self, d):
        """Coefficients as (d, d) matrices; scalars become ``alpha * I``."""
        if self.is_matrix:
            return list(self.values)
        return [a * np.eye(d) for a in self.values]

    def to_dict(self):
        vals = [v.tolist() for v in self.values] if self.is_matrix else list(self.values)
        return {"kind": self.kind, "values": vals}


def single_fidelity():
    return CoefficientStrategy(SINGLE_FIDELITY, [])


def mf_mean_alpha(stats):
    """alpha_k = rho_1k sigma_1 / sigma_k."""
    sigma, rho = stats.sigma, stats.rho
    if np.any(sigma <= 0):
        raise DegenerateStats("every sigma_k must be positive")
    return CoefficientStrategy(MF_MEAN, [rho[k] * sigma[0] / sigma[k] for k in range(1, stats.K)])


def _require_matrices(stats):
    if not stats.has_matrices:
        raise MissingMatrixStats("strategy needs C_1k and C_kk; statistics carry only sigma and rho")


def mf_alpha_star(stats):
    """alpha_k* = Tr C_1k / Tr C_kk, minimising the trace of the estimator covariance."""
    _require_matrices(stats)
    out = []
    for k in range(1, stats.K):
        tkk = linalg.trace(stats.Ckk[k])
        if not tkk > 0:
            raise DegenerateStats(f"trace of C_kk for fidelity {k + 1} is not positive")
        out.append(linalg.trace(stats.C1k[k]) / tkk)
    return CoefficientStrategy(MF_ALPHA_STAR, out)


def mf_A_star(stats):
    """A_k* = C_1k C_kk^{-1}, from the SPD solve C_kk X = C_1k^T.

    Raises NotPositiveDefinite when C_kk is singular; no regularization.
    """
    _require_matrices(stats)
    out = []
    for k in range(1, stats.K):
        ev = linalg.sym_eigvals(stats.Ckk[k])
        # numerical rank test, e.g. a pilot covariance from fewer than d + 1 samples
        if not ev[-1] > ev.shape[0] * np.finfo(float).eps * ev[0]:
            raise NotPositiveDefinite(f"C_kk for fidelity {k + 1} is singular (eigenvalues {ev[-1]:.3e} .. {ev[0]:.3e})")
        X = linalg.spd_solve(stats.Ckk[k], stats.C1k[k].T)
        out.append(X.T)
    return CoefficientStrategy(MF_A_STAR, out)


_BUILDERS = {
    SINGLE_FIDELITY: lambda stats: single_fidelity(),
    MF_MEAN: mf_mean_alpha,
    MF_ALPHA_STAR: mf_alpha_star,
    MF_A_STAR: mf_A_star,
}


def build_strategy(name, stats):
    """Coefficients for the strategy called ``name`` computed from ``stats``."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown strategy {name!r}; expected one of {list(STRATEGY_NAMES)}") from None
    return builder(stats)


# --- closed-form covariances --------------------------------------------------

def cxy_covariance(C1k, Ckk, m, A):
    """Covariance of the multifidelity C_XY estimator for nested samples.

    ``C1k[k]`` and ``Ckk[k]`` are the g-covariances (index 0 is C_11), ``m``
    the counts and ``A`` the K-1 coefficient matrices. Corrections from
    different fidelities are uncorrelated, so the covariance is
    C_11/m_1 + sum_k (1/m_{k-1} - 1/m_k)(A C_kk A^T - C_1k A^T - A C_k1).
    """
    K = len(m)
    if len(A) != K - 1:
        raise DimensionMismatch(f"need {K - 1} coefficients, got {len(A)}")
    cov = np.asarray(C1k[0], dtype=float) / m[0]
    for k in range(1, K):
        Ak = np.asarray(A[k - 1], dtype=float)
        C1 = np.asarray(C1k[k], dtype=float)
        term = Ak @ np.asarray(Ckk[k], dtype=float) @ Ak.T - C1 @ Ak.T - Ak @ C1.T
        cov = cov + (1.0 / m[k - 1] - 1.0 / m[k]) * term
    return 0.5 * (cov + cov.T)


def strategy_covariance(stats, m, strategy):
    """Closed-form Cov[C_XY estimator] for ``strategy`` under allocation ``m``."""
    _require_matrices(stats)
    d = stats.C1k[0].shape[0]
    if strategy.kind == SINGLE_FIDELITY:
        return np.asarray(stats.C1k[0], dtype=float) / m[0]
    return cxy_covariance(stats.C1k, stats.Ckk, m, strategy.matrices(d))


def beta_covariance(cov_cxy, c_xx):
    """Cov[beta] = C_XX^{-1} Cov[C_XY] C_XX^{-1}."""
    L = linalg.cholesky(c_xx)
    left = linalg.cho_solve(L, cov_cxy)
    out = linalg.cho_solve(L, left.T)
    return 0.5 * (out + out.T)
