"""Small dense symmetric kernels shared by the rest of the package.

Matrices here are at most a few dozen rows, so clarity wins over blocking.
"""

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, NotPositiveDefinite

SYM_TOL = 1e-12


def as_symmetric(M, name="matrix"):
    """Return ``M`` as a float array after checking it is square and symmetric."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > SYM_TOL * scale:
        raise DimensionMismatch(f"{name} is not symmetric")
    return M


def cholesky(M):
    """Lower Cholesky factor of an SPD matrix.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is not above ``n * eps * max(diag(M))``, i.e. the matrix
        is indefinite or numerically singular.
    """
    M = as_symmetric(M)
    n = M.shape[0]
    tol = n * np.finfo(float).eps * max(float(np.max(np.abs(np.diag(M)))), 0.0) if n else 0.0
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > tol:
            raise NotPositiveDefinite(f"non-positive pivot {pivot:.3e} at column {j}")
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cho_solve(L, b):
    """Solve ``L L^T v = b`` given the lower factor. ``b`` may be a vector or matrix."""
    b = np.asarray(b, dtype=float)
    n = L.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, factor has {n}")
    y = np.array(b, dtype=float, copy=True)
    for i in range(n):
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - L[i + 1:, i] @ y[i + 1:]) / L[i, i]
    return y


def spd_solve(M, b):
    """Solve ``M v = b`` for symmetric positive definite ``M`` via Cholesky."""
    b = np.asarray(b, dtype=float)
    M = as_symmetric(M)
    if b.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"dim(b)={b.shape[0]} but dim(M)={M.shape[0]}")
    return cho_solve(cholesky(M), b)


def sym_eigvals(M):
    """Eigenvalues of a symmetric matrix in descending order."""
    M = as_symmetric(M)
    return np.linalg.eigvalsh(M)[::-1].copy()


def trace(M):
    """Sum of the diagonal, accumulated left to right."""
    M = np.asarray(M, dtype=float)
    total = 0.0
    for i in range(min(M.shape)):
        total += float(M[i, i])
    return total


def sample_cov(samples, other):
    """Unbiased cross-covariance ``(1/(n-1)) sum (s_i - s_bar)(o_i - o_bar)^T``.

    Parameters
    ----------
    samples, other : array-like of shape (n, d1) and (n, d2)
        One row per draw. 1-d inputs are treated as scalar draws.
    """
    S = np.asarray(samples, dtype=float)
    O = np.asarray(other, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if O.ndim == 1:
        O = O[:, None]
    if S.shape[0] != O.shape[0]:
        raise DimensionMismatch(f"sample counts differ: {S.shape[0]} vs {O.shape[0]}")
    n = S.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples for a covariance, got {n}")
    Sc = S - S.mean(axis=0)
    Oc = O - O.mean(axis=0)
    return Sc.T @ Oc / (n - 1)
