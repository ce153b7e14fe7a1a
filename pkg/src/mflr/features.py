"""Monomial feature maps and their exact second-moment matrices.

Feature ordering is fixed: the constant, then the linear terms in coordinate
order, then the quadratic terms ``z_i z_j`` (``i <= j``) in lexicographic order.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb, log

import numpy as np

from .errors import DimensionMismatch, EmptyInput, UnsupportedDistribution

MARGINAL_KINDS = ("uniform", "loguniform")


@dataclass(frozen=True)
class Marginal:
    kind: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in MARGINAL_KINDS:
            raise UnsupportedDistribution(f"unsupported marginal {self.kind!r}")
        if not self.lo < self.hi:
            raise UnsupportedDistribution(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == "loguniform" and self.lo <= 0:
            raise UnsupportedDistribution("log-uniform bounds must be positive")

    def sample(self, rng, n):
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, n)
        return np.exp(rng.uniform(log(self.lo), log(self.hi), n))

    def moment(self, k, a=1.0, b=0.0):
        """E[(a Z + b)^k] in closed form."""
        if k == 0:
            return 1.0
        if self.kind == "uniform":
            u0, u1 = a * self.lo + b, a * self.hi + b
            return (u1 ** (k + 1) - u0 ** (k + 1)) / ((k + 1) * (u1 - u0))
        # log-uniform: substitute s = a z, integrate (s + b)^k / s.
        s0, s1 = a * self.lo, a * self.hi
        total = b**k * log(s1 / s0)
        for j in range(1, k + 1):
            total += comb(k, j) * b ** (k - j) * (s1**j - s0**j) / j
        return total / log(self.hi / self.lo)


@dataclass(frozen=True)
class InputDistribution:
    """Product distribution of independent uniform / log-uniform coordinates."""

    marginals: tuple

    def __post_init__(self):
        if len(self.marginals) < 1:
            raise UnsupportedDistribution("distribution needs at least one coordinate")

    @property
    def p(self):
        return len(self.marginals)

    @property
    def bounds(self):
        return [(m.lo, m.hi) for m in self.marginals]

    def sample(self, rng, n):
        return np.column_stack([m.sample(rng, n) for m in self.marginals])

    def contains(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        lo = np.array([m.lo for m in self.marginals])
        hi = np.array([m.hi for m in self.marginals])
        return bool(np.all((z >= lo) & (z <= hi)))

    @classmethod
    def from_spec(cls, spec):
        return cls(tuple(Marginal(m["kind"], float(m["lo"]), float(m["hi"])) for m in spec))

    def to_spec(self):
        return [{"kind": m.kind, "lo": m.lo, "hi": m.hi} for m in self.marginals]


def uniform(lo, hi):
    return InputDistribution((Marginal("uniform", lo, hi),))


@dataclass(frozen=True)
class FeatureMap:
    """Monomial features ``x_i(z) = prod_c u_c^{E[i, c]}``.

    ``u = z`` unless ``bounds`` is set, in which case every coordinate is
    mapped affinely onto [-1, 1] before the monomials are formed.
    """

    exponents: np.ndarray = field(compare=False)
    kind: str = "custom-monomials"
    bounds: tuple = None

    def __post_init__(self):
        E = np.asarray(self.exponents, dtype=int)
        if E.ndim != 2 or E.shape[0] < 1:
            raise DimensionMismatch("exponent table must be (d, p) with d >= 1")
        if np.any(E < 0):
            raise DimensionMismatch("monomial exponents must be non-negative")
        if np.any(E[0] != 0):
            raise DimensionMismatch("first feature must be the constant 1")
        if self.bounds is not None and len(self.bounds) != E.shape[1]:
            raise DimensionMismatch("need one (lo, hi) pair per input coordinate")
        object.__setattr__(self, "exponents", E)

    @property
    def d(self):
        return self.exponents.shape[0]

    @property
    def p(self):
        return self.exponents.shape[1]

    @property
    def standardized(self):
        return self.bounds is not None

    def affine(self):
        """Per-coordinate ``(a, b)`` with ``u = a z + b``."""
        if self.bounds is None:
            return np.ones(self.p), np.zeros(self.p)
        lo = np.array([b[0] for b in self.bounds], dtype=float)
        hi = np.array([b[1] for b in self.bounds], dtype=float)
        return 2.0 / (hi - lo), -(hi + lo) / (hi - lo)

    def __call__(self, z):
        return eval_features(self, z)

    def labels(self):
        names = []
        for row in self.exponents:
            terms = [f"z{c + 1}" + (f"^{e}" if e > 1 else "") for c, e in enumerate(row) if e]
            names.append("*".join(terms) if terms else "1")
        return names


def full_quadratic(p, bounds=None):
    """Constant + ``p`` linear + ``p(p+1)/2`` quadratic features."""
    rows = [np.zeros(p, dtype=int)]
    for i in range(p):
        e = np.zeros(p, dtype=int)
        e[i] = 1
        rows.append(e)
    for i, j in combinations_with_replacement(range(p), 2):
        e = np.zeros(p, dtype=int)
        e[i] += 1
        e[j] += 1
        rows.append(e)
    return FeatureMap(np.array(rows), kind="full-quadratic",
                      bounds=None if bounds is None else tuple(map(tuple, bounds)))


def linear(p, bounds=None):
    """Constant + linear features (d = p + 1)."""
    E = np.vstack([np.zeros(p, dtype=int), np.eye(p, dtype=int)])
    return FeatureMap(E, kind="linear", bounds=None if bounds is None else tuple(map(tuple, bounds)))


def eval_features(fmap, z):
    """Evaluate the map at one point (shape ``(p,)``) or a batch (shape ``(n, p)``)."""
    z = np.asarray(z, dtype=float)
    single = z.ndim < 2
    Z = z.reshape(1, -1) if single else z
    if Z.shape[1] != fmap.p:
        raise DimensionMismatch(f"input has {Z.shape[1]} coordinates, map expects {fmap.p}")
    a, b = fmap.affine()
    U = Z * a + b
    X = np.ones((Z.shape[0], fmap.d))
    for c in range(fmap.p):
        col = fmap.exponents[:, c]
        if np.any(col):
            X *= U[:, c:c + 1] ** col
    return X[0] if single else X


def exact_cxx(fmap, dist):
    """Exact ``E[x(Z) x(Z)^T]`` from closed-form per-coordinate moments."""
    if not isinstance(dist, InputDistribution):
        raise UnsupportedDistribution("exact moments need a product InputDistribution")
    if dist.p != fmap.p:
        raise DimensionMismatch(f"map has p={fmap.p}, distribution has p={dist.p}")
    a, b = fmap.affine()
    E = fmap.exponents
    max_k = int(2 * E.max()) if E.size else 0
    mom = np.array([[m.moment(k, a[c], b[c]) for k in range(max_k + 1)]
                    for c, m in enumerate(dist.marginals)])
    d = fmap.d
    C = np.ones((d, d))
    for c in range(fmap.p):
        K = E[:, c][:, None] + E[:, c][None, :]
        C *= mom[c][K]
    return 0.5 * (C + C.T)


def sample_cxx(fmap, inputs):
    """Moment matrix ``(1/N) sum x_i x_i^T`` over the given inputs."""
    Z = np.asarray(inputs, dtype=float)
    if Z.size == 0:
        raise EmptyInput("need at least one input to form a moment matrix")
    if Z.ndim == 1:
        Z = Z[:, None] if fmap.p == 1 else Z[None, :]
    X = eval_features(fmap, Z)
    C = X.T @ X / X.shape[0]
    return 0.5 * (C + C.T)
