"""Steady 1D convection-diffusion-reaction solver used by the ``cdr1d`` family.

The state on ``x in [0, 1]`` is the fuel mass fraction ``Y`` and the
temperature ``T``:

    kappa Y'' - U Y' - w                                = 0
    kappa T'' - U T' + beta (T_wall - T) + Q w           = 0
    w = k exp(-E / T) Y

with the premixed inflow ``(Y_in, T_inlet)`` imposed at ``x = 0`` and zero
gradient at the outflow ``x = 1``. The ``beta`` term is the heat exchange with
the chamber walls that a 1D reduction of a 2D channel leaves behind.

Inputs follow the five-parameter layout ``z = [A, E, T_inlet, T_wall, phi]``:
Arrhenius pre-exponential factor, activation temperature, inlet and wall
temperatures and fuel:oxidizer ratio (``Y_in = fuel_scale * phi``).

Central differences on a uniform grid, damped Newton with backtracking on the
residual 2-norm, and a fixed homotopy in the reaction rate (``0 -> 1`` in
``continuation_steps`` equal stages) so cold-start iterates never have to jump
straight onto the burning branch.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, SolverDivergence


@dataclass(frozen=True)
class CdrConfig:
    n_fine: int = 129
    n_coarse: int = 5
    kappa: float = 0.1
    velocity: float = 1.0
    wall_exchange: float = 5.0
    pre_exp_scale: float = 3e-11
    activation_scale: float = 0.6
    heat_release: float = 4.0e4
    fuel_scale: float = 0.025
    newton_tol: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 30
    continuation_steps: int = 10

    def __post_init__(self):
        if not self.n_fine > self.n_coarse >= 3:
            raise ConfigError(f"need n_fine > n_coarse >= 3, got {self.n_fine}, {self.n_coarse}")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be positive")
        if self.continuation_steps < 1:
            raise ConfigError("continuation_steps must be >= 1")

    def to_dict(self):
        return asdict(self)


def _tridiag_block_solve(lo, up, D, R):
    """Batched block-tridiagonal solve with 2x2 blocks.

    The off-diagonal blocks are ``lo[i] * I`` and ``up[i] * I``; ``D`` has
    shape ``(B, n, 2, 2)`` and ``R`` has shape ``(B, n, 2)``.
    """
    B, n = R.shape[:2]
    # Forward sweep keeps C (2x2) and g (2,) per row.
    c00 = np.empty((B, n)); c01 = np.empty((B, n)); c10 = np.empty((B, n)); c11 = np.empty((B, n))
    g0 = np.empty((B, n)); g1 = np.empty((B, n))
    p00 = p01 = p10 = p11 = None
    q0 = q1 = None
    for i in range(n):
        m00 = D[:, i, 0, 0].copy(); m01 = D[:, i, 0, 1].copy()
        m10 = D[:, i, 1, 0].copy(); m11 = D[:, i, 1, 1].copy()
        r0 = R[:, i, 0].copy(); r1 = R[:, i, 1].copy()
        if i > 0:
            l = lo[i]
            m00 -= l * p00; m01 -= l * p01; m10 -= l * p10; m11 -= l * p11
            r0 -= l * q0; r1 -= l * q1
        det = m00 * m11 - m01 * m10
        i00 = m11 / det; i01 = -m01 / det; i10 = -m10 / det; i11 = m00 / det
        u = up[i]
        c00[:, i] = i00 * u; c01[:, i] = i01 * u; c10[:, i] = i10 * u; c11[:, i] = i11 * u
        g0[:, i] = i00 * r0 + i01 * r1
        g1[:, i] = i10 * r0 + i11 * r1
        p00, p01, p10, p11 = c00[:, i], c01[:, i], c10[:, i], c11[:, i]
        q0, q1 = g0[:, i], g1[:, i]
    x = np.empty((B, n, 2))
    x[:, -1, 0] = g0[:, -1]
    x[:, -1, 1] = g1[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i, 0] = g0[:, i] - c00[:, i] * x[:, i + 1, 0] - c01[:, i] * x[:, i + 1, 1]
        x[:, i, 1] = g1[:, i] - c10[:, i] * x[:, i + 1, 0] - c11[:, i] * x[:, i + 1, 1]
    return x


class _Problem:
    """Discrete residual and Jacobian for a batch of inputs on one grid."""

    def __init__(self, Z, n, cfg):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != 5:
            raise ConfigError(f"cdr1d inputs have 5 coordinates, got {Z.shape[1]}")
        self.Z = Z
        self.n = n
        self.cfg = cfg
        h = 1.0 / (n - 1)
        self.pe = cfg.velocity * h / (2.0 * cfg.kappa)
        self.c2 = h * h / cfg.kappa
        self.k = (Z[:, 0] * cfg.pre_exp_scale)[:, None]
        self.Ea = (Z[:, 1] * cfg.activation_scale)[:, None]
        self.T_in = Z[:, 2][:, None]
        self.T_wall = Z[:, 3][:, None]
        self.Y_in = (cfg.fuel_scale * Z[:, 4])[:, None]
        m = n - 1
        # Unknowns live on nodes 1..n-1; the outflow row uses the ghost T_n = T_{n-2}.
        self.lo = np.full(m, 1.0 + self.pe)
        self.lo[-1] = 2.0
        self.up = np.full(m, 1.0 - self.pe)
        self.up[-1] = 0.0
        self.scale = 1.0

    def initial(self):
        B = self.Z.shape[0]
        Y = np.repeat(self.Y_in, self.n, axis=1)
        T = np.repeat(self.T_in, self.n, axis=1).astype(float)
        return Y.reshape(B, self.n).copy(), T

    def residual(self, Y, T, jacobian=False):
        cfg = self.cfg
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            e = np.exp(-self.Ea / T)
        kr = self.scale * self.k * e
        w = kr * Y
        Yg = np.concatenate([Y, Y[:, -2:-1]], axis=1)
        Tg = np.concatenate([T, T[:, -2:-1]], axis=1)
        a, b = 1.0 + self.pe, 1.0 - self.pe
        LY = a * Yg[:, :-2] - 2.0 * Yg[:, 1:-1] + b * Yg[:, 2:]
        LT = a * Tg[:, :-2] - 2.0 * Tg[:, 1:-1] + b * Tg[:, 2:]
        F = np.empty(Y.shape[:1] + (self.n - 1, 2))
        F[..., 0] = LY - self.c2 * w[:, 1:]
        F[..., 1] = LT + self.c2 * (cfg.wall_exchange * (self.T_wall - T[:, 1:]) + cfg.heat_release * w[:, 1:])
        if not jacobian:
            return F
        dwdY = kr[:, 1:]
        with np.errstate(over="ignore", invalid="ignore"):
            dwdT = (w * self.Ea / (T * T))[:, 1:]
        D = np.empty(F.shape + (2,))
        D[..., 0, 0] = -2.0 - self.c2 * dwdY
        D[..., 0, 1] = -self.c2 * dwdT
        D[..., 1, 0] = self.c2 * cfg.heat_release * dwdY
        D[..., 1, 1] = -2.0 - self.c2 * cfg.wall_exchange + self.c2 * cfg.heat_release * dwdT
        return F, D


def _norm(F):
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.sqrt(np.sum(F * F, axis=(1, 2)))
    return np.where(np.isfinite(out), out, np.inf)


def solve_profiles(Z, n, cfg=None, raise_on_failure=True):
    """Solve the steady problem for each row of ``Z`` on an ``n``-node grid.

    Returns
    -------
    Y, T : ndarray of shape (B, n)
        Fuel mass fraction and temperature at the grid nodes.
    residual : ndarray of shape (B,)
        Max-norm of the final discrete residual.
    """
    cfg = cfg or CdrConfig()
    prob = _Problem(Z, n, cfg)
    Y, T = prob.initial()
    steps = cfg.continuation_steps
    for stage in range(steps + 1):
        prob.scale = stage / steps
        F, D = prob.residual(Y, T, jacobian=True)
        nrm = _norm(F)
        for _ in range(cfg.max_iter):
            resmax = np.max(np.abs(F), axis=(1, 2))
            active = resmax > cfg.newton_tol
            if not active.any():
                break
            idx = np.flatnonzero(active)
            dx = _tridiag_block_solve(prob.lo, prob.up, D[idx], -F[idx])
            sub = _Problem.__new__(_Problem)
            sub.__dict__.update(prob.__dict__)
            for key in ("Z", "k", "Ea", "T_in", "T_wall", "Y_in"):
                setattr(sub, key, getattr(prob, key)[idx])
            lam = np.ones(idx.size)
            Y0, T0 = Y[idx], T[idx]
            for _h in range(cfg.max_halvings + 1):
                Yn = Y0.copy(); Tn = T0.copy()
                Yn[:, 1:] += lam[:, None] * dx[..., 0]
                Tn[:, 1:] += lam[:, None] * dx[..., 1]
                nn = _norm(sub.residual(Yn, Tn))
                bad = ~((nn < nrm[idx]) & np.all(Tn > 0.0, axis=1))
                if not bad.any() or _h == cfg.max_halvings:
                    break
                lam[bad] *= 0.5
            Y[idx], T[idx] = Yn, Tn
            F, D = prob.residual(Y, T, jacobian=True)
            nrm = _norm(F)
    resmax = np.max(np.abs(F), axis=(1, 2))
    ok = resmax <= cfg.newton_tol
    if raise_on_failure and not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        raise SolverDivergence(
            f"Newton did not reach tolerance {cfg.newton_tol:g} on an {n}-node grid", z=prob.Z[i].tolist())
    return Y, T, resmax


def max_temperature(Z, n, cfg=None):
    """Maximum nodal temperature of the steady solution, one value per input row."""
    _, T, _ = solve_profiles(Z, n, cfg)
    return T.max(axis=1)
