"""Budget-to-sample allocation and validation of given allocations."""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (BudgetTooSmall, ConfigError, DimensionMismatch, InvalidCorrelationOrdering,
                     NonMonotoneAllocation, ZeroHighFidelity)

DENOMINATORS = ("printed", "mfmc")


class DegenerateCorrectionWarning(UserWarning):
    """Consecutive fidelities share a count, so that correction term is zero."""


@dataclass(frozen=True)
class Allocation:
    m: tuple
    budget: float
    realized_cost: float

    @property
    def K(self):
        return len(self.m)

    def to_dict(self):
        return {"m": list(self.m), "budget": self.budget, "realized_cost": self.realized_cost}


def _realized(m, costs):
    return math.fsum(mk * wk for mk, wk in zip(m, costs))


def _check_costs(costs, K):
    costs = [float(w) for w in costs]
    if len(costs) != K:
        raise DimensionMismatch(f"need {K} costs, got {len(costs)}")
    if any(not (w > 0) for w in costs):
        raise ConfigError("costs must be positive")
    return costs


def ratios(rho, costs, denominator="printed"):
    """The ratios r_k = m_k / m_1 of the optimal allocation (r_1 = 1)."""
    if denominator not in DENOMINATORS:
        raise ConfigError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    rho = np.asarray(rho, dtype=float)
    K = rho.shape[0]
    if not math.isclose(rho[0], 1.0, rel_tol=0, abs_tol=1e-12):
        raise InvalidCorrelationOrdering(f"rho_11 must be 1, got {rho[0]}")
    a = np.abs(rho)
    for k in range(1, K):
        # a gap below 1e-12 is rounding noise, e.g. a two-sample pilot estimate
        if not a[k] < a[k - 1] - 1e-12:
            raise InvalidCorrelationOrdering(
                f"|rho_1k| must be strictly decreasing; |rho_1{k + 1}|={a[k]} >= |rho_1{k}|={a[k - 1]}")
    sq = np.append(a**2, 0.0)
    r = [1.0]
    for k in range(1, K):
        den = 1.0 - (sq[k] if denominator == "printed" else sq[1])
        r.append(math.sqrt(costs[0] * (sq[k] - sq[k + 1]) / (costs[k] * den)))
    return r


def allocate(stats, costs, p, strict=False, denominator="printed"):
    """Optimal sample counts for budget ``p``.

    ``stats`` may be a ModelStats or a correlation vector. Both m_1 and m_k
    are floored from the real-valued m_1, then counts are made nondecreasing.
    With ``strict`` each m_k is bumped above m_{k-1} when the budget allows.
    """
    rho = getattr(stats, "rho", stats)
    rho = np.asarray(rho, dtype=float)
    K = rho.shape[0]
    costs = _check_costs(costs, K)
    p = float(p)
    if not costs[0] <= p:
        raise BudgetTooSmall(f"budget {p} cannot afford one high-fidelity sample (w_1={costs[0]})")
    r = ratios(rho, costs, denominator)
    m1_real = p / math.fsum(w * rk for w, rk in zip(costs, r))
    def counts(t):
        m = [max(1, math.floor(t))]
        for k in range(1, K):
            m.append(max(math.floor(t * r[k]), m[k - 1]))
        return m

    m = counts(m1_real)
    if _realized(m, costs) > p:
        # repairs for r_k < 1 tie counts and overspend; shrink m_1 until the budget holds
        lo, hi = 0.0, m1_real
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if _realized(counts(mid), costs) <= p:
                lo = mid
            else:
                hi = mid
        m = counts(lo)
    # clamping m_1 up to 1 can overspend; trim cheap counts back toward m_{k-1}
    for k in range(K - 1, 0, -1):
        excess = _realized(m, costs) - p
        if excess <= 0:
            break
        m[k] -= min(m[k] - m[k - 1], math.ceil(excess / costs[k] - 1e-12))
    if _realized(m, costs) > p + costs[-1]:
        raise BudgetTooSmall(f"budget {p} cannot afford one evaluation of every model")
    if strict:
        for k in range(1, K):
            if m[k] <= m[k - 1] and _realized(m, costs) + (m[k - 1] + 1 - m[k]) * costs[k] <= p:
                m[k] = m[k - 1] + 1
    return Allocation(tuple(int(v) for v in m), p, _realized(m, costs))


def validate_allocation(m, costs, p=None):
    """Check a user-given allocation; counts are never modified."""
    m = [int(v) for v in m]
    costs = _check_costs(costs, len(m))
    if not m or m[0] < 1:
        raise ZeroHighFidelity("m_1 must be at least 1")
    for k in range(1, len(m)):
        if m[k] < m[k - 1]:
            raise NonMonotoneAllocation(f"m_{k + 1}={m[k]} < m_{k}={m[k - 1]}")
        if m[k] == m[k - 1]:
            warnings.warn(f"m_{k + 1} == m_{k}: the correction for fidelity {k + 1} vanishes",
                          DegenerateCorrectionWarning, stacklevel=2)
    cost = _realized(m, costs)
    return Allocation(tuple(m), float(cost if p is None else p), cost)


def single_fidelity_allocation(costs, p):
    """n = floor(p / w_1) high-fidelity samples."""
    n = math.floor(float(p) / float(costs[0]))
    if n < 1:
        raise BudgetTooSmall(f"budget {p} cannot afford one high-fidelity sample (w_1={costs[0]})")
    return Allocation((n,), float(p), n * float(costs[0]))


def allocation_rows(allocations):
    """Rows ``budget, m_1..m_K, realized_cost`` for a list of allocations."""
    K = max(a.K for a in allocations)
    header = ["budget"] + [f"m_{k}" for k in range(1, K + 1)] + ["realized_cost"]
    rows = [[repr(a.budget)] + [str(v) for v in a.m] + [repr(a.realized_cost)] for a in allocations]
    return header, rows


def write_allocation_csv(allocations, fh):
    header, rows = allocation_rows(allocations)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
