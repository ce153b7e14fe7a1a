import io
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mflr.allocation import (DegenerateCorrectionWarning, allocate, ratios, single_fidelity_allocation,
                             validate_allocation, write_allocation_csv)
from mflr.errors import BudgetTooSmall, InvalidCorrelationOrdering, NonMonotoneAllocation, ZeroHighFidelity
from mflr.statistics import ModelStats

CDR_COSTS = (1.94, 6.2e-3)


def within(actual, expected, tol=0.02):
    return all(abs(a - e) <= tol * e for a, e in zip(actual, expected))


@pytest.mark.parametrize("p,expected", [(10, (8, 1126)), (100, (88, 11263)), (1000, (887, 112631))])
def test_table1(exp_stats, p, expected):
    a = allocate(exp_stats, (1.0, 0.001), p)
    assert within(a.m, expected)
    assert a.m == expected  # with exact rho the floors land on the tabulated counts


@pytest.mark.parametrize("p,expected", [(10, (4, 250)), (100, (43, 2505)), (1000, (435, 24998))])
def test_table3(p, expected):
    s = ModelStats(sigma=[276.1, 356.0], rho=[1.0, 0.95564])
    assert within(allocate(s, CDR_COSTS, p).m, expected)


def test_rounded_paper_rho_within_tolerance():
    # rho printed as 0.97 still reproduces Table 1 within 2%
    for p, exp in [(10, (8, 1126)), (100, (88, 11263)), (1000, (887, 112631))]:
        assert within(allocate([1.0, 0.97], (1.0, 0.001), p).m, exp)


def test_realized_cost_and_csv(exp_stats):
    rows = [allocate(exp_stats, (1.0, 0.001), p) for p in (10, 100)]
    assert rows[0].realized_cost == pytest.approx(8 + 1.126)
    buf = io.StringIO()
    write_allocation_csv(rows, buf)
    assert buf.getvalue().splitlines() == ["budget,m_1,m_2,realized_cost", "10.0,8,1126,9.126",
                                           "100.0,88,11263,99.263"]


def test_budget_too_small():
    with pytest.raises(BudgetTooSmall):
        allocate([1.0, 0.9], (1.0, 0.1), 0.5)
    a = allocate([1.0, 0.99999], (1.0, 0.5), 1.0)
    assert a.m[0] == 1


def test_correlation_ordering():
    with pytest.raises(InvalidCorrelationOrdering):
        allocate([1.0, 1.0], (1.0, 0.1), 10)
    with pytest.raises(InvalidCorrelationOrdering):
        allocate([1.0, 0.5, 0.7], (1.0, 0.1, 0.01), 10)
    with pytest.raises(InvalidCorrelationOrdering):
        allocate([0.9, 0.5], (1.0, 0.1), 10)


def test_validate_examples():
    a = validate_allocation((4, 250), CDR_COSTS)
    assert a.realized_cost == pytest.approx(9.31)
    with pytest.warns(DegenerateCorrectionWarning):
        assert validate_allocation((5, 5), (1.0, 0.1)).m == (5, 5)
    with pytest.raises(NonMonotoneAllocation):
        validate_allocation((5, 4), (1.0, 0.1))
    with pytest.raises(ZeroHighFidelity):
        validate_allocation((0, 4), (1.0, 0.1))


def test_single_fidelity_allocation():
    assert single_fidelity_allocation((1.94, 0.0062), 10).m == (5,)
    with pytest.raises(BudgetTooSmall):
        single_fidelity_allocation((2.0,), 1.0)


rho_st = st.floats(0.05, 0.999)
cost_st = st.floats(1e-4, 0.5)


@given(rho_st, cost_st, st.floats(2.0, 1e4), st.floats(1e-3, 1e3))
@settings(max_examples=200, deadline=None)
def test_scale_invariance(rho, w2, p, c):
    a = allocate([1.0, rho], (1.0, w2), p)
    b = allocate([1.0, rho], (c, c * w2), c * p)
    # floors of mathematically equal reals; allow one-count slack only at exact ties
    assert all(abs(x - y) <= 1 for x, y in zip(a.m, b.m))


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=3, unique=True), st.floats(1.0, 1e4),
       st.sampled_from(["printed", "mfmc"]))
@settings(max_examples=200, deadline=None)
def test_budget_feasibility_and_monotone(rhos, p, den):
    rho = [1.0] + sorted(rhos, reverse=True)
    assume(all(a - b > 1e-9 for a, b in zip(rho, rho[1:])))
    K = len(rho)
    costs = [1.0 / 10**k for k in range(K)]
    if sum(costs) > p + costs[-1]:
        with pytest.raises(BudgetTooSmall):
            allocate(rho, costs, p, denominator=den)
        return
    a = allocate(rho, costs, p, denominator=den)
    assert a.realized_cost <= p + costs[-1] + 1e-9
    assert all(x <= y for x, y in zip(a.m, a.m[1:]))
    assert a.m[0] >= 1


@given(st.floats(0.1, 0.98), st.floats(0.001, 0.01), cost_st)
@settings(max_examples=200, deadline=None)
def test_ratio_monotone_in_rho(rho, drho, w2):
    r_lo = ratios(np.array([1.0, rho]), [1.0, w2])[1]
    r_hi = ratios(np.array([1.0, rho + drho]), [1.0, w2])[1]
    assert r_hi >= r_lo


def test_denominator_switch_only_matters_for_three_models():
    rho2 = [1.0, 0.9]
    assert ratios(rho2, [1.0, 0.1]) == ratios(rho2, [1.0, 0.1], "mfmc")
    rho3 = [1.0, 0.9, 0.6]
    r_p, r_m = ratios(rho3, [1.0, 0.1, 0.01]), ratios(rho3, [1.0, 0.1, 0.01], "mfmc")
    assert r_p[1] == r_m[1] and r_p[2] != r_m[2]
    assert r_p[2] == pytest.approx(np.sqrt(0.36 / (0.01 * 0.64)))
    assert r_m[2] == pytest.approx(np.sqrt(0.36 / (0.01 * 0.19)))


def test_strict_repair():
    a = allocate([1.0, 0.01], (1.0, 0.5), 10)
    assert a.m[1] == a.m[0]
    s = allocate([1.0, 0.01], (1.0, 0.5), 10, strict=True)
    assert s.m[1] == s.m[0] + 1 or s.realized_cost + 0.5 > 10
