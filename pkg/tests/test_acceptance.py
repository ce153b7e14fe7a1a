"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary) and then
asserts the criterion as stated. Oracles for the analytic example come from
scipy quadrature, independent of the package's closed forms. One seed is fixed
for all criteria.
"""

import filecmp
import os
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import record
from mflr.allocation import allocate
from mflr.coefficients import build_strategy, cxy_covariance, mf_A_star, mf_alpha_star, mf_mean_alpha
from mflr.experiments import load_dataset, run_experiment
from mflr.features import full_quadratic
from mflr.models import CDR_DISTRIBUTION
from mflr.statistics import ModelStats, exact_stats_exp, stats_from_dataset

SEED = 20240101
ALL = ["single-fidelity", "mf-mean", "mf-alpha-star", "mf-a-star"]
MF = ALL[1:]
PAPER_A = np.array([[19.6, -7.3, 1.3], [168.6, -69.9, 10.5], [1330.6, -553.6, 75.2]])


def report(criterion, ok, detail):
    record(criterion, ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def _q(f):
    return integrate.quad(f, 0.0, 5.0, epsabs=0, epsrel=1e-13, limit=200)[0] / 5.0


def quadrature_oracle():
    """C_XY, C_XX, beta*, f(5; beta*) and the g-covariances by adaptive quadrature."""
    f1 = lambda z: 8 * np.exp(z)
    f2 = lambda z: 7.2 * np.exp(z / 2)
    cxy = np.array([_q(lambda z, i=i: z**i * f1(z)) for i in range(3)])
    cxx = np.array([[_q(lambda z, k=i + j: z**k) for j in range(3)] for i in range(3)])
    beta = np.linalg.solve(cxx, cxy)

    def cov(fa, fb):
        return np.array([[_q(lambda z, i=i, j=j: z**i * fa(z) * z**j * fb(z))
                          - _q(lambda z, i=i: z**i * fa(z)) * _q(lambda z, j=j: z**j * fb(z))
                          for j in range(3)] for i in range(3)])

    return {"c_xy": cxy, "cxx": cxx, "beta": beta, "pred": float(np.array([1, 5, 25]) @ beta),
            "C11": cov(f1, f1), "C12": cov(f1, f2), "C22": cov(f2, f2)}


@pytest.fixture(scope="module")
def oracle():
    return quadrature_oracle()


def exp_plan(**kw):
    base = dict(family="exp", features={"kind": "quadratic", "standardize": False}, strategies=ALL,
                stats={"mode": "exact"}, cxx={"mode": "exact"}, seed=SEED, write_estimates=False)
    base.update(kw)
    return base


def unbiased_check(rep, oracle, budget):
    """Worst |mean - oracle| / stderr over components of C_XY, beta and predictions."""
    worst, where = 0.0, None
    for s in ALL:
        c = rep.cell(float(budget), s)
        pairs = [(c["cxy"], oracle["c_xy"]), (c["beta"], oracle["beta"])]
        for key, (summ, ref) in zip(("cxy", "beta"), pairs):
            z = np.abs(np.array(summ["mean"]) - np.asarray(ref)) / np.array(summ["stderr"])
            if z.max() > worst:
                worst, where = float(z.max()), (s, key, int(z.argmax()))
        pred_ref = np.atleast_1d(oracle["pred"])
        for j, pr in enumerate(c["pred"]):
            z = abs(pr["mean"] - pred_ref[j]) / pr["stderr"]
            if z > worst:
                worst, where = float(z), (s, f"pred@z{j + 1}", 0)
    return worst, where


def ordering(rep, budget, strategies=ALL):
    """Whether Tr Cov is strictly decreasing along ``strategies`` for C_XY, beta and pred@z1."""
    out = {}
    for target in ("cxy", "beta", "pred@z1"):
        tr = [rep.trace(float(budget), s, target) for s in strategies]
        out[target] = (all(a > b for a, b in zip(tr, tr[1:])), tr)
    return out


# 1 -------------------------------------------------------------------------

def test_criterion_1_coefficient_constants():
    t0 = time.perf_counter()
    s = exact_stats_exp()
    alpha = mf_mean_alpha(s).values[0]
    astar = mf_alpha_star(s).values[0]
    A = mf_A_star(s).values[0]
    dt = time.perf_counter() - t0
    ok = (abs(alpha - 12.79) <= 0.01 and abs(astar - 11.70) <= 0.01
          and np.array_equal(np.round(A, 1), PAPER_A) and dt < 1.0)
    report(1, ok, f"alpha={alpha:.4f} alpha*={astar:.4f} A*={np.round(A, 1).tolist()} ({dt:.3f}s)")
    assert ok


# 2 -------------------------------------------------------------------------

def test_criterion_2_allocation_tables():
    t0 = time.perf_counter()
    exp = exact_stats_exp()
    cdr = ModelStats.from_json(os.path.join(os.path.dirname(__import__("mflr").__file__), "configs",
                                            "cdr_table3_stats.json"))
    table1 = {10: (8, 1126), 100: (88, 11263), 1000: (887, 112631)}
    table3 = {10: (4, 250), 100: (43, 2505), 1000: (435, 24998)}
    got1 = {p: allocate(exp, (1.0, 0.001), p).m for p in table1}
    got3 = {p: allocate(cdr, (1.94, 6.2e-3), p).m for p in table3}
    dt = time.perf_counter() - t0

    def close(got, ref):
        return all(abs(g - r) <= 0.02 * r for p in ref for g, r in zip(got[p], ref[p]))

    ok = close(got1, table1) and close(got3, table3) and dt < 1.0
    report(2, ok, f"exp rho={exp.rho[1]:.6f} {got1}; cdr rho={cdr.rho[1]} {got3} ({dt:.3f}s)")
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_3_unbiasedness(oracle):
    t0 = time.perf_counter()
    rep = run_experiment(exp_plan(budgets=[100], replications=2000))
    dt = time.perf_counter() - t0
    worst, where = unbiased_check(rep, oracle, 100)
    ok = worst <= 3.0 and dt < 60
    report(3, ok, f"max |mean - oracle|/SE = {worst:.2f} at {where} ({dt:.1f}s)")
    assert ok


# 4 -------------------------------------------------------------------------

def test_criterion_4_covariance_closed_forms(oracle):
    t0 = time.perf_counter()
    R, m = 5000, (8, 1126)
    rep = run_experiment(exp_plan(budgets=[10], replications=R, strategies=MF, write_estimates=True))
    stats = ModelStats(sigma=[1.0, 1.0], rho=[1.0, 0.9], C1k=[oracle["C11"], oracle["C12"]],
                       Ckk=[oracle["C11"], oracle["C22"]])
    coeffs = {"mf-mean": build_strategy("mf-mean", exact_stats_exp())}
    coeffs["mf-alpha-star"] = build_strategy("mf-alpha-star", stats)
    coeffs["mf-a-star"] = build_strategy("mf-a-star", stats)
    rng = np.random.default_rng(SEED)
    boot_idx = rng.integers(0, R, size=(200, R))
    worst, where = 0.0, None
    for s in MF:
        est = rep.estimates[(10.0, s)][1]
        emp = np.cov(est.T, ddof=1)
        closed = cxy_covariance([oracle["C11"], oracle["C12"]], [oracle["C11"], oracle["C22"]], m,
                                coeffs[s].matrices(3))
        boots = np.array([np.cov(est[idx].T, ddof=1) for idx in boot_idx])
        se = boots.std(axis=0, ddof=1)
        z = np.abs(emp - closed) / se
        if z.max() > worst:
            worst, where = float(z.max()), (s, tuple(int(i) for i in np.unravel_index(z.argmax(), z.shape)))
    dt = time.perf_counter() - t0
    ok = worst <= 5.0 and dt < 120
    report(4, ok, f"max |emp - closed|/bootstrap SE = {worst:.2f} at {where} (R={R}, {dt:.1f}s)")
    assert ok


# 5 -------------------------------------------------------------------------

def _optimality_violations(C11, C12, C22, m, rng):
    s = ModelStats(sigma=[1.0, 1.0], rho=[1.0, 0.5], C1k=[C11, C12], Ckk=[C11, C22])
    d = C11.shape[0]
    cov = lambda A: cxy_covariance([C11, C12], [C11, C22], m, [A])
    best = np.trace(cov(mf_alpha_star(s).values[0] * np.eye(d)))
    bad = 0
    for a in rng.normal(mf_alpha_star(s).values[0], 5.0, 100):
        if best > np.trace(cov(a * np.eye(d))) * (1 + 1e-12):
            bad += 1
    ev_star = np.sort(np.linalg.eigvalsh(cov(mf_A_star(s).values[0])))[::-1]
    scale = np.abs(mf_A_star(s).values[0]).max() + 1.0
    for _ in range(100):
        ev = np.sort(np.linalg.eigvalsh(cov(rng.normal(0, scale, (d, d)))))[::-1]
        if np.any(ev_star > ev + 1e-9 * max(1.0, abs(ev).max())):
            bad += 1
    return bad


def test_criterion_5_optimality(oracle):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    bad = _optimality_violations(oracle["C11"], oracle["C12"], oracle["C22"], (8, 1126), rng)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        G = rng.standard_normal((3 * d, 2 * d)) @ rng.standard_normal((2 * d, 2 * d))
        C = G.T @ G / G.shape[0] + 1e-6 * np.eye(2 * d)
        m1 = int(rng.integers(2, 50))
        bad += _optimality_violations(C[:d, :d], C[:d, d:], C[d:, d:], (m1, m1 * int(rng.integers(2, 100))), rng)
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 30
    report(5, ok, f"{bad} violations over 51 instances x (100 scalar + 100 matrix) alternatives ({dt:.1f}s)")
    assert ok


# 6 -------------------------------------------------------------------------

def test_criterion_6_headline_variance_reduction(oracle):
    t0 = time.perf_counter()
    rep = run_experiment(exp_plan(budgets=[10], replications=2000))
    dt = time.perf_counter() - t0
    ratio = rep.trace(10.0, "mf-mean", "beta") / rep.trace(10.0, "single-fidelity", "beta")
    order = ordering(rep, 10)
    # expected value of the ratio from the closed forms, for the record
    s = exact_stats_exp()
    cov_mf = cxy_covariance(s.C1k, s.Ckk, (8, 1126), build_strategy("mf-mean", s).matrices(3))
    cxx_inv = np.linalg.inv(oracle["cxx"])
    expected = (np.trace(cxx_inv @ cov_mf @ cxx_inv) / np.trace(cxx_inv @ (s.C1k[0] / 10) @ cxx_inv))
    ok = ratio <= 0.2 and all(v[0] for v in order.values()) and dt < 60
    report(6, ok, f"Tr Cov[beta] MF-mean/SF = {ratio:.3f} (threshold 0.2; closed-form expectation "
                  f"{expected:.3f} with SF n=10, MF m=(8,1126)); ordering "
                  f"{ {k: v[0] for k, v in order.items()} } ({dt:.1f}s)")
    assert ok


# 7 -------------------------------------------------------------------------

def test_criterion_7_pilot_degradation():
    t0 = time.perf_counter()
    rep = run_experiment(exp_plan(budgets=[10, 100], replications=500, stats={"mode": "pilot", "n_pilot": 10}))
    dt = time.perf_counter() - t0
    lines, ok = [], dt < 60
    for p in (10.0, 100.0):
        sf = rep.trace(p, "single-fidelity", "beta")
        for s in MF:
            c = rep.cell(p, s)
            tr = c["beta"]["trace"] if c["beta"] else None
            good = tr is not None and tr < sf and c["n_failed"] == 0
            ok &= good
            lines.append(f"{p:g}/{s}={tr / sf:.3f}" if tr else f"{p:g}/{s}=failed")
    report(7, ok, f"Tr Cov[beta] MF/SF: {', '.join(lines)} ({dt:.1f}s)")
    assert ok


# 8 -------------------------------------------------------------------------

def test_criterion_8_cdr_standin(cdr_dataset):
    t0 = time.perf_counter()
    data = load_dataset(cdr_dataset)
    rho = float(np.corrcoef(data.Y.T)[0, 1])
    quad = {"kind": "quadratic", "standardize": True}
    base = dict(family="cdr1d", dataset=cdr_dataset, strategies=ALL, seed=SEED, write_estimates=False)
    # criterion 3 analogue: unbiasedness against full-table values
    rep3 = run_experiment(dict(base, features=quad, budgets=[100], stats={"mode": "dataset"}, replications=2000))
    worst, where = unbiased_check(rep3, rep3.oracle, 100)
    # criterion 6 analogue with ratio threshold 0.5
    rep6 = run_experiment(dict(base, features=quad, budgets=[10], stats={"mode": "dataset"}, replications=2000))
    ratio = rep6.trace(10.0, "mf-mean", "beta") / rep6.trace(10.0, "single-fidelity", "beta")
    order = ordering(rep6, 10)
    # criterion 7 analogue; linear features since 10 pilot samples cannot determine a 21x21 C_22
    rep7 = run_experiment(dict(base, features={"kind": "linear", "standardize": True}, budgets=[10, 100],
                               stats={"mode": "pilot", "n_pilot": 10}, replications=500))
    pilot_ok = all(rep7.cell(p, s)["n_failed"] == 0
                   and rep7.trace(p, s, "beta") < rep7.trace(p, "single-fidelity", "beta")
                   for p in (10.0, 100.0) for s in MF)
    dt = time.perf_counter() - t0
    ok = (0.8 < rho < 1.0 and worst <= 3.0 and ratio <= 0.5 and all(v[0] for v in order.values())
          and pilot_ok and dt < 300)
    detail = (f"stand-in rho={rho:.4f}; unbiased max z={worst:.2f} at {where}; MF-mean/SF={ratio:.3f}; "
              f"ordering { {k: v[0] for k, v in order.items()} }; pilot(10) MF<SF={pilot_ok} ({dt:.1f}s)")
    real = os.environ.get("MFLR_CDR_DATASET")
    if real:
        s = stats_from_dataset(load_dataset(real), full_quadratic(5, tuple(CDR_DISTRIBUTION.bounds)))
        t2 = abs(s.sigma[0] - 276.1) <= 0.01 * 276.1 and abs(s.rho[1] - 0.95) <= 0.01 * 0.95
        ok &= t2
        detail += f"; Table 2 sigma_1={s.sigma[0]:.1f} rho={s.rho[1]:.4f} -> {'match' if t2 else 'MISMATCH'}"
    else:
        detail += "; Table 2 check skipped (MFLR_CDR_DATASET not set)"
    report(8, ok, detail)
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path):
    doc = exp_plan(budgets=[10, 100], replications=200, stats={"mode": "pilot", "n_pilot": 10},
                   write_estimates=True)
    runs = {}
    for tag, w in (("w1a", 1), ("w1b", 1), ("w8", 8)):
        runs[tag] = run_experiment(doc, workers=w).write(str(tmp_path / tag))
    same = all(filecmp.cmp(a, b, shallow=False)
               for other in ("w1b", "w8") for a, b in zip(runs["w1a"], runs[other]))
    report(9, same, f"{len(runs['w1a'])} report files byte-identical across reruns at 1 and 8 workers: {same}")
    assert same
