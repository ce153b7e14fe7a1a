import json

import mpmath
import numpy as np
import pytest
from scipy import integrate

from mflr.errors import ConfigError, DimensionMismatch, InsufficientSamples, MissingFidelity
from mflr.experiments import Dataset
from mflr.features import full_quadratic
from mflr.models import CostLedger, exp_pair
from mflr.statistics import (ModelStats, exact_moments_exp, exact_stats_exp, exp_moment, pilot_stats,
                             stats_from_dataset, stats_from_samples)


@pytest.mark.parametrize("a", range(7))
@pytest.mark.parametrize("b", [0.0, 0.5, 1.0, 1.5, 2.0])
def test_exp_moment_against_mpmath(a, b):
    mpmath.mp.dps = 50
    ref = mpmath.quad(lambda z: z**a * mpmath.exp(b * z), [0, 5]) / 5
    assert exp_moment(a, b) == pytest.approx(float(ref), rel=1e-10)


def _quad(f):
    return integrate.quad(f, 0.0, 5.0, epsabs=0, epsrel=1e-13, limit=200)[0] / 5.0


def test_exact_stats_against_quadrature(exp_stats):
    f1 = lambda z: 8 * np.exp(z)
    f2 = lambda z: 7.2 * np.exp(z / 2)
    mu1, mu2 = _quad(f1), _quad(f2)
    v1 = _quad(lambda z: f1(z) ** 2) - mu1**2
    v2 = _quad(lambda z: f2(z) ** 2) - mu2**2
    c = _quad(lambda z: f1(z) * f2(z)) - mu1 * mu2
    np.testing.assert_allclose(exp_stats.sigma, np.sqrt([v1, v2]), rtol=1e-10)
    assert exp_stats.rho[1] == pytest.approx(c / np.sqrt(v1 * v2), rel=1e-10)
    for i in range(3):
        for j in range(3):
            g1i = lambda z: z**i * f1(z)
            ref12 = _quad(lambda z: g1i(z) * z**j * f2(z)) - _quad(g1i) * _quad(lambda z: z**j * f2(z))
            ref22 = _quad(lambda z: z ** (i + j) * f2(z) ** 2) - _quad(lambda z: z**i * f2(z)) * _quad(
                lambda z: z**j * f2(z))
            assert exp_stats.C1k[1][i, j] == pytest.approx(ref12, rel=1e-9)
            assert exp_stats.Ckk[1][i, j] == pytest.approx(ref22, rel=1e-9)


def test_exact_rho_is_paper_value(exp_stats):
    assert round(exp_stats.rho[1], 2) == 0.97


def test_exact_moments_against_quadrature(exp_moments):
    cxx, cxy, mu = exp_moments
    for i in range(3):
        assert cxy[i] == pytest.approx(_quad(lambda z: z**i * 8 * np.exp(z)), rel=1e-12)
    assert mu == pytest.approx(8 / 5 * (np.exp(5) - 1), rel=1e-14)


def test_stats_from_samples_matches_numpy(rng):
    Z = rng.uniform(0, 5, (400, 1))
    Y = np.column_stack([8 * np.exp(Z[:, 0]), 7.2 * np.exp(Z[:, 0] / 2)])
    X = full_quadratic(1)(Z)
    s = stats_from_samples(X, Y)
    np.testing.assert_allclose(s.sigma, Y.std(axis=0, ddof=1), rtol=1e-12)
    assert s.rho[1] == pytest.approx(np.corrcoef(Y.T)[0, 1], rel=1e-12)
    G = np.hstack([X * Y[:, :1], X * Y[:, 1:]])
    C = np.cov(G.T, ddof=1)
    np.testing.assert_allclose(s.C1k[1], C[:3, 3:], rtol=1e-10)
    np.testing.assert_allclose(s.Ckk[1], C[3:, 3:], rtol=1e-10)


def test_pilot_stats_deterministic_and_charged():
    m = exp_pair()
    led = CostLedger()
    a = pilot_stats(m, full_quadratic(1), 10, 4, ledger=led)
    b = pilot_stats(m, full_quadratic(1), 10, 4)
    assert a.to_json() == b.to_json()
    assert a.provenance == "pilot(10)"
    assert led.counts == {1: 10, 2: 10}
    with pytest.raises(InsufficientSamples):
        pilot_stats(m, full_quadratic(1), 1, 4)


def test_pilot_converges_to_exact(exp_stats):
    s = pilot_stats(exp_pair(), full_quadratic(1), 200_000, 9)
    assert s.rho[1] == pytest.approx(exp_stats.rho[1], abs=2e-3)
    np.testing.assert_allclose(s.sigma, exp_stats.sigma, rtol=0.02)


def test_stats_from_dataset():
    rng = np.random.default_rng(0)
    Z = rng.uniform(0, 5, (100, 1))
    Y = np.column_stack([8 * np.exp(Z[:, 0]), 7.2 * np.exp(Z[:, 0] / 2)])
    s = stats_from_dataset(Dataset(Z, Y), full_quadratic(1))
    assert s.provenance == "dataset(100)"
    Y[3, 1] = np.nan
    with pytest.raises(MissingFidelity):
        stats_from_dataset(Dataset(Z, Y), full_quadratic(1))


def test_json_round_trip(tmp_path, exp_stats):
    path = tmp_path / "s.json"
    exp_stats.to_json(path)
    back = ModelStats.from_json(path)
    np.testing.assert_array_equal(back.rho, exp_stats.rho)
    np.testing.assert_array_equal(back.C1k[1], exp_stats.C1k[1])
    assert back.provenance == "exact-oracle"
    doc = json.loads(path.read_text())
    assert set(doc) == {"K", "sigma", "rho", "C1k", "Ckk", "provenance", "mu"}


def test_json_schema_errors():
    with pytest.raises(ConfigError, match="rho"):
        ModelStats.from_dict({"K": 2, "sigma": [1, 1], "provenance": "x"})
    with pytest.raises(ConfigError, match="extra"):
        ModelStats.from_dict({"K": 1, "sigma": [1], "rho": [1], "provenance": "x", "extra": 0})
    with pytest.raises(ConfigError):
        ModelStats.from_dict({"K": 2, "sigma": [1], "rho": [1, 0.5], "provenance": "x"})
    with pytest.raises(DimensionMismatch):
        ModelStats(sigma=[1, 2], rho=[1, 0.5], C1k=[np.eye(2)], Ckk=None)
