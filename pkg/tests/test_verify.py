from __future__ import annotations

import json
from math import pi
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from rmtweights.core import EnsembleSpec, Gaussian, HaarUniform, MatrixSpace, SpectralDomain, reference_density
from rmtweights.derivative import derivative_principle
from rmtweights.errors import AccuracyError, ConfigurationError, DataError, DomainMismatchError
from rmtweights.verify import (
    ComparisonReport,
    DistanceKind,
    compare,
    empirical_density,
    gue_level_density_n2,
    ks_two_sample_report,
    lue_density,
    make_report,
    marginal_level_density,
    max_abs_report,
    moment_z_report,
    parallel_draws,
    run_suite,
    sample_ensemble,
    worker_count,
)
from rmtweights.weights import WeightFunction

FIXTURES = Path(__file__).parent / "fixtures"
GUE2 = EnsembleSpec(MatrixSpace.herm(2), Gaussian())


# -- empirical densities -----------------------------------------------------------


def test_empty_and_short_inputs_rejected():
    with pytest.raises(DataError):
        empirical_density([])
    with pytest.raises(DataError):
        empirical_density(np.zeros((999, 1)))
    with pytest.raises(DataError):
        empirical_density(np.full((2000, 1), np.nan))


def test_constant_samples_put_all_mass_in_one_cell():
    g = empirical_density(np.full(1500, 2.0))
    mass = g.meta["mass"]
    assert mass[0] == pytest.approx(1.0)
    assert mass[1:].sum() == 0
    assert g.meta["overflow"] == pytest.approx(0.0)


def test_exponential_histogram_within_three_sigma():
    x = np.random.default_rng(0).exponential(size=100_000)
    edges = np.linspace(0, 5, 26)
    g = empirical_density(x, bins=edges, domain=SpectralDomain.HALF_LINE)
    exact = np.diff(-np.exp(-edges))
    se = np.sqrt(exact * (1 - exact) / x.size)
    assert np.mean(np.abs(g.meta["mass"] - exact) <= 3 * se) >= 0.95


def test_symmetrized_histogram_is_symmetric():
    x = np.random.default_rng(1).standard_normal((5000, 2)) + [1.0, 0.0]
    g = empirical_density(x, bins=np.linspace(-4, 5, 10))
    assert np.allclose(g.meta["mass"], g.meta["mass"].T)


# -- comparisons -----------------------------------------------------------------


def test_two_seed_ks_passes():
    a = sample_ensemble(GUE2, 20_000, seed=1)[:, 0]
    b = sample_ensemble(GUE2, 20_000, seed=2)[:, 0]
    r = ks_two_sample_report("two_seed", a, b, seed=None)
    assert r.passed and r.details["pvalue"] > 1e-3


def test_identical_inputs_have_zero_distance():
    x = np.random.default_rng(2).standard_normal((5000, 2))
    g = empirical_density(x, bins=np.linspace(-4, 4, 9))
    r = compare(g, g, DistanceKind.L1_HISTOGRAM)
    assert r.statistic == 0 and r.passed


def test_gue_histogram_matches_reference_density():
    x = sample_ensemble(GUE2, 100_000, seed=3)
    g = empirical_density(x, bins=np.linspace(-4, 4, 17))
    f = reference_density(GUE2)
    for kind in (DistanceKind.L1_HISTOGRAM, DistanceKind.CHI2, DistanceKind.KS):
        assert compare(f, g, kind, seed=3).passed


def test_wrong_variance_fails():
    x = sample_ensemble(GUE2, 100_000, seed=4) * 1.1
    g = empirical_density(x, bins=np.linspace(-4, 4, 17))
    f = reference_density(GUE2)
    assert not compare(f, g, DistanceKind.KS).passed
    assert not compare(f, g, DistanceKind.CHI2).passed


def test_domain_mismatch():
    x = np.random.default_rng(5).exponential(size=(5000, 2))
    g = empirical_density(x, bins=np.linspace(0, 6, 7), domain=SpectralDomain.HALF_LINE)
    gue = derivative_principle(MatrixSpace.herm(2), WeightFunction.gaussian(2))
    with pytest.raises(DomainMismatchError):
        compare(gue, g)


def test_compare_rejects_moment_kinds():
    x = np.random.default_rng(5).standard_normal((2000, 1))
    g = empirical_density(x)
    with pytest.raises(ConfigurationError):
        compare(lambda y: stats.norm.pdf(y[..., 0]), g, DistanceKind.MOMENT_Z)


# -- level densities -------------------------------------------------------------


def test_gue_level_density_from_joint():
    f = reference_density(GUE2)
    rho = marginal_level_density(f, 2)
    x = np.array([-1.5, 0.0, 0.7, 2.2])
    assert np.allclose(rho(x), gue_level_density_n2(x), atol=1e-10)
    sym = marginal_level_density(f, 2, symmetric=True)
    assert np.allclose(sym(x), rho(x), atol=1e-12)


def test_cue_level_density_is_flat():
    f = reference_density(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()))
    rho = marginal_level_density(f, 2, SpectralDomain.TORUS)
    assert np.allclose(rho(np.array([-2.0, 0.0, 1.3])), 1 / (2 * pi), atol=1e-10)


def test_lue_level_density_normalized():
    rho = marginal_level_density(lue_density, 2, SpectralDomain.HALF_LINE)
    assert rho.total == pytest.approx(1.0, abs=1e-8)
    assert rho.cdf(np.array([200.0]))[0] == pytest.approx(1.0, abs=1e-6)


def test_unnormalized_joint_raises():
    f = reference_density(GUE2)
    with pytest.raises(AccuracyError):
        marginal_level_density(lambda x: 2 * f(x), 2)


# -- reports ---------------------------------------------------------------------


def test_report_pass_flag_is_consistent():
    r = make_report("x", DistanceKind.MAX_ABS, 0.5, 1.0)
    assert r.passed
    assert not make_report("x", DistanceKind.MAX_ABS, float("nan"), 1.0).passed
    with pytest.raises(ConfigurationError):
        ComparisonReport("x", 0, DistanceKind.KS, 2.0, 1.0, True, None)


def test_report_json_has_pass_key():
    r = moment_z_report("z", [1.0 + 0.1j], [0.1], [1.0], 100, 7)
    d = json.loads(r.to_json())
    assert d["pass"] is True and d["distance_kind"] == "MomentZ" and "version" in d
    assert max_abs_report("m", [1.0], [1.0 + 1e-9], 1e-6).passed


# -- parallel sampling -------------------------------------------------------------


def test_bit_identical_rerun():
    a = sample_ensemble(GUE2, 45_000, seed=9)
    b = sample_ensemble(GUE2, 45_000, seed=9)
    assert np.array_equal(a, b)


def test_results_independent_of_thread_count(monkeypatch):
    draw = lambda rng, m: rng.standard_normal(m)
    monkeypatch.setenv("RMT_THREADS", "1")
    one = parallel_draws(draw, 50_000, seed=3, chunk=7_000)
    monkeypatch.setenv("RMT_THREADS", "4")
    assert worker_count() == 4
    four = parallel_draws(draw, 50_000, seed=3, chunk=7_000)
    assert np.array_equal(one, four)


@pytest.mark.parametrize("raw", ["zero", "0", "-2"])
def test_bad_thread_setting(monkeypatch, raw):
    monkeypatch.setenv("RMT_THREADS", raw)
    with pytest.raises(ConfigurationError):
        worker_count()


def test_run_suite_validates_arguments():
    with pytest.raises(ConfigurationError):
        run_suite("herm", budget=0)
    with pytest.raises(ConfigurationError):
        run_suite("nonexistent")


# -- calibration fixture -----------------------------------------------------------


def test_frozen_l1_thresholds_cover_calibrated_noise():
    data = json.loads((FIXTURES / "l1_calibration.json").read_text())
    assert data["statistics"]
    for name, s in data["statistics"].items():
        assert s["q999"] < s["frozen_threshold"], name
