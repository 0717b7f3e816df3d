from __future__ import annotations

from fractions import Fraction
from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from rmtweights.core import EnsembleSpec, Gaussian, HaarUniform, MatrixSpace, SpectralDomain, WishartLike, hankel_constant, reference_density
from rmtweights.derivative import (
    additive_convolve,
    derivative_principle,
    derivative_principle_hankel_unified,
    derivative_principle_herm,
    derivative_principle_hermplus,
    derivative_principle_io_even,
    derivative_principle_io_odd,
    derivative_principle_unitary,
    exact_hankel_constant,
    multiplicative_convolve,
    polynomial_ensemble_weight,
    spherical_from_weight,
    unitary_weight_g,
    wishart_lu_weight,
)
from rmtweights.errors import DomainError, DomainMismatchError
from rmtweights.grid import GridAxis, GridDensity
from rmtweights.weights import VandermondeOperator, WeightFunction, finite_difference_oracle

phi = stats.norm.pdf


def lue2(x):
    x = np.asarray(x)
    return 0.5 * (x[..., 1] - x[..., 0]) ** 2 * np.exp(-x.sum(axis=-1))


# -- Hermitian --------------------------------------------------------------------


def test_herm_n1_is_identity():
    w = WeightFunction.gaussian(1, scale=0.8, mean=0.3)
    f = derivative_principle_herm(w)
    x = np.linspace(-3, 3, 7)[:, None]
    assert np.allclose(f(x), w.eval(x))


def test_herm_n2_gue_values():
    f = derivative_principle_herm(WeightFunction.gaussian(2))
    assert f(np.array([1.0, -1.0])) == pytest.approx(2 * phi(1.0) ** 2, rel=1e-12)
    for c in (-1.3, 0.0, 2.2):
        assert f(np.array([c, c])) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_herm_gue_identity_and_normalization(n):
    f = derivative_principle_herm(WeightFunction.gaussian(n))
    ref = reference_density(EnsembleSpec(MatrixSpace.herm(n), Gaussian()))
    pts = np.random.default_rng(n).normal(scale=1.5, size=(500, n))
    assert np.max(np.abs(f(pts) - ref(pts))) < 1e-10
    assert f.integral() == pytest.approx(1.0, abs=1e-12)


def test_herm_rejects_asymmetric_weight():
    w = WeightFunction("RealLine", 2, {((0, 0.5, 0.0), (0, 1.0, 0.0)): 1.0})
    with pytest.raises(DomainError):
        derivative_principle_herm(w)


def test_herm_rejects_non_ensemble_weight():
    # a Gaussian mixture with a negative dip is not the diagonal law of any invariant ensemble
    w = WeightFunction.gaussian(2, scale=0.5) * 2.0 - WeightFunction.gaussian(2, scale=1.0)
    with pytest.raises(DomainError):
        derivative_principle_herm(w.symmetrize())


def test_herm_grid_route_matches_symbolic():
    ax = GridAxis(-7.0, 7.0, 561)
    w = WeightFunction.gaussian(2)
    grid = GridDensity.from_function(w.eval, [SpectralDomain.REAL_LINE] * 2, [ax, ax], normalized=False)
    num = derivative_principle_herm(grid, check=False)
    pts = np.array([[0.5, -1.0], [1.2, 0.3]])
    assert np.allclose(num(pts), derivative_principle_herm(w)(pts), atol=1e-3)


# -- Hankel class -----------------------------------------------------------------


def test_io_even_n1_chi_square():
    f = derivative_principle_io_even(WeightFunction.gaussian(1))
    x = np.array([[0.2], [1.0], [4.0]])
    assert np.allclose(f(x), np.exp(-x[:, 0] / 2) / np.sqrt(2 * pi * x[:, 0]))


def test_io_odd_n1_identity_and_normalization():
    f = derivative_principle_io_odd(WeightFunction.gaussian(1))
    x = np.array([[0.3], [1.0], [2.7]])
    lam = np.sqrt(x[:, 0])
    # f(x) = -f_diag'(sqrt x) = sqrt(x) phi(sqrt x)
    assert np.allclose(f(x), lam * phi(lam), rtol=1e-12)
    assert f.integral() == pytest.approx(1.0, abs=1e-12)


def test_io_odd_rejects_increasing_weight():
    # x^2 e^{-x^2/2} / sqrt(2 pi) increases near the origin
    w = WeightFunction("RealLine", 1, {((2, 0.5, 0.0),): 1 / sqrt(2 * pi)})
    with pytest.raises(DomainError):
        derivative_principle_io_odd(w)


def test_chiral_n1_exponential():
    w = WeightFunction("RealLine", 1, {((0, 1.0, 0.0),): 1 / sqrt(pi)})
    f = derivative_principle_hankel_unified(w, 0)
    x = np.array([[0.1], [1.0], [3.0]])
    assert np.allclose(f(x), np.exp(-x[:, 0]), rtol=1e-12)


def test_chiral_n2_lue():
    w = WeightFunction.gaussian(2, scale=sqrt(0.5))
    f = derivative_principle(MatrixSpace.chiral(2), w)
    x = np.random.default_rng(0).exponential(size=(200, 2))
    assert np.max(np.abs(f(x) - lue2(x))) < 1e-8


@pytest.mark.parametrize("space", [MatrixSpace.io_even(2), MatrixSpace.io_odd(2), MatrixSpace.usp(2), MatrixSpace.chiral(2, 1)])
def test_hankel_class_matches_weyl(space):
    f = derivative_principle(space, WeightFunction.gaussian(2, scale=sqrt(0.5)))
    ref = reference_density(EnsembleSpec(space, Gaussian()))
    x = np.random.default_rng(1).exponential(size=(200, 2)) + 1e-3
    assert np.max(np.abs(f(x) - ref(x))) < 1e-10


def test_exact_hankel_constants():
    for n in (1, 2, 3):
        for nu in (Fraction(0), Fraction(1), Fraction(-1, 2), Fraction(1, 2)):
            assert float(exact_hankel_constant(n, nu)) == pytest.approx(hankel_constant(n, nu), rel=1e-14)
    assert float(exact_hankel_constant(1, Fraction(-1, 2))) == pytest.approx(sqrt(pi))


# -- additive convolution ------------------------------------------------------------


def test_gue_plus_gue():
    f = additive_convolve(WeightFunction.gaussian(2), WeightFunction.gaussian(2), MatrixSpace.herm(2))
    ref = reference_density(EnsembleSpec(MatrixSpace.herm(2), Gaussian(sqrt(2))))
    pts = np.random.default_rng(2).normal(scale=2, size=(300, 2))
    assert np.max(np.abs(f(pts) - ref(pts))) < 1e-12


def test_chiral_plus_chiral_n1():
    w = WeightFunction.gaussian(1, scale=sqrt(0.5))
    f = additive_convolve(w, w, MatrixSpace.chiral(1))
    x = np.array([[0.3], [2.0]])
    assert np.allclose(f(x), 0.5 * np.exp(-x[:, 0] / 2))


def test_identity_element_limit():
    a = WeightFunction.gaussian(2)
    x = np.array([[0.4, -0.7], [1.3, 0.2]])
    base = derivative_principle_herm(a)(x)
    errs = []
    for width in (1e-1, 1e-2, 1e-3):
        f = additive_convolve(a, WeightFunction.gaussian(2, scale=width), MatrixSpace.herm(2))
        errs.append(np.max(np.abs(f(x) - base)))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-5


def test_additive_convolve_domain_mismatch():
    with pytest.raises(DomainMismatchError):
        additive_convolve(WeightFunction.gaussian(2), WeightFunction.gamma(2), MatrixSpace.herm(2))


# -- positive definite ----------------------------------------------------------------


def test_hermplus_n1_identity():
    g = WeightFunction.gamma(1, shape=2.0)
    x = np.array([[0.5], [2.0]])
    assert np.allclose(derivative_principle_hermplus(g)(x), g.eval(x))


def test_hermplus_lue_identity():
    g = WeightFunction("HalfLine", 2, {((0, 1.0), (0, 1.0)): 1.0})
    f = derivative_principle_hermplus(g)
    x = np.random.default_rng(3).exponential(size=(300, 2))
    assert np.max(np.abs(f(x) - lue2(x))) < 1e-12


@pytest.mark.parametrize("n, dof", [(2, 3), (2, 5), (3, 3), (3, 4)])
def test_wishart_weights(n, dof):
    f = derivative_principle_hermplus(wishart_lu_weight(n, dof))
    ref = reference_density(EnsembleSpec(MatrixSpace.hermplus(n), WishartLike(dof)))
    x = np.random.default_rng(n * dof).gamma(2.0, size=(300, n))
    assert np.max(np.abs(f(x) - ref(x))) < 1e-10


def test_multiplicative_convolution_matches_quadrature():
    ga = WeightFunction.gamma(1, shape=2.0)
    gb = WeightFunction.gamma(1, shape=1.5, rate=0.7)
    g = multiplicative_convolve(ga, gb)
    x = 1.3
    num, _ = integrate.quad(lambda y: ga.eval(np.array([y])).real * gb.eval(np.array([x / y])).real / y, 0, np.inf)
    assert g(np.array([[x]]))[0] == pytest.approx(num, rel=1e-8)


# -- unitary ---------------------------------------------------------------------------


def test_unitary_n1_and_cue():
    g1 = WeightFunction.trig(1, {(0,): 1 / (2 * pi)})
    assert derivative_principle_unitary(g1)(np.array([[0.4]])) == pytest.approx(1 / (2 * pi))
    for n in (2, 3):
        f = derivative_principle_unitary(WeightFunction.cue_weight(n))
        ref = reference_density(EnsembleSpec(MatrixSpace.unitary(n), HaarUniform()))
        th = np.random.default_rng(n).uniform(-pi, pi, size=(500, n))
        assert np.max(np.abs(f(th) - ref(th))) < 1e-10
        assert np.min(f(th)) >= -1e-15


def test_unitary_weight_from_samples():
    from rmtweights.core import sample_matrices

    U = sample_matrices(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()), np.random.default_rng(9), 100_000)
    g = unitary_weight_g(U, cutoff=3)
    c = (2 * pi) ** -2
    coeffs = {k: v for k, v in g.terms.items()}
    for key, target in (((-1, 0), c), ((0, -1), c)):
        assert abs(coeffs.get(key, 0) - target) * (2 * pi) ** 2 < 0.02


def test_unitary_repeated_indices_warn():
    g = WeightFunction.cue_weight(2) + WeightFunction.trig(2, {(1, 1): 1e-3})
    with pytest.warns(RuntimeWarning):
        derivative_principle_unitary(g, check=False)


# -- spherical identities and polynomial ensembles ---------------------------------


def test_spherical_from_weight_gue():
    s = np.array([[0.3, -0.5]])
    assert spherical_from_weight(MatrixSpace.herm(2), WeightFunction.gaussian(2), s)[0] == pytest.approx(np.exp(-0.17))


def test_polynomial_ensemble_weight_n1_identity():
    w = WeightFunction.gaussian(1)
    assert polynomial_ensemble_weight([w]) is w


@given(st.floats(0.7, 1.4))
def test_polynomial_ensemble_weight_gaussian_family(scale):
    # w_k = x^k e^{-x^2/(2 scale^2)}: det[w_k(x_j)] = (x2 - x1) g(x1) g(x2) = Delta(-d/dx) [scale^2 g(x1) g(x2)]
    a = 0.5 / scale**2
    ws = [WeightFunction("RealLine", 1, {((k, a, 0.0),): 1.0}) for k in range(2)]
    w = polynomial_ensemble_weight(ws)
    m = w.mesh()
    expected = scale**2 * np.exp(-a * (m**2).sum(axis=-1))
    assert np.max(np.abs(w.values - expected)) < 1e-6
    dw = finite_difference_oracle(VandermondeOperator.flat(2), w, tol=1e-2)
    det = (m[..., 1] - m[..., 0]) * np.exp(-a * (m**2).sum(axis=-1))
    assert np.max(np.abs(dw.values - det)[4:-4, 4:-4]) < 1e-2
