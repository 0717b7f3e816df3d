from __future__ import annotations

from math import gamma, pi, sin

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from rmtweights.core import EnsembleSpec, Gaussian, HaarUniform, MatrixSpace, WishartLike, reference_density, sample_matrices, spectra
from rmtweights.errors import DataError, DomainError
from rmtweights.spherical import (
    bessel_group_kernel,
    bessel_kernel_mc,
    gelfand_naimark,
    gelfand_naimark_mc,
    gelfand_naimark_quadrature_n2,
    hciz,
    hciz_mc,
    hciz_quadrature_n2,
    spherical_function,
    spherical_hankel,
    spherical_hankel_inverse,
    spherical_herm,
    spherical_herm_inverse,
    spherical_hermplus,
    spherical_unitary,
    spherical_unitary_inverse,
    unitary_character,
)


# -- closed forms ----------------------------------------------------------------


def test_hciz_examples():
    assert hciz(np.array([0.7]), np.array([1.3])) == pytest.approx(np.exp(1j * 0.91))
    assert hciz(np.zeros(2), np.array([0.4, -1.7])) == pytest.approx(1.0)
    assert hciz(np.array([1.0, -1.0]), np.array([1.0, -1.0])) == pytest.approx(sin(2) / 2)


def test_hciz_matches_quadrature():
    x, s = np.array([0.7, -0.4]), np.array([1.1, 0.3])
    assert hciz(x, s) == pytest.approx(hciz_quadrature_n2(x, s), rel=1e-10)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_hciz_degenerate_continuity(a, b, s1):
    s = np.array([s1, s1 + 0.8])
    at = hciz(np.array([a, a]), s)
    near = hciz(np.array([a, a + 1e-7]), s)
    assert abs(at - near) < 1e-6
    assert abs(hciz(np.array([a, b]), s)) <= 1 + 1e-9


def test_bessel_kernel_n1_and_origin():
    for nu in (0.0, 1.0, -0.5, 0.5):
        x, s = 0.8, 1.7
        expected = special.jv(nu, 2 * np.sqrt(x * s)) / (x * s) ** (nu / 2) * gamma(nu + 1)
        assert bessel_group_kernel(np.array([x]), np.array([s]), nu) == pytest.approx(expected)
    assert bessel_group_kernel(np.array([0.0]), np.array([0.0]), 0) == pytest.approx(1.0)


def test_bessel_kernel_n2_against_mc():
    x, s = np.array([1.0, 2.0]), np.array([1.0, 2.0])
    est = bessel_kernel_mc(x, s, 0, 1_000_000, np.random.default_rng(11))
    assert est.within(bessel_group_kernel(x, s, 0))


def test_gelfand_naimark_examples():
    assert gelfand_naimark(np.array([2.5]), np.array([1.3])) == pytest.approx(2.5**1.3)
    for n in (2, 3, 4):
        x = np.linspace(0.5, 2.5, n)
        s0 = np.arange(n - 1, -1, -1, dtype=float)
        assert gelfand_naimark(x, s0) == pytest.approx(1.0, abs=1e-12)


def test_gelfand_naimark_matches_quadrature():
    x, s = np.array([0.6, 1.7]), np.array([1.3 + 0.4j, -0.2])
    assert gelfand_naimark(x, s) == pytest.approx(gelfand_naimark_quadrature_n2(x, s), rel=1e-8)


def test_mc_oracles_agree_at_n3():
    rng = np.random.default_rng(4)
    x, s = np.array([0.5, -0.3, 0.9]), np.array([0.7, 0.1, -0.6])
    assert hciz_mc(x, s, 200_000, rng).within(hciz(x, s), sigmas=4)
    xp, sp = np.array([0.6, 1.1, 1.9]), np.array([1.4, 0.6, -0.5])
    assert gelfand_naimark_mc(xp, sp, 200_000, rng).within(gelfand_naimark(xp, sp), sigmas=4)


def test_spherical_function_normalization_points():
    for space in (MatrixSpace.herm(3), MatrixSpace.hermplus(3), MatrixSpace.unitary(3), MatrixSpace.chiral(3, 1)):
        phi = spherical_function(space)
        s0 = phi.normalization_point()
        x = np.array([0.4, 0.9, 1.6])
        assert phi(x, s0) == pytest.approx(1.0, abs=1e-10)
        assert phi.degenerate_strategy


# -- forward transforms ------------------------------------------------------------


def test_spherical_herm_of_normalized_density_at_zero():
    f = reference_density(EnsembleSpec(MatrixSpace.herm(2), Gaussian()))
    out = spherical_herm(f, np.array([[0.0, 0.0], [0.5, -0.2]]))
    assert out.values[0] == pytest.approx(1.0, abs=1e-8)
    # GUE: S f(s) = exp(-|s|^2 / 2)
    assert out.values[1] == pytest.approx(np.exp(-0.5 * (0.25 + 0.04)), abs=1e-8)


def test_spherical_herm_from_samples():
    rng = np.random.default_rng(2)
    x = spectra(sample_matrices(EnsembleSpec(MatrixSpace.herm(2), Gaussian()), rng, 50_000), MatrixSpace.herm(2))
    out = spherical_herm(x, np.array([[0.5, -0.2]]))
    assert abs(out.values[0] - np.exp(-0.145)) < 4 * out.meta["stderr"][0]


def test_spherical_hermplus_normalization():
    rng = np.random.default_rng(3)
    X = sample_matrices(EnsembleSpec(MatrixSpace.hermplus(2), WishartLike(4)), rng, 20_000)
    # the reference measure dX / det X^n moves the point where S f = 1 from s0 = (1, 0) to s0 + n
    out = spherical_hermplus(X, np.array([[3.0, 2.0]]), matrices=True)
    assert out.values[0] == pytest.approx(1.0, abs=1e-10)
    f = lambda x: np.exp(-x.sum(axis=-1)) * (x[..., 1] - x[..., 0]) ** 2 / 2  # LUE n=2
    quad = spherical_hermplus(f, np.array([[3.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(quad.values, 1.0, atol=1e-6)
    with pytest.raises(DataError):
        spherical_hermplus(-X, np.array([[2.0, 1.0]]), matrices=True)


def test_spherical_unitary_cue_orthogonality():
    rng = np.random.default_rng(5)
    U = sample_matrices(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()), rng, 100_000)
    out = spherical_unitary(U, np.array([[1, 0], [2, 0]]), matrices=True)
    assert abs(out.values[0] - 1) < 0.02
    assert abs(out.values[1]) < 0.02


def test_spherical_unitary_repeated_parameters_rejected():
    with pytest.raises(DomainError):
        spherical_unitary(lambda th: np.ones(th.shape[0]), np.array([[1, 1]]))


def test_unitary_character_trivial():
    th = np.array([0.3, -1.2])
    assert unitary_character(th, np.array([1, 0])) == pytest.approx(1.0)


def test_spherical_hankel_examples():
    out = spherical_hankel(lambda x: np.exp(-x[..., 0]), np.array([[0.0], [0.7]]), 0)
    assert np.allclose(out.values, [1.0, np.exp(-0.7)], atol=1e-10)
    g = reference_density(EnsembleSpec(MatrixSpace.chiral(2), Gaussian()))
    out2 = spherical_hankel(g, np.array([[0.5, 1.2]]), 0)
    assert out2.values[0] == pytest.approx(np.exp(-1.7), abs=1e-8)


def test_inverse_round_trips():
    x = np.array([[0.3, -0.8], [1.0, 1.0]])
    gue = reference_density(EnsembleSpec(MatrixSpace.herm(2), Gaussian()))
    back = spherical_herm_inverse(lambda s: np.exp(-0.5 * np.sum(np.asarray(s) ** 2, axis=-1)), x).values
    assert np.allclose(back, gue(x), atol=1e-8)

    xx = np.array([[0.3, 1.1]])
    lue = reference_density(EnsembleSpec(MatrixSpace.chiral(2), Gaussian()))
    back = spherical_hankel_inverse(lambda s: np.exp(-np.sum(np.asarray(s), axis=-1)), xx, 0).values
    assert back == pytest.approx(lue(xx), rel=1e-3)

    cue = reference_density(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()))
    trivial = lambda s: np.array([1.0 if sorted(v) == [0, 1] else 0.0 for v in np.atleast_2d(s).astype(int).tolist()])
    th = np.array([[0.3, 2.0]])
    assert spherical_unitary_inverse(trivial, th).values == pytest.approx(cue(th), rel=1e-10)
