from __future__ import annotations

from math import gamma, pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from rmtweights.core import SpectralDomain
from rmtweights.errors import AccuracyError, DomainError, DomainMismatchError
from rmtweights.grid import GridAxis, GridDensity
from rmtweights.transforms import (
    abel_inverse,
    abel_inverse_half,
    abel_inverse_weight,
    fourier,
    fourier_inverse,
    fourier_series,
    fourier_series_inverse,
    hankel,
    hankel_inverse,
    hankel_kernel,
    mellin,
    mellin_inverse,
    wynn_epsilon,
)
from rmtweights.weights import WeightFunction

std_normal = WeightFunction.gaussian(1)
exp1 = WeightFunction("HalfLine", 1, {((0, 1.0),): 1.0})


# -- Fourier ---------------------------------------------------------------------


def test_fourier_gaussian_characteristic_function():
    assert fourier(std_normal, [[1.0]]).values[0] == pytest.approx(np.exp(-0.5))


def test_fourier_narrow_gaussian_tends_to_one():
    narrow = WeightFunction.gaussian(1, scale=1e-4)
    assert abs(fourier(narrow, [[3.7]]).values[0] - 1) < 1e-3


def test_fourier_completing_the_square():
    w = WeightFunction("RealLine", 1, {((0, 1.0, 0.0),): 1.0})  # e^{-lambda^2}
    t = np.array([0.3, 1.1, 2.0])
    assert np.allclose(fourier(w, 2 * np.sqrt(t)[:, None]).values, sqrt(pi) * np.exp(-t))


def test_fourier_grid_and_callable_agree_with_closed_form():
    s = np.array([[0.0], [0.8], [2.5]])
    exact = fourier(std_normal, s).values
    ax = GridAxis(-12.0, 12.0, 961)
    grid = GridDensity.from_function(std_normal.eval, [SpectralDomain.REAL_LINE], [ax], normalized=False)
    assert np.allclose(fourier(grid, s).values, exact, atol=1e-9)
    assert np.allclose(fourier(lambda x: std_normal.eval(x), s).values, exact, atol=1e-9)


def test_fourier_rejects_half_line_weight():
    with pytest.raises(DomainMismatchError):
        fourier(exp1, [[1.0]])


def test_fourier_inverse_round_trip_and_zero():
    ax = GridAxis(-30.0, 30.0, 1201)
    g = fourier(std_normal, [ax])
    x = np.array([[-1.0], [0.0], [0.7]])
    assert np.allclose(fourier_inverse(g, x, epsilon=0.0).values, std_normal.eval(x), atol=1e-10)
    zero = fourier(WeightFunction.zero("RealLine", 1), [ax])
    assert np.all(fourier_inverse(zero, x).values == 0)


def test_fourier_inverse_requires_integrable_input():
    ax = GridAxis(-30.0, 30.0, 601)
    from rmtweights.transforms import TransformResult

    flat = TransformResult(np.ones(601), ax.points[:, None], {}, axes=(ax,))
    with pytest.raises(AccuracyError):
        fourier_inverse(flat, [[0.0]], epsilon=0.0)


@given(st.floats(0.3, 2.0), st.floats(-2, 2), st.floats(-3, 3))
def test_fourier_shift_property(scale, mean, s):
    w = WeightFunction.gaussian(1, scale=scale, mean=mean)
    expected = np.exp(1j * mean * s - 0.5 * scale**2 * s**2)
    assert fourier(w, [[s]]).values[0] == pytest.approx(expected, abs=1e-12)


# -- Hankel ------------------------------------------------------------------------


def test_hankel_kernel_small_argument_limit():
    for nu in (0.0, 1.0, 2.0, -0.5, 0.5):
        assert hankel_kernel(0.0, nu) == pytest.approx(1 / gamma(nu + 1))


@pytest.mark.parametrize("nu", [0, 1, 2, -0.5, 0.5])
def test_hankel_exponential_closed_form_against_quadrature(nu):
    w = WeightFunction("HalfLine", 1, {((nu, 1.3),): 1.0})
    s = np.array([[0.2], [1.0], [3.0]])
    exact = hankel(w, s, nu).values
    numeric = hankel(lambda x: w.eval(np.asarray(x)[..., None]), s, nu).values
    assert np.allclose(exact, numeric, rtol=1e-7)


@pytest.mark.parametrize("nu", [0, 1, -0.5, 0.5])
def test_hankel_round_trip(nu):
    w = WeightFunction("HalfLine", 1, {((nu + 1, 1.0),): 1.0})
    x = np.array([[0.4], [1.5], [3.0]])
    back = hankel_inverse(hankel(w, [[0.0]], nu).evaluator, x, nu).values
    assert np.allclose(back, w.eval(x), rtol=1e-6)


def test_hankel_zero_input_and_negative_frequency():
    assert np.all(hankel(WeightFunction.zero("HalfLine", 1), [[1.0]], 0).values == 0)
    with pytest.raises(DomainError):
        hankel(exp1, [[-1.0]], 0)


def test_wynn_epsilon_accelerates_alternating_series():
    partial = np.cumsum([(-1) ** k / (k + 1) for k in range(12)])
    value, err = wynn_epsilon(partial)
    assert value == pytest.approx(np.log(2), abs=1e-8)


# -- Mellin ------------------------------------------------------------------------


def test_mellin_gamma_integrals():
    assert mellin(exp1, [[2.0]]).values[0] == pytest.approx(1.0)
    assert mellin(exp1, [[0.5]]).values[0] == pytest.approx(sqrt(pi))
    f = lambda x: np.exp(-np.asarray(x))
    assert mellin(f, [[0.5]]).values[0] == pytest.approx(sqrt(pi), rel=1e-8)


def test_mellin_s1_gives_mass():
    logistic = lambda x: special.expit(-40 * (np.asarray(x) - 2.0))
    assert mellin(logistic, [[1.0]]).values[0].real == pytest.approx(2.0, abs=1e-3)


def test_mellin_divergent_strip():
    with pytest.raises(DomainError):
        mellin(exp1, [[-0.5]], strip=(0.0, np.inf))


@given(st.floats(0.5, 3.0), st.floats(-2.0, 2.0))
def test_mellin_round_trip(c, t):
    w = WeightFunction("HalfLine", 1, {((1.0, 0.7),): 1.0, ((0.0, 2.0),): 0.4})
    x = np.array([[0.5], [1.7]])
    back = mellin_inverse(mellin(w, [[1.0]]).evaluator, x, c=c).values
    assert np.allclose(back, w.eval(x), rtol=1e-6)


# -- Fourier series ---------------------------------------------------------------


def test_fourier_series_examples():
    f = lambda th: (1 + np.cos(th[..., 0])) / (2 * pi)
    assert fourier_series(f, [[1]]).values[0] == pytest.approx(0.5)
    assert fourier_series(f, [[0]]).values[0] == pytest.approx(1.0)


def test_fourier_series_rejects_non_integer():
    with pytest.raises(DomainError):
        fourier_series(lambda th: np.ones(th.shape[:-1]), [[0.5]])


def test_fourier_series_inverse_round_trip():
    c = (2 * pi) ** -2
    g = WeightFunction.trig(2, {(-1, 0): c, (0, -1): c})
    idx = np.array([[s1, s2] for s1 in range(-2, 3) for s2 in range(-2, 3)])
    coeffs = fourier_series(g, idx)
    th = np.array([[0.3, -1.2], [2.0, 0.1]])
    assert np.allclose(fourier_series_inverse(coeffs, th).values, g.eval(th))


# -- inverse Abel -------------------------------------------------------------------


def test_abel_nu0_gaussian_both_paths():
    w = WeightFunction("RealLine", 1, {((0, 1.0, 0.0),): 1.0})
    x = np.array([[0.2], [1.0], [2.5]])
    target = sqrt(pi) * np.exp(-x[:, 0])
    comp = abel_inverse(w, x, 0, method="composition").values
    expl = abel_inverse(w, x, 0, method="explicit").values
    assert np.allclose(comp, target, rtol=1e-6)
    assert np.allclose(expl, target, rtol=1e-6)
    assert np.allclose(abel_inverse_weight(w, 0).eval(x), target)


def test_abel_numeric_explicit_path():
    f = lambda lam: np.exp(-np.asarray(lam) ** 2)
    x = np.array([[0.3], [1.2]])
    expl = abel_inverse(f, x, 0, method="explicit").values
    assert np.allclose(expl, sqrt(pi) * np.exp(-x[:, 0]), rtol=1e-5)


def test_abel_zero_input():
    z = WeightFunction.zero("RealLine", 1)
    assert np.all(abel_inverse(z, [[1.0]], 1, method="explicit").values == 0)


def test_abel_rejects_odd_input_and_half_integers():
    odd = WeightFunction("RealLine", 1, {((1, 1.0, 0.0),): 1.0})
    with pytest.raises(DomainError):
        abel_inverse(odd, [[1.0]], 0)
    with pytest.raises(DomainError):
        abel_inverse(std_normal, [[1.0]], 0.5)


def test_abel_half_minus():
    x = np.array([[0.3], [2.0]])
    out = abel_inverse_half(std_normal, -0.5).eval(x)
    assert np.allclose(out, np.exp(-x[:, 0] / 2) / np.sqrt(2 * x[:, 0]))


def test_abel_half_plus_matches_composition():
    x = np.array([[0.3], [1.0], [2.0]])
    closed = abel_inverse_half(std_normal, 0.5).eval(x)
    ff = lambda s: fourier(std_normal, 2 * np.sqrt(np.asarray(s, dtype=float))).values
    comp = hankel_inverse(ff, x, 0.5).values
    assert np.allclose(closed, comp, rtol=1e-5)
    assert np.allclose(closed, np.sqrt(pi * x[:, 0]) / (2 * sqrt(2 * pi)) * np.exp(-x[:, 0] / 2))


def test_abel_half_zero_and_bad_sign():
    assert np.all(abel_inverse_half(WeightFunction.zero("RealLine", 1), 0.5).eval(np.array([[1.0]])) == 0)
    with pytest.raises(DomainError):
        abel_inverse_half(std_normal, 1.0)
