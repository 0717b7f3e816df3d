from __future__ import annotations

from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rmtweights.core import SpectralDomain
from rmtweights.errors import AccuracyError, DomainError, DomainMismatchError, ResourceError
from rmtweights.grid import GridAxis, GridDensity
from rmtweights.weights import (
    OperatorKind,
    VandermondeOperator,
    WeightFunction,
    apply_one_dim,
    apply_vandermonde,
    convolve,
    finite_difference_oracle,
)

phi = stats.norm.pdf

rates = st.floats(0.3, 2.0)
coefs = st.floats(-2.0, 2.0).filter(lambda c: abs(c) > 1e-3)
powers = st.integers(0, 3)


@st.composite
def real_weights(draw, n=2):
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        key = tuple((draw(powers), draw(rates), draw(st.floats(-1, 1))) for _ in range(n))
        terms[key] = draw(coefs)
    return WeightFunction("RealLine", n, terms)


@st.composite
def half_weights(draw, n=1):
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        key = tuple((float(draw(st.integers(0, 3))), draw(rates)) for _ in range(n))
        terms[key] = draw(coefs)
    return WeightFunction("HalfLine", n, terms)


# -- evaluation ----------------------------------------------------------------


def test_eval_examples():
    assert WeightFunction.gaussian(2).eval(np.array([0.0, 0.0])) == pytest.approx(1 / (2 * pi))
    e = WeightFunction("HalfLine", 2, {((0, 1.0), (0, 1.0)): 1.0})
    assert e.eval(np.array([1.0, 1.0])) == pytest.approx(np.exp(-2))
    t = WeightFunction.trig(2, {(-1, 0): (2 * pi) ** -2, (0, -1): (2 * pi) ** -2})
    assert t.eval(np.array([0.0, 0.0])) == pytest.approx(2 / (2 * pi) ** 2)


def test_eval_batched_and_chunked():
    w = WeightFunction.gaussian(2, scale=0.7)
    pts = np.random.default_rng(0).normal(size=(3, 5, 2))
    ref = phi(pts[..., 0], scale=0.7) * phi(pts[..., 1], scale=0.7)
    assert np.allclose(w.eval(pts), ref, rtol=1e-13)


def test_half_line_rejects_negative_points():
    with pytest.raises(DomainError):
        WeightFunction.gamma(1).eval(np.array([-1.0]))


def test_integral_exact():
    assert WeightFunction.gaussian(3, scale=1.7).integral() == pytest.approx(1.0)
    assert WeightFunction.gamma(2, shape=2.5, rate=0.5).integral() == pytest.approx(1.0)


def test_json_round_trip():
    w = WeightFunction("HalfLine", 2, {((0.5, 1.0), (2, 0.3)): 1.5 - 0.5j, ((1, 2.0), (0, 1.0)): 0.2})
    back = WeightFunction.from_json(w.to_json())
    assert back.equals(w)


# -- algebra --------------------------------------------------------------------


@given(real_weights(), real_weights())
def test_addition_is_pointwise(w1, w2):
    x = np.array([[0.3, -0.2], [1.1, 0.5]])
    assert np.allclose((w1 + w2).eval(x), w1.eval(x) + w2.eval(x), atol=1e-12)


@given(real_weights())
def test_symmetrize_is_symmetric_and_idempotent(w):
    s = w.symmetrize()
    assert s.symmetric
    assert s.symmetrize().equals(s, tol=1e-10)
    x = np.array([0.4, -0.9])
    assert s.eval(x) == pytest.approx(s.eval(x[::-1]), abs=1e-12)


def test_domain_mismatch_in_algebra():
    with pytest.raises(DomainMismatchError):
        WeightFunction.gaussian(1) + WeightFunction.gamma(1)
    with pytest.raises(DomainMismatchError):
        WeightFunction.gaussian(1) + WeightFunction.gaussian(2)


def test_non_positive_rate_rejected():
    with pytest.raises(DomainError):
        WeightFunction("HalfLine", 1, {((0, -1.0),): 1.0})


# -- operators ------------------------------------------------------------------


def test_flat_derivative_on_gaussian():
    w = WeightFunction("RealLine", 2, {((0, 0.5, 0.0), (0, 0.5, 0.0)): 1.0})
    out = apply_one_dim(OperatorKind.FLAT, 0, w)
    x = np.array([[0.7, -0.3], [-1.2, 2.0]])
    ref = x[:, 0] * np.exp(-x[:, 0] ** 2 / 2 - x[:, 1] ** 2 / 2)
    assert np.allclose(out.eval(x), ref)


def test_torus_vandermonde_example():
    c = (2 * pi) ** -2
    g = WeightFunction.trig(2, {(-1, 0): c, (0, -1): c})
    out = apply_vandermonde(VandermondeOperator.torus(2), g)
    ref = WeightFunction.trig(2, {(0, -1): c, (-1, 0): -c})
    assert out.equals(ref)


def test_vandermonde_domain_mismatch():
    with pytest.raises(DomainMismatchError):
        apply_vandermonde(VandermondeOperator.mellin(1), WeightFunction.gaussian(1))


def test_vandermonde_term_cap():
    w = WeightFunction.gaussian(3).symmetrize()
    with pytest.raises(ResourceError):
        apply_vandermonde(VandermondeOperator.flat(3), w + WeightFunction.gaussian(3, scale=2.0), term_cap=3)


@given(half_weights(), st.sampled_from([0.0, 1.0, 2.0, -0.5, 0.5]))
def test_hankel_operator_matches_finite_differences(w, nu):
    out = apply_one_dim(OperatorKind.HANKEL, 0, w, nu=nu)
    x = np.array([0.6, 1.3, 2.2])
    h = 1e-4

    def f(y):
        return np.real(w.eval(np.asarray(y)[:, None]))

    # -x^nu d/dx x^(1-nu) d/dx
    g = lambda y: y ** (1 - nu) * (f(y + h) - f(y - h)) / (2 * h)
    ref = -(x**nu) * (g(x + h) - g(x - h)) / (2 * h)
    scale = max(1.0, float(np.max(np.abs(ref))))
    assert np.allclose(np.real(out.eval(x[:, None])), ref, atol=2e-5 * scale)


@given(half_weights())
def test_mellin_operator_is_minus_x_d_dx(w):
    out = apply_one_dim(OperatorKind.MELLIN, 0, w)
    x = np.array([0.5, 1.0, 2.5])
    h = 1e-5
    num = -x * (w.eval((x + h)[:, None]) - w.eval((x - h)[:, None])) / (2 * h)
    assert np.allclose(out.eval(x[:, None]), num, atol=1e-6 * max(1, np.max(np.abs(num))))


def test_finite_difference_oracle_flat():
    ax = GridAxis(-6.0, 6.0, 1201)
    grid = GridDensity.from_function(WeightFunction.gaussian(2).eval, [SpectralDomain.REAL_LINE] * 2, [ax, ax], normalized=False)
    num = finite_difference_oracle(VandermondeOperator.flat(2), grid)
    exact = apply_vandermonde(VandermondeOperator.flat(2), WeightFunction.gaussian(2))
    assert np.max(np.abs(num.values - np.real(exact.eval(grid.mesh())))) < 1e-3


def test_finite_difference_oracle_mellin():
    # Delta(D) = D_2 - D_1 with D = -x d/dx, so e^{-x1-x2} -> (x2 - x1) e^{-x1-x2}
    ax = GridAxis(0.05, 12.0, 801)
    grid = GridDensity.from_function(lambda x: np.exp(-x.sum(axis=-1)), [SpectralDomain.HALF_LINE] * 2, [ax, ax], normalized=False)
    num = finite_difference_oracle(VandermondeOperator.mellin(2), grid)
    m = grid.mesh()
    ref = (m[..., 1] - m[..., 0]) * np.exp(-m.sum(axis=-1))
    inner = (slice(5, -5), slice(5, -5))
    assert np.max(np.abs(num.values[inner] - ref[inner])) < 1e-3


def test_finite_difference_oracle_n1_is_identity():
    ax = GridAxis(0.05, 12.0, 201)
    grid = GridDensity.from_function(lambda x: np.exp(-x[..., 0]), [SpectralDomain.HALF_LINE], [ax], normalized=False)
    num = finite_difference_oracle(VandermondeOperator.mellin(1), grid)
    assert np.allclose(num.values, grid.values)


def test_finite_difference_oracle_zero_torus():
    ax = GridAxis.torus(64)
    grid = GridDensity((SpectralDomain.TORUS,) * 2, (ax, ax), np.zeros((64, 64)), normalized=False)
    out = finite_difference_oracle(VandermondeOperator.torus(2), grid)
    assert np.all(out.values == 0)


def test_finite_difference_oracle_coarse_grid_raises():
    ax = GridAxis(-6.0, 6.0, 25)
    grid = GridDensity.from_function(WeightFunction.gaussian(2, scale=0.3).eval, [SpectralDomain.REAL_LINE] * 2, [ax, ax], normalized=False)
    with pytest.raises(AccuracyError):
        finite_difference_oracle(VandermondeOperator.flat(2), grid, tol=1e-6)


# -- convolution ----------------------------------------------------------------


def test_gaussian_convolution_closed_form():
    c = convolve(WeightFunction.gaussian(2, scale=1.0), WeightFunction.gaussian(2, scale=1.0))
    assert c.equals(WeightFunction.gaussian(2, scale=sqrt(2)), tol=1e-12)


@given(real_weights(n=1), real_weights(n=1))
def test_convolution_matches_quadrature(w1, w2):
    y = np.linspace(-40, 40, 40001)
    x = 0.7
    num = np.trapezoid(w1.eval(y[:, None]) * w2.eval((x - y)[:, None]), y)
    exact = convolve(w1, w2).eval(np.array([x]))
    assert exact == pytest.approx(num, abs=1e-7 * max(1.0, abs(num)))


def test_torus_convolution_multiplies_coefficients():
    a = WeightFunction.trig(1, {(1,): 0.5, (0,): 1.0})
    b = WeightFunction.trig(1, {(1,): 2.0, (-1,): 1.0})
    c = convolve(a, b)
    assert c.equals(WeightFunction.trig(1, {(1,): 2 * pi * 1.0}))


def test_half_line_symbolic_convolution_rejected():
    with pytest.raises(DomainError):
        convolve(WeightFunction.gamma(1), WeightFunction.gamma(1))
