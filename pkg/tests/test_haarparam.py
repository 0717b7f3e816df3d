from __future__ import annotations

from math import pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from rmtweights.errors import ConfigurationError, DomainError
from rmtweights.haarparam import (
    RadialPhaseCoordinates,
    UnitaryCoordinates,
    build_unitary,
    h_matrix_entries,
    h_matrix_product,
    haar_density_angles,
    haar_density_rphi,
    haar_rphi_constant,
    haar_rphi_radius_marginal_n2,
    lu_diagonals,
    numeric_lu_diagonals,
    sample_haar_coordinates,
    to_radial_phase,
)


def _coords(n, seed):
    return sample_haar_coordinates(n, np.random.default_rng(seed))


def test_n1_is_a_phase():
    c = UnitaryCoordinates(1, np.array([0.7]), np.zeros((1, 1)), np.zeros((1, 1)))
    assert np.allclose(build_unitary(c), [[np.exp(0.7j)]])


def test_n2_zero_angles_is_identity():
    c = UnitaryCoordinates(2, np.zeros(2), np.zeros((2, 2)), np.zeros((2, 2)))
    assert np.allclose(build_unitary(c), np.eye(2))


def test_n3_matches_explicit_rotation_product():
    c = _coords(3, 9)
    a, p, s = c.alpha, c.phi, c.psi
    co, si, e = np.cos, np.sin, lambda t: np.exp(1j * t)
    A = np.diag([e(a[0]), 1, 1])
    R12 = np.array(
        [[co(p[0, 1]) * e(a[1]), si(p[0, 1]) * e(s[0, 1]), 0], [-si(p[0, 1]) * e(-s[0, 1]), co(p[0, 1]) * e(-a[1]), 0], [0, 0, 1]]
    )
    R13 = np.array(
        [[co(p[0, 2]) * e(a[2]), 0, si(p[0, 2]) * e(s[0, 2])], [0, 1, 0], [-si(p[0, 2]) * e(-s[0, 2]), 0, co(p[0, 2]) * e(-a[2])]]
    )
    R23 = np.array([[1, 0, 0], [0, co(p[1, 2]), si(p[1, 2]) * e(s[1, 2])], [0, -si(p[1, 2]) * e(-s[1, 2]), co(p[1, 2])]])
    assert np.allclose(build_unitary(c), A @ R12 @ R13 @ R23, atol=1e-14)


@pytest.mark.parametrize("n", range(1, 7))
def test_build_unitary_is_unitary(n):
    c = sample_haar_coordinates(n, np.random.default_rng(n), 20)
    V = build_unitary(c)
    err = np.conj(np.swapaxes(V, -1, -2)) @ V - np.eye(n)
    assert np.max(np.abs(err)) < 1e-12


@pytest.mark.parametrize("n", range(2, 7))
def test_h_entries_match_product(n):
    c = sample_haar_coordinates(n, np.random.default_rng(10 + n), 15)
    for m in range(2, n + 1):
        assert np.max(np.abs(h_matrix_entries(c, m) - h_matrix_product(c, m))) < 1e-13
    assert np.max(np.abs(build_unitary(c, closed_form=True) - build_unitary(c))) < 1e-12


def test_h_structural_zeros():
    c = _coords(5, 3)
    H = h_matrix_entries(c)
    # top-left (m-1) x (m-1) block is upper triangular
    block = H[:4, :4]
    assert np.all(block[np.tril_indices(4, -1)] == 0)


def test_h_entries_rejects_bad_m():
    with pytest.raises(ConfigurationError):
        h_matrix_entries(_coords(3, 0), 4)


# -- LU --------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_lu_closed_form_matches_numeric(n):
    c = sample_haar_coordinates(n, np.random.default_rng(20 + n), 30)
    closed = lu_diagonals(c)
    num = numeric_lu_diagonals(build_unitary(c))
    assert np.allclose(closed.pivots, num.pivots, atol=1e-9)
    assert np.allclose(closed.radii, num.radii, atol=1e-12)
    dphase = np.angle(np.exp(1j * (closed.phases - num.phases)))
    assert np.max(np.abs(dphase)) < 1e-9


def test_pivot_product_is_first_phase():
    c = sample_haar_coordinates(4, np.random.default_rng(1), 10)
    prod = np.prod(lu_diagonals(c).pivots, axis=-1)
    assert np.allclose(prod, np.exp(1j * c.alpha[..., 0]))
    assert np.allclose(prod, np.linalg.det(build_unitary(c)))


# -- sampler and densities ---------------------------------------------------------


def test_sampler_cos_squared_is_uniform_for_adjacent_pairs():
    c = sample_haar_coordinates(3, np.random.default_rng(2), 20_000)
    assert stats.kstest(np.cos(c.phi[:, 0, 1]) ** 2, "uniform").statistic < 0.02
    # phi_{1,3}: cos^4 is uniform
    assert stats.kstest(np.cos(c.phi[:, 0, 2]) ** 4, "uniform").statistic < 0.02


def test_trace_second_moment_is_one():
    m = 40_000
    V = build_unitary(sample_haar_coordinates(3, np.random.default_rng(4), m))
    t = np.abs(np.trace(V, axis1=-2, axis2=-1)) ** 2
    assert abs(t.mean() - 1) < 3 * t.std() / np.sqrt(m)


def test_eigenangles_are_marginally_uniform():
    V = build_unitary(sample_haar_coordinates(2, np.random.default_rng(6), 20_000))
    th = np.angle(np.linalg.eigvals(V)).ravel()
    assert stats.kstest((th + pi) / (2 * pi), "uniform").pvalue > 1e-3


def test_angle_density_integrates_to_one_n2():
    def f(p):
        c = UnitaryCoordinates(2, np.zeros(2), np.array([[0, p], [0, 0]]), np.zeros((2, 2)))
        return float(haar_density_angles(c)) * (2 * pi) ** 3

    total, _ = integrate.quad(f, 0, pi / 2)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_rphi_constant_and_normalization_n2():
    assert haar_rphi_constant(1) == pytest.approx(1 / (2 * pi))
    # n=2: coordinates (alpha_1, r_1, varphi_1, psi_12), r_1 in (0, 1)
    def dens(r):
        pt = RadialPhaseCoordinates(2, np.array(0.0), np.array([r]), np.array([0.0]), np.zeros((2, 2)), np.zeros((2, 2)))
        return float(haar_density_rphi(pt))

    radial, _ = integrate.quad(dens, 0, 1)
    assert radial * (2 * pi) ** 3 == pytest.approx(1.0, abs=1e-10)


def test_rphi_radius_outside_bound_raises():
    pt = RadialPhaseCoordinates(2, np.array(0.0), np.array([1.2]), np.array([0.0]), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        haar_density_rphi(pt)


def test_radius_marginal_n2():
    c = sample_haar_coordinates(2, np.random.default_rng(8), 20_000)
    r = to_radial_phase(c).radii[:, 0]
    assert np.allclose(r, np.abs(build_unitary(c)[:, 0, 0]))
    cdf = lambda x: np.clip(x, 0, 1) ** 2
    assert stats.kstest(r, cdf).pvalue > 1e-3
    total, _ = integrate.quad(haar_rphi_radius_marginal_n2, 0, 1)
    assert total == pytest.approx(1.0)


# -- validation and serialization ---------------------------------------------------


def test_out_of_range_angles_rejected():
    with pytest.raises(DomainError):
        UnitaryCoordinates(2, np.array([4.0, 0.0]), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        UnitaryCoordinates(2, np.zeros(2), np.array([[0, 2.0], [0, 0]]), np.zeros((2, 2)))


@given(st.integers(1, 5), st.integers(0, 10_000))
def test_json_round_trip(n, seed):
    c = _coords(n, seed)
    back = UnitaryCoordinates.from_json(c.to_json())
    assert np.allclose(build_unitary(back), build_unitary(c), atol=1e-15)


def test_malformed_json_rejected():
    with pytest.raises(ConfigurationError):
        UnitaryCoordinates.from_json('{"n": 2}')
