"""Recursive angle coordinates on U(n) with factorized LU pivots.

``V_n = diag(V_{n-1}, 1) H_n`` with ``H_n = Phi_{1,n} ... Phi_{n-1,n}`` and
``V_1 = e^{i alpha_1}``.  ``Phi_{j,n}`` is a rotation in the ``(j, n)`` plane
by ``phi_{j,n}`` with phase ``psi_{j,n}``; ``Phi_{1,n}`` also carries
``alpha_n`` on its diagonal.  In these coordinates the LU pivots of ``V_n``
are monomials in ``cos phi`` and ``e^{i alpha}``, and Haar measure is a
product of independent one-dimensional laws.

Coordinates may be batched: ``alpha`` has shape ``(..., n)`` and ``phi``,
``psi`` have shape ``(..., n, n)`` with only the strict upper triangle used
(0-based index ``[j-1, k-1]`` for the pair ``(j, k)``).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from math import factorial, pi
from typing import Optional

import numpy as np

from .core import lu_diagonal, principal_minors
from .errors import ConfigurationError, DataError, DomainError

log = logging.getLogger(__name__)

RANGE_SLACK = 1e-12


def _pairs(n: int):
    return [(j, k) for k in range(1, n + 1) for j in range(1, k)]


@dataclass(frozen=True)
class UnitaryCoordinates:
    """Angles ``alpha`` (n), ``phi`` and ``psi`` (pairs ``j < k``), possibly batched."""

    n: int
    alpha: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ConfigurationError("n must be positive")
        alpha = np.asarray(self.alpha, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if alpha.shape[-1:] != (n,) or phi.shape[-2:] != (n, n) or psi.shape[-2:] != (n, n):
            raise ConfigurationError("coordinate arrays have the wrong trailing shape")
        if phi.shape[:-2] != alpha.shape[:-1] or psi.shape[:-2] != alpha.shape[:-1]:
            raise ConfigurationError("coordinate arrays have inconsistent batch shapes")
        iu = np.triu_indices(n, 1)
        if np.any(np.abs(alpha) > pi + RANGE_SLACK):
            raise DomainError("alpha angles must lie in [-pi, pi]")
        if np.any(phi[..., iu[0], iu[1]] < -RANGE_SLACK) or np.any(phi[..., iu[0], iu[1]] > pi / 2 + RANGE_SLACK):
            raise DomainError("phi angles must lie in [0, pi/2]")
        if np.any(np.abs(psi[..., iu[0], iu[1]]) > pi + RANGE_SLACK):
            raise DomainError("psi angles must lie in [-pi, pi]")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def batch_shape(self) -> tuple:
        return self.alpha.shape[:-1]

    def cos(self, j: int, k: int) -> np.ndarray:
        return np.cos(self.phi[..., j - 1, k - 1])

    @property
    def radii(self) -> np.ndarray:
        """``r_l = prod_{j <= l < k} cos phi_{j,k}`` for ``l = 1..n-1``."""
        n = self.n
        out = np.ones(self.batch_shape + (max(n - 1, 0),))
        for l in range(1, n):
            for j in range(1, l + 1):
                for k in range(l + 1, n + 1):
                    out[..., l - 1] *= self.cos(j, k)
        return out

    @property
    def phases(self) -> np.ndarray:
        """Phases ``alpha_1 + sum_{j>l} alpha_j`` of the leading minors, wrapped to ``[-pi, pi)``; the last is ``alpha_1``."""
        n = self.n
        tail = np.cumsum(self.alpha[..., ::-1], axis=-1)[..., ::-1]  # tail[l-1] = sum_{j>=l} alpha_j
        ph = np.empty(self.batch_shape + (n,))
        for l in range(1, n + 1):
            extra = tail[..., l] if l < n else 0.0
            ph[..., l - 1] = self.alpha[..., 0] + extra
        return (ph + pi) % (2 * pi) - pi

    def __getitem__(self, idx) -> "UnitaryCoordinates":
        return UnitaryCoordinates(self.n, self.alpha[idx], self.phi[idx], self.psi[idx])

    def to_json(self) -> str:
        if self.batch_shape:
            raise ConfigurationError("serialize single coordinate sets")
        return json.dumps(
            {
                "n": self.n,
                "alpha": self.alpha.tolist(),
                "phi": {f"{j},{k}": float(self.phi[j - 1, k - 1]) for j, k in _pairs(self.n)},
                "psi": {f"{j},{k}": float(self.psi[j - 1, k - 1]) for j, k in _pairs(self.n)},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "UnitaryCoordinates":
        data = json.loads(text)
        try:
            n = int(data["n"])
            phi = np.zeros((n, n))
            psi = np.zeros((n, n))
            for key, v in data["phi"].items():
                j, k = map(int, key.split(","))
                phi[j - 1, k - 1] = v
            for key, v in data["psi"].items():
                j, k = map(int, key.split(","))
                psi[j - 1, k - 1] = v
            return cls(n, np.asarray(data["alpha"], dtype=float), phi, psi)
        except (KeyError, ValueError, IndexError) as exc:
            raise ConfigurationError(f"malformed coordinate JSON: {exc}") from exc


def rotation_factor(c: UnitaryCoordinates, j: int, m: int) -> np.ndarray:
    """``Phi_{j,m}`` as an ``m x m`` matrix (batched)."""
    b = c.batch_shape
    out = np.broadcast_to(np.eye(m, dtype=complex), b + (m, m)).copy()
    co = np.cos(c.phi[..., j - 1, m - 1])
    si = np.sin(c.phi[..., j - 1, m - 1])
    e = np.exp(1j * c.psi[..., j - 1, m - 1])
    d1 = co.astype(complex)
    d2 = co.astype(complex)
    if j == 1:
        a = np.exp(1j * c.alpha[..., m - 1])
        d1 = d1 * a
        d2 = d2 / a
    out[..., j - 1, j - 1] = d1
    out[..., j - 1, m - 1] = e * si
    out[..., m - 1, j - 1] = -np.conj(e) * si
    out[..., m - 1, m - 1] = d2
    return out


def h_matrix_product(c: UnitaryCoordinates, m: int) -> np.ndarray:
    """``H_m = Phi_{1,m} ... Phi_{m-1,m}`` by explicit multiplication."""
    b = c.batch_shape
    H = np.broadcast_to(np.eye(m, dtype=complex), b + (m, m)).copy()
    for j in range(1, m):
        H = H @ rotation_factor(c, j, m)
    return H


def h_matrix_entries(c: UnitaryCoordinates, m: Optional[int] = None) -> np.ndarray:
    """Closed-form entries of ``H_m`` (default ``m = n``).

    The top-left ``(m-1) x (m-1)`` block is upper triangular; the other
    entries are products of sines and cosines with phases.
    """
    m = c.n if m is None else m
    if not 2 <= m <= c.n:
        if m == 1:
            return np.ones(c.batch_shape + (1, 1), dtype=complex)
        raise ConfigurationError(f"H_m needs 1 <= m <= n, got m={m}")
    b = c.batch_shape
    cs = lambda l: np.cos(c.phi[..., l - 1, m - 1])
    sn = lambda l: np.sin(c.phi[..., l - 1, m - 1])
    ps = lambda l: c.psi[..., l - 1, m - 1]
    am = c.alpha[..., m - 1]

    def cprod(lo, hi):
        out = np.ones(b)
        for l in range(lo, hi + 1):
            out = out * cs(l)
        return out

    H = np.zeros(b + (m, m), dtype=complex)
    for j in range(1, m):
        for k in range(j, m + 1):
            if j == k == 1:
                v = np.exp(1j * am) * cs(1)
            elif j == k:
                v = cs(j).astype(complex)
            elif k < m:
                v = -np.exp(1j * (ps(j) - ps(k))) * sn(k) * sn(j) * cprod(j + 1, k - 1)
            else:
                v = np.exp(1j * ps(j)) * sn(j) * cprod(j + 1, m - 1)
            H[..., j - 1, k - 1] = v
    for k in range(1, m + 1):
        if k == 1:
            v = -np.exp(-1j * ps(1)) * sn(1)
        elif k < m:
            v = -np.exp(-1j * (ps(k) + am)) * sn(k) * cprod(1, k - 1)
        else:
            v = np.exp(-1j * am) * cprod(1, m - 1)
        H[..., m - 1, k - 1] = v
    return H


def build_unitary(c: UnitaryCoordinates, closed_form: bool = False) -> np.ndarray:
    """Assemble ``V_n`` recursively; ``closed_form`` uses :func:`h_matrix_entries` for each ``H_m``."""
    b = c.batch_shape
    V = np.exp(1j * c.alpha[..., 0])[..., None, None]
    for m in range(2, c.n + 1):
        big = np.zeros(b + (m, m), dtype=complex)
        big[..., : m - 1, : m - 1] = V
        big[..., m - 1, m - 1] = 1.0
        H = h_matrix_entries(c, m) if closed_form else h_matrix_product(c, m)
        V = big @ H
    return V


@dataclass
class LUDiagonals:
    """Pivots ``u_{l,l}``, leading-minor radii ``r_l`` (l < n) and minor phases (l <= n)."""

    pivots: np.ndarray
    radii: np.ndarray
    phases: np.ndarray


def lu_diagonals(c: UnitaryCoordinates) -> LUDiagonals:
    """Closed-form LU pivots of ``build_unitary(c)``.

    ``u_{1,1} = e^{i sum alpha} prod_{k>1} cos phi_{1,k}`` and
    ``u_{l,l} = e^{-i alpha_l} prod_{k>l} cos phi_{l,k} / prod_{j<l} cos phi_{j,l}``.
    """
    n = c.n
    b = c.batch_shape
    u = np.empty(b + (n,), dtype=complex)
    for l in range(1, n + 1):
        num = np.ones(b)
        for k in range(l + 1, n + 1):
            num = num * c.cos(l, k)
        den = np.ones(b)
        for j in range(1, l):
            den = den * c.cos(j, l)
        if np.any(den == 0):
            raise DataError("vanishing leading principal minor: the LU decomposition does not exist")
        phase = np.exp(1j * np.sum(c.alpha, axis=-1)) if l == 1 else np.exp(-1j * c.alpha[..., l - 1])
        u[..., l - 1] = phase * num / den
    return LUDiagonals(u, c.radii, c.phases)


def numeric_lu_diagonals(V: np.ndarray) -> LUDiagonals:
    """Pivots, radii and phases of a unitary matrix by pivot-free elimination."""
    minors = principal_minors(V)
    if np.any(np.abs(minors[..., :-1]) == 0):
        raise DataError("vanishing leading principal minor: the LU decomposition does not exist")
    u = lu_diagonal(V)
    return LUDiagonals(u, np.abs(minors[..., :-1]), np.angle(minors))


def sample_haar_coordinates(n: int, rng: np.random.Generator, count: Optional[int] = None) -> UnitaryCoordinates:
    """Exact Haar sampler: uniform phases and ``cos phi_{j,k} = U^{1/(2(k-j))}``."""
    if n < 1:
        raise ConfigurationError("n must be positive")
    b = () if count is None else (int(count),)
    alpha = rng.uniform(-pi, pi, size=b + (n,))
    phi = np.zeros(b + (n, n))
    psi = np.zeros(b + (n, n))
    for j, k in _pairs(n):
        u = rng.uniform(0.0, 1.0, size=b)
        phi[..., j - 1, k - 1] = np.arccos(u ** (1.0 / (2 * (k - j))))
        psi[..., j - 1, k - 1] = rng.uniform(-pi, pi, size=b)
    return UnitaryCoordinates(n, alpha, phi, psi)


def haar_density_angles(c: UnitaryCoordinates) -> np.ndarray:
    """Haar density in ``(alpha, phi, psi)``: ``prod 2(k-j) cos^{2(k-j)-1} phi sin phi / (2 pi)^{n + n(n-1)/2}``."""
    n = c.n
    val = np.full(c.batch_shape, (2 * pi) ** (-(n + n * (n - 1) // 2)))
    for j, k in _pairs(n):
        p = c.phi[..., j - 1, k - 1]
        val = val * 2 * (k - j) * np.cos(p) ** (2 * (k - j) - 1) * np.sin(p)
    return val


@dataclass(frozen=True)
class RadialPhaseCoordinates:
    """``(alpha_1, r_l, varphi_l, phi_{j,k} for j+1<k, psi_{j,k})``, batched like UnitaryCoordinates.

    ``phi`` keeps only the non-adjacent pairs; adjacent entries are ignored.
    """

    n: int
    alpha1: np.ndarray
    radii: np.ndarray
    phases: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def bounds(self) -> np.ndarray:
        """``R_j = prod_{l<=j<k} cos phi_{l,k} / cos phi_{j,j+1}`` (the adjacent factor cancels)."""
        n = self.n
        b = np.shape(self.alpha1)
        out = np.ones(b + (max(n - 1, 0),))
        for j in range(1, n):
            for l in range(1, j + 1):
                for k in range(j + 1, n + 1):
                    if (l, k) != (j, j + 1):
                        out[..., j - 1] *= np.cos(self.phi[..., l - 1, k - 1])
        return out


def to_radial_phase(c: UnitaryCoordinates) -> RadialPhaseCoordinates:
    ph = c.phases
    return RadialPhaseCoordinates(c.n, c.alpha[..., 0], c.radii, ph[..., :-1], c.phi, c.psi)


def haar_rphi_constant(n: int) -> float:
    """``prod_{k=1}^n (k-1)! / (2 pi^k)``."""
    out = 1.0
    for k in range(1, n + 1):
        out *= factorial(k - 1) / (2 * pi**k)
    return out


def haar_density_rphi(point: RadialPhaseCoordinates, check: bool = True) -> np.ndarray:
    """Haar density in radial-phase coordinates: ``const * prod r_l * prod_{j+1<k} tan phi_{j,k}``.

    The reference measure is ``d alpha_1 prod dr_l prod d varphi_l
    prod_{j+1<k} d phi_{j,k} prod d psi_{j,k}``; radii must satisfy
    ``0 < r_l < R_l``.
    """
    n = point.n
    r = np.asarray(point.radii, dtype=float)
    if check:
        R = point.bounds()
        if np.any(r < 0) or np.any(r > R * (1 + 1e-12)):
            raise DomainError("radius outside 0 < r_l < R_l")
    val = haar_rphi_constant(n) * np.prod(r, axis=-1)
    for j, k in _pairs(n):
        if k > j + 1:
            val = val * np.tan(point.phi[..., j - 1, k - 1])
    return val


def haar_rphi_radius_marginal_n2(r: np.ndarray) -> np.ndarray:
    """Marginal density ``2 r`` of ``r_1 = |v_{11}|`` for ``n = 2``."""
    r = np.asarray(r, dtype=float)
    return np.where((r >= 0) & (r <= 1), 2 * r, 0.0)
