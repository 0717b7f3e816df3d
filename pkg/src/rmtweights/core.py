"""Matrix spaces, ensemble specifications, samplers and spectral extraction.

Seven spaces are supported.  ``Herm`` (Hermitian), the four members of the
Hankel class (``IoEven``/``IoOdd`` imaginary antisymmetric, ``Usp`` imaginary
symplectic Lie algebra, ``ChiralRect`` complex rectangular), ``HermPlus``
(positive definite) and ``Unitary``.

Gaussian convention used throughout the package: ``F(X) ∝ exp(-tr X^2 / 2σ^2)``
on Herm and on the antisymmetric / symplectic spaces and
``F(X) ∝ exp(-tr X^†X / σ^2)`` on rectangular matrices.  At ``σ = 1`` the
Hermitian diagonal is standard normal and every other (pseudo-)diagonal
coordinate is ``N(0, 1/2)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gamma, lgamma, pi, prod
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError, NumericError

GAUSSIAN_CONVENTION = (
    "F ~ exp(-tr X^2/(2 scale^2)) on herm/io/usp, exp(-tr X^H X/scale^2) on chiral; "
    "herm diagonal variance scale^2, other pseudo-diagonal variance scale^2/2"
)

Rational = Union[int, Fraction]


class SpaceKind(enum.Enum):
    HERM = "herm"
    IO_EVEN = "io_even"
    IO_ODD = "io_odd"
    USP = "usp"
    CHIRAL = "chiral"
    HERM_PLUS = "hermplus"
    UNITARY = "unitary"


HANKEL_KINDS = frozenset({SpaceKind.IO_EVEN, SpaceKind.IO_ODD, SpaceKind.USP, SpaceKind.CHIRAL})


class SpectralDomain(enum.Enum):
    REAL_LINE = "RealLine"
    HALF_LINE = "HalfLine"
    TORUS = "Torus"


HALF = Fraction(1, 2)


@dataclass(frozen=True)
class MatrixSpace:
    """A matrix space with ``n`` independent spectral coordinates.

    ``nu`` is the Hankel-class parameter: ``-1/2`` for even antisymmetric,
    ``+1/2`` for odd antisymmetric and symplectic, ``0, 1, 2, ...`` for
    ``n x (n+nu)`` rectangular matrices.  It is ``None`` elsewhere.
    """

    kind: SpaceKind
    n: int
    nu: Optional[Fraction] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", SpaceKind(self.kind))
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool) or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        nu = self.nu
        if nu is not None:
            nu = Fraction(nu)
        expected = {SpaceKind.IO_EVEN: -HALF, SpaceKind.IO_ODD: HALF, SpaceKind.USP: HALF}
        if self.kind in expected:
            if nu is None:
                nu = expected[self.kind]
            if nu != expected[self.kind]:
                raise ConfigurationError(f"{self.kind.value} requires nu={expected[self.kind]}, got {nu}")
        elif self.kind is SpaceKind.CHIRAL:
            nu = Fraction(0) if nu is None else nu
            if nu.denominator != 1 or nu < 0:
                raise ConfigurationError(f"chiral spaces need integer nu >= 0, got {nu}")
        elif nu is not None:
            raise ConfigurationError(f"{self.kind.value} takes no nu parameter")
        object.__setattr__(self, "nu", nu)

    @classmethod
    def herm(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.HERM, n)

    @classmethod
    def io_even(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.IO_EVEN, n)

    @classmethod
    def io_odd(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.IO_ODD, n)

    @classmethod
    def usp(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.USP, n)

    @classmethod
    def chiral(cls, n: int, nu: int = 0) -> "MatrixSpace":
        return cls(SpaceKind.CHIRAL, n, Fraction(nu))

    @classmethod
    def hermplus(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.HERM_PLUS, n)

    @classmethod
    def unitary(cls, n: int) -> "MatrixSpace":
        return cls(SpaceKind.UNITARY, n)

    @property
    def is_hankel(self) -> bool:
        return self.kind in HANKEL_KINDS

    @property
    def ambient_shape(self) -> tuple[int, int]:
        n = self.n
        if self.kind in (SpaceKind.IO_EVEN, SpaceKind.USP):
            return (2 * n, 2 * n)
        if self.kind is SpaceKind.IO_ODD:
            return (2 * n + 1, 2 * n + 1)
        if self.kind is SpaceKind.CHIRAL:
            return (n, n + int(self.nu))
        return (n, n)

    @property
    def spectral_domain(self) -> SpectralDomain:
        if self.kind is SpaceKind.HERM:
            return SpectralDomain.REAL_LINE
        if self.kind is SpaceKind.UNITARY:
            return SpectralDomain.TORUS
        return SpectralDomain.HALF_LINE

    def c_nu(self) -> float:
        """Normalization constant ``prod_j j! Gamma(j+nu+1)`` of the Hankel class.

        The symplectic space carries an extra ``2^{n(n-1)}`` in its Weyl
        relation; that factor is *not* included here (see ``weyl_prefactor``).
        """
        if not self.is_hankel:
            raise ConfigurationError(f"c_nu is defined only for the Hankel class, not {self.kind.value}")
        return hankel_constant(self.n, self.nu)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "n": self.n, "nu": None if self.nu is None else str(self.nu)}


def hankel_constant(n: int, nu: Rational) -> float:
    nu = float(nu)
    return float(prod(factorial(j) * gamma(j + nu + 1) for j in range(n)))


def superfactorial(n: int) -> int:
    """``prod_{j=0}^{n} j!``."""
    return prod(factorial(j) for j in range(n + 1))


# ---------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class Gaussian:
    scale: float = 1.0


@dataclass(frozen=True)
class Ginibre:
    scale: float = 1.0


@dataclass(frozen=True)
class WishartLike:
    """``X = G^† G`` with ``G`` a ``dof x n`` complex Ginibre matrix, ``E|g|^2 = 1``."""

    dof: int


@dataclass(frozen=True)
class HaarUniform:
    pass


@dataclass(frozen=True)
class CustomLogDensity:
    """User density given by ``log F(X)``.

    Invariance under the space's group action is declared by the caller, not
    checked.  Sampling requires an explicit ``sampler(rng, count)``.
    """

    log_density: Callable[[np.ndarray], float]
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None


Density = Union[Gaussian, Ginibre, WishartLike, HaarUniform, CustomLogDensity]


@dataclass(frozen=True)
class EnsembleSpec:
    space: MatrixSpace
    density: Density = field(default_factory=Gaussian)

    def __post_init__(self):
        kind = self.space.kind
        d = self.density
        ok = (
            isinstance(d, CustomLogDensity)
            or (isinstance(d, Gaussian) and kind in (SpaceKind.HERM, *HANKEL_KINDS))
            or (isinstance(d, Ginibre) and kind is SpaceKind.CHIRAL)
            or (isinstance(d, WishartLike) and kind is SpaceKind.HERM_PLUS)
            or (isinstance(d, HaarUniform) and kind is SpaceKind.UNITARY)
        )
        if not ok:
            raise ConfigurationError(
                f"density {type(d).__name__} is not supported on space {kind.value}"
            )
        if isinstance(d, (Gaussian, Ginibre)) and not d.scale > 0:
            raise ConfigurationError("Gaussian scale must be positive")
        if isinstance(d, WishartLike) and (int(d.dof) != d.dof or d.dof < self.space.n):
            raise ConfigurationError(f"WishartLike needs integer dof >= n, got {d.dof}")

    def describe(self) -> dict:
        d = self.density
        info = {"density": type(d).__name__}
        if isinstance(d, (Gaussian, Ginibre)):
            info["scale"] = d.scale
        if isinstance(d, WishartLike):
            info["dof"] = d.dof
        return {**self.space.describe(), **info}


@dataclass(frozen=True)
class SpectralSample:
    """Sorted spectral values plus optional auxiliary entries.

    Both arrays may carry leading batch dimensions.
    """

    values: np.ndarray
    auxiliary: np.ndarray = field(default_factory=lambda: np.zeros(0))


# ---------------------------------------------------------------------------
# samplers


def _complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    sd = np.sqrt(variance / 2.0)
    return sd * rng.standard_normal(shape) + 1j * sd * rng.standard_normal(shape)


def _sample_herm(rng, count, n, scale):
    a = _complex_normal(rng, (count, n, n), scale**2 / 2.0)
    return a + np.conj(np.swapaxes(a, -1, -2))


def _sample_io(rng, count, m, scale):
    b = rng.standard_normal((count, m, m)) * (scale / 2.0)
    return 1j * (b - np.swapaxes(b, -1, -2))


def _sample_usp(rng, count, n, scale):
    x = np.zeros((count, 2 * n, 2 * n), dtype=complex)
    var = scale**2
    for j in range(n):
        a = rng.standard_normal(count) * np.sqrt(var / 2.0)
        w = _complex_normal(rng, count, var)
        r = 2 * j
        x[:, r, r] = -a
        x[:, r + 1, r + 1] = a
        x[:, r, r + 1] = w
        x[:, r + 1, r] = np.conj(w)
        for k in range(j + 1, n):
            z = _complex_normal(rng, count, var / 2.0)
            w = _complex_normal(rng, count, var / 2.0)
            c = 2 * k
            block = np.empty((count, 2, 2), dtype=complex)
            block[:, 0, 0] = 1j * z
            block[:, 0, 1] = 1j * w
            block[:, 1, 0] = -1j * np.conj(w)
            block[:, 1, 1] = 1j * np.conj(z)
            x[:, r : r + 2, c : c + 2] = block
            x[:, c : c + 2, r : r + 2] = np.conj(np.swapaxes(block, -1, -2))
    return x


def _sample_chiral(rng, count, n, nu, scale):
    return _complex_normal(rng, (count, n, n + nu), scale**2)


def _sample_wishart(rng, count, n, dof):
    g = _complex_normal(rng, (count, dof, n), 1.0)
    return np.conj(np.swapaxes(g, -1, -2)) @ g


def haar_unitary_qr(n: int, rng: np.random.Generator, count: int) -> np.ndarray:
    """Haar unitary matrices from QR of complex Ginibre with phase correction."""
    z = _complex_normal(rng, (count, n, n), 1.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def haar_orthogonal_qr(m: int, rng: np.random.Generator, count: int) -> np.ndarray:
    """Haar orthogonal matrices O(m) from QR of real Gaussian matrices."""
    z = rng.standard_normal((count, m, m))
    q, r = np.linalg.qr(z)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return q * d[..., None, :]


def sample_matrices(spec: EnsembleSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` matrices from ``spec``; shape ``(count, rows, cols)``."""
    if count < 0:
        raise ConfigurationError("count must be non-negative")
    space, d = spec.space, spec.density
    n = space.n
    if isinstance(d, CustomLogDensity):
        if d.sampler is None:
            raise ConfigurationError("CustomLogDensity has no sampler attached")
        out = np.asarray(d.sampler(rng, count))
        if out.shape != (count, *space.ambient_shape):
            raise ConfigurationError(f"custom sampler returned shape {out.shape}")
        return out
    if isinstance(d, HaarUniform):
        return haar_unitary_qr(n, rng, count)
    if isinstance(d, WishartLike):
        return _sample_wishart(rng, count, n, int(d.dof))
    scale = d.scale
    kind = space.kind
    if kind is SpaceKind.HERM:
        return _sample_herm(rng, count, n, scale)
    if kind is SpaceKind.IO_EVEN:
        return _sample_io(rng, count, 2 * n, scale)
    if kind is SpaceKind.IO_ODD:
        return _sample_io(rng, count, 2 * n + 1, scale)
    if kind is SpaceKind.USP:
        return _sample_usp(rng, count, n, scale)
    if kind is SpaceKind.CHIRAL:
        return _sample_chiral(rng, count, n, int(space.nu), scale)
    raise ConfigurationError(f"no sampler for {kind.value}")  # pragma: no cover


def sample_matrix(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    return sample_matrices(spec, rng, 1)[0]


def substreams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def sample_spectra(spec: EnsembleSpec, rng: np.random.Generator, count: int, chunk: int = 50_000) -> np.ndarray:
    """Spectral values of ``count`` draws, computed in memory-bounded chunks."""
    parts = []
    remaining = count
    while remaining > 0:
        m = min(chunk, remaining)
        parts.append(spectra(sample_matrices(spec, rng, m), spec.space))
        remaining -= m
    if not parts:
        return np.zeros((0, spec.space.n))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# spectral extraction


def _check_finite(x: np.ndarray):
    if not np.all(np.isfinite(x)):
        raise NumericError("matrix has non-finite entries")


def spectra(x: np.ndarray, space: MatrixSpace) -> np.ndarray:
    """Vectorized spectral values, shape ``(..., n)``, sorted ascending."""
    x = np.asarray(x)
    _check_finite(x)
    if x.shape[-2:] != space.ambient_shape:
        raise DomainError(f"expected matrices of shape {space.ambient_shape}, got {x.shape[-2:]}")
    n = space.n
    kind = space.kind
    if kind in (SpaceKind.HERM, SpaceKind.HERM_PLUS):
        vals = np.linalg.eigvalsh(x)
        if kind is SpaceKind.HERM_PLUS and np.any(vals <= 0):
            raise DomainError("matrix is not positive definite")
        return vals
    if kind is SpaceKind.UNITARY:
        return np.sort(np.angle(np.linalg.eigvals(x)), axis=-1)
    if kind is SpaceKind.CHIRAL:
        sv = np.linalg.svd(x, compute_uv=False)
        return np.sort(sv**2, axis=-1)
    e = np.linalg.eigvalsh(x)
    if kind is SpaceKind.IO_ODD:
        zero = e[..., n]
        norm = np.maximum(np.max(np.abs(e), axis=-1), np.finfo(float).tiny)
        if np.any(np.abs(zero) > 1e-8 * norm):
            raise NumericError("odd antisymmetric matrix lacks its structural zero eigenvalue")
        upper = e[..., n + 1 :]
    else:
        upper = e[..., n:]
    lower = e[..., :n][..., ::-1]
    lam = 0.5 * (upper - lower)
    return lam**2


def pseudo_diagonal(x: np.ndarray, space: MatrixSpace) -> np.ndarray:
    """Vectorized (pseudo-)diagonal entries, shape ``(..., n)``."""
    x = np.asarray(x)
    _check_finite(x)
    n = space.n
    kind = space.kind
    if kind is SpaceKind.HERM:
        return np.real(np.diagonal(x, axis1=-2, axis2=-1)).copy()
    if kind in (SpaceKind.IO_EVEN, SpaceKind.IO_ODD):
        idx = np.arange(n)
        return np.real(-1j * x[..., 2 * idx, 2 * idx + 1])
    if kind is SpaceKind.USP:
        idx = np.arange(n)
        return np.real(x[..., 2 * idx + 1, 2 * idx + 1])
    if kind is SpaceKind.CHIRAL:
        idx = np.arange(n)
        return np.real(x[..., idx, idx])
    raise ConfigurationError(f"{kind.value} has no pseudo-diagonal; use LU or minor quantities")


def principal_minors(x: np.ndarray) -> np.ndarray:
    """Determinants of the top-left ``l x l`` blocks, ``l = 1..n``."""
    x = np.asarray(x)
    n = x.shape[-1]
    return np.stack([np.linalg.det(x[..., :l, :l]) for l in range(1, n + 1)], axis=-1)


def lu_diagonal(x: np.ndarray) -> np.ndarray:
    """Diagonal of the pivot-free LU factor ``U`` (ratios of principal minors)."""
    m = principal_minors(x)
    prev = np.concatenate([np.ones_like(m[..., :1]), m[..., :-1]], axis=-1)
    if np.any(prev == 0):
        raise DomainError("vanishing principal minor: pivot-free LU does not exist")
    return m / prev


def extract_spectrum(x: np.ndarray, space: MatrixSpace, auxiliary: Optional[str] = None) -> SpectralSample:
    """Spectral values with optional ``auxiliary`` in {"diagonal", "lu"}."""
    vals = spectra(x, space)
    if auxiliary is None:
        aux = np.zeros(vals.shape[:-1] + (0,))
    elif auxiliary == "diagonal":
        aux = pseudo_diagonal(x, space)
    elif auxiliary == "lu":
        if space.kind is SpaceKind.HERM_PLUS:
            aux = np.real(lu_diagonal(x))
        else:
            aux = lu_diagonal(x)
    else:
        raise ConfigurationError(f"unknown auxiliary kind {auxiliary!r}")
    return SpectralSample(vals, aux)


def extract_pseudo_diagonal(x: np.ndarray, space: MatrixSpace) -> np.ndarray:
    return pseudo_diagonal(x, space)


# ---------------------------------------------------------------------------
# Weyl relations


def vandermonde(x: np.ndarray) -> np.ndarray:
    """``prod_{j<k} (x_k - x_j)`` over the last axis."""
    x = np.asarray(x)
    n = x.shape[-1]
    out = np.ones(x.shape[:-1], dtype=x.dtype if np.iscomplexobj(x) else float)
    for j in range(n):
        for k in range(j + 1, n):
            out = out * (x[..., k] - x[..., j])
    return out


def weyl_prefactor(space: MatrixSpace) -> float:
    n = space.n
    if space.kind is SpaceKind.HERM:
        return pi ** (n * (n - 1) / 2) / superfactorial(n)
    if space.kind is SpaceKind.HERM_PLUS:
        return pi ** (n * (n - 1) / 2) / superfactorial(n)
    if space.kind is SpaceKind.UNITARY:
        return 1.0 / ((2 * pi) ** n * factorial(n))
    c = space.c_nu()
    if space.kind is SpaceKind.USP:
        c *= 2.0 ** (n * (n - 1))
    return pi ** (n * (n + float(space.nu))) / (factorial(n) * c)


def weyl_density(space: MatrixSpace, F_on_orbit: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Joint spectral density ``f`` from the matrix density restricted to the orbit base.

    ``F_on_orbit(x)`` must return ``F(iota(x))`` for points of shape ``(..., n)``.
    """
    pref = weyl_prefactor(space)
    kind = space.kind

    def f(x):
        x = np.asarray(x, dtype=float)
        F = np.asarray(F_on_orbit(x))
        if kind is SpaceKind.UNITARY:
            return pref * np.abs(vandermonde(np.exp(1j * x))) ** 2 * F
        jac = vandermonde(x) ** 2
        if space.is_hankel:
            jac = jac * np.prod(x ** float(space.nu), axis=-1)
        return pref * jac * F

    return f


def gaussian_orbit_density(space: MatrixSpace, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Normalized Gaussian ``F`` evaluated on ``iota(x)``."""
    n = space.n
    v = scale**2
    kind = space.kind
    if kind is SpaceKind.HERM:
        logz = 0.5 * n * np.log(2 * pi * v) + 0.5 * n * (n - 1) * np.log(pi * v)
        return lambda x: np.exp(-np.sum(np.asarray(x) ** 2, axis=-1) / (2 * v) - logz)
    if kind in (SpaceKind.IO_EVEN, SpaceKind.IO_ODD):
        m = space.ambient_shape[0]
        logz = 0.25 * m * (m - 1) * np.log(pi * v)
    elif kind is SpaceKind.USP:
        logz = 1.5 * n * np.log(pi * v) + n * (n - 1) * np.log(pi * v / 2)
    elif kind is SpaceKind.CHIRAL:
        logz = n * (n + int(space.nu)) * np.log(pi * v)
    else:
        raise ConfigurationError(f"no Gaussian density on {kind.value}")
    # tr iota(x)^2 / 2 = sum x on every Hankel-class space
    return lambda x: np.exp(-np.sum(np.asarray(x), axis=-1) / v - logz)


def wishart_orbit_density(n: int, dof: int) -> Callable[[np.ndarray], np.ndarray]:
    """Normalized complex Wishart ``F(X) ∝ det X^{dof-n} e^{-tr X}`` on ``diag(x)``."""
    logz = 0.5 * n * (n - 1) * np.log(pi) + sum(lgamma(dof - j + 1) for j in range(1, n + 1))

    def F(x):
        x = np.asarray(x, dtype=float)
        return np.exp((dof - n) * np.sum(np.log(x), axis=-1) - np.sum(x, axis=-1) - logz)

    return F


def haar_orbit_density(n: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda theta: np.ones(np.asarray(theta).shape[:-1])


def reference_density(spec: EnsembleSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Joint spectral density of a built-in ensemble through its Weyl relation."""
    d = spec.density
    space = spec.space
    if isinstance(d, (Gaussian, Ginibre)):
        return weyl_density(space, gaussian_orbit_density(space, d.scale))
    if isinstance(d, WishartLike):
        return weyl_density(space, wishart_orbit_density(space.n, int(d.dof)))
    if isinstance(d, HaarUniform):
        return weyl_density(space, haar_orbit_density(space.n))
    raise ConfigurationError("reference density needs a built-in density")
