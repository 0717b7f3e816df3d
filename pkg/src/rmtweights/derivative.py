"""Derivative principles: from (pseudo-)diagonal or multiplicative weights to spectral densities.

Every principle has the shape ``f = c * Delta(x) * Delta(D) * (P w)`` with a
one-dimensional operator ``D``, a preprocessing map ``P`` and a constant
``c``; :class:`PrincipleCase` records the three for each matrix space.

Symbolic inputs (:class:`WeightFunction`) give symbolic outputs that can be
integrated exactly.  :class:`GridDensity` inputs are differentiated with
finite differences and return grids.
"""
from __future__ import annotations

import enum
import itertools
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, pi
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import signal, special

from .core import MatrixSpace, SpaceKind, SpectralDomain, lu_diagonal, principal_minors, superfactorial, vandermonde
from .errors import AccuracyError, ConfigurationError, DataError, DomainError, DomainMismatchError
from .grid import GridAxis, GridDensity
from .transforms import _fourier_weight, _mellin_weight, abel_inverse_half, abel_inverse_weight
from .weights import (
    OperatorKind,
    VandermondeOperator,
    WeightFunction,
    _grid_vandermonde,
    apply_vandermonde,
    convolve,
    permutations_with_sign,
    times_vandermonde,
)

log = logging.getLogger(__name__)

NEGATIVITY_TOL = 1e-8


# ---------------------------------------------------------------------------
# exact constants


@dataclass(frozen=True)
class ExactConstant:
    """``rational * pi**pi_power`` with exact rational parts."""

    rational: Fraction
    pi_power: Fraction = Fraction(0)

    def __float__(self) -> float:
        return float(self.rational) * pi ** float(self.pi_power)

    def __mul__(self, other: "ExactConstant") -> "ExactConstant":
        return ExactConstant(self.rational * other.rational, self.pi_power + other.pi_power)

    def inverse(self) -> "ExactConstant":
        return ExactConstant(1 / self.rational, -self.pi_power)

    def __str__(self) -> str:
        if self.pi_power == 0:
            return str(self.rational)
        return f"{self.rational} * pi^{self.pi_power}"


def _gamma_exact(z: Fraction) -> ExactConstant:
    """``Gamma(z)`` for positive integer or half-integer ``z``."""
    if z.denominator == 1:
        return ExactConstant(Fraction(factorial(int(z) - 1)))
    if z.denominator != 2 or z <= 0:
        raise DomainError(f"exact Gamma needs an integer or half-integer argument, got {z}")
    k = int(z - Fraction(1, 2))
    # Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
    return ExactConstant(Fraction(factorial(2 * k), 4**k * factorial(k)), Fraction(1, 2))


def exact_hankel_constant(n: int, nu: Fraction) -> ExactConstant:
    """``C_nu = prod_{j<n} j! Gamma(j + nu + 1)`` as an exact constant."""
    out = ExactConstant(Fraction(1))
    for j in range(n):
        out = out * ExactConstant(Fraction(factorial(j))) * _gamma_exact(Fraction(j) + Fraction(nu) + 1)
    return out


class Preprocessor(enum.Enum):
    IDENTITY = "Identity"
    ABEL_INVERSE = "AbelInverse"
    ABEL_HALF = "AbelHalf"
    LU_WEIGHT = "LUWeight"
    TORUS_WEIGHT = "TorusWeight"


@dataclass(frozen=True)
class PrincipleCase:
    """Operator, constant and weight preprocessing of one space."""

    space: MatrixSpace
    operator: VandermondeOperator
    prefactor: ExactConstant
    weight_preprocessor: Preprocessor

    @classmethod
    def for_space(cls, space: MatrixSpace) -> "PrincipleCase":
        n = space.n
        kind = space.kind
        inv_sf = ExactConstant(Fraction(1, superfactorial(n)))
        if kind is SpaceKind.HERM:
            return cls(space, VandermondeOperator.flat(n), inv_sf, Preprocessor.IDENTITY)
        if kind is SpaceKind.HERM_PLUS:
            return cls(space, VandermondeOperator.mellin(n), inv_sf, Preprocessor.LU_WEIGHT)
        if kind is SpaceKind.UNITARY:
            return cls(space, VandermondeOperator.torus(n), inv_sf, Preprocessor.TORUS_WEIGHT)
        nu = Fraction(space.nu)
        # the sign makes Delta(x) Delta(D) positive with D = -x^nu d/dx x^{1-nu} d/dx
        sign = ExactConstant(Fraction((-1) ** (n * (n - 1) // 2)))
        pre = sign * (ExactConstant(Fraction(factorial(n))) * exact_hankel_constant(n, nu)).inverse()
        prep = Preprocessor.ABEL_HALF if nu.denominator == 2 else Preprocessor.ABEL_INVERSE
        return cls(space, VandermondeOperator.hankel(n, float(nu)), pre, prep)

    @property
    def nu(self) -> Optional[float]:
        return None if self.space.nu is None else float(self.space.nu)

    def describe(self) -> dict:
        return {
            **self.space.describe(),
            "operator": self.operator.kind.value,
            "prefactor": str(self.prefactor),
            "preprocessor": self.weight_preprocessor.value,
        }


# ---------------------------------------------------------------------------
# results


@dataclass
class SpectralDensity:
    """Output of a derivative principle.

    ``density`` is a :class:`WeightFunction` on the symbolic path and a
    :class:`GridDensity` otherwise; ``weight`` is the preprocessed weight the
    operator acted on.
    """

    case: PrincipleCase
    density: Union[WeightFunction, GridDensity]
    weight: object = None
    meta: dict = field(default_factory=dict)

    @property
    def symbolic(self) -> bool:
        return isinstance(self.density, WeightFunction)

    def __call__(self, x) -> np.ndarray:
        if self.symbolic:
            return np.real_if_close(self.density.eval(np.asarray(x, dtype=float)), tol=1e6)
        return np.real(self.density.interpolate(np.asarray(x, dtype=float)))

    def integral(self) -> float:
        """Integral over the whole domain (exact on the symbolic path)."""
        return float(np.real(self.density.integral()))


# ---------------------------------------------------------------------------
# input checks


def _require_symmetric(w, what: str = "weight"):
    if isinstance(w, WeightFunction):
        if not w.symmetric:
            raise DomainError(f"{what} is not permutation invariant")
    elif isinstance(w, GridDensity):
        if not w.is_symmetric(1e-8):
            raise DomainError(f"{what} grid is not permutation invariant")
    else:
        raise ConfigurationError(f"expected a WeightFunction or GridDensity, got {type(w).__name__}")


def _require_domain(w, domain: SpectralDomain):
    doms = (w.domain,) if isinstance(w, WeightFunction) else tuple(w.domain)
    if any(d is not domain for d in doms):
        raise DomainMismatchError(f"expected a {domain.value} weight, got {doms[0].value}")


def _require_even(w):
    if isinstance(w, WeightFunction):
        if not w.is_even():
            raise DomainError("pseudo-diagonal weight must be even in every argument")
    else:
        for d in range(w.ndim):
            if np.max(np.abs(np.flip(w.values, axis=d) - w.values)) > 1e-8 * np.max(np.abs(w.values)):
                raise DomainError("pseudo-diagonal grid must be even in every argument")


def _probe_points(w: WeightFunction) -> np.ndarray:
    n = w.n
    per_axis = 24 if n <= 2 else 12
    if w.domain is SpectralDomain.REAL_LINE:
        half = 0.0
        for key in w.terms:
            for p, a, b in key:
                half = max(half, abs(b) / (2 * a) + (6.0 + np.sqrt(p)) / np.sqrt(2 * a))
        axis = np.linspace(-half, half, per_axis)
    elif w.domain is SpectralDomain.HALF_LINE:
        hi = 0.0
        for key in w.terms:
            for g, a in key:
                hi = max(hi, (abs(g) + 1 + 8 * np.sqrt(abs(g) + 1)) / a)
        axis = np.linspace(hi / (8 * per_axis), hi, per_axis)
    else:
        axis = np.linspace(-pi, pi, per_axis, endpoint=False)
    if n <= 3:
        return np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    rng = np.random.default_rng(0)
    return rng.choice(axis, size=(4000, n))


def _check_nonnegative(f: SpectralDensity) -> SpectralDensity:
    """Reject outputs that take clearly negative values on a probe grid."""
    if f.symbolic:
        vals = np.real(f.density.eval(_probe_points(f.density)))
    else:
        vals = np.real(f.density.values)
    peak = float(np.max(np.abs(vals))) if vals.size else 0.0
    low = float(np.min(vals)) if vals.size else 0.0
    f.meta["probe_min"] = low
    if peak > 0 and low < -NEGATIVITY_TOL * peak * (1 if f.symbolic else 1e5):
        raise DomainError(
            f"derivative principle output is negative (min {low:.3g}, peak {peak:.3g}); "
            "the input is not the weight of any invariant ensemble on this space"
        )
    return f


def _times_polynomial(w: WeightFunction, poly: dict) -> WeightFunction:
    """Multiply a RealLine/HalfLine weight by ``sum c * prod x_j^e_j`` (non-negative integer ``e``)."""
    out: dict = {}
    for key, c in w.terms.items():
        for exps, pc in poly.items():
            if w.domain is SpectralDomain.REAL_LINE:
                nk = tuple((p + e, a, b) for (p, a, b), e in zip(key, exps))
            else:
                nk = tuple((g + e, a) for (g, a), e in zip(key, exps))
            out[nk] = out.get(nk, 0) + c * pc
    return WeightFunction(w.domain, w.n, out)


def _vandermonde_poly(n: int, power: int = 1) -> dict:
    """``Delta(x^power)`` as an exponent dictionary."""
    poly: dict = {}
    for perm, sign in permutations_with_sign(n):
        e = tuple(power * p for p in perm)
        poly[e] = poly.get(e, 0) + sign
    return poly


# ---------------------------------------------------------------------------
# the generic driver


def _grid_times_vandermonde(grid: GridDensity, values: np.ndarray) -> np.ndarray:
    pts = grid.mesh()
    if grid.axes[0].periodic:
        return values * vandermonde(np.exp(1j * pts))
    return values * vandermonde(pts)


def _apply_principle(case: PrincipleCase, weight, check: bool = True) -> SpectralDensity:
    c = float(case.prefactor)
    if isinstance(weight, WeightFunction):
        dw = apply_vandermonde(case.operator, weight)
        dens = times_vandermonde(dw).scale(c)
        out = SpectralDensity(case, dens, weight, {"route": "symbolic"})
    elif isinstance(weight, GridDensity):
        dw = _grid_vandermonde(case.operator, weight)
        vals = c * _grid_times_vandermonde(weight, dw)
        if np.max(np.abs(np.imag(vals))) <= 1e-8 * max(np.max(np.abs(vals)), 1e-300):
            vals = np.real(vals)
        dens = GridDensity(weight.domain, weight.axes, vals, normalized=False, meta={"route": "finite differences"})
        out = SpectralDensity(case, dens, weight, {"route": "finite differences"})
    else:
        raise ConfigurationError(f"unsupported weight type {type(weight).__name__}")
    return _check_nonnegative(out) if check else out


# ---------------------------------------------------------------------------
# additive principles


def derivative_principle_herm(f_diag, check: bool = True) -> SpectralDensity:
    """Eigenvalue density of an invariant Hermitian matrix from its diagonal density.

    ``f(x) = Delta(x) Delta(-d/dx) f_diag(x) / prod_{j=0}^n j!``.
    """
    _require_domain(f_diag, SpectralDomain.REAL_LINE)
    _require_symmetric(f_diag, "diagonal density")
    n = f_diag.n if isinstance(f_diag, WeightFunction) else f_diag.ndim
    return _apply_principle(PrincipleCase.for_space(MatrixSpace.herm(n)), f_diag, check)


def _hankel_grid_weight(f_diag: GridDensity, nu: float, axes: Optional[Sequence[GridAxis]]) -> GridDensity:
    """``A_nu^{-1} f_diag`` on a HalfLine grid for ``nu = -1/2`` (interpolated in ``sqrt(x)``)."""
    n = f_diag.ndim
    if nu != -0.5:
        raise DomainError("grid inputs are supported for nu = -1/2 only; pass a WeightFunction otherwise")
    if axes is None:
        hi = min(abs(a.lo) for a in f_diag.axes) ** 2 * 0.8
        axes = [GridAxis(hi / 400, hi, 400)] * n
    axes = tuple(axes)
    pts = np.stack(np.meshgrid(*[a.points for a in axes], indexing="ij"), axis=-1)
    vals = f_diag.interpolate(np.sqrt(pts)) / np.prod(np.sqrt(pts), axis=-1) * pi ** (n / 2)
    return GridDensity((SpectralDomain.HALF_LINE,) * n, axes, vals, normalized=False)


def derivative_principle_hankel_unified(f_diag, nu, check: bool = True, axes: Optional[Sequence[GridAxis]] = None) -> SpectralDensity:
    """Squared-singular-value density on the Hankel class from the pseudo-diagonal density.

    ``f(x) = (-1)^{n(n-1)/2} Delta(x) Delta(-x^nu d/dx x^{1-nu} d/dx) [A_nu^{-1} f_diag](x) / (n! C_nu)``.
    ``f_diag`` is a function of the pseudo-diagonal entries themselves; the
    square-root substitution happens inside the inverse Abel step.
    """
    nu = Fraction(nu).limit_denominator(2)
    _require_domain(f_diag, SpectralDomain.REAL_LINE)
    _require_symmetric(f_diag, "pseudo-diagonal density")
    _require_even(f_diag)
    n = f_diag.n if isinstance(f_diag, WeightFunction) else f_diag.ndim
    if nu == Fraction(-1, 2):
        space = MatrixSpace.io_even(n)
    elif nu == Fraction(1, 2):
        space = MatrixSpace.io_odd(n)
    else:
        space = MatrixSpace.chiral(n, int(nu))
    return _hankel_principle(PrincipleCase.for_space(space), f_diag, check, axes)


def _hankel_principle(case: PrincipleCase, f_diag, check: bool, axes=None) -> SpectralDensity:
    nu = case.nu
    if isinstance(f_diag, GridDensity):
        weight = _hankel_grid_weight(f_diag, nu, axes)
    elif case.weight_preprocessor is Preprocessor.ABEL_HALF:
        weight = abel_inverse_half(f_diag, nu)
    else:
        weight = abel_inverse_weight(f_diag, int(nu))
    return _apply_principle(case, weight, check)


def derivative_principle_io_even(f_diag, check: bool = True, axes: Optional[Sequence[GridAxis]] = None) -> SpectralDensity:
    """Density of the ``x = lambda^2`` for ``i o(2n)`` from the pseudo-diagonal density."""
    _require_domain(f_diag, SpectralDomain.REAL_LINE)
    _require_symmetric(f_diag, "pseudo-diagonal density")
    _require_even(f_diag)
    n = f_diag.n if isinstance(f_diag, WeightFunction) else f_diag.ndim
    return _hankel_principle(PrincipleCase.for_space(MatrixSpace.io_even(n)), f_diag, check, axes)


def derivative_principle_io_odd(f_diag, check: bool = True, space: Optional[MatrixSpace] = None) -> SpectralDensity:
    """Density of ``x = lambda^2`` for ``i o(2n+1)`` (and ``i usp(2n)``) from the pseudo-diagonal.

    At ``n = 1`` this is ``f(x) = -f_diag'(sqrt x)``.
    """
    if not isinstance(f_diag, WeightFunction):
        raise DomainError("the odd principle needs a symbolic weight (it differentiates the input)")
    _require_domain(f_diag, SpectralDomain.REAL_LINE)
    _require_symmetric(f_diag, "pseudo-diagonal density")
    _require_even(f_diag)
    space = space or MatrixSpace.io_odd(f_diag.n)
    if space.kind not in (SpaceKind.IO_ODD, SpaceKind.USP) or space.n != f_diag.n:
        raise ConfigurationError("the odd principle applies to io_odd or usp of matching size")
    case = PrincipleCase.for_space(MatrixSpace.io_odd(space.n))
    case = PrincipleCase(space, case.operator, case.prefactor, case.weight_preprocessor)
    return _hankel_principle(case, f_diag, check)


def derivative_principle_usp(f_diag, check: bool = True) -> SpectralDensity:
    """The symplectic case: same relation as the odd antisymmetric case."""
    n = f_diag.n if isinstance(f_diag, WeightFunction) else f_diag.ndim
    return derivative_principle_io_odd(f_diag, check, MatrixSpace.usp(n))


def derivative_principle(space: MatrixSpace, weight, check: bool = True) -> SpectralDensity:
    """Dispatch on the matrix space."""
    kind = space.kind
    if kind is SpaceKind.HERM:
        out = derivative_principle_herm(weight, check)
    elif kind is SpaceKind.IO_EVEN:
        out = derivative_principle_io_even(weight, check)
    elif kind is SpaceKind.IO_ODD:
        out = derivative_principle_io_odd(weight, check)
    elif kind is SpaceKind.USP:
        out = derivative_principle_usp(weight, check)
    elif kind is SpaceKind.CHIRAL:
        out = derivative_principle_hankel_unified(weight, space.nu, check)
    elif kind is SpaceKind.HERM_PLUS:
        out = derivative_principle_hermplus(weight, check)
    else:
        out = derivative_principle_unitary(weight, check)
    if out.case.space.n != space.n:
        raise ConfigurationError("weight arity does not match the space")
    return out


def eigenvalue_form_io(f_diag: WeightFunction, parity: str, check: bool = True) -> SpectralDensity:
    """Joint density of the signed eigenvalues ``lambda`` of ``i o(2n)`` / ``i o(2n+1)``.

    With ``s = (-1)^{n(n-1)/2}``, even: ``c Delta(lambda^2) Delta(-d^2/dlambda^2) f_diag`` with
    ``c = s pi^{n/2} / (2^{n(n-1)} n! C_{-1/2})``; odd: ``c prod(lambda) Delta(lambda^2)
    Delta(-d^2/dlambda^2) prod(-d/dlambda) f_diag`` with ``c = s pi^{n/2} / (2^{n^2} n! C_{1/2})``.
    Normalized on ``R^n``; it equals ``f(lambda^2) prod |lambda_j|``.
    """
    if not isinstance(f_diag, WeightFunction):
        raise DomainError("eigenvalue forms need a symbolic weight")
    _require_domain(f_diag, SpectralDomain.REAL_LINE)
    _require_symmetric(f_diag, "pseudo-diagonal density")
    _require_even(f_diag)
    n = f_diag.n
    if parity not in ("even", "odd"):
        raise ConfigurationError("parity must be 'even' or 'odd'")
    nu = Fraction(-1, 2) if parity == "even" else Fraction(1, 2)
    two_power = n * (n - 1) if parity == "even" else n * n
    sign = (-1) ** (n * (n - 1) // 2)
    const = ExactConstant(Fraction(sign, 2**two_power * factorial(n)), Fraction(n, 2)) * exact_hankel_constant(n, nu).inverse()
    w = f_diag
    if parity == "odd":
        from .weights import apply_one_dim

        for j in range(n):
            w = apply_one_dim(OperatorKind.FLAT, j, w)
    w = apply_vandermonde(VandermondeOperator(OperatorKind.FLAT_SECOND, n), w)
    w = _times_polynomial(w, _vandermonde_poly(n, 2))
    if parity == "odd":
        w = _times_polynomial(w, {(1,) * n: 1.0})
    dens = w.scale(float(const))
    space = MatrixSpace.io_even(n) if parity == "even" else MatrixSpace.io_odd(n)
    case = PrincipleCase(space, VandermondeOperator(OperatorKind.FLAT_SECOND, n), const, Preprocessor.IDENTITY)
    out = SpectralDensity(case, dens, f_diag, {"route": "symbolic", "form": "eigenvalue"})
    return _check_nonnegative(out) if check else out


# ---------------------------------------------------------------------------
# additive convolution


def _grid_convolve(a: GridDensity, b: GridDensity) -> GridDensity:
    for xa, xb in zip(a.axes, b.axes):
        if abs(xa.step - xb.step) > 1e-12 * max(xa.step, xb.step):
            raise DomainMismatchError("grid convolution needs equal steps on every axis")
    vals = signal.fftconvolve(a.values, b.values, mode="full")
    for ax in a.axes:
        vals = vals * ax.step
    axes = tuple(GridAxis(xa.lo + xb.lo, xa.hi + xb.hi, xa.count + xb.count - 1) for xa, xb in zip(a.axes, b.axes))
    return GridDensity(a.domain, axes, vals, normalized=False, meta={"route": "fftconvolve"})


def additive_convolve(fA_diag, fB_diag, space: MatrixSpace, check: bool = True) -> SpectralDensity:
    """Spectral density of ``A + B`` for independent invariant ``A, B`` on an additive space.

    The (pseudo-)diagonal densities convolve; the space's principle is
    applied to the result.  Gaussian-family weights convolve in closed form.
    """
    if space.kind in (SpaceKind.HERM_PLUS, SpaceKind.UNITARY):
        raise ConfigurationError("additive convolution is defined on Herm and the Hankel class")
    if type(fA_diag) is not type(fB_diag):
        raise DomainMismatchError("both operands must be symbolic or both gridded")
    _require_domain(fA_diag, SpectralDomain.REAL_LINE)
    _require_domain(fB_diag, SpectralDomain.REAL_LINE)
    if isinstance(fA_diag, WeightFunction):
        if fA_diag.n != fB_diag.n:
            raise DomainMismatchError("operands have different arities")
        fc = convolve(fA_diag, fB_diag)
    else:
        fc = _grid_convolve(fA_diag, fB_diag)
    if space.kind in (SpaceKind.IO_ODD, SpaceKind.USP) and isinstance(fc, GridDensity):
        raise DomainError("the odd principle needs symbolic operands")
    out = derivative_principle(space, fc, check)
    out.meta["convolved_weight"] = fc
    return out


# ---------------------------------------------------------------------------
# positive definite matrices


def wishart_lu_weight(n: int, dof: int) -> WeightFunction:
    """Closed-form multiplicative weight of complex Wishart ``G^H G`` with ``G`` of size ``dof x n``.

    The LU pivots ``u_j`` are independent Gamma(dof - j + 1) variables, so
    ``g(u) = prod u_j^{dof-n} e^{-u_j} / prod_j Gamma(dof - j + 1)``.
    """
    if dof < n:
        raise DomainError("Wishart weight needs dof >= n")
    norm = 1.0
    for j in range(1, n + 1):
        norm *= factorial(dof - j)
    return WeightFunction(SpectralDomain.HALF_LINE, n, {tuple((dof - n, 1.0) for _ in range(n)): 1.0 / norm})


def wishart_lu_marginal(n: int, dof: int) -> WeightFunction:
    """Density ``f_u`` of the LU pivots of complex Wishart (not symmetric for ``n > 1``)."""
    key = tuple((float(dof - j), 1.0) for j in range(1, n + 1))
    norm = 1.0
    for j in range(1, n + 1):
        norm *= factorial(dof - j)
    return WeightFunction(SpectralDomain.HALF_LINE, n, {key: 1.0 / norm})


def lu_weight_hermplus(
    source=None,
    *,
    n: Optional[int] = None,
    dof: Optional[int] = None,
    axes: Optional[Sequence[GridAxis]] = None,
    bins: int = 40,
):
    """Multiplicative weight ``g(u) = f_u(u) prod u_j^{j-n}`` of an ensemble on positive matrices.

    With ``dof`` (and ``n``) the closed Wishart form is returned.  With an
    array of positive definite matrices ``source`` the pivot density ``f_u``
    is histogrammed and reweighted; the result is a GridDensity at bin
    centres with per-bin standard errors.
    """
    if source is None:
        if n is None or dof is None:
            raise ConfigurationError("closed form needs n and dof")
        return wishart_lu_weight(n, dof)
    X = np.asarray(source)
    if X.ndim != 3 or X.shape[-1] != X.shape[-2]:
        raise DataError("expected an array of square matrices")
    u = np.real(lu_diagonal(X))
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise DataError("non-positive LU pivot: the sample is not positive definite")
    m, nn = u.shape
    if axes is None:
        hi = float(np.quantile(u, 0.999)) * 1.2
        axes = [GridAxis(hi / (2 * bins), hi - hi / (2 * bins), bins)] * nn
    axes = tuple(axes)
    edges = [np.concatenate([a.points - a.step / 2, [a.points[-1] + a.step / 2]]) for a in axes]
    counts, _ = np.histogramdd(u, bins=edges)
    vol = np.prod([a.step for a in axes])
    f_u = counts / (m * vol)
    se = np.sqrt(counts) / (m * vol)
    pts = np.stack(np.meshgrid(*[a.points for a in axes], indexing="ij"), axis=-1)
    power = np.prod([pts[..., j] ** (j + 1 - nn) for j in range(nn)], axis=0)
    return GridDensity(
        (SpectralDomain.HALF_LINE,) * nn,
        axes,
        f_u * power,
        normalized=False,
        stderr=se * power,
        meta={"route": "histogram", "samples": m, "f_u": f_u},
    )


def derivative_principle_hermplus(g, check: bool = True) -> SpectralDensity:
    """``f(x) = Delta(x) Delta(-x d/dx) g(x) / prod_{j=0}^n j!`` on positive definite matrices."""
    _require_domain(g, SpectralDomain.HALF_LINE)
    _require_symmetric(g, "multiplicative weight")
    n = g.n if isinstance(g, WeightFunction) else g.ndim
    return _apply_principle(PrincipleCase.for_space(MatrixSpace.hermplus(n)), g, check)


def _mellin_atom_convolution(a1, a2, x: np.ndarray) -> np.ndarray:
    """``int y^g e^{-a y} (x/y)^h e^{-b x/y} dy/y`` in closed form (modified Bessel K)."""
    g, a = a1
    h, b = a2
    mu = g - h
    z = 2 * np.sqrt(a * b * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        # scaled Bessel K keeps the power prefactor and e^{-z} in one exponent
        logp = h * np.log(x) + 0.5 * mu * np.log(b * x / a) - z
        return 2 * np.exp(logp) * special.kve(mu, z)


def multiplicative_convolve(gA: WeightFunction, gB: WeightFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Weight of ``A^{1/2} B A^{1/2}``: the Mellin convolution ``int gA(y) gB(x/y) dy/y`` per axis."""
    gA._check(gB)
    if gA.domain is not SpectralDomain.HALF_LINE:
        raise DomainMismatchError("multiplicative convolution needs HalfLine weights")

    def g(x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("multiplicative weights are evaluated at x > 0")
        out = np.zeros(x.shape[:-1])
        for k1, c1 in gA.terms.items():
            for k2, c2 in gB.terms.items():
                term = np.full(x.shape[:-1], complex(c1 * c2))
                for j in range(gA.n):
                    term = term * _mellin_atom_convolution(k1[j], k2[j], x[..., j])
                out = out + np.real(term)
        return out

    return g


# ---------------------------------------------------------------------------
# unitary matrices


def _strict_decreasing(n: int, cutoff: int):
    return [s for s in itertools.combinations(range(cutoff, -cutoff - 1, -1), n)]


def unitary_weight_g(source, cutoff: int = 4, radius_tol: float = 1e-9) -> WeightFunction:
    """Estimate the multiplicative weight of a unitary ensemble from samples.

    ``source`` is an array of unitary matrices or of their principal minors
    (shape ``(m, n)``, complex).  The Fourier coefficient at a strictly
    decreasing ``s`` is the sample mean of
    ``prod_{j<n} m_j^{s_j - s_{j+1} - 1} m_n^{s_n}``; other orderings follow
    by symmetry and repeated indices vanish.  The result is a trigonometric
    polynomial truncated at ``|s_j| <= cutoff``, with ``meta`` standard
    errors available via :func:`unitary_weight_coefficients`.
    """
    coeffs, _ = unitary_weight_coefficients(source, cutoff, radius_tol)
    n = len(next(iter(coeffs)))
    return WeightFunction.trig(n, {tuple(-v for v in s): c / (2 * pi) ** n for s, c in coeffs.items()})


def unitary_weight_coefficients(source, cutoff: int = 4, radius_tol: float = 1e-9):
    """Monte Carlo Fourier coefficients ``F g(s)`` and their standard errors, keyed by ``s``."""
    arr = np.asarray(source)
    if arr.ndim == 3:
        minors = principal_minors(arr).astype(complex)
    elif arr.ndim == 2:
        minors = arr.astype(complex)
    else:
        raise DataError("expected unitary matrices (m, n, n) or principal minors (m, n)")
    n = minors.shape[-1]
    radii = np.abs(minors[:, :-1])
    bad = np.any(radii > 1 + radius_tol, axis=1) | (np.abs(np.abs(minors[:, -1]) - 1) > 1e-6)
    if np.any(bad):
        warnings.warn(f"skipping {int(bad.sum())} samples whose minors leave the unit disc", RuntimeWarning)
        minors = minors[~bad]
    if minors.shape[0] == 0:
        raise DataError("no usable samples")
    coeffs, errs = {}, {}
    for s in _strict_decreasing(n, cutoff):
        vals = np.ones(minors.shape[0], dtype=complex)
        for j in range(n - 1):
            vals = vals * minors[:, j] ** (s[j] - s[j + 1] - 1)
        vals = vals * minors[:, -1] ** s[-1]
        mean = vals.mean()
        se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else np.inf
        for perm in itertools.permutations(range(n)):
            key = tuple(s[p] for p in perm)
            coeffs[key] = mean
            errs[key] = se
    return coeffs, errs


def derivative_principle_unitary(g: WeightFunction, check: bool = True) -> SpectralDensity:
    """``f(e^{i theta}) = Delta(e^{i theta}) Delta(i d/dtheta) g(theta) / prod_{j=0}^n j!``.

    Computed exactly on Fourier coefficients.  Coefficients at repeated
    indices are annihilated by the operator; their presence is logged.
    """
    if not isinstance(g, WeightFunction):
        raise DomainError("the unitary principle works on trigonometric-polynomial weights")
    _require_domain(g, SpectralDomain.TORUS)
    _require_symmetric(g, "multiplicative weight")
    repeated = [k for k in g.terms if len(set(k)) < len(k)]
    if repeated:
        msg = f"{len(repeated)} Fourier coefficients at repeated indices are annihilated"
        log.warning(msg)
        warnings.warn(msg, RuntimeWarning)
    out = _apply_principle(PrincipleCase.for_space(MatrixSpace.unitary(g.n)), g, check)
    out.meta["annihilated"] = repeated
    return out


# ---------------------------------------------------------------------------
# spherical-transform identities


def spherical_from_weight(space: MatrixSpace, weight: WeightFunction, s) -> np.ndarray:
    """Spherical transform of the ensemble computed from its weight.

    Herm: ``F f_diag(s)``; Hankel class: ``F f_diag(2 sqrt s)``;
    positive definite: ``M g(s - n + 1)``; unitary: ``F g(s)``.
    """
    s = np.atleast_2d(np.asarray(s))
    kind = space.kind
    if kind is SpaceKind.HERM:
        return _fourier_weight(weight, s.astype(float))
    if space.is_hankel:
        return _fourier_weight(weight, 2 * np.sqrt(s.astype(float)))
    if kind is SpaceKind.HERM_PLUS:
        return _mellin_weight(weight, s.astype(complex) - space.n + 1)
    out = np.zeros(s.shape[0], dtype=complex)
    terms = weight.terms
    for i, sv in enumerate(s.astype(int)):
        out[i] = (2 * pi) ** space.n * terms.get(tuple(-v for v in sv), 0)
    return out


# ---------------------------------------------------------------------------
# polynomial ensembles


def _staggered_axis(count: int, half_width: float, offset: float) -> np.ndarray:
    h = 2 * half_width / count
    return -half_width + h * (np.arange(count) + 0.5) + offset * h


def _det_ratio(transforms: Sequence[Callable], s: np.ndarray) -> np.ndarray:
    """``det[T_k(s_j)] / Delta(s)`` on points ``s`` of shape ``(..., n)``."""
    n = len(transforms)
    cols = [[transforms[k](s[..., j]) for k in range(n)] for j in range(n)]
    mat = np.array(cols, dtype=complex)  # (j, k, ...)
    mat = np.moveaxis(mat, (0, 1), (-2, -1))
    return np.linalg.det(mat) / vandermonde(s)


def _one_dim_transform(w, kind: str) -> Callable:
    if isinstance(w, WeightFunction):
        if w.n != 1:
            raise ConfigurationError("polynomial-ensemble weights must be one-dimensional")
        if kind == "fourier":
            return lambda s: _fourier_weight(w, np.asarray(s, dtype=float)[..., None])
        return lambda s: _mellin_weight(w, np.asarray(s, dtype=complex)[..., None])
    if callable(w):
        return w
    raise ConfigurationError(f"unsupported weight {type(w).__name__}")


def polynomial_ensemble_weight(
    weights: Sequence,
    kind: str = "fourier",
    axes: Optional[Sequence[GridAxis]] = None,
    count: int = 96,
    half_width: float = 14.0,
    contour: float = 1.0,
    decay_tol: float = 1e-7,
):
    """Weight of the polynomial ensemble ``f ∝ Delta(x) det[w_k(x_j)]``.

    ``kind="fourier"`` (real line) returns ``w`` with
    ``Delta(-d/dx) w = det[w_k(x_j)]``:
    ``F w(s) = det[F w_k(s_j)] / (i^{n(n-1)/2} Delta(s))``.
    ``kind="mellin"`` (half line) returns ``w`` with
    ``Delta(-x d/dx) w = det[w_k(x_j)]``: ``M w(s) = det[M w_k(s_j)] / Delta(s)``.

    ``weights`` are one-dimensional WeightFunctions or callables returning
    their transform.  The ratio is sampled on a staggered grid that avoids
    exact collisions ``s_j = s_k`` and inverted by per-axis quadrature.
    """
    n = len(weights)
    if n < 1 or n > 3:
        raise ConfigurationError("polynomial-ensemble weights are supported for 1 <= n <= 3")
    if kind not in ("fourier", "mellin"):
        raise ConfigurationError("kind must be 'fourier' or 'mellin'")
    if n == 1 and isinstance(weights[0], WeightFunction):
        return weights[0]
    trans = [_one_dim_transform(w, kind) for w in weights]
    offsets = [j / n for j in range(n)]
    t_axes = [_staggered_axis(count, half_width, o) for o in offsets]
    tgrid = np.stack(np.meshgrid(*t_axes, indexing="ij"), axis=-1)
    if kind == "fourier":
        ratio = _det_ratio(trans, tgrid) / (1j ** (n * (n - 1) // 2))
    else:
        ratio = _det_ratio(trans, contour + 1j * tgrid)
    mag = np.abs(ratio)
    peak = float(np.max(mag))
    if not np.isfinite(peak):
        raise AccuracyError("det/Delta ratio is not finite on the probe grid")
    rim = max(float(np.max(np.take(mag, [0, -1], axis=d))) for d in range(n))
    if rim > decay_tol * peak:
        raise AccuracyError(
            f"det/Delta ratio does not decay (rim/peak = {rim / peak:.2g}); the ensemble is not representable on this grid",
            error=rim / peak,
        )
    if axes is None:
        if kind == "fourier":
            axes = [GridAxis(-8.0, 8.0, 161)] * n
        else:
            axes = [GridAxis(0.05, 12.0, 240)] * n
    axes = tuple(axes)
    h = 2 * half_width / count
    vals = ratio
    for d, ax in enumerate(axes):
        x = ax.points
        t = t_axes[d]
        if kind == "fourier":
            kern = np.exp(-1j * np.outer(x, t)) * h / (2 * pi)
        else:
            if np.any(x <= 0):
                raise DomainError("Mellin inversion needs positive grid points")
            kern = np.exp(-np.outer(np.log(x), contour + 1j * t)) * h / (2 * pi)
        vals = np.moveaxis(np.tensordot(kern, vals, axes=([1], [d])), 0, d)
    domain = SpectralDomain.REAL_LINE if kind == "fourier" else SpectralDomain.HALF_LINE
    imag = float(np.max(np.abs(np.imag(vals))))
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    if imag > 1e-6 * scale:
        log.warning("polynomial-ensemble weight has imaginary part %.3g (relative)", imag / scale)
    return GridDensity(
        (domain,) * n,
        axes,
        np.real(vals),
        normalized=False,
        meta={"route": f"inverse {kind} of det/Delta", "imag": imag},
    )
