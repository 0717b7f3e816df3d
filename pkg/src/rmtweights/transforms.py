"""Fourier, Hankel, Mellin, Fourier-series and inverse Abel transforms.

Conventions (``n`` variables, products over ``j``):

* Fourier: ``F f(s) = int f(x) prod exp(i x_j s_j) dx``; inverse carries
  ``(2 pi)^{-n}`` and the regulator ``exp(-eps s_j^2)``.
* Hankel: forward kernel ``J_nu(2 sqrt(x s)) (x s)^{-nu/2}``, inverse kernel
  ``J_nu(2 sqrt(x s)) (x s)^{nu/2} exp(-eps s)``.
* Mellin: ``M f(s) = int f(x) prod x_j^{s_j - 1} dx``; inverse along
  ``Re s = c`` with ``(2 pi)^{-n}`` and ``exp(-eps t^2)``.
* Fourier series on ``(-pi, pi]^n`` with ``exp(i theta s)``; inverse sums
  ``(2 pi)^{-n} sum_s c(s) exp(-i theta s - eps s^2)``.

Closed-form paths are used for :class:`WeightFunction` inputs; quadrature
paths accept :class:`GridDensity` objects or vectorized callables.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, gamma, lgamma, pi
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from .core import SpectralDomain
from .errors import AccuracyError, ConfigurationError, DomainError, DomainMismatchError
from .grid import GridAxis, GridDensity
from .weights import (
    OperatorKind,
    WeightFunction,
    apply_atom,
    apply_one_dim,
    gaussian_moment,
    substitute_square,
    times_power,
)


@dataclass
class TransformResult:
    """Transform values at ``points`` (shape ``(..., n)``).

    ``axes`` is set when the points form a tensor grid; ``evaluator`` is set
    when the transform is known in closed form and can be re-evaluated.
    """

    values: np.ndarray
    points: np.ndarray
    meta: dict = field(default_factory=dict)
    axes: Optional[tuple] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def error(self) -> float:
        return float(self.meta.get("error", 0.0))


def _points_from(s) -> tuple[np.ndarray, Optional[tuple]]:
    if isinstance(s, (tuple, list)) and s and all(isinstance(a, GridAxis) for a in s):
        axes = tuple(s)
        pts = np.stack(np.meshgrid(*[a.points for a in axes], indexing="ij"), axis=-1)
        return pts, axes
    pts = np.asarray(s)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    return pts, None


def _result(values, pts, axes, meta, evaluator=None) -> TransformResult:
    return TransformResult(np.asarray(values), pts, meta, axes, evaluator)


def _tensor_quadrature(grid: GridDensity, kernel_fn: Callable[[int, np.ndarray, np.ndarray], np.ndarray], pts: np.ndarray) -> np.ndarray:
    """Trapezoid sum of ``f(x) prod_j kernel_fn(j, x_j, s_j)`` at each point ``s``."""
    flat = pts.reshape(-1, grid.ndim)
    out = np.empty(flat.shape[0], dtype=complex)
    vals = np.asarray(grid.values, dtype=complex)
    ws = [a.weights() for a in grid.axes]
    xs = [a.points for a in grid.axes]
    for m, s in enumerate(flat):
        v = vals
        for j in range(grid.ndim):
            k = kernel_fn(j, xs[j], s[j]) * ws[j]
            v = np.tensordot(k, v, axes=([0], [0]))
        out[m] = v
    return out.reshape(pts.shape[:-1])


def _check_tails(grid: GridDensity, tol: float):
    vals = np.abs(grid.values)
    peak = max(float(np.max(vals)), 1e-300)
    for d, ax in enumerate(grid.axes):
        if ax.periodic:
            continue
        lo = np.take(vals, 0, axis=d)
        hi = np.take(vals, -1, axis=d)
        edge = max(float(np.max(hi)), 0.0 if grid.domain[d] is SpectralDomain.HALF_LINE else float(np.max(lo)))
        if edge > tol * peak:
            raise AccuracyError(f"non-negligible tail on axis {d}: edge/peak = {edge / peak:.3g}")


def _coarsen(grid: GridDensity) -> GridDensity:
    axes, sl = [], []
    for a in grid.axes:
        if a.periodic:
            axes.append(GridAxis(a.lo, a.hi, a.count // 2, periodic=True))
            sl.append(slice(None, None, 2))
        else:
            m = (a.count - 1) // 2
            axes.append(GridAxis(a.lo, a.lo + 2 * m * a.step, m + 1))
            sl.append(slice(0, 2 * m + 1, 2))
    return GridDensity(grid.domain, tuple(axes), grid.values[tuple(sl)], normalized=False)


# ---------------------------------------------------------------------------
# Fourier transform


def fourier_atom(p: int, a: float, beta: complex) -> complex:
    """``int x^p exp(-a x^2 + beta x) dx`` for complex ``beta``."""
    shift = beta / (2 * a)
    total = sum(comb(p, l) * shift ** (p - l) * gaussian_moment(l, a) for l in range(0, p + 1, 2))
    return np.exp(beta * beta / (4 * a)) * total


def _fourier_weight(w: WeightFunction, pts: np.ndarray) -> np.ndarray:
    flat = pts.reshape(-1, w.n).astype(float)
    out = np.zeros(flat.shape[0], dtype=complex)
    for key, c in w.terms.items():
        term = np.full(flat.shape[0], c, dtype=complex)
        for j, (p, a, b) in enumerate(key):
            beta = b + 1j * flat[:, j]
            shift = beta / (2 * a)
            acc = sum(comb(p, l) * shift ** (p - l) * gaussian_moment(l, a) for l in range(0, p + 1, 2))
            term *= np.exp(beta * beta / (4 * a)) * acc
        out += term
    return out.reshape(pts.shape[:-1])


def fourier(f, s, tol: float = 1e-8) -> TransformResult:
    """Multivariate Fourier transform at frequency points or on a frequency grid."""
    pts, axes = _points_from(s)
    if isinstance(f, WeightFunction):
        if f.domain is not SpectralDomain.REAL_LINE:
            raise DomainMismatchError("fourier needs a RealLine weight")
        ev = lambda q: _fourier_weight(f, np.asarray(q, dtype=float))
        return _result(ev(pts), pts, axes, {"scheme": "closed-form", "error": 0.0}, ev)
    if isinstance(f, GridDensity):
        if any(d is not SpectralDomain.REAL_LINE for d in f.domain):
            raise DomainMismatchError("fourier needs a RealLine grid")
        _check_tails(f, max(tol, 1e-10) * 1e3)
        kern = lambda j, x, sj: np.exp(1j * x * sj)
        fine = _tensor_quadrature(f, kern, pts)
        coarse = _tensor_quadrature(_coarsen(f), kern, pts)
        err = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
        return _result(fine, pts, axes, {"scheme": "trapezoid", "nodes": f.values.size, "error": err})
    if callable(f):
        return fourier(_grid_from_callable(f, pts.shape[-1], SpectralDomain.REAL_LINE), s, tol)
    raise ConfigurationError(f"unsupported input {type(f).__name__}")


def _grid_from_callable(f, n, domain, half_width: float = 30.0, count: int = 1201) -> GridDensity:
    if domain is SpectralDomain.REAL_LINE:
        ax = GridAxis(-half_width, half_width, count)
    else:
        ax = GridAxis(0.0, half_width, count)
    return GridDensity.from_function(f, [domain] * n, [ax] * n, normalized=False)


def _regulated(compute: Callable[[float], np.ndarray], epsilon, tol: float, eps0: float = 1e-2, max_halvings: int = 40):
    """Evaluate ``compute(eps)``; ``epsilon=None`` runs the halving schedule."""
    if epsilon is not None:
        if epsilon < 0:
            raise DomainError("regulator must be non-negative")
        return compute(float(epsilon)), {"epsilon": float(epsilon)}
    eps = eps0
    prev = compute(eps)
    for _ in range(max_halvings):
        eps /= 2
        cur = compute(eps)
        diff = float(np.max(np.abs(cur - prev))) if np.size(cur) else 0.0
        if diff < tol:
            return cur, {"epsilon": eps, "schedule_diff": diff}
        prev = cur
    raise AccuracyError(f"regulator schedule did not converge (last change {diff:.3g})", value=cur, error=diff)


def fourier_inverse(g: TransformResult, x, epsilon: Optional[float] = None, tol: float = 1e-8) -> TransformResult:
    """``(2 pi)^{-n} int g(s) prod exp(-i x_j s_j - eps s_j^2) ds`` on the grid of ``g``."""
    if g.axes is None:
        raise ConfigurationError("fourier_inverse needs a transform tabulated on a frequency grid")
    grid = GridDensity((SpectralDomain.REAL_LINE,) * len(g.axes), g.axes, g.values, normalized=False)
    n = grid.ndim
    pts, axes = _points_from(x)
    peak = max(float(np.max(np.abs(g.values))), 1e-300)
    if epsilon == 0:
        try:
            _check_tails(grid, max(tol, 1e-12) * 1e2)
        except AccuracyError as exc:
            raise AccuracyError(f"epsilon=0 requires integrable input: {exc}") from exc

    def compute(eps):
        kern = lambda j, s, xj: np.exp(-1j * s * xj - eps * s * s)
        return _tensor_quadrature(grid, kern, pts) / (2 * pi) ** n

    if peak == 0:
        return _result(np.zeros(pts.shape[:-1]), pts, axes, {"scheme": "trapezoid", "error": 0.0})
    vals, meta = _regulated(compute, epsilon, tol)
    return _result(vals, pts, axes, {"scheme": "trapezoid", **meta})


# ---------------------------------------------------------------------------
# Hankel transform


def hankel_kernel(z, nu: float) -> np.ndarray:
    """``J_nu(2 sqrt z) z^{-nu/2}``, an entire function of ``z``."""
    z = np.asarray(z, dtype=float)
    nu = float(nu)
    out = np.empty_like(z)
    small = z <= 50.0
    out[small] = special.hyp0f1(nu + 1, -z[small]) / gamma(nu + 1)
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = special.jv(nu, 2 * np.sqrt(zb)) * zb ** (-nu / 2)
    return out


def _bessel_zeros(nu: float, count: int) -> np.ndarray:
    if nu == -0.5:
        return (np.arange(1, count + 1) - 0.5) * pi
    if nu == 0.5:
        return np.arange(1, count + 1) * pi
    if float(nu).is_integer() and nu >= 0:
        return special.jn_zeros(int(nu), count)
    raise DomainError(f"Hankel parameter {nu} is not in N_0 or +-1/2")


def wynn_epsilon(partial_sums: Sequence[float]) -> tuple[complex, float]:
    """Wynn epsilon extrapolation; returns the limit estimate and an error proxy."""
    s = [complex(v) for v in partial_sums]
    m = len(s)
    if m < 3:
        return s[-1], abs(s[-1] - s[-2]) if m > 1 else float("inf")
    prev = [0j] * (m + 1)
    cur = list(s)
    estimates = [s[-1]]
    k = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if d == 0:
                nxt.append(complex(np.inf))
            else:
                nxt.append(prev[i + 1] + 1.0 / d)
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0 and np.isfinite(cur[-1]):
            estimates.append(cur[-1])
    best = estimates[-1]
    err = abs(estimates[-1] - estimates[-2]) if len(estimates) > 1 else abs(s[-1] - s[-2])
    return best, float(err)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gl(a: float, b: float):
    return 0.5 * (b - a) * _GL_X + 0.5 * (a + b), 0.5 * (b - a) * _GL_W


def oscillatory_bessel_integral(
    h: Callable[[np.ndarray], np.ndarray], omega: float, nu: float, tol: float = 1e-10, max_intervals: int = 400
) -> tuple[complex, float]:
    """``int_0^inf h(u) du`` where ``h`` oscillates like ``J_nu(2 omega u)``.

    The integral is split at the zeros ``u_k = j_{nu,k} / (2 omega)`` and the
    partial sums are accelerated with Wynn's epsilon algorithm.
    """
    if omega <= 0:
        val, err = integrate.quad(lambda u: float(np.real(h(np.array([u]))[0])), 0, np.inf, limit=400, epsabs=tol * 1e-2)
        return val, err
    zeros = np.concatenate([[0.0], _bessel_zeros(nu, max_intervals) / (2 * omega)])
    partial = []
    total = 0j
    quiet = 0
    for k in range(max_intervals):
        u, w = _gl(zeros[k], zeros[k + 1])
        piece = complex(np.sum(w * h(u)))
        total += piece
        partial.append(total)
        if abs(piece) <= tol * max(abs(total), 1e-300) * 1e-2:
            quiet += 1
            if quiet >= 4:
                return total, abs(piece)
        else:
            quiet = 0
    tail = partial[-30:]
    return wynn_epsilon(tail)


def _hankel_atom(g: float, a: float, s: np.ndarray, nu: float) -> np.ndarray:
    """Closed form of ``int x^g e^{-a x} J_nu(2 sqrt(x s)) (x s)^{-nu/2} dx``."""
    if g <= -1:
        raise DomainError(f"x^{g} e^(-{a} x) is not integrable at 0")
    z = np.asarray(s, dtype=float) / a
    pref = np.exp(lgamma(g + 1) - lgamma(nu + 1) - (g + 1) * np.log(a))
    m = g - nu
    if float(m).is_integer() and m >= 0:
        m = int(m)
        # Kummer: 1F1(g+1; nu+1; -z) = e^{-z} 1F1(-m; nu+1; z), a finite sum
        acc = np.zeros_like(z)
        term = np.ones_like(z)
        for k in range(m + 1):
            acc = acc + term
            term = term * (k - m) * z / ((nu + 1 + k) * (k + 1))
        return pref * np.exp(-z) * acc
    return pref * special.hyp1f1(g + 1, nu + 1, -z)


def _hankel_weight(w: WeightFunction, pts: np.ndarray, nu: float) -> np.ndarray:
    flat = pts.reshape(-1, w.n).astype(float)
    out = np.zeros(flat.shape[0], dtype=complex)
    for key, c in w.terms.items():
        term = np.full(flat.shape[0], c, dtype=complex)
        for j, (g, a) in enumerate(key):
            term *= _hankel_atom(g, a, flat[:, j], nu)
        out += term
    return out.reshape(pts.shape[:-1])


def _check_nu(nu) -> float:
    nu = float(nu)
    if not (nu in (-0.5, 0.5) or (nu.is_integer() and nu >= 0)):
        raise DomainError(f"Hankel parameter {nu} is not in N_0 or +-1/2")
    return nu


def hankel(f, s, nu, tol: float = 1e-10) -> TransformResult:
    """Multivariate Hankel transform."""
    nu = _check_nu(nu)
    pts, axes = _points_from(s)
    if np.any(pts < 0):
        raise DomainError("Hankel frequencies must be non-negative")
    if isinstance(f, WeightFunction):
        if f.domain is not SpectralDomain.HALF_LINE:
            raise DomainMismatchError("hankel needs a HalfLine weight")
        ev = lambda q: _hankel_weight(f, np.asarray(q, dtype=float), nu)
        return _result(ev(pts), pts, axes, {"scheme": "closed-form", "error": 0.0}, ev)
    if isinstance(f, GridDensity):
        kern = lambda j, x, sj: hankel_kernel(x * sj, nu)
        fine = _tensor_quadrature(f, kern, pts)
        coarse = _tensor_quadrature(_coarsen(f), kern, pts)
        return _result(fine, pts, axes, {"scheme": "trapezoid", "error": float(np.max(np.abs(fine - coarse)))})
    if callable(f):
        if pts.shape[-1] != 1:
            raise ConfigurationError("callable Hankel inputs are supported for n = 1; tabulate as a GridDensity otherwise")
        flat = pts.reshape(-1)
        vals, errs = [], []
        for sv in flat:
            # x = u^2 turns the kernel into J_nu(2 u sqrt(s)) with regular spacing of zeros
            h = lambda u, sv=sv: 2 * u * np.asarray(f(u**2), dtype=complex) * hankel_kernel(u**2 * sv, nu)
            v, e = oscillatory_bessel_integral(h, np.sqrt(sv), nu, tol)
            vals.append(v)
            errs.append(e)
        return _result(np.array(vals).reshape(pts.shape[:-1]), pts, axes, {"scheme": "bessel-zero intervals", "error": max(errs)})
    raise ConfigurationError(f"unsupported input {type(f).__name__}")


def _as_function(g) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(g, TransformResult):
        if g.evaluator is None:
            raise ConfigurationError("this inverse needs a transform with a closed-form evaluator or a callable")
        return g.evaluator
    if callable(g):
        return g
    raise ConfigurationError(f"unsupported input {type(g).__name__}")


def hankel_inverse(g, x, nu, epsilon: float = 0.0, tol: float = 1e-9, box: Optional[float] = None, panels: int = 60) -> TransformResult:
    """Inverse Hankel transform of ``g`` (callable on ``s`` with shape ``(..., n)``).

    ``n = 1`` integrates between Bessel zeros with Wynn acceleration.  For
    ``n >= 2`` a tensor Gauss-Legendre rule in ``u = sqrt(s)`` over
    ``[0, box]^n`` is used, with the error estimated from a coarser rule.
    """
    nu = _check_nu(nu)
    fn = _as_function(g)
    pts, axes = _points_from(x)
    if np.any(pts < 0):
        raise DomainError("inverse Hankel points must be non-negative")
    n = pts.shape[-1]
    flat = pts.reshape(-1, n)

    def ukernel(u, xj):
        # 2u J_nu(2u sqrt(x)) (u^2 x)^{nu/2} written through the entire kernel
        return 2 * u ** (1 + 2 * nu) * xj**nu * hankel_kernel(u * u * xj, nu)

    if n == 1:
        vals, errs = [], []
        for xv in flat[:, 0]:
            if xv == 0 and nu < 0:
                raise DomainError("x = 0 is singular for nu = -1/2")
            h = lambda u, xv=xv: np.asarray(fn((u * u)[:, None]), dtype=complex) * np.exp(-epsilon * u * u) * ukernel(u, xv)
            v, e = oscillatory_bessel_integral(h, np.sqrt(xv), nu, tol)
            vals.append(v)
            errs.append(e)
        err = max(errs) if errs else 0.0
        if err > max(tol * 1e3, 1e-6):
            raise AccuracyError(f"oscillatory tail error {err:.3g} above tolerance", value=np.array(vals), error=err)
        return _result(np.array(vals).reshape(pts.shape[:-1]), pts, axes, {"scheme": "bessel-zero intervals + Wynn", "error": err, "epsilon": epsilon})

    if box is None:
        box = 12.0 if epsilon == 0 else min(12.0, np.sqrt(40.0 / epsilon))

    def rule(m):
        edges = np.linspace(0.0, box, m + 1)
        us, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            u, w = _gl(a, b)
            us.append(u)
            ws.append(w)
        return np.concatenate(us), np.concatenate(ws)

    def compute(m):
        u, w = rule(m)
        mesh = np.stack(np.meshgrid(*([u * u] * n), indexing="ij"), axis=-1)
        gv = np.asarray(fn(mesh), dtype=complex) * np.exp(-epsilon * np.sum(mesh, axis=-1))
        out = np.empty(flat.shape[0], dtype=complex)
        for i, xv in enumerate(flat):
            v = gv
            for j in range(n):
                v = np.tensordot(w * ukernel(u, xv[j]), v, axes=([0], [0]))
            out[i] = v
        return out

    fine = compute(panels)
    coarse = compute(panels // 2)
    err = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    if err > max(tol * 1e3, 1e-6):
        raise AccuracyError(f"tensor Hankel quadrature error {err:.3g} above tolerance", value=fine, error=err)
    return _result(fine.reshape(pts.shape[:-1]), pts, axes, {"scheme": "tensor Gauss-Legendre", "error": err, "epsilon": epsilon})


# ---------------------------------------------------------------------------
# Mellin transform


def _mellin_weight(w: WeightFunction, pts: np.ndarray) -> np.ndarray:
    flat = pts.reshape(-1, w.n).astype(complex)
    out = np.zeros(flat.shape[0], dtype=complex)
    for key, c in w.terms.items():
        term = np.full(flat.shape[0], c, dtype=complex)
        for j, (g, a) in enumerate(key):
            z = g + flat[:, j]
            if np.any(z.real <= 0):
                raise DomainError(f"Mellin transform of x^{g} e^(-{a} x) diverges for Re s <= {-g}")
            term *= np.exp(special.loggamma(z) - z * np.log(a))
        out += term
    return out.reshape(pts.shape[:-1])


def mellin_strip(w: WeightFunction) -> tuple[float, float]:
    """Fundamental strip ``(lo, inf)`` of a HalfLine weight (common to all axes)."""
    lo = max((-g for key in w.terms for g, _ in key), default=-np.inf)
    return lo, np.inf


def mellin(f, s, strip: Optional[tuple[float, float]] = None) -> TransformResult:
    """Multivariate Mellin transform at complex points ``s``."""
    pts = np.asarray(s, dtype=complex)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    if strip is not None:
        lo, hi = strip
        if np.any(pts.real <= lo) or np.any(pts.real >= hi):
            raise DomainError(f"Mellin argument outside the declared strip ({lo}, {hi})")
    if isinstance(f, WeightFunction):
        if f.domain is not SpectralDomain.HALF_LINE:
            raise DomainMismatchError("mellin needs a HalfLine weight")
        ev = lambda q: _mellin_weight(f, np.asarray(q, dtype=complex))
        return _result(ev(pts), pts, None, {"scheme": "closed-form", "error": 0.0}, ev)
    if callable(f):
        if pts.shape[-1] != 1:
            raise ConfigurationError("callable Mellin inputs are supported for n = 1")
        vals, errs = [], []
        for sv in pts.reshape(-1):
            # split at x = 1 so quad sees the algebraic endpoint behaviour directly
            def part(lo, hi, take, sv=sv):
                g = lambda x: take(complex(np.asarray(f(np.array([x])))[0]) * x ** (sv - 1)) if x > 0 else 0.0
                return integrate.quad(g, lo, hi, limit=400)

            a1, b1 = part(0.0, 1.0, np.real)
            a2, b2 = part(1.0, np.inf, np.real)
            c1, d1 = part(0.0, 1.0, np.imag)
            c2, d2 = part(1.0, np.inf, np.imag)
            r1, e1 = a1 + a2, b1 + b2
            r2, e2 = c1 + c2, d1 + d2
            if not (np.isfinite(r1) and np.isfinite(r2)):
                raise DomainError(f"Mellin integral diverges at s = {sv}")
            vals.append(r1 + 1j * r2)
            errs.append(e1 + e2)
        return _result(np.array(vals).reshape(pts.shape[:-1]), pts, None, {"scheme": "quad", "error": max(errs)})
    raise ConfigurationError(f"unsupported input {type(f).__name__}")


def mellin_inverse(
    g, x, c: Union[float, Sequence[float]], epsilon: Optional[float] = 0.0, tol: float = 1e-9, half_width: Optional[float] = None
) -> TransformResult:
    """``(2 pi)^{-n} int g(c + i t) prod x_j^{-c_j - i t_j} exp(-eps t_j^2) dt``.

    The trapezoid rule in ``t`` is spectrally accurate for analytic
    integrands; the step is halved until two successive sums agree.
    """
    fn = _as_function(g)
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    if np.any(pts <= 0):
        raise DomainError("inverse Mellin points must be positive")
    n = pts.shape[-1]
    cvec = np.broadcast_to(np.asarray(c, dtype=float), (n,))
    flat = pts.reshape(-1, n)
    T = half_width
    if T is None:
        T = 8.0
        base = abs(complex(np.asarray(fn((cvec + 0j)[None, :])).reshape(-1)[0]))
        while T < 400:
            probe = np.tile(cvec + 0j, (n, 1)) + 1j * T * np.eye(n)
            tailv = np.max(np.abs(np.asarray(fn(probe))))
            reg = np.exp(-(epsilon or 0.0) * T * T)
            if tailv * reg <= 1e-15 * max(base, 1e-300):
                break
            T *= 1.5

    def compute(h, eps):
        t = np.arange(-T, T + h / 2, h)
        mesh = np.stack(np.meshgrid(*([t] * n), indexing="ij"), axis=-1)
        s = cvec + 1j * mesh
        gv = np.asarray(fn(s), dtype=complex) * np.exp(-eps * np.sum(mesh**2, axis=-1))
        out = np.empty(flat.shape[0], dtype=complex)
        for i, xv in enumerate(flat):
            v = gv
            for j in range(n):
                k = h * xv[j] ** (-cvec[j] - 1j * t)
                v = np.tensordot(k, v, axes=([0], [0]))
            out[i] = v
        return out / (2 * pi) ** n

    def at_eps(eps):
        h = 0.5
        prev = compute(h, eps)
        while True:
            h /= 2
            cur = compute(h, eps)
            d = float(np.max(np.abs(cur - prev)))
            if d < tol or h < 1e-3 or (n > 1 and h < 0.03):
                return cur, d
            prev = cur

    if epsilon is None:
        vals, meta = _regulated(lambda e: at_eps(e)[0], None, tol)
        err = meta.get("schedule_diff", 0.0)
    else:
        vals, err = at_eps(epsilon)
        meta = {"epsilon": epsilon}
    return _result(vals.reshape(pts.shape[:-1]), pts, None, {"scheme": "trapezoid", "half_width": T, "error": err, **meta})


# ---------------------------------------------------------------------------
# Fourier series


def fourier_series(f, s, nodes: int = 256) -> TransformResult:
    """Fourier coefficients ``int f(theta) prod exp(i theta_j s_j) d theta`` at integer ``s``."""
    pts = np.asarray(s)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    if not np.all(np.equal(np.mod(pts, 1), 0)):
        raise DomainError("Fourier-series indices must be integers")
    pts = pts.astype(int)
    if isinstance(f, WeightFunction):
        if f.domain is not SpectralDomain.TORUS:
            raise DomainMismatchError("fourier_series needs a Torus weight")
        n = f.n
        terms = f.terms
        flat = pts.reshape(-1, n)
        vals = np.array([terms.get(tuple(-int(v) for v in row), 0.0) for row in flat], dtype=complex) * (2 * pi) ** n
        return _result(vals.reshape(pts.shape[:-1]), pts, None, {"scheme": "exact", "error": 0.0})
    if isinstance(f, GridDensity):
        if not all(a.periodic for a in f.axes):
            raise DomainMismatchError("fourier_series needs periodic grid axes")
        kern = lambda j, th, sj: np.exp(1j * th * sj)
        vals = _tensor_quadrature(f, kern, pts)
        return _result(vals, pts, None, {"scheme": "trapezoid", "nodes": f.values.size, "error": 0.0})
    if callable(f):
        n = pts.shape[-1]
        grid = GridDensity.from_function(f, [SpectralDomain.TORUS] * n, [GridAxis.torus(nodes)] * n, normalized=False)
        return fourier_series(grid, pts)
    raise ConfigurationError(f"unsupported input {type(f).__name__}")


def fourier_series_inverse(coeffs, theta, epsilon: float = 0.0) -> TransformResult:
    """Sum ``(2 pi)^{-n} sum_s c(s) prod exp(-i theta_j s_j - eps s_j^2)``.

    ``coeffs`` is a mapping from integer tuples to values or a
    :class:`TransformResult` of :func:`fourier_series`.
    """
    if isinstance(coeffs, TransformResult):
        idx = np.asarray(coeffs.points).reshape(-1, coeffs.points.shape[-1])
        items = list(zip(map(tuple, idx.tolist()), np.asarray(coeffs.values).reshape(-1)))
    else:
        items = list(coeffs.items())
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0:
        th = th.reshape(1, 1)
    n = th.shape[-1]
    out = np.zeros(th.shape[:-1], dtype=complex)
    for k, c in items:
        k = np.asarray(k, dtype=float)
        out = out + c * np.exp(-1j * th @ k - epsilon * float(k @ k))
    return _result(out / (2 * pi) ** n, th, None, {"scheme": "finite sum", "epsilon": epsilon, "error": 0.0})


# ---------------------------------------------------------------------------
# inverse Abel transform


def _explicit_atom_integral(m: float, a: float) -> dict:
    """``int_x^inf (y - x)^{-1/2} y^m e^{-a y} dy`` as HalfLine atoms in ``x`` (integer ``m >= 0``)."""
    out = {}
    m = int(round(m))
    for i in range(m + 1):
        out[(float(m - i), a)] = out.get((float(m - i), a), 0) + comb(m, i) * gamma(i + 0.5) / a ** (i + 0.5)
    return out


def abel_inverse_weight(f_tilde: WeightFunction, nu: int) -> WeightFunction:
    """Closed-form ``A_nu^{-1} f`` for an even RealLine weight without linear exponents.

    Uses ``x^nu int_x^inf (y-x)^{-1/2} (-d/dy)^{nu+1} f(sqrt y) dy`` per axis,
    i.e. the layered integral with the sign ``(-1)^{nu+1}`` that makes it agree
    with the composition ``H_nu^{-1}[F f(2 sqrt s)]``.
    """
    if int(nu) != nu or nu < 0:
        raise DomainError("abel_inverse_weight needs integer nu >= 0; use abel_inverse_half for +-1/2")
    if not f_tilde.is_even():
        raise DomainError("inverse Abel input must be even in every argument")
    h = substitute_square(f_tilde)
    n = h.n
    # apply (-d/dy)^{nu+1} and the layered integral axis by axis, term by term
    out: dict = {}
    for key, c in h.terms.items():
        per_axis = []
        for atom in key:
            cur = {atom: 1.0}
            for _ in range(int(nu) + 1):
                nxt = {}
                for a1, c1 in cur.items():
                    for a2, c2 in apply_atom(OperatorKind.HALF_FLAT, a1).items():
                        nxt[a2] = nxt.get(a2, 0) + c1 * c2
                cur = nxt
            res = {}
            for (g, a), c1 in cur.items():
                if abs(c1) == 0:
                    continue
                if not float(g).is_integer() or g < 0:
                    raise DomainError("unexpected non-integer power in inverse Abel expansion")
                for (g2, a2), c2 in _explicit_atom_integral(g, a).items():
                    k = (g2 + nu, a2)
                    res[k] = res.get(k, 0) + c1 * c2
            per_axis.append(res)
        for combo in itertools.product(*[r.items() for r in per_axis]):
            nk = tuple(k for k, _ in combo)
            v = c
            for _, cc in combo:
                v *= cc
            out[nk] = out.get(nk, 0) + v
    return WeightFunction(SpectralDomain.HALF_LINE, n, out)


def _numeric_derivatives(fn: Callable[[np.ndarray], np.ndarray], y: np.ndarray, order: int, h: float) -> np.ndarray:
    """Central-difference ``d^order/dy^order`` of a scalar function."""
    coeffs = np.array([(-1) ** k * comb(order, k) for k in range(order + 1)], dtype=float)
    offsets = (order / 2 - np.arange(order + 1)) * h
    return sum(c * fn(y + o) for c, o in zip(coeffs, offsets)) / h**order


def abel_inverse(
    f_tilde,
    x,
    nu: int,
    method: str = "composition",
    tol: float = 1e-9,
) -> TransformResult:
    """Inverse Abel transform ``A_nu^{-1} f`` at points ``x`` (``n = 1`` for numeric inputs).

    ``method="composition"`` evaluates ``H_nu^{-1}[F f(2 sqrt s)]``, the
    defining route.  ``method="explicit"`` evaluates the layered integral with
    ``(-d/dy)^{nu+1}``.  The layered formula as usually printed carries
    ``d/dy^{nu+1}`` without the sign, which yields the negative of the
    composition for ``nu = 0``; the signed version is used here.
    ``method="closed_form"`` uses :func:`abel_inverse_weight`.
    """
    if int(nu) != nu or nu < 0:
        raise DomainError("abel_inverse needs integer nu >= 0; use abel_inverse_half for +-1/2")
    nu = int(nu)
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    if np.any(pts < 0):
        raise DomainError("inverse Abel points must be non-negative")
    if isinstance(f_tilde, WeightFunction) and not f_tilde.is_even():
        raise DomainError("inverse Abel input must be even in every argument")
    if method == "closed_form":
        w = abel_inverse_weight(f_tilde, nu)
        return _result(w.eval(pts), pts, None, {"scheme": "closed-form", "error": 0.0})
    n = pts.shape[-1]
    if method == "composition":
        if isinstance(f_tilde, WeightFunction):
            ff = lambda s: _fourier_weight(f_tilde, 2 * np.sqrt(np.asarray(s, dtype=float)))
        else:
            if n != 1:
                raise ConfigurationError("numeric composition path is implemented for n = 1")
            ff = lambda s: _even_fourier_callable(f_tilde, 2 * np.sqrt(np.asarray(s, dtype=float)))
        res = hankel_inverse(ff, pts, nu, epsilon=0.0, tol=tol)
        res.meta["scheme"] = "composition: " + res.meta["scheme"]
        return res
    if method == "explicit":
        if isinstance(f_tilde, WeightFunction):
            h = substitute_square(f_tilde)
            for j in range(n):
                for _ in range(nu + 1):
                    h = apply_one_dim(OperatorKind.HALF_FLAT, j, h)
            deriv = h.eval
            noise = 0.0
        else:
            if n != 1:
                raise ConfigurationError("numeric explicit path is implemented for n = 1")
            sq = lambda y: np.asarray(f_tilde(np.sqrt(np.maximum(y, 0.0))), dtype=float)
            step = 1e-2
            d1 = lambda y: (-1) ** (nu + 1) * _numeric_derivatives(sq, y[..., 0], nu + 1, step)
            d2 = lambda y: (-1) ** (nu + 1) * _numeric_derivatives(sq, y[..., 0], nu + 1, step / 2)
            probe = pts.reshape(-1, 1) + 1.0
            noise = float(np.max(np.abs(d1(probe) - d2(probe))))
            if noise > 1e-4:
                raise AccuracyError(f"finite-difference derivative noise {noise:.3g} too large", error=noise)
            deriv = lambda y: (4 * d2(y) - d1(y)) / 3
        flat = pts.reshape(-1, n)
        vals, errs = [], []
        for xv in flat:
            # y_j = x_j + t_j^2 removes the endpoint singularity; product structure is not assumed
            if n == 1:
                fn1 = lambda t, xv=xv: 2.0 * float(np.real(deriv(np.array([[xv[0] + t * t]]))[0]))
                v, e = integrate.quad(fn1, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
            else:
                fnn = lambda *t, xv=xv: 2.0**n * float(np.real(deriv(np.array([xv + np.array(t) ** 2]))[0]))
                v, e = integrate.nquad(fnn, [[0, np.inf]] * n, opts={"limit": 100, "epsabs": 1e-12, "epsrel": 1e-10})
            vals.append(v * np.prod(xv**nu))
            errs.append(e)
        return _result(np.array(vals).reshape(pts.shape[:-1]), pts, None, {"scheme": "explicit layered integral", "error": max(errs) + noise})
    raise ConfigurationError(f"unknown inverse Abel method {method!r}")


def _even_fourier_callable(f, s: np.ndarray) -> np.ndarray:
    """``int f(l) cos(l s) dl`` over the real line for an even 1-D callable."""
    flat = np.asarray(s, dtype=float).reshape(-1)
    out = []
    for sv in flat:
        g = lambda l: float(f(np.array([l]))[0])
        if sv == 0:
            v, _ = integrate.quad(g, 0, np.inf, limit=400)
        else:
            v, _ = integrate.quad(g, 0, np.inf, weight="cos", wvar=sv, limlst=200)
        out.append(2 * v)
    return np.array(out).reshape(np.asarray(s).shape[:-1] if np.asarray(s).ndim > 1 else np.asarray(s).shape)


def abel_inverse_half(f_tilde, sign: float, x=None):
    """Closed-form inverse Abel transforms for ``nu = -1/2`` and ``nu = +1/2``.

    ``-1/2``: ``pi^{n/2} f(sqrt x) / prod sqrt(x_j)``.
    ``+1/2``: ``pi^{n/2} prod(-sqrt(x_j) d/dx_j) f(sqrt x)``.
    Returns a HalfLine :class:`WeightFunction` for weight inputs, otherwise the
    values at ``x`` (``n = 1`` callables; the ``+1/2`` case differentiates numerically).
    """
    sign = float(sign)
    if sign not in (-0.5, 0.5):
        raise DomainError("abel_inverse_half takes sign -1/2 or +1/2")
    if isinstance(f_tilde, WeightFunction):
        h = substitute_square(f_tilde)
        n = h.n
        if sign < 0:
            out = times_power(h, -0.5)
        else:
            out = h
            for j in range(n):
                out = apply_one_dim(OperatorKind.SQRT_FLAT, j, out)
        out = out.scale(pi ** (n / 2))
        return out if x is None else out.eval(np.asarray(x, dtype=float))
    if x is None:
        raise ConfigurationError("numeric abel_inverse_half needs evaluation points")
    xs = np.asarray(x, dtype=float).reshape(-1)
    sq = lambda y: np.asarray(f_tilde(np.sqrt(np.maximum(y, 0.0))), dtype=float)
    if sign < 0:
        return np.sqrt(pi) * sq(xs) / np.sqrt(xs)
    h = 1e-4 * np.maximum(xs, 1e-2)
    return np.sqrt(pi) * (-np.sqrt(xs)) * (sq(xs + h) - sq(xs - h)) / (2 * h)
