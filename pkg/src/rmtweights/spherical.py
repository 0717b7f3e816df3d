"""Spherical functions, group-integral oracles and the four spherical transforms.

Spherical functions:

* Hermitian (HCIZ): ``prod_{j<n} j! det[e^{i x_j s_k}] / (Delta(ix) Delta(s))``.
* Hankel class (Bessel group kernel):
  ``prod_{j<n} j! Gamma(j+nu+1) det[J_nu(2 sqrt(x_j s_k)) (x_j s_k)^{-nu/2}] / (Delta(-x) Delta(s))``.
  The kernel depends on ``-x s``; with ``Delta(x)`` in place of ``Delta(-x)``
  the value at ``s = 0`` would be ``(-1)^{n(n-1)/2}`` instead of one.
* Positive definite (Gelfand-Naimark): ``prod_{j<n} j! det[x_j^{s_k}] / (Delta(x) Delta(s))``.
* Unitary: the same formula at ``x = e^{i theta}`` with integer ``s`` (Schur characters).

Coincident arguments are handled without symbolic limits.  The exponential
kernels switch to bivariate divided differences computed from the matrix
exponential of a Kronecker product of bidiagonal node matrices.  The Bessel
kernel, being entire, is averaged over a small complex circle of separated
points (mean-value property).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, gamma, lgamma, pi, prod
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, special

from .core import (
    MatrixSpace,
    SpaceKind,
    haar_orthogonal_qr,
    haar_unitary_qr,
    hankel_constant,
    principal_minors,
    superfactorial,
    vandermonde,
)
from .errors import AccuracyError, ConfigurationError, DataError, DomainError
from .grid import GridDensity
from .transforms import TransformResult

EPS = np.finfo(float).eps
CONDITION_LIMIT = 1e-9
CIRCLE_POINTS = 32


# ---------------------------------------------------------------------------
# determinantal kernels


def _exprel(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z / 2, np.expm1(safe) / safe)


def _opitz(nodes: np.ndarray) -> np.ndarray:
    """Bidiagonal node matrices ``diag(nodes) + superdiagonal ones``, batched."""
    n = nodes.shape[-1]
    J = np.zeros(nodes.shape + (n,), dtype=complex)
    idx = np.arange(n)
    J[..., idx, idx] = nodes
    J[..., idx[:-1], idx[1:]] = 1.0
    return J


def exp_divided_differences(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``det[e^{y_j s_k}] / (Delta(y) Delta(s))`` through bivariate divided differences.

    ``K_{jk} = e^{ys}[y_0..y_j; s_0..s_k]`` is read off the first row of
    ``expm(J_y kron J_s)``; the ratio equals ``det K`` for any nodes,
    coincident or not.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    s = np.asarray(s, dtype=complex)
    m, n = y.shape
    Jy = _opitz(y)
    Js = _opitz(s)
    if Js.ndim == 2:
        Js = np.broadcast_to(Js, (m, n, n))
    A = np.einsum("mab,mcd->macbd", Jy, Js).reshape(m, n * n, n * n)
    E = linalg.expm(A)
    K = E[:, 0, :].reshape(m, n, n)
    return np.linalg.det(K)


def exp_ratio(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``det[e^{y_j s_k}] / (Delta(y) Delta(s))`` for rows of ``y`` (shape ``(m, n)``)."""
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    s = np.asarray(s, dtype=complex)
    M = np.exp(y[:, :, None] * s[None, None, :])
    det = np.linalg.det(M)
    dy = vandermonde(y)
    ds = vandermonde(s)
    rowmax = np.prod(np.max(np.abs(M), axis=2), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = det / (dy * ds)
        bad = (dy == 0) | (ds == 0) | ~np.isfinite(out) | (EPS * rowmax > CONDITION_LIMIT * np.abs(det))
    if np.any(bad):
        out = np.array(out, dtype=complex)
        out[bad] = exp_divided_differences(y[bad], s)
    return out


def hciz(x, s) -> np.ndarray:
    """Harish-Chandra-Itzykson-Zuber spherical function on ``Herm(n)``.

    ``x`` may be a single point or a batch of shape ``(m, n)``; ``s`` is one point.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    n = xb.shape[-1]
    val = prod(factorial(j) for j in range(1, n)) * exp_ratio(1j * xb, np.asarray(s, dtype=float))
    return val[0] if single else val


hciz_unitary = hciz


def gelfand_naimark(x, s) -> np.ndarray:
    """Gelfand-Naimark spherical function on ``Herm_+(n)`` (complex ``s`` allowed)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if np.any(xb <= 0):
        raise DomainError("Gelfand-Naimark spherical function needs positive x")
    n = xb.shape[-1]
    y = np.log(xb)
    corr = np.ones(xb.shape[0], dtype=complex)
    for j in range(n):
        for k in range(j + 1, n):
            corr = corr / (np.exp(y[:, j]) * _exprel(y[:, k] - y[:, j]))
    val = prod(factorial(j) for j in range(n)) * exp_ratio(y, np.asarray(s, dtype=complex)) * corr
    return val[0] if single else val


def _unwrap_circle(theta: np.ndarray) -> np.ndarray:
    """Map angles to an interval of length < 2 pi with the largest gap outside it."""
    th = np.sort(np.mod(theta + pi, 2 * pi) - pi, axis=-1)
    n = th.shape[-1]
    gaps = np.concatenate([np.diff(th, axis=-1), (th[..., :1] + 2 * pi) - th[..., -1:]], axis=-1)
    cut = np.argmax(gaps, axis=-1)
    out = th.copy()
    for i in range(th.shape[0]):
        c = cut[i]
        if c < n - 1:
            out[i, : c + 1] += 2 * pi
    return out


def unitary_character(theta, s) -> np.ndarray:
    """``prod_{j<n} j! det[e^{i theta_j s_k}] / (Delta(e^{i theta}) Delta(s))`` for integer ``s``."""
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    tb = _unwrap_circle(np.atleast_2d(theta))
    s = np.asarray(s)
    if not np.all(np.equal(np.mod(s, 1), 0)):
        raise DomainError("unitary spherical parameters must be integers")
    n = tb.shape[-1]
    y = 1j * tb
    corr = np.ones(tb.shape[0], dtype=complex)
    for j in range(n):
        for k in range(j + 1, n):
            corr = corr / (np.exp(y[:, j]) * _exprel(y[:, k] - y[:, j]))
    val = prod(factorial(j) for j in range(n)) * exp_ratio(y, s.astype(float)) * corr
    return val[0] if single else val


def bessel_entire(z, nu: float) -> np.ndarray:
    """``0F1(; nu+1; -z) = Gamma(nu+1) J_nu(2 sqrt z) z^{-nu/2}`` for real or complex ``z``."""
    z = np.asarray(z, dtype=complex)
    nu = float(nu)
    w = 2 * np.sqrt(z)
    if nu == -0.5:
        return np.cos(w)
    if nu == 0.5:
        ws = np.where(w == 0, 1.0, w)
        return np.where(w == 0, 1.0, np.sin(ws) / ws)
    small = np.abs(z) < 1.0
    out = np.empty(z.shape, dtype=complex)
    out[small] = special.hyp0f1(nu + 1, -z[small])
    big = ~small
    if np.any(big):
        wb = w[big]
        out[big] = gamma(nu + 1) * special.jv(nu, wb) / (wb / 2) ** nu
    return out


def _bessel_ratio_direct(x: np.ndarray, s: np.ndarray, nu: float):
    M = bessel_entire(x[:, :, None] * s[:, None, :], nu)
    det = np.linalg.det(M)
    dx = vandermonde(x)
    ds = vandermonde(s)
    rowmax = np.prod(np.max(np.abs(M), axis=2), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = det / (dx * ds)
        bad = (dx == 0) | (ds == 0) | ~np.isfinite(out) | (EPS * rowmax > CONDITION_LIMIT * np.abs(det))
    return out, bad


def bessel_ratio(x, s, nu: float) -> np.ndarray:
    """``det[0F1(; nu+1; -x_j s_k)] / (Delta(x) Delta(s))`` for rows of ``x``.

    Ill-conditioned rows are evaluated by averaging the analytic function
    ``t -> ratio(x + t dx a, s + t ds b)`` over the unit circle, which
    returns its value at ``t = 0`` by the mean-value property.
    """
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    m, n = x.shape
    s = np.broadcast_to(np.asarray(s, dtype=complex), (m, n))
    out, bad = _bessel_ratio_direct(x, s, nu)
    out = np.array(out, dtype=complex)
    if np.any(bad):
        xb, sb = x[bad], s[bad]
        a = np.arange(n) - (n - 1) / 2
        X = np.max(np.abs(xb), axis=1, keepdims=True)
        S = np.max(np.abs(sb), axis=1, keepdims=True)
        dx = 0.5 / np.maximum(S, 1.0)
        ds = 0.5 / np.maximum(X, 1.0)
        t = np.exp(2j * pi * (np.arange(CIRCLE_POINTS) + 0.5) / CIRCLE_POINTS)
        acc = np.zeros(xb.shape[0], dtype=complex)
        for tk in t:
            v, _ = _bessel_ratio_direct(xb + tk * dx * a, sb + tk * ds * a[::-1], nu)
            acc += v
        out[bad] = acc / CIRCLE_POINTS
    return out


def bessel_group_kernel(x, s, nu) -> np.ndarray:
    """Spherical function of the Hankel class with parameter ``nu``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    n = xb.shape[-1]
    nu = float(nu)
    if np.any(xb < 0) or np.any(np.asarray(s) < 0):
        raise DomainError("Bessel group kernel needs non-negative arguments")
    # the kernel is a function of -x s, so Delta(-x) = (-1)^{n(n-1)/2} Delta(x) fixes phi(x, 0) = 1
    c = (-1) ** (n * (n - 1) // 2) * hankel_constant(n, nu) / gamma(nu + 1) ** n
    val = c * bessel_ratio(xb, np.asarray(s, dtype=float), nu)
    val = val.real
    return val[0] if single else val


# ---------------------------------------------------------------------------
# SphericalFunction


@dataclass(frozen=True)
class SphericalFunction:
    """Spherical function ``phi(x, s)`` of a matrix space.

    ``degenerate_strategy`` names the method used for coincident arguments.
    """

    space: MatrixSpace

    @property
    def degenerate_strategy(self) -> str:
        if self.space.is_hankel:
            return "analytic circle average"
        return "bivariate divided differences (matrix exponential)"

    def __call__(self, x, s) -> np.ndarray:
        kind = self.space.kind
        if kind is SpaceKind.HERM:
            return hciz(x, s)
        if kind is SpaceKind.HERM_PLUS:
            return gelfand_naimark(x, s)
        if kind is SpaceKind.UNITARY:
            return unitary_character(x, s)
        return bessel_group_kernel(x, s, float(self.space.nu))

    def normalization_point(self) -> np.ndarray:
        """Parameter at which ``phi`` is identically one."""
        n = self.space.n
        if self.space.kind is SpaceKind.HERM_PLUS:
            return np.arange(n, dtype=float)
        if self.space.kind is SpaceKind.UNITARY:
            return np.arange(n - 1, -1, -1)
        return np.zeros(n)


def spherical_function(space: MatrixSpace) -> SphericalFunction:
    return SphericalFunction(space)


# ---------------------------------------------------------------------------
# generalized power and group-average oracles


def generalized_power(X: np.ndarray, s) -> np.ndarray:
    """``|X|^s = prod_{j<n} det X_{j x j}^{s_j - s_{j+1} - 1} det X^{s_n}`` (batched)."""
    X = np.asarray(X)
    s = np.asarray(s)
    n = X.shape[-1]
    minors = principal_minors(X).astype(complex)
    out = np.ones(X.shape[:-2], dtype=complex)
    for j in range(n - 1):
        e = s[j] - s[j + 1] - 1
        out = out * minors[..., j] ** e
    return out * minors[..., n - 1] ** s[n - 1]


@dataclass(frozen=True)
class MCEstimate:
    value: complex
    stderr: float
    samples: int

    def within(self, target: complex, sigmas: float = 3.0, floor: float = 1e-12) -> bool:
        return abs(self.value - target) <= sigmas * self.stderr + floor


def _mc_mean(values: np.ndarray) -> MCEstimate:
    v = np.asarray(values, dtype=complex)
    m = v.size
    mean = complex(np.mean(v))
    var = float(np.var(v.real, ddof=1) + np.var(v.imag, ddof=1)) if m > 1 else float("inf")
    return MCEstimate(mean, float(np.sqrt(var / m)), m)


def _chunked(draw: Callable[[np.random.Generator, int], np.ndarray], samples: int, rng: np.random.Generator, chunk: int = 100_000):
    parts = []
    left = samples
    while left > 0:
        k = min(chunk, left)
        parts.append(draw(rng, k))
        left -= k
    return np.concatenate(parts)


def hciz_mc(x, s, samples: int, rng: np.random.Generator) -> MCEstimate:
    """Haar average of ``exp(i tr K diag(x) K^{-1} diag(s))`` (QR Haar sampler)."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    n = x.size

    def draw(r, k):
        K = haar_unitary_qr(n, r, k)
        w = np.abs(K) ** 2
        return np.exp(1j * np.einsum("j,mjk,k->m", s, w, x))

    return _mc_mean(_chunked(draw, samples, rng))


def _antisym_embed(x: np.ndarray, m: int) -> np.ndarray:
    a = np.zeros((m, m))
    for j, v in enumerate(np.sqrt(x)):
        a[2 * j, 2 * j + 1] = v
        a[2 * j + 1, 2 * j] = -v
    return a


def bessel_kernel_mc(x, s, nu, samples: int, rng: np.random.Generator) -> MCEstimate:
    """Group average defining the Hankel-class spherical function.

    ``nu`` integer: ``U(n) x U(n+nu)`` average of ``exp(2 i Re tr K1 Y K2^† S^†)``.
    ``nu = -1/2`` / ``+1/2``: ``O(2n)`` / ``O(2n+1)`` average of
    ``exp(i tr K iota(x) K^T iota(s))`` with ``iota`` the imaginary antisymmetric embedding.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    n = x.size
    nu = float(nu)
    if nu in (-0.5, 0.5):
        m = 2 * n + (1 if nu > 0 else 0)
        A = 1j * _antisym_embed(x, m)
        B = 1j * _antisym_embed(s, m)

        def draw(r, k):
            O = haar_orthogonal_qr(m, r, k)
            M = O @ A @ np.swapaxes(O, -1, -2)
            return np.exp(1j * np.einsum("mab,ba->m", M, B))

    else:
        nn = n + int(nu)
        Y = np.zeros((n, nn))
        Y[np.arange(n), np.arange(n)] = np.sqrt(x)
        S = np.zeros((n, nn))
        S[np.arange(n), np.arange(n)] = np.sqrt(s)

        def draw(r, k):
            K1 = haar_unitary_qr(n, r, k)
            K2 = haar_unitary_qr(nn, r, k)
            M = K1 @ Y @ np.conj(np.swapaxes(K2, -1, -2))
            return np.exp(2j * np.real(np.einsum("mab,ab->m", M, S)))

    return _mc_mean(_chunked(draw, samples, rng))


def gelfand_naimark_mc(x, s, samples: int, rng: np.random.Generator) -> MCEstimate:
    """Haar average of ``|K diag(x) K^{-1}|^s``."""
    x = np.asarray(x, dtype=float)
    n = x.size

    def draw(r, k):
        K = haar_unitary_qr(n, r, k)
        X = (K * x[None, None, :]) @ np.conj(np.swapaxes(K, -1, -2))
        return generalized_power(X, s)

    return _mc_mean(_chunked(draw, samples, rng))


def hciz_quadrature_n2(x, s) -> complex:
    """``n = 2`` HCIZ average using ``|K_11|^2 ~ U(0, 1)``; Gauss-Legendre in that variable."""
    from scipy import integrate

    x1, x2 = map(float, x)
    s1, s2 = map(float, s)
    f = lambda c: np.exp(1j * (s1 * (c * x1 + (1 - c) * x2) + s2 * ((1 - c) * x1 + c * x2)))
    re, _ = integrate.quad(lambda c: f(c).real, 0, 1, epsabs=1e-13, limit=200)
    im, _ = integrate.quad(lambda c: f(c).imag, 0, 1, epsabs=1e-13, limit=200)
    return re + 1j * im


def gelfand_naimark_quadrature_n2(x, s) -> complex:
    """``n = 2`` Gelfand-Naimark average using the top-left entry ``c x1 + (1-c) x2``, ``c ~ U(0, 1)``."""
    from scipy import integrate

    x1, x2 = map(float, x)
    s1, s2 = complex(s[0]), complex(s[1])
    f = lambda c: (c * x1 + (1 - c) * x2) ** (s1 - s2 - 1) * (x1 * x2) ** s2
    re, _ = integrate.quad(lambda c: f(c).real, 0, 1, epsabs=1e-13, limit=200)
    im, _ = integrate.quad(lambda c: f(c).imag, 0, 1, epsabs=1e-13, limit=200)
    return re + 1j * im


# ---------------------------------------------------------------------------
# spherical transforms


def _gl_panels(lo: float, hi: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    xs = [(0.5 * (b - a) * x + 0.5 * (a + b)) for a, b in zip(edges[:-1], edges[1:])]
    ws = [0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(xs), np.concatenate(ws)


def _tensor_nodes(nodes: np.ndarray, weights: np.ndarray, n: int):
    mesh = np.stack(np.meshgrid(*([nodes] * n), indexing="ij"), axis=-1).reshape(-1, n)
    wmesh = np.prod(np.stack(np.meshgrid(*([weights] * n), indexing="ij"), axis=-1).reshape(-1, n), axis=-1)
    return mesh, wmesh


def _spectral_nodes(space: MatrixSpace, box: Optional[float], panels: int):
    """Quadrature nodes for densities on the space's spectral domain."""
    n = space.n
    kind = space.kind
    if kind is SpaceKind.HERM:
        L = box or 10.0
        u, w = _gl_panels(-L, L, panels)
        return _tensor_nodes(u, w, n)
    if kind is SpaceKind.UNITARY:
        m = 2 * panels
        th = -pi + 2 * pi * (np.arange(m) + 0.5) / m
        return _tensor_nodes(th, np.full(m, 2 * pi / m), n)
    # half line: x = u^2 tames x^{-1/2} edges
    U = np.sqrt(box or 60.0)
    u, w = _gl_panels(0.0, U, panels)
    return _tensor_nodes(u * u, 2 * u * w, n)


def _forward(space: MatrixSpace, source, s_points: np.ndarray, phi: Callable, weight: Callable, tol: Optional[float], box, panels) -> TransformResult:
    """Shared forward machinery: samples, grids or callables."""
    s_points = np.atleast_2d(np.asarray(s_points))
    n = space.n
    values, errors = [], []
    if isinstance(source, np.ndarray) and source.ndim == 2 and not callable(source):
        if source.shape[1] != n:
            raise DataError(f"samples have {source.shape[1]} columns, expected {n}")
        if source.shape[0] < 2:
            raise DataError("need at least two samples")
        wts = weight(source)
        for s in s_points:
            est = _mc_mean(phi(source, s) * wts)
            values.append(est.value)
            errors.append(est.stderr)
        scheme = "monte-carlo"
    elif isinstance(source, GridDensity):
        pts = source.mesh().reshape(-1, n)
        cw = (source.values * source.cell_weights()).reshape(-1)
        keep = cw != 0
        pts, cw = pts[keep], cw[keep]
        cw = cw * weight(pts)
        for s in s_points:
            values.append(complex(np.sum(cw * phi(pts, s))))
            errors.append(0.0)
        scheme = "grid quadrature"
    elif callable(source):
        pts, w = _spectral_nodes(space, box, panels)
        fv = np.asarray(source(pts), dtype=float)
        keep = fv != 0
        pts, cw = pts[keep], (w * fv)[keep] * weight(pts[keep])
        pts2, w2 = _spectral_nodes(space, box, max(panels // 2, 1))
        fv2 = np.asarray(source(pts2), dtype=float)
        cw2 = w2 * fv2 * weight(pts2)
        for s in s_points:
            v = complex(np.sum(cw * phi(pts, s)))
            v2 = complex(np.sum(cw2 * phi(pts2, s)))
            values.append(v)
            errors.append(abs(v - v2))
        scheme = "tensor quadrature"
    else:
        raise ConfigurationError(f"unsupported spherical-transform source {type(source).__name__}")
    err = max(errors) if errors else 0.0
    if tol is not None and err > tol:
        raise AccuracyError(f"spherical transform error {err:.3g} exceeds tolerance {tol:.3g}", value=np.array(values), error=err)
    return TransformResult(np.array(values), s_points, {"scheme": scheme, "error": err, "stderr": np.array(errors)})


def _ones(x):
    return np.ones(np.asarray(x).shape[0])


def spherical_herm(source, s, n: Optional[int] = None, tol: Optional[float] = None, box: Optional[float] = None, panels: int = 24) -> TransformResult:
    """``S f(s) = int f(x) phi(x, s) dx`` with the HCIZ spherical function.

    ``source`` is an ``(m, n)`` array of eigenvalue samples, a
    :class:`GridDensity`, or a vectorized density callable.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    space = MatrixSpace.herm(n or s.shape[-1])
    return _forward(space, source, s, hciz, _ones, tol, box, panels)


def spherical_hankel(source, s, nu, n: Optional[int] = None, tol: Optional[float] = None, box: Optional[float] = None, panels: int = 24) -> TransformResult:
    """Spherical transform on the Hankel class with the Bessel group kernel."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    nn = n or s.shape[-1]
    nu = float(nu)
    phi = lambda x, t: bessel_group_kernel(x, t, nu)
    space = MatrixSpace(SpaceKind.CHIRAL, nn, int(nu)) if nu >= 0 and nu.is_integer() else MatrixSpace(
        SpaceKind.IO_EVEN if nu < 0 else SpaceKind.IO_ODD, nn
    )
    return _forward(space, source, s, phi, _ones, tol, box, panels)


def spherical_hermplus(source, s, n: Optional[int] = None, tol: Optional[float] = None, box: Optional[float] = None, panels: int = 24, matrices: bool = False) -> TransformResult:
    """``S f(s) = int f(x) phi(x, s) / prod x_j^n dx`` (Gelfand-Naimark kernel).

    With ``matrices=True`` the source is an array of positive definite
    matrices and the estimate is the sample mean of ``|X|^s / det X^n``.
    """
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    nn = n or s.shape[-1]
    if matrices:
        X = np.asarray(source)
        if np.any(np.linalg.eigvalsh(X) <= 0):
            raise DataError("sample contains a matrix that is not positive definite")
        det = np.real(np.linalg.det(X))
        vals, errs = [], []
        for sv in s:
            est = _mc_mean(generalized_power(X, sv) / det**nn)
            vals.append(est.value)
            errs.append(est.stderr)
        err = max(errs)
        if tol is not None and err > tol:
            raise AccuracyError(f"Monte Carlo error {err:.3g} exceeds tolerance", value=np.array(vals), error=err)
        return TransformResult(np.array(vals), s, {"scheme": "monte-carlo |X|^s", "error": err, "stderr": np.array(errs)})
    if isinstance(source, np.ndarray) and source.ndim == 2 and np.any(source <= 0):
        raise DataError("positive definite eigenvalue samples must be positive")
    weight = lambda x: np.prod(np.asarray(x, dtype=float) ** (-nn), axis=-1)
    return _forward(MatrixSpace.hermplus(nn), source, s, gelfand_naimark, weight, tol, box, panels)


def _check_unitary_s(s: np.ndarray):
    if not np.all(np.equal(np.mod(s, 1), 0)):
        raise DomainError("unitary spherical parameters must be integers")
    if len(set(np.asarray(s, dtype=int).tolist())) != len(s):
        raise DomainError("unitary spherical parameters must be pairwise distinct")


def spherical_unitary(source, s, n: Optional[int] = None, tol: Optional[float] = None, panels: int = 32, matrices: bool = False) -> TransformResult:
    """Spherical transform on ``U(n)``: ``S f(s) = int f phi(e^{i theta}, s) d theta``.

    With ``matrices=True`` the estimate is the mean of ``|X|^t`` with ``t``
    the parameters sorted in decreasing order, which is valid by the
    permutation symmetry of the transform.
    """
    s = np.atleast_2d(np.asarray(s))
    for sv in s:
        _check_unitary_s(sv)
    nn = n or s.shape[-1]
    if matrices:
        X = np.asarray(source)
        vals, errs = [], []
        for sv in s:
            t = np.sort(sv.astype(int))[::-1]
            est = _mc_mean(generalized_power(X, t))
            vals.append(est.value)
            errs.append(est.stderr)
        err = max(errs)
        if tol is not None and err > tol:
            raise AccuracyError(f"Monte Carlo error {err:.3g} exceeds tolerance", value=np.array(vals), error=err)
        return TransformResult(np.array(vals), s, {"scheme": "monte-carlo |X|^s", "error": err, "stderr": np.array(errs)})
    return _forward(MatrixSpace.unitary(nn), source, s, unitary_character, _ones, tol, None, panels)


# -- inverses ---------------------------------------------------------------


def _inverse_check_n(n: int):
    if n > 3:
        raise ConfigurationError("inverse spherical transforms are provided for n <= 3")


def spherical_herm_inverse(Sf: Callable, x, epsilon: float = 0.0, box: float = 12.0, panels: int = 24, tol: float = 1e-6) -> TransformResult:
    """Regularized inverse HCIZ transform.

    ``f(x) = Delta(x)^2 / prod_{j<=n} (j!)^2 int ds/(2 pi)^n Sf(s) phi(-x, s) Delta(s)^2 e^{-eps |s|^2}``,
    evaluated through ``Delta(x)^2 Delta(s)^2 phi(-x, s) = c det[e^{-i x_j s_k}] Delta(x) Delta(s) / (-i)^{n(n-1)/2}``
    so coincident points need no special treatment.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    _inverse_check_n(n)
    pref = prod(factorial(j) for j in range(1, n)) / prod(factorial(j) ** 2 for j in range(1, n + 1)) / (2 * pi) ** n
    pref /= (-1j) ** (n * (n - 1) // 2)

    def compute(p):
        u, w = _gl_panels(-box, box, p)
        S, W = _tensor_nodes(u, w, n)
        g = np.asarray(Sf(S), dtype=complex) * W * vandermonde(S) * np.exp(-epsilon * np.sum(S**2, axis=-1))
        out = np.empty(x.shape[0], dtype=complex)
        for i, xv in enumerate(x):
            D = np.linalg.det(np.exp(-1j * xv[None, :, None] * S[:, None, :]))
            out[i] = np.sum(g * D) * vandermonde(xv)
        return pref * out

    fine = compute(panels)
    err = float(np.max(np.abs(fine - compute(max(panels * 2 // 3, 1)))))
    if err > tol:
        raise AccuracyError(f"inverse spherical quadrature error {err:.3g}", value=fine.real, error=err)
    return TransformResult(fine.real, x, {"scheme": "tensor Gauss-Legendre", "error": err, "epsilon": epsilon})


def spherical_hankel_inverse(Sf: Callable, x, nu, epsilon: float = 0.0, box: float = 64.0, panels: int = 24, tol: float = 1e-6) -> TransformResult:
    """Regularized inverse spherical transform on the Hankel class.

    ``f(x) = Delta(x)^2/(n! C_nu)^2 int ds Sf(s) phi(x, s) Delta(s)^2 prod (x_j s_j)^nu e^{-eps s_j}``,
    integrated in ``u = sqrt(s)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    _inverse_check_n(n)
    nu = float(nu)
    cnu = hankel_constant(n, nu)
    pref = (-1) ** (n * (n - 1) // 2) / (factorial(n) ** 2 * cnu) / gamma(nu + 1) ** n

    def compute(p):
        u, w = _gl_panels(0.0, np.sqrt(box), p)
        U, W = _tensor_nodes(u, w, n)
        S = U * U
        # ds = 2u du and s^nu combine into 2 u^{1+2 nu}
        jac = np.prod(2 * U ** (1 + 2 * nu), axis=-1)
        g = np.asarray(Sf(S), dtype=complex) * W * jac * vandermonde(S) * np.exp(-epsilon * np.sum(S, axis=-1))
        out = np.empty(x.shape[0], dtype=complex)
        for i, xv in enumerate(x):
            D = np.linalg.det(bessel_entire(xv[None, :, None] * S[:, None, :], nu))
            out[i] = np.sum(g * D) * vandermonde(xv) * np.prod(xv**nu)
        return pref * out

    fine = compute(panels)
    err = float(np.max(np.abs(fine - compute(max(panels * 2 // 3, 1)))))
    if err > tol:
        raise AccuracyError(f"inverse spherical quadrature error {err:.3g}", value=fine.real, error=err)
    return TransformResult(fine.real, x, {"scheme": "tensor Gauss-Legendre in sqrt(s)", "error": err, "epsilon": epsilon})


def spherical_hermplus_inverse(
    Sf: Callable, x, shift: Optional[float] = None, epsilon: float = 0.0, box: float = 40.0, panels: int = 24, tol: float = 1e-6
) -> TransformResult:
    """Regularized inverse Gelfand-Naimark transform along ``s0 + shift + i R^n``.

    ``s0 = (0, ..., n-1)``.  The contour is moved right by ``shift`` (default
    ``n``, where ``phi(x, s0 + n) = prod x^n`` cancels the Haar weight) so
    the transform is analytic on it; the printed contour at ``shift = 0``
    lies outside the fundamental strip of typical densities.
    Prefactor ``(-1)^{n(n-1)/2} / prod_{j<=n} (j!)^2``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    _inverse_check_n(n)
    if np.any(x <= 0):
        raise DomainError("positive definite spectra need x > 0")
    c = float(n if shift is None else shift)
    sigma = np.arange(n, dtype=float) + c
    sign = (-1) ** (n * (n - 1) // 2)
    pref = sign / prod(factorial(j) ** 2 for j in range(n + 1)) / (2 * pi) ** n * prod(factorial(j) for j in range(n))

    def compute(p):
        t, w = _gl_panels(-box, box, p)
        T, W = _tensor_nodes(t, w, n)
        S = sigma + 1j * T
        reg = np.exp(epsilon * np.sum(S**2, axis=-1))
        g = np.asarray(Sf(S), dtype=complex) * W * vandermonde(S) * reg
        out = np.empty(x.shape[0], dtype=complex)
        for i, xv in enumerate(x):
            # Delta(x)^2 / Delta(1/x) = (-1)^{n(n-1)/2} Delta(x) prod x^{n-1}
            D = np.linalg.det(xv[None, :, None] ** (-S[:, None, :]))
            out[i] = np.sum(g * D) * sign * vandermonde(xv) * np.prod(xv ** (n - 1))
        return pref * out

    fine = compute(panels)
    err = float(np.max(np.abs(fine - compute(max(panels * 2 // 3, 1)))))
    if err > tol:
        raise AccuracyError(f"inverse spherical quadrature error {err:.3g}", value=fine.real, error=err)
    return TransformResult(fine.real, x, {"scheme": "tensor Gauss-Legendre on shifted contour", "shift": c, "error": err, "epsilon": epsilon})


def spherical_unitary_inverse(Sf: Callable, theta, epsilon: float = 0.0, cutoff: int = 8) -> TransformResult:
    """Truncated inverse on ``U(n)``: sum over distinct integer ``s`` with ``|s_j| <= cutoff``.

    ``|Delta(e^{i theta})|^2 phi(e^{-i theta}, s) Delta(s)^2 = prod j! det[e^{-i theta_j s_k}] Delta(s) Delta(e^{i theta})``.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    n = theta.shape[-1]
    _inverse_check_n(n)
    rng1 = np.arange(-cutoff, cutoff + 1)
    grid = np.stack(np.meshgrid(*([rng1] * n), indexing="ij"), axis=-1).reshape(-1, n)
    ds = vandermonde(grid.astype(float))
    keep = ds != 0
    grid, ds = grid[keep], ds[keep]
    vals = np.asarray(Sf(grid), dtype=complex)
    g = vals * ds * np.exp(-epsilon * np.sum(grid.astype(float) ** 2, axis=-1))
    pref = prod(factorial(j) for j in range(n)) / ((2 * pi) ** n * prod(factorial(j) ** 2 for j in range(n + 1)))
    out = np.empty(theta.shape[0], dtype=complex)
    for i, th in enumerate(theta):
        D = np.linalg.det(np.exp(-1j * th[None, :, None] * grid[:, None, :]))
        out[i] = np.sum(g * D) * vandermonde(np.exp(1j * th))
    res = (pref * out).real
    return TransformResult(res, theta, {"scheme": "truncated lattice sum", "cutoff": cutoff, "epsilon": epsilon, "error": 0.0})
