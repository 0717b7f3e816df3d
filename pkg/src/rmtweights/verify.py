"""Monte Carlo and exact cross-checks of the derivative principles.

Every check returns a :class:`ComparisonReport`.  A report passes exactly
when its statistic is at most its threshold, so each distance kind fixes
the orientation of its statistic:

* ``KS``: Kolmogorov distance, threshold from the asymptotic Kolmogorov law
  at ``alpha = 0.001``.
* ``L1_histogram``: L1 distance between binned probability masses
  (including one overflow cell).
* ``Chi2``: Pearson statistic, threshold the ``0.999`` chi-square quantile.
* ``MomentZ``: largest ``|estimate - target| / stderr`` over probe points.
* ``MaxAbs``: largest absolute (or relative) deviation of an exact identity.
* ``Count``: number of failures of a property over a randomized battery.

Sampling is split into fixed-size chunks with independent substreams, so
statistics do not depend on the number of worker threads (``RMT_THREADS``).
"""
from __future__ import annotations

import enum
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import factorial, pi
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.interpolate import CubicSpline

from . import __version__
from .core import (
    EnsembleSpec,
    Gaussian,
    Ginibre,
    HaarUniform,
    MatrixSpace,
    SpaceKind,
    SpectralDomain,
    SpectralSample,
    WishartLike,
    haar_unitary_qr,
    lu_diagonal,
    principal_minors,
    reference_density,
    sample_matrices,
    spectra,
    substreams,
    vandermonde,
)
from .errors import AccuracyError, ConfigurationError, DataError, DomainMismatchError
from .grid import GridAxis, GridDensity

ALPHA = 1e-3
DEFAULT_CHUNK = 20_000
SUITES = ("herm", "hankel", "hermplus", "unitary", "haarparam", "transforms")


class DistanceKind(enum.Enum):
    KS = "KS"
    L1_HISTOGRAM = "L1_histogram"
    CHI2 = "Chi2"
    MOMENT_Z = "MomentZ"
    MAX_ABS = "MaxAbs"
    COUNT = "Count"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(np.real(v)), "im": float(np.imag(v))}
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, enum.Enum):
        return v.value
    return v


@dataclass
class ComparisonReport:
    """Outcome of one check; ``passed`` is ``statistic <= threshold``."""

    test_name: str
    samples_used: int
    distance_kind: DistanceKind
    statistic: float
    threshold: float
    passed: bool
    seed: Optional[int]
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.distance_kind = DistanceKind(self.distance_kind)
        self.statistic = float(self.statistic)
        self.threshold = float(self.threshold)
        expected = bool(np.isfinite(self.statistic) and self.statistic <= self.threshold)
        if bool(self.passed) != expected:
            raise ConfigurationError("report pass flag disagrees with statistic and threshold")
        self.passed = expected

    def to_dict(self) -> dict:
        d = asdict(self)
        d["distance_kind"] = self.distance_kind.value
        d["pass"] = d.pop("passed")
        d["version"] = __version__
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_report(name: str, kind: DistanceKind, statistic: float, threshold: float, samples: int = 0, seed: Optional[int] = None, **details) -> ComparisonReport:
    stat = float(statistic)
    return ComparisonReport(name, int(samples), kind, stat, threshold, bool(np.isfinite(stat) and stat <= threshold), seed, details)


# ---------------------------------------------------------------------------
# parallel sampling


def worker_count() -> int:
    raw = os.environ.get("RMT_THREADS")
    if raw is None:
        return max(1, min(os.cpu_count() or 1, 8))
    try:
        k = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"RMT_THREADS must be an integer, got {raw!r}") from exc
    if k < 1:
        raise ConfigurationError("RMT_THREADS must be positive")
    return k


def parallel_draws(draw: Callable[[np.random.Generator, int], np.ndarray], count: int, seed: int, chunk: int = DEFAULT_CHUNK):
    """Concatenate ``draw(rng_i, size_i)`` over fixed chunks with independent substreams.

    ``draw`` may return an array or a tuple of arrays (concatenated componentwise).
    """
    if count < 1:
        raise ConfigurationError("sample budget must be positive")
    sizes = [chunk] * (count // chunk) + ([count % chunk] if count % chunk else [])
    rngs = substreams(seed, len(sizes))
    workers = min(worker_count(), len(sizes))
    if workers == 1:
        parts = [draw(r, m) for r, m in zip(rngs, sizes)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, rngs, sizes))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)


def sample_ensemble(spec: EnsembleSpec, count: int, seed: int, auxiliary: Optional[str] = None, chunk: int = DEFAULT_CHUNK):
    """Sorted spectra (and optionally ``"diagonal"``/``"lu"`` auxiliary values) of ``count`` draws."""
    from .core import pseudo_diagonal

    def draw(rng, m):
        x = sample_matrices(spec, rng, m)
        vals = spectra(x, spec.space)
        if auxiliary is None:
            return vals
        aux = pseudo_diagonal(x, spec.space) if auxiliary == "diagonal" else lu_diagonal(x)
        return vals, aux

    return parallel_draws(draw, count, seed, chunk)


# ---------------------------------------------------------------------------
# empirical densities


def _as_array(samples) -> np.ndarray:
    if isinstance(samples, SpectralSample):
        return np.atleast_2d(np.asarray(samples.values, dtype=float))
    if isinstance(samples, np.ndarray):
        arr = samples
    else:
        items = list(samples)
        if not items:
            raise DataError("empty sample stream")
        if isinstance(items[0], SpectralSample):
            arr = np.stack([np.asarray(s.values, dtype=float).reshape(-1) for s in items])
        else:
            arr = np.asarray(items, dtype=float)
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0:
        raise DataError("empty sample stream")
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def empirical_density(
    samples,
    bins: Union[int, Sequence[float]] = 10,
    bounds: Optional[tuple[float, float]] = None,
    domain: SpectralDomain = SpectralDomain.REAL_LINE,
    symmetrize: bool = True,
    seed: int = 0,
    min_samples: int = 1000,
) -> GridDensity:
    """Histogram of spectral samples on a common tensor binning.

    Rows are symmetrized over all coordinate permutations, which matches
    densities of unordered spectra.  The result holds mass/volume at the bin
    centres; ``meta`` carries ``edges``, ``mass``, ``overflow`` (mass outside
    the bins), ``count`` and ``marginal``, one coordinate per draw chosen
    uniformly at random for one-dimensional tests.  Constant samples give a
    grid whose first cell holds all the mass.
    """
    x = _as_array(samples)
    m, n = x.shape
    if m < min_samples:
        raise DataError(f"need at least {min_samples} samples, got {m}")
    if not np.all(np.isfinite(x)):
        raise DataError("samples contain non-finite values")
    if np.ndim(bins) == 0:
        nb = int(bins)
        if nb < 1:
            raise ConfigurationError("need at least one bin")
        lo, hi = bounds if bounds is not None else (float(x.min()), float(x.max()))
        if hi <= lo:
            edges = np.array([lo - 0.5, lo + 0.5, lo + 1.5])
        else:
            if bounds is None:
                hi = hi + 1e-9 * max(1.0, abs(hi))
            edges = np.linspace(lo, hi, max(nb, 2) + 1) if nb >= 2 else np.array([lo, hi, 2 * hi - lo])
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.ndim != 1 or edges.size < 3 or np.any(np.diff(edges) <= 0):
            raise ConfigurationError("explicit edges must be increasing with at least two bins")
    rows = x
    copies = 1
    if symmetrize and n > 1:
        rows = np.concatenate([x[:, list(p)] for p in itertools.permutations(range(n))])
        copies = factorial(n)
    counts, _ = np.histogramdd(rows, bins=[edges] * n)
    mass = counts / (m * copies)
    overflow = max(0.0, 1.0 - float(mass.sum()))
    widths = np.diff(edges)
    vol = np.ones(())
    for _ in range(n):
        vol = np.multiply.outer(vol, widths)
    dens = mass / vol
    se = np.sqrt(mass * (1 - mass) / m) / vol
    centres = 0.5 * (edges[:-1] + edges[1:])
    step = centres[1] - centres[0]
    if not np.allclose(np.diff(centres), step):
        raise ConfigurationError("histogram edges must be uniform to form a grid")
    axis = GridAxis(float(centres[0]), float(centres[-1]), centres.size)
    pick = np.random.default_rng(seed).integers(0, n, size=m)
    return GridDensity(
        (domain,) * n,
        (axis,) * n,
        dens,
        normalized=False,
        stderr=se,
        meta={"edges": edges, "mass": mass, "overflow": overflow, "count": m, "marginal": x[np.arange(m), pick], "symmetrized": symmetrize},
    )


def _bin_nodes(edges: np.ndarray, domain: SpectralDomain, order: int):
    g, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    if domain is SpectralDomain.HALF_LINE and edges[0] >= 0:
        # x = u^2 absorbs x^{-1/2} edge singularities
        ua, ub = np.sqrt(a), np.sqrt(b)
        u = 0.5 * (ub - ua) * g + 0.5 * (ua + ub)
        return u * u, 0.5 * (ub - ua) * w * 2 * u
    return 0.5 * (b - a) * g + 0.5 * (a + b), 0.5 * (b - a) * w + 0 * a


def bin_masses(density: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, n: int, domain: SpectralDomain = SpectralDomain.REAL_LINE, order: int = 6) -> np.ndarray:
    """Probability mass of every cell of the tensor binning ``edges^n`` (Gauss-Legendre per cell)."""
    nodes, weights = _bin_nodes(np.asarray(edges, dtype=float), domain, order)
    nb = nodes.shape[0]
    flat_nodes = nodes.reshape(-1)
    flat_w = weights.reshape(-1)
    mesh = np.stack(np.meshgrid(*([flat_nodes] * n), indexing="ij"), axis=-1)
    vals = np.real(np.asarray(density(mesh), dtype=complex))
    # weight every axis, then fold the node index into its bin
    for d in range(n):
        shape = [1] * n
        shape[d] = flat_w.size
        vals = vals * flat_w.reshape(shape)
    vals = vals.reshape(sum(((nb, order) for _ in range(n)), ()))
    return vals.sum(axis=tuple(range(1, 2 * n, 2)))


# ---------------------------------------------------------------------------
# marginals


@dataclass
class LevelDensity:
    """One-point function ``rho`` with a spline CDF."""

    domain: SpectralDomain
    nodes: np.ndarray
    values: np.ndarray
    fn: Callable[[np.ndarray], np.ndarray]
    total: float

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.domain is SpectralDomain.HALF_LINE:
            u = self.nodes
            spline = CubicSpline(u, self.values * 2 * u).antiderivative()
            t = np.sqrt(np.clip(x, 0, u[-1] ** 2))
            return np.clip(spline(t), 0.0, 1.0)
        spline = CubicSpline(self.nodes, self.values).antiderivative()
        t = np.clip(x, self.nodes[0], self.nodes[-1])
        return np.clip(spline(t) - spline(self.nodes[0]), 0.0, 1.0)


def _panel_rule(lo: float, hi: float, panels: int, order: int):
    g, w = np.polynomial.legendre.leggauss(order)
    e = np.linspace(lo, hi, panels + 1)
    a, b = e[:-1, None], e[1:, None]
    return (0.5 * (b - a) * g + 0.5 * (a + b)).reshape(-1), (0.5 * (b - a) * w + 0 * a).reshape(-1)


def _domain_rule(domain: SpectralDomain, box: Optional[float], panels: int, order: int):
    if domain is SpectralDomain.REAL_LINE:
        L = box or 10.0
        return _panel_rule(-L, L, panels, order)
    if domain is SpectralDomain.HALF_LINE:
        U = np.sqrt(box or 80.0)
        u, w = _panel_rule(0.0, U, panels, order)
        return u * u, 2 * u * w
    m = panels * order
    th = -pi + 2 * pi * (np.arange(m) + 0.5) / m
    return th, np.full(m, 2 * pi / m)


def marginal_level_density(
    joint: Callable[[np.ndarray], np.ndarray],
    n: int,
    domain: SpectralDomain = SpectralDomain.REAL_LINE,
    box: Optional[float] = None,
    panels: int = 10,
    order: int = 12,
    tol: float = 1e-3,
    grid_points: int = 401,
    symmetric: bool = False,
) -> LevelDensity:
    """``rho(x) = (1/n) sum_j int f(x in slot j, rest) d(rest)`` by tensor Gauss-Legendre.

    Raises :class:`AccuracyError` when ``rho`` does not integrate to one
    within ``tol`` on the quadrature box (unnormalized or under-resolved
    joint densities). Pass ``symmetric=True`` for a joint density that is
    invariant under permutations; only the first slot is then integrated.
    """
    if not 1 <= n <= 3:
        raise ConfigurationError("marginal_level_density supports n <= 3")
    nodes, weights = _domain_rule(domain, box, panels, order)
    if n > 1:
        inner = np.stack(np.meshgrid(*([nodes] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
        iw = np.prod(np.stack(np.meshgrid(*([weights] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1), axis=-1)

    def rho(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        if n == 1:
            out = np.real(np.asarray(joint(flat[:, None]), dtype=complex))
            return out.reshape(x.shape)
        out = np.zeros(flat.size)
        slots = range(1) if symmetric else range(n)
        for j in slots:
            pts = np.empty((flat.size, inner.shape[0], n))
            cols = [c for c in range(n) if c != j]
            pts[..., j] = flat[:, None]
            pts[..., cols] = inner[None, :, :]
            vals = np.real(np.asarray(joint(pts), dtype=complex))
            out += vals @ iw
        return (out / len(slots)).reshape(x.shape)

    total = float(np.sum(weights * rho(nodes)))
    if not abs(total - 1.0) <= tol:
        raise AccuracyError(f"marginal integrates to {total:.6g}; the joint is unnormalized or under-resolved", value=total, error=abs(total - 1.0))
    if domain is SpectralDomain.HALF_LINE:
        U = np.sqrt(box or 80.0)
        u = np.linspace(0.0, U, grid_points)
        grid_vals = rho(u * u)
        grid_nodes = u
    elif domain is SpectralDomain.REAL_LINE:
        L = box or 10.0
        grid_nodes = np.linspace(-L, L, grid_points)
        grid_vals = rho(grid_nodes)
    else:
        grid_nodes = np.linspace(-pi, pi, grid_points)
        grid_vals = rho(grid_nodes)
    return LevelDensity(domain, grid_nodes, grid_vals, rho, total)


# ---------------------------------------------------------------------------
# comparisons


def _domain_of(predicted) -> Optional[SpectralDomain]:
    case = getattr(predicted, "case", None)
    if case is not None:
        return case.space.spectral_domain
    if isinstance(predicted, GridDensity):
        return predicted.domain[0]
    return getattr(predicted, "domain", None)


def ks_threshold(m: int, alpha: float = ALPHA) -> float:
    return float(stats.kstwobign.isf(alpha) / np.sqrt(m))


def compare(
    predicted,
    empirical: GridDensity,
    kind: DistanceKind = DistanceKind.L1_HISTOGRAM,
    test_name: str = "compare",
    threshold: Optional[float] = None,
    seed: Optional[int] = None,
    order: int = 6,
    marginal_kwargs: Optional[dict] = None,
) -> ComparisonReport:
    """Compare a predicted joint density with a histogram from :func:`empirical_density`.

    ``predicted`` is a vectorized density on ``domain^n`` (for example a
    ``SpectralDensity``), or a GridDensity histogram, whose cell masses are
    then used directly.
    """
    kind = DistanceKind(kind)
    dom = _domain_of(predicted)
    if dom is not None and dom is not empirical.domain[0]:
        raise DomainMismatchError(f"predicted density lives on {dom.value}, samples on {empirical.domain[0].value}")
    meta = empirical.meta
    if "mass" not in meta:
        raise ConfigurationError("empirical input must come from empirical_density")
    m = int(meta["count"])
    n = empirical.ndim
    edges = meta["edges"]
    if kind is DistanceKind.KS:
        x = np.sort(np.asarray(meta["marginal"], dtype=float))
        if isinstance(predicted, LevelDensity):
            level = predicted
        else:
            level = marginal_level_density(predicted, n, empirical.domain[0], **(marginal_kwargs or {}))
        F = level.cdf(x)
        i = np.arange(1, m + 1)
        d = float(max(np.max(i / m - F), np.max(F - (i - 1) / m)))
        thr = ks_threshold(m) if threshold is None else threshold
        return make_report(test_name, kind, d, thr, m, seed, alpha=ALPHA)
    if isinstance(predicted, GridDensity) and "mass" in predicted.meta:
        p = np.asarray(predicted.meta["mass"])
        p_over = float(predicted.meta["overflow"])
    else:
        p = bin_masses(predicted, edges, n, empirical.domain[0], order)
        p_over = max(0.0, 1.0 - float(p.sum()))
    q = np.asarray(meta["mass"])
    q_over = float(meta["overflow"])
    if kind is DistanceKind.L1_HISTOGRAM:
        d = float(np.sum(np.abs(p - q)) + abs(p_over - q_over))
        thr = 0.03 if threshold is None else threshold
        return make_report(test_name, kind, d, thr, m, seed, bins=int(len(edges) - 1), expected_noise=float(np.sqrt(2 / (pi * m)) * (np.sum(np.sqrt(np.clip(p, 0, None))) + np.sqrt(p_over))))
    if kind is DistanceKind.CHI2:
        e = np.append(p.reshape(-1), p_over) * m
        o = np.append(q.reshape(-1), q_over) * m
        big = e >= 5
        e_cells = np.append(e[big], e[~big].sum())
        o_cells = np.append(o[big], o[~big].sum())
        keep = e_cells > 0
        chi = float(np.sum((o_cells[keep] - e_cells[keep]) ** 2 / e_cells[keep]))
        dof = max(int(keep.sum()) - 1, 1)
        thr = float(stats.chi2.isf(ALPHA, dof)) if threshold is None else threshold
        return make_report(test_name, kind, chi, thr, m, seed, dof=dof)
    raise ConfigurationError(f"compare does not produce {kind.value} reports; use moment_z_report or max_abs_report")


def moment_z_report(name: str, estimates: Sequence[complex], stderrs: Sequence[float], targets: Sequence[complex], samples: int, seed: Optional[int], threshold: float = 3.0, **details) -> ComparisonReport:
    est = np.asarray(estimates, dtype=complex)
    se = np.asarray(stderrs, dtype=float)
    tg = np.asarray(targets, dtype=complex)
    z = np.abs(est - tg) / np.maximum(se, 1e-300)
    return make_report(name, DistanceKind.MOMENT_Z, float(np.max(z)), threshold, samples, seed, z=z, estimates=est, targets=tg, stderr=se, **details)


def max_abs_report(name: str, value, reference, threshold: float, relative: bool = False, seed: Optional[int] = None, samples: int = 0, **details) -> ComparisonReport:
    v = np.asarray(value, dtype=complex)
    r = np.asarray(reference, dtype=complex)
    diff = np.abs(v - r)
    if relative:
        diff = diff / np.maximum(np.abs(r), 1e-300)
    return make_report(name, DistanceKind.MAX_ABS, float(np.max(diff)) if diff.size else 0.0, threshold, samples, seed, relative=relative, points=int(diff.size), **details)


def ks_two_sample_report(name: str, a: np.ndarray, b: np.ndarray, seed: Optional[int]) -> ComparisonReport:
    """Two-sample Kolmogorov distance against its ``alpha = 0.001`` critical value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    res = stats.ks_2samp(a, b)
    na, nb = a.size, b.size
    thr = float(stats.kstwobign.isf(ALPHA) * np.sqrt((na + nb) / (na * nb)))
    return make_report(name, DistanceKind.KS, float(res.statistic), thr, na + nb, seed, pvalue=float(res.pvalue))


def ks_one_sample_report(name: str, x: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray], seed: Optional[int]) -> ComparisonReport:
    x = np.sort(np.asarray(x, dtype=float))
    m = x.size
    F = cdf(x)
    i = np.arange(1, m + 1)
    d = float(max(np.max(i / m - F), np.max(F - (i - 1) / m)))
    return make_report(name, DistanceKind.KS, d, ks_threshold(m), m, seed, alpha=ALPHA)


# ---------------------------------------------------------------------------
# shared probes


def probe_points(domain: SpectralDomain, n: int, count: int, seed: int, scale: float = 1.5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if domain is SpectralDomain.REAL_LINE:
        return scale * rng.standard_normal((count, n))
    if domain is SpectralDomain.HALF_LINE:
        return rng.gamma(2.0, scale, size=(count, n))
    return rng.uniform(-pi, pi, size=(count, n))


def lue_density(x) -> np.ndarray:
    """``Delta(x)^2 exp(-sum x) / (n! prod_{j<n} j!^2)``; ``(1/2) Delta^2 e^{-sum x}`` at ``n = 2``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    c = 1.0 / factorial(n)
    for j in range(n):
        c /= factorial(j) ** 2
    return c * vandermonde(x) ** 2 * np.exp(-np.sum(x, axis=-1)) * np.all(x >= 0, axis=-1)


def gue_level_density_n2(x) -> np.ndarray:
    """One-point function of GUE(2): ``(1/2) phi(x) (1 + x^2)`` from the Hermite kernel."""
    x = np.asarray(x, dtype=float)
    return 0.5 * np.exp(-x * x / 2) / np.sqrt(2 * pi) * (1 + x * x)


def _spherical_factorization(name, space_label, sample_abc, transform, probes, budget, seed) -> ComparisonReport:
    """``S f_C = S f_A S f_B`` with all three transforms estimated by Monte Carlo."""
    a, b, c = sample_abc
    ta, tb, tc = transform(a, probes), transform(b, probes), transform(c, probes)
    va, vb, vc = ta.values, tb.values, tc.values
    sa, sb, sc = ta.meta["stderr"], tb.meta["stderr"], tc.meta["stderr"]
    prod = va * vb
    se = np.sqrt(sc**2 + np.abs(vb) ** 2 * sa**2 + np.abs(va) ** 2 * sb**2)
    return moment_z_report(name, vc, se, prod, budget, seed, structure=space_label, probes=np.asarray(probes))


# ---------------------------------------------------------------------------
# suites


def suite_herm(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .derivative import additive_convolve, derivative_principle_herm
    from .spherical import spherical_herm
    from .weights import WeightFunction

    wrong = 1.25 if negative_control else 1.0
    out = []
    for n in (2, 3):
        f = derivative_principle_herm(WeightFunction.gaussian(n, scale=wrong))
        ref = reference_density(EnsembleSpec(MatrixSpace.herm(n), Gaussian()))
        pts = probe_points(SpectralDomain.REAL_LINE, n, 1000, seed)
        out.append(max_abs_report(f"herm/gue_identity_n{n}", f(pts), ref(pts), 1e-10, seed=seed))
    fc = additive_convolve(WeightFunction.gaussian(2), WeightFunction.gaussian(2, scale=wrong), MatrixSpace.herm(2))
    ref2 = reference_density(EnsembleSpec(MatrixSpace.herm(2), Gaussian(np.sqrt(2))))
    pts = probe_points(SpectralDomain.REAL_LINE, 2, 1000, seed + 1)
    out.append(max_abs_report("herm/gue_plus_gue_exact", fc(pts), ref2(pts), 1e-10, seed=seed))

    f2 = derivative_principle_herm(WeightFunction.gaussian(2, scale=wrong))
    x2 = sample_ensemble(EnsembleSpec(MatrixSpace.herm(2), Gaussian()), budget, seed)
    emp = empirical_density(x2, bins=8, bounds=(-3.6, 3.6), seed=seed)
    out.append(compare(f2, emp, DistanceKind.L1_HISTOGRAM, "herm/gue_mc_l1_n2", seed=seed))
    out.append(compare(f2, emp, DistanceKind.KS, "herm/gue_mc_ks_level_n2", seed=seed))

    f3 = derivative_principle_herm(WeightFunction.gaussian(3, scale=wrong))
    x3 = sample_ensemble(EnsembleSpec(MatrixSpace.herm(3), Gaussian()), budget, seed + 1)
    emp3 = empirical_density(x3, bins=6, bounds=(-4.2, 4.2), seed=seed)
    out.append(compare(f3, emp3, DistanceKind.L1_HISTOGRAM, "herm/gue_mc_l1_n3", seed=seed))
    level3 = marginal_level_density(f3, 3, symmetric=True, panels=8, order=10, grid_points=201)
    out.append(compare(level3, emp3, DistanceKind.KS, "herm/gue_mc_ks_level_n3", seed=seed))

    # A + B with A GUE and B a shifted Wishart matrix (unitarily invariant, non-Gaussian)
    spec_a = EnsembleSpec(MatrixSpace.herm(2), Gaussian())
    spec_b = EnsembleSpec(MatrixSpace.hermplus(2), WishartLike(3))

    def draw(rng, m):
        A = sample_matrices(spec_a, rng, m)
        B = sample_matrices(spec_b, rng, m) - 3.0 * np.eye(2)
        B = B * wrong
        Aind = sample_matrices(spec_a, rng, m)
        Bind = (sample_matrices(spec_b, rng, m) - 3.0 * np.eye(2))
        return np.linalg.eigvalsh(Aind), np.linalg.eigvalsh(Bind), np.linalg.eigvalsh(A + B)

    abc = parallel_draws(draw, budget, seed + 2)
    probes = np.array([[0.2, -0.4], [0.5, 0.1], [-0.7, 0.3], [1.0, -0.2], [0.3, 0.8]])
    out.append(_spherical_factorization("herm/spherical_factorization_sum", "A+B", abc, lambda x, s: spherical_herm(x, s), probes, budget, seed))
    return out


def suite_hankel(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .derivative import (
        additive_convolve,
        derivative_principle,
        derivative_principle_hankel_unified,
        derivative_principle_io_even,
        derivative_principle_io_odd,
    )
    from .spherical import spherical_hankel
    from .weights import WeightFunction

    wrong = 1.25 if negative_control else 1.0
    half = np.sqrt(0.5)
    out = []

    # odd antisymmetric, n = 1: f(x) = -f_diag'(sqrt x)
    fo = derivative_principle_io_odd(WeightFunction.gaussian(1, scale=half * wrong))
    x = probe_points(SpectralDomain.HALF_LINE, 1, 1000, seed)
    lam = np.sqrt(x[:, 0])
    direct = lam / 0.5 * np.exp(-lam * lam) / np.sqrt(pi)
    out.append(max_abs_report("hankel/io_odd_n1_identity", fo(x), direct, 1e-12, seed=seed))
    out.append(max_abs_report("hankel/io_odd_n1_normalization", fo.integral(), 1.0, 1e-10))
    xo = sample_ensemble(EnsembleSpec(MatrixSpace.io_odd(1), Gaussian()), budget, seed)
    out.append(compare(fo, empirical_density(xo, bins=10, bounds=(0.0, 6.0), domain=SpectralDomain.HALF_LINE, seed=seed), DistanceKind.L1_HISTOGRAM, "hankel/io_odd_n1_mc_l1", seed=seed))

    # chiral (complex rectangular) nu = 0
    f1 = derivative_principle_hankel_unified(WeightFunction.gaussian(1, scale=half * wrong), 0)
    x = probe_points(SpectralDomain.HALF_LINE, 1, 1000, seed + 1)
    out.append(max_abs_report("hankel/chiral_n1_exponential", f1(x), np.exp(-x[:, 0]), 1e-12, seed=seed))
    fc2 = derivative_principle_hankel_unified(WeightFunction.gaussian(2, scale=half * wrong), 0)
    x = probe_points(SpectralDomain.HALF_LINE, 2, 1000, seed + 2)
    out.append(max_abs_report("hankel/chiral_n2_lue", fc2(x), lue_density(x), 1e-8, seed=seed))
    xg = sample_ensemble(EnsembleSpec(MatrixSpace.chiral(2), Ginibre()), budget, seed + 1)
    out.append(compare(fc2, empirical_density(xg, bins=8, bounds=(0.0, 8.0), domain=SpectralDomain.HALF_LINE, seed=seed), DistanceKind.L1_HISTOGRAM, "hankel/ginibre_mc_l1_n2", seed=seed))

    # remaining Hankel spaces against their Weyl densities
    for space in (MatrixSpace.io_even(2), MatrixSpace.io_odd(2), MatrixSpace.usp(2), MatrixSpace.chiral(2, 1)):
        f = derivative_principle(space, WeightFunction.gaussian(2, scale=half * wrong))
        ref = reference_density(EnsembleSpec(space, Gaussian()))
        x = probe_points(SpectralDomain.HALF_LINE, 2, 1000, seed + 3)
        out.append(max_abs_report(f"hankel/{space.kind.value}_nu{float(space.nu):g}_weyl_n2", f(x), ref(x), 1e-10, seed=seed))
    fe = derivative_principle_io_even(WeightFunction.gaussian(1, scale=half * wrong))
    xe = sample_ensemble(EnsembleSpec(MatrixSpace.io_even(1), Gaussian()), budget, seed + 2)
    out.append(compare(fe, empirical_density(xe, bins=10, bounds=(0.0, 5.0), domain=SpectralDomain.HALF_LINE, seed=seed), DistanceKind.L1_HISTOGRAM, "hankel/io_even_n1_mc_l1", seed=seed))

    # chiral + chiral, n = 1: pseudo-diagonals convolve
    g = WeightFunction.gaussian(1, scale=half)
    fsum = additive_convolve(g, WeightFunction.gaussian(1, scale=half * wrong), MatrixSpace.chiral(1))
    spec = EnsembleSpec(MatrixSpace.chiral(1), Ginibre())

    def draw_sum(rng, m):
        return spectra(sample_matrices(spec, rng, m) + sample_matrices(spec, rng, m), spec.space)

    xs = parallel_draws(draw_sum, budget, seed + 3)
    out.append(compare(fsum, empirical_density(xs, bins=10, bounds=(0.0, 10.0), domain=SpectralDomain.HALF_LINE, seed=seed), DistanceKind.L1_HISTOGRAM, "hankel/chiral_plus_chiral_n1_mc_l1", threshold=0.02, seed=seed))

    # factorization for C = A + B on complex 2x2 matrices (both bi-invariant)
    spec2 = EnsembleSpec(MatrixSpace.chiral(2), Ginibre())
    spec2b = EnsembleSpec(MatrixSpace.chiral(2), Ginibre(0.7))

    def draw_abc(rng, m):
        A = sample_matrices(spec2, rng, m)
        B = sample_matrices(spec2b, rng, m) * wrong
        Ai = sample_matrices(spec2, rng, m)
        Bi = sample_matrices(spec2b, rng, m)
        return spectra(Ai, spec2.space), spectra(Bi, spec2.space), spectra(A + B, spec2.space)

    abc = parallel_draws(draw_abc, budget, seed + 4)
    probes = np.array([[0.1, 0.4], [0.3, 0.05], [0.6, 0.2], [0.25, 0.9], [0.05, 0.15]])
    out.append(_spherical_factorization("hankel/spherical_factorization_sum", "A+B", abc, lambda x, s: spherical_hankel(x, s, 0), probes, budget, seed))
    return out


def suite_hermplus(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .derivative import derivative_principle_hermplus, wishart_lu_marginal, wishart_lu_weight
    from .spherical import spherical_hermplus
    from .weights import WeightFunction

    wrong = 1.25 if negative_control else 1.0
    out = []
    spec = EnsembleSpec(MatrixSpace.hermplus(2), WishartLike(2))
    vals, piv = sample_ensemble(spec, budget, seed, auxiliary="lu")
    piv = np.real(piv)
    f_u = wishart_lu_marginal(2, 2)
    if wrong != 1.0:
        f_u = WeightFunction(SpectralDomain.HALF_LINE, 2, {((1.0, 1 / wrong), (0.0, 1 / wrong)): wrong**-3})
    emp = empirical_density(piv, bins=8, bounds=(0.0, 8.0), domain=SpectralDomain.HALF_LINE, symmetrize=False, seed=seed)
    out.append(compare(f_u, emp, DistanceKind.L1_HISTOGRAM, "hermplus/wishart_lu_pivots_mc_l1", seed=seed))

    g = wishart_lu_weight(2, 2)
    if wrong != 1.0:
        g = WeightFunction.gamma(2, 1.0, 1 / wrong)
    f = derivative_principle_hermplus(g)
    x = probe_points(SpectralDomain.HALF_LINE, 2, 1000, seed)
    out.append(max_abs_report("hermplus/lue_identity_n2", f(x), lue_density(x), 1e-12, seed=seed))
    for n, dof in ((2, 4), (3, 3)):
        fw = derivative_principle_hermplus(wishart_lu_weight(n, dof))
        ref = reference_density(EnsembleSpec(MatrixSpace.hermplus(n), WishartLike(dof)))
        x = probe_points(SpectralDomain.HALF_LINE, n, 1000, seed + n)
        out.append(max_abs_report(f"hermplus/wishart_identity_n{n}_dof{dof}", fw(x), ref(x), 1e-10, seed=seed))
    out.append(compare(f, empirical_density(vals, bins=8, bounds=(0.0, 8.0), domain=SpectralDomain.HALF_LINE, seed=seed), DistanceKind.L1_HISTOGRAM, "hermplus/lue_eigen_mc_l1", seed=seed))

    spec_a = EnsembleSpec(MatrixSpace.hermplus(2), WishartLike(4))
    spec_b = EnsembleSpec(MatrixSpace.hermplus(2), WishartLike(5))

    def draw(rng, m):
        A = sample_matrices(spec_a, rng, m)
        B = sample_matrices(spec_b, rng, m)
        w, v = np.linalg.eigh(A)
        root = (v * np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        C = root @ (B * wrong) @ root
        Ai = sample_matrices(spec_a, rng, m)
        Bi = sample_matrices(spec_b, rng, m)
        return np.linalg.eigvalsh(Ai), np.linalg.eigvalsh(Bi), np.linalg.eigvalsh(C)

    abc = parallel_draws(draw, budget, seed + 5)
    probes = np.array([[1.5, 0.5], [2.0, 1.2], [1.2, 0.0], [0.8, 0.3], [1.7, 1.0]])
    out.append(_spherical_factorization("hermplus/spherical_factorization_product", "A^(1/2) B A^(1/2)", abc, lambda x, s: spherical_hermplus(x, s), probes, budget, seed))
    return out


def _invariant_unitary_sampler(spread: float):
    """``U diag(e^{i theta}) U^H`` with Haar ``U`` and i.i.d. normal angles of width ``spread``."""

    def draw(rng, m):
        U = haar_unitary_qr(2, rng, m)
        th = spread * rng.standard_normal((m, 2)) + np.array([0.4, -0.3])
        return (U * np.exp(1j * th)[:, None, :]) @ np.conj(np.swapaxes(U, -1, -2))

    return draw


def suite_unitary(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .derivative import derivative_principle_unitary, unitary_weight_coefficients
    from .spherical import spherical_unitary
    from .weights import WeightFunction

    out = []
    for n in (2, 3):
        w = WeightFunction.cue_weight(n)
        if negative_control:
            w = w.scale(1.1)
        f = derivative_principle_unitary(w, check=False)
        ref = reference_density(EnsembleSpec(MatrixSpace.unitary(n), HaarUniform()))
        th = probe_points(SpectralDomain.TORUS, n, 1000, seed)
        out.append(max_abs_report(f"unitary/cue_identity_n{n}", f(th), ref(th), 1e-10, seed=seed))

    mats = parallel_draws(lambda r, m: principal_minors(haar_unitary_qr(3, r, m)), budget, seed)
    coeffs, errs = unitary_weight_coefficients(mats, cutoff=3)
    expected = {k: (1.0 if sorted(k) == [0, 1, 2] and not negative_control else (0.9 if sorted(k) == [0, 1, 2] else 0.0)) for k in coeffs}
    keys = sorted(coeffs)
    out.append(max_abs_report("unitary/cue_coefficients_mc", [coeffs[k] for k in keys], [expected[k] for k in keys], 0.02, samples=budget, seed=seed, cutoff=3))

    f2 = derivative_principle_unitary(WeightFunction.cue_weight(2))
    if negative_control:
        f2 = lambda th: reference_density(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()))(th) * (1 + 0.5 * np.cos(np.asarray(th)[..., 0]) * np.cos(np.asarray(th)[..., 1]))
    ang = sample_ensemble(EnsembleSpec(MatrixSpace.unitary(2), HaarUniform()), budget, seed + 1)
    emp = empirical_density(ang, bins=8, bounds=(-pi, pi), domain=SpectralDomain.TORUS, seed=seed)
    out.append(compare(f2, emp, DistanceKind.L1_HISTOGRAM, "unitary/cue_mc_l1_n2", seed=seed))

    da, db = _invariant_unitary_sampler(0.6), _invariant_unitary_sampler(0.9)

    def draw(rng, m):
        A, B = da(rng, m), db(rng, m)
        if negative_control:
            B = B @ B
        Ai, Bi = da(rng, m), db(rng, m)
        sp = MatrixSpace.unitary(2)
        return spectra(Ai, sp), spectra(Bi, sp), spectra(A @ B, sp)

    abc = parallel_draws(draw, budget, seed + 2)
    probes = np.array([[1, 0], [2, 0], [0, -1], [2, -1], [1, -2]])
    out.append(_spherical_factorization("unitary/spherical_factorization_product", "AB", abc, lambda x, s: spherical_unitary(x, s), probes, budget, seed))
    return out


def suite_haarparam(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .haarparam import (
        build_unitary,
        lu_diagonals,
        numeric_lu_diagonals,
        sample_haar_coordinates,
        to_radial_phase,
    )

    out = []
    rngs = substreams(seed, 8)
    worst = 0.0
    for n in range(2, 6):
        c = sample_haar_coordinates(n, rngs[0], 1000)
        V = build_unitary(c)
        closed = lu_diagonals(c).pivots
        numeric = numeric_lu_diagonals(V).pivots
        if negative_control:
            closed = closed * (1 + 1e-9)
        worst = max(worst, float(np.max(np.abs(closed - numeric) / np.abs(numeric))))
    out.append(make_report("haarparam/lu_closed_vs_numeric", DistanceKind.MAX_ABS, worst, 1e-12, 4000, seed, relative=True))

    draws = max(1000, min(budget // 10, 10_000))
    for n in (2, 3, 4):
        # one stream pair per size, so each size is reproducible on its own
        c = sample_haar_coordinates(n, rngs[2 * n - 3], draws)
        V = build_unitary(c)
        if negative_control:
            V = V @ V
        W = haar_unitary_qr(n, rngs[2 * n - 2], draws)
        trV, trW = np.trace(V, axis1=1, axis2=2), np.trace(W, axis1=1, axis2=2)
        out.append(ks_two_sample_report(f"haarparam/ks_re_trace_n{n}", trV.real, trW.real, seed))
        out.append(ks_two_sample_report(f"haarparam/ks_im_trace_n{n}", trV.imag, trW.imag, seed))
        for l in range(1, n):
            out.append(ks_two_sample_report(f"haarparam/ks_minor{l}_n{n}", np.abs(np.linalg.det(V[:, :l, :l])), np.abs(np.linalg.det(W[:, :l, :l])), seed))
        t2 = np.abs(trV) ** 2
        out.append(moment_z_report(f"haarparam/trace_second_moment_n{n}", [t2.mean()], [t2.std(ddof=1) / np.sqrt(draws)], [1.0], draws, seed))

    c = sample_haar_coordinates(2, rngs[7], draws)
    rp = to_radial_phase(c)
    r = rp.radii[:, 0]
    if negative_control:
        r = np.sqrt(r)
    out.append(ks_one_sample_report("haarparam/radius_marginal_n2", r, lambda t: np.clip(t, 0, 1) ** 2, seed))
    # joint (r^2, varphi) is uniform on the unit square for n = 2
    u = r**2
    v = (rp.phases[:, 0] + pi) / (2 * pi)
    counts, _, _ = np.histogram2d(u, v, bins=6, range=[[0, 1], [0, 1]])
    e = draws / 36
    chi = float(np.sum((counts - e) ** 2 / e))
    out.append(make_report("haarparam/radial_phase_uniform_chi2", DistanceKind.CHI2, chi, float(stats.chi2.isf(ALPHA, 35)), draws, seed, dof=35))
    return out


def _random_real_weight(rng: np.random.Generator) -> "object":
    from .weights import WeightFunction

    p = int(rng.integers(0, 3))
    a = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(-0.5, 0.5))
    return WeightFunction("RealLine", 1, {((p, a, b),): 1.0, ((0, a, 0.0),): float(rng.uniform(0.2, 1.0))})


def _random_half_weight(rng: np.random.Generator, integer: bool = False):
    from .weights import WeightFunction

    g = float(rng.integers(0, 3)) if integer else float(rng.uniform(0.2, 2.5))
    a = float(rng.uniform(0.6, 2.0))
    return WeightFunction("HalfLine", 1, {((g, a),): 1.0, ((g + 1, a),): float(rng.uniform(0.1, 0.5))})


def suite_transforms(budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    from .spherical import (
        bessel_group_kernel,
        bessel_kernel_mc,
        gelfand_naimark,
        gelfand_naimark_mc,
        gelfand_naimark_quadrature_n2,
        hciz,
        hciz_mc,
        hciz_quadrature_n2,
    )
    from .transforms import (
        abel_inverse,
        abel_inverse_half,
        fourier,
        fourier_inverse,
        hankel,
        hankel_inverse,
        mellin,
        mellin_inverse,
    )
    from .weights import OperatorKind, WeightFunction, apply_one_dim, convolve

    bump = 1.01 if negative_control else 1.0
    out = []
    rngs = substreams(seed, 12)

    # group integrals: determinantal formulas against quadrature and Monte Carlo
    xq, sq = np.array([0.7, -0.4]), np.array([1.1, 0.3])
    out.append(max_abs_report("transforms/hciz_quadrature_n2", bump * hciz(xq, sq), hciz_quadrature_n2(xq, sq), 1e-3, relative=True))
    xp, sp = np.array([0.6, 1.7]), np.array([1.3 + 0.4j, -0.2])
    out.append(max_abs_report("transforms/gelfand_naimark_quadrature_n2", bump * gelfand_naimark(xp, sp), gelfand_naimark_quadrature_n2(xp, sp), 1e-3, relative=True))
    mc_samples = 10 * budget
    cases = [
        ("hciz", hciz, hciz_mc, xq, sq),
        ("gelfand_naimark", gelfand_naimark, gelfand_naimark_mc, xp, sp),
        ("hciz", hciz, hciz_mc, np.array([0.5, -0.3, 0.9]), np.array([0.7, 0.1, -0.6])),
        ("gelfand_naimark", gelfand_naimark, gelfand_naimark_mc, np.array([0.6, 1.1, 1.9]), np.array([1.4, 0.6, -0.5])),
    ]
    for label, exact, mc, x, s in cases:
        est = mc(x, s, mc_samples, rngs[0])
        tgt = exact(x, s) * (1.02 if negative_control else 1.0)
        out.append(moment_z_report(f"transforms/{label}_mc_n{len(x)}", [est.value], [est.stderr], [tgt], mc_samples, seed))
    bessel_points = [(np.array([0.4, 1.3]), np.array([0.9, 0.2])), (np.array([0.4, 1.3, 0.8]), np.array([0.9, 0.2, 0.5]))]
    for nu in (0, 1, -0.5, 0.5):
        for x, s in bessel_points:
            est = bessel_kernel_mc(x, s, nu, mc_samples, rngs[1])
            tgt = bessel_group_kernel(x, s, nu) * (1.05 if negative_control else 1.0)
            out.append(moment_z_report(f"transforms/bessel_kernel_mc_nu{nu:g}_n{len(x)}", [est.value], [est.stderr], [tgt], mc_samples, seed))

    # inverse Abel: composition against the explicit (sign-corrected) layered integral
    g = WeightFunction.gaussian(1, scale=0.8)
    xs = np.array([[0.2], [0.7], [1.5], [3.0]])
    for nu in (0, 1, 2):
        comp = abel_inverse(g, xs, nu, method="composition").values
        expl = abel_inverse(g, xs, nu, method="explicit").values
        out.append(max_abs_report(f"transforms/abel_composition_vs_explicit_nu{nu}", bump * comp, expl, 1e-4, relative=True))
    for nu in (-0.5, 0.5):
        closed = abel_inverse_half(g, nu, xs)
        ff = lambda s: fourier(g, 2 * np.sqrt(np.asarray(s, dtype=float))).values
        comp = hankel_inverse(ff, xs, nu).values
        out.append(max_abs_report(f"transforms/abel_half_closed_vs_composition_nu{nu:+g}", bump * comp, closed, 1e-5, relative=True))

    # randomized batteries: round trips, convolution theorems, eigen-relations
    trials = 10
    fails = {"fourier_round_trip": 0, "hankel_round_trip": 0, "mellin_round_trip": 0, "fourier_convolution": 0, "mellin_product": 0, "fourier_eigen": 0, "hankel_eigen": 0, "mellin_eigen": 0}
    worst = dict.fromkeys(fails, 0.0)
    rng = rngs[2]
    axis = GridAxis(-30.0, 30.0, 1201)

    def record(key, err):
        worst[key] = max(worst[key], err)
        if not err < 1e-4:
            fails[key] += 1

    for _ in range(trials):
        w = _random_real_weight(rng)
        xr = rng.uniform(-2, 2, size=(4, 1))
        back = fourier_inverse(fourier(w, [axis]), xr, epsilon=0.0).values
        ref = w.eval(xr)
        record("fourier_round_trip", float(np.max(np.abs(bump * back - ref) / np.max(np.abs(ref)))))

        w2 = _random_real_weight(rng)
        s = rng.uniform(-3, 3, size=(5, 1))
        lhs = fourier(convolve(w, w2), s).values
        rhs = fourier(w, s).values * fourier(w2, s).values
        record("fourier_convolution", float(np.max(np.abs(bump * lhs - rhs) / np.max(np.abs(rhs)))))

        lhs = fourier(apply_one_dim(OperatorKind.FLAT, 0, w), s).values
        rhs = 1j * s[:, 0] * fourier(w, s).values
        record("fourier_eigen", float(np.max(np.abs(bump * lhs - rhs) / np.max(np.abs(rhs)))))

        nu = [0, 1, 2, -0.5, 0.5][int(rng.integers(0, 5))]
        h = _random_half_weight(rng)
        sh = rng.uniform(0.05, 3.0, size=(5, 1))
        lhs = hankel(apply_one_dim(OperatorKind.HANKEL, 0, h, nu=nu), sh, nu).values
        rhs = sh[:, 0] * hankel(h, sh, nu).values
        record("hankel_eigen", float(np.max(np.abs(bump * lhs - rhs) / np.max(np.abs(rhs)))))

        # x^{nu+k} e^{-a x} has an exponentially decaying Hankel transform
        a = float(rng.uniform(0.6, 2.0))
        hk = WeightFunction("HalfLine", 1, {((nu + int(rng.integers(0, 3)), a),): 1.0, ((nu, a),): float(rng.uniform(0.1, 0.5))})
        xh = rng.uniform(0.3, 3.0, size=(3, 1))
        back = hankel_inverse(hankel(hk, [[0.0]], nu).evaluator, xh, nu).values
        ref = hk.eval(xh)
        record("hankel_round_trip", float(np.max(np.abs(bump * back - ref) / np.max(np.abs(ref)))))

        sm = rng.uniform(0.5, 3.0, size=(5, 1)) + 1j * rng.uniform(-2, 2, size=(5, 1))
        lhs = mellin(apply_one_dim(OperatorKind.MELLIN, 0, h), sm).values
        rhs = sm[:, 0] * mellin(h, sm).values
        record("mellin_eigen", float(np.max(np.abs(bump * lhs - rhs) / np.max(np.abs(rhs)))))

        ref = h.eval(xh)
        back = mellin_inverse(mellin(h, [[1.0]]).evaluator, xh, c=1.0).values
        record("mellin_round_trip", float(np.max(np.abs(bump * back - ref) / np.max(np.abs(ref)))))

        # Mellin convolution theorem through the closed-form multiplicative convolution
        from .derivative import multiplicative_convolve

        h2 = _random_half_weight(rng)
        conv = multiplicative_convolve(h, h2)
        sv = np.array([[1.3 + 0.2j]])
        lhs = mellin(lambda y: conv(np.asarray(y)[..., None] if np.ndim(y) == 1 else y), sv).values
        rhs = mellin(h, sv).values * mellin(h2, sv).values
        record("mellin_product", float(np.max(np.abs(bump * lhs - rhs) / np.max(np.abs(rhs)))))

    for key in fails:
        out.append(make_report(f"transforms/battery_{key}", DistanceKind.COUNT, fails[key], 0, trials, seed, worst_relative_error=worst[key], tolerance=1e-4))
    out.append(uniqueness_report(MatrixSpace.herm(2), count=50, seed=seed, negative_control=negative_control))
    out.append(uniqueness_report(MatrixSpace.chiral(2), count=50, seed=seed + 1, negative_control=negative_control))
    return out


def uniqueness_report(space: MatrixSpace, count: int = 50, seed: int = 0, negative_control: bool = False, threshold: float = 1e-6) -> ComparisonReport:
    """Random symmetric perturbations of a Gaussian weight must change the principle output.

    The statistic counts perturbations whose output changes by at most
    ``threshold`` on a probe grid; the report passes when that count is 0.
    """
    from .derivative import derivative_principle
    from .weights import WeightFunction

    rng = np.random.default_rng(seed)
    n = space.n
    scale = 1.0 if space.kind is SpaceKind.HERM else np.sqrt(0.5)
    base = WeightFunction.gaussian(n, scale=scale)
    domain = space.spectral_domain
    probes = probe_points(domain, n, 400, seed)
    f0 = derivative_principle(space, base, check=False)(probes)
    undetected, changes = 0, []
    for _ in range(count):
        p = 2 * int(rng.integers(0, 3)) if space.is_hankel else int(rng.integers(0, 4))
        a = float(rng.uniform(0.3, 2.0))
        amp = float(rng.uniform(1e-3, 1e-2)) * (0.0 if negative_control else 1.0) * (1 if rng.random() < 0.5 else -1)
        delta = WeightFunction("RealLine", n, {tuple((p, a, 0.0) for _ in range(n)): amp}).symmetrize()
        f1 = derivative_principle(space, base + delta, check=False)(probes)
        change = float(np.max(np.abs(f1 - f0)))
        changes.append(change)
        if not change > threshold:
            undetected += 1
    return make_report(f"transforms/uniqueness_{space.kind.value}_n{n}", DistanceKind.COUNT, undetected, 0, count, seed, min_change=min(changes), detection_threshold=threshold)


SUITE_FUNCTIONS = {
    "herm": suite_herm,
    "hankel": suite_hankel,
    "hermplus": suite_hermplus,
    "unitary": suite_unitary,
    "haarparam": suite_haarparam,
    "transforms": suite_transforms,
}


def run_suite(name: str, budget: int = 100_000, seed: int = 1, negative_control: bool = False) -> list[ComparisonReport]:
    """Run one named suite, or every suite for ``"all"``."""
    if int(budget) < 1:
        raise ConfigurationError("sample budget must be positive")
    budget = int(budget)
    if name == "all":
        reports = []
        for key in SUITES:
            reports.extend(SUITE_FUNCTIONS[key](budget, seed, negative_control))
        return reports
    if name not in SUITE_FUNCTIONS:
        raise ConfigurationError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return SUITE_FUNCTIONS[name](budget, seed, negative_control)
