"""Symbolic weight functions and the Vandermonde differential operators.

A :class:`WeightFunction` is a finite sum of separable terms
``c * prod_j atom(key_j)(x_j)``.  Atom keys by domain:

* ``RealLine``: ``(p, a, b)`` meaning ``x^p exp(-a x^2 + b x)``, ``p >= 0`` integer, ``a > 0``.
* ``HalfLine``: ``(g, a)`` meaning ``x^g exp(-a x)``, ``a > 0``.
* ``Torus``: ``k`` meaning ``exp(i k theta)``.

Polynomial factors are folded into the powers, so a polynomial times a
Gaussian becomes several terms sharing the same exponential.  Every family is
closed under the one-dimensional operators below.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gamma, lgamma, pi
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .core import SpectralDomain
from .errors import (
    AccuracyError,
    ConfigurationError,
    DomainError,
    DomainMismatchError,
    ResourceError,
)
from .grid import GridDensity

DEFAULT_TERM_CAP = 10**6
PRUNE = 1e-14
EVAL_BLOCK = 2_000_000

Key = tuple
Terms = Dict[Tuple[Key, ...], complex]


def _canon(x: float) -> float:
    x = float(x)
    if x == 0.0:
        return 0.0
    return float(f"{x:.14g}")


def _atom_key(domain: SpectralDomain, key) -> Key:
    if domain is SpectralDomain.REAL_LINE:
        p, a, b = key
        if int(p) != p or p < 0:
            raise DomainError(f"RealLine atom power must be a non-negative integer, got {p}")
        return (int(p), _canon(a), _canon(b))
    if domain is SpectralDomain.HALF_LINE:
        g, a = key
        return (_canon(g), _canon(a))
    return int(key)


def _permutation_sign(perm: Tuple[int, ...]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def permutations_with_sign(n: int):
    for perm in itertools.permutations(range(n)):
        yield perm, _permutation_sign(perm)


class WeightFunction:
    """Immutable finite sum of separable atoms on ``domain^n``."""

    __slots__ = ("domain", "n", "_terms")

    def __init__(self, domain, n: int, terms: Mapping[Tuple, complex], *, prune: float = PRUNE):
        domain = SpectralDomain(domain)
        self.domain = domain
        self.n = int(n)
        merged: Terms = {}
        for key, c in terms.items():
            if len(key) != self.n:
                raise ConfigurationError(f"term key {key} does not have arity {self.n}")
            k = tuple(_atom_key(domain, a) for a in key)
            if domain is not SpectralDomain.TORUS:
                for atom in k:
                    if atom[1] <= 0:
                        raise DomainError(f"atom exponential rate must be positive, got {atom}")
            merged[k] = merged.get(k, 0) + complex(c)
        scale = max((abs(c) for c in merged.values()), default=0.0)
        cut = prune * scale if scale > 0 else 0.0
        self._terms = {k: c for k, c in sorted(merged.items(), key=lambda kv: _sort_key(kv[0])) if abs(c) > cut}

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, domain, n: int) -> "WeightFunction":
        return cls(domain, n, {})

    @classmethod
    def gaussian(cls, n: int, scale: float = 1.0, mean: float = 0.0) -> "WeightFunction":
        """Product of ``N(mean, scale^2)`` densities."""
        a = 1.0 / (2 * scale**2)
        b = mean / scale**2
        c = np.exp(-(mean**2) * a) / np.sqrt(2 * pi * scale**2)
        return cls(SpectralDomain.REAL_LINE, n, {tuple((0, a, b) for _ in range(n)): c**n})

    @classmethod
    def gamma(cls, n: int, shape: float = 1.0, rate: float = 1.0) -> "WeightFunction":
        """Product of Gamma densities ``x^{shape-1} e^{-rate x} rate^shape / Gamma(shape)``."""
        if shape <= 0:
            raise DomainError("Gamma shape must be positive")
        c = np.exp(shape * np.log(rate) - lgamma(shape))
        return cls(SpectralDomain.HALF_LINE, n, {tuple((shape - 1, rate) for _ in range(n)): c**n})

    @classmethod
    def product(cls, factors: Iterable["WeightFunction"]) -> "WeightFunction":
        """Tensor product of one-dimensional (or lower-arity) weights."""
        factors = list(factors)
        domain = factors[0].domain
        if any(f.domain is not domain for f in factors):
            raise DomainMismatchError("tensor factors live on different domains")
        terms: Terms = {(): 1.0}
        for f in factors:
            new: Terms = {}
            for k1, c1 in terms.items():
                for k2, c2 in f._terms.items():
                    new[k1 + k2] = new.get(k1 + k2, 0) + c1 * c2
            terms = new
        return cls(domain, sum(f.n for f in factors), terms)

    @classmethod
    def trig(cls, n: int, coeffs: Mapping[Tuple[int, ...], complex]) -> "WeightFunction":
        """Trigonometric polynomial ``sum_k c_k exp(i k . theta)``."""
        return cls(SpectralDomain.TORUS, n, {tuple(int(v) for v in k): c for k, c in coeffs.items()})

    @classmethod
    def cue_weight(cls, n: int) -> "WeightFunction":
        """``(2 pi)^{-n} perm[exp(-i (j-1) theta_k)]``, the CUE weight."""
        terms: Terms = {}
        c = (2 * pi) ** (-n)
        for perm in itertools.permutations(range(n)):
            key = tuple(-p for p in perm)
            terms[key] = terms.get(key, 0) + c
        return cls(SpectralDomain.TORUS, n, terms)

    # -- basic protocol ----------------------------------------------------

    @property
    def terms(self) -> Dict[Tuple[Key, ...], complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return f"WeightFunction({self.domain.value}, n={self.n}, terms={len(self)})"

    def _check(self, other: "WeightFunction"):
        if not isinstance(other, WeightFunction):
            raise TypeError(f"cannot combine WeightFunction with {type(other).__name__}")
        if other.domain is not self.domain or other.n != self.n:
            raise DomainMismatchError("weights live on different domains or arities")

    def __add__(self, other):
        self._check(other)
        t = dict(self._terms)
        for k, c in other._terms.items():
            t[k] = t.get(k, 0) + c
        return WeightFunction(self.domain, self.n, t)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor: complex) -> "WeightFunction":
        return WeightFunction(self.domain, self.n, {k: factor * c for k, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, WeightFunction):
            self._check(other)
            t: Terms = {}
            for k1, c1 in self._terms.items():
                for k2, c2 in other._terms.items():
                    k = tuple(_multiply_atoms(self.domain, a, b) for a, b in zip(k1, k2))
                    t[k] = t.get(k, 0) + c1 * c2
            return WeightFunction(self.domain, self.n, t)
        return self.scale(other)

    __rmul__ = __mul__

    def equals(self, other: "WeightFunction", tol: float = 1e-12) -> bool:
        """Symbolic equality of canonical forms up to a relative coefficient tolerance."""
        self._check(other)
        diff = (self - other)._terms
        scale = max([abs(c) for c in self._terms.values()] + [abs(c) for c in other._terms.values()] + [1e-300])
        return all(abs(c) <= tol * scale for c in diff.values())

    def permute(self, perm: Tuple[int, ...]) -> "WeightFunction":
        """Weight ``w(x_{perm[0]}, ..., x_{perm[n-1]})``."""
        t: Terms = {}
        for k, c in self._terms.items():
            nk = [None] * self.n
            for j, pj in enumerate(perm):
                nk[pj] = k[j]
            nk = tuple(nk)
            t[nk] = t.get(nk, 0) + c
        return WeightFunction(self.domain, self.n, t)

    def symmetrize(self) -> "WeightFunction":
        total = WeightFunction.zero(self.domain, self.n)
        count = 0
        for perm in itertools.permutations(range(self.n)):
            total = total + self.permute(perm)
            count += 1
        return total.scale(1.0 / count)

    @property
    def symmetric(self) -> bool:
        """True when the canonical form is invariant under all argument permutations."""
        return all(self.permute(p).equals(self) for p in itertools.permutations(range(self.n)))

    def is_even(self) -> bool:
        """RealLine only: invariance under ``x_j -> -x_j`` for every ``j``."""
        if self.domain is not SpectralDomain.REAL_LINE:
            raise DomainMismatchError("evenness is defined for RealLine weights")
        for j in range(self.n):
            t: Terms = {}
            for k, c in self._terms.items():
                p, a, b = k[j]
                nk = k[:j] + ((p, a, -b),) + k[j + 1 :]
                t[nk] = t.get(nk, 0) + c * (-1) ** p
            if not WeightFunction(self.domain, self.n, t).equals(self):
                return False
        return True

    @property
    def is_real(self) -> bool:
        if self.domain is SpectralDomain.TORUS:
            for k, c in self._terms.items():
                neg = tuple(-v for v in k)
                if abs(self._terms.get(neg, 0) - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                    return False
            return True
        return all(abs(c.imag) <= 1e-12 * max(1.0, abs(c)) for c in self._terms.values())

    # -- evaluation --------------------------------------------------------

    def __call__(self, points) -> np.ndarray:
        return self.eval(points)

    def eval(self, points) -> np.ndarray:
        """Evaluate at ``points`` of shape ``(..., n)``.

        Per-term exponents are shifted by their maximum before
        exponentiation so widely scaled exponentials do not overflow.
        Returns real values unless the weight is genuinely complex.
        """
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"expected points with last dimension {self.n}")
        if self.domain is SpectralDomain.HALF_LINE and np.any(x < 0):
            raise DomainError("HalfLine weights are evaluated at x >= 0")
        batch = x.shape[:-1]
        if not self._terms:
            return np.zeros(batch)
        size = int(np.prod(batch))
        if size * len(self._terms) > EVAL_BLOCK:
            # bound the (terms x points) temporaries
            flat = x.reshape(-1, self.n)
            step = max(1, EVAL_BLOCK // len(self._terms))
            parts = [self.eval(flat[i : i + step]) for i in range(0, size, step)]
            return np.concatenate(parts).reshape(batch)
        logs, prefs = [], []
        cache: dict = {}
        for key, c in self._terms.items():
            lg = np.zeros(batch, dtype=complex)
            pre = np.full(batch, c, dtype=complex)
            for j, atom in enumerate(key):
                ck = (j, atom)
                if ck not in cache:
                    cache[ck] = _atom_log_parts(self.domain, atom, x[..., j])
                e, poly = cache[ck]
                lg = lg + e
                pre = pre * poly
            logs.append(lg)
            prefs.append(pre)
        logs = np.array(logs)
        shift = np.max(logs.real, axis=0)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        total = np.sum(np.array(prefs) * np.exp(logs - shift), axis=0) * np.exp(shift)
        if self.is_real:
            return total.real
        return total

    def integral(self) -> complex | float:
        """Exact integral over the whole domain."""
        total = 0j
        for key, c in self._terms.items():
            v = c
            for atom in key:
                v *= atom_integral(self.domain, atom)
            total += v
        return total.real if self.is_real else total

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        terms = []
        for key, c in self._terms.items():
            terms.append({"coef": [c.real, c.imag], "atoms": [list(a) if isinstance(a, tuple) else a for a in key]})
        return json.dumps({"domain": self.domain.value, "n": self.n, "terms": terms})

    @classmethod
    def from_json(cls, text: str) -> "WeightFunction":
        data = json.loads(text) if isinstance(text, str) else text
        try:
            domain = SpectralDomain(data["domain"])
            n = int(data["n"])
            terms: Terms = {}
            for t in data["terms"]:
                coef = t["coef"]
                c = complex(coef[0], coef[1]) if isinstance(coef, list) else complex(Fraction(str(coef)))
                key = tuple(tuple(a) if isinstance(a, list) else a for a in t["atoms"])
                terms[key] = terms.get(key, 0) + c
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed weight JSON: {exc}") from exc
        return cls(domain, n, terms)


def _sort_key(key):
    return tuple(a if isinstance(a, tuple) else (a,) for a in key)


def _multiply_atoms(domain, a, b):
    if domain is SpectralDomain.REAL_LINE:
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2])
    if domain is SpectralDomain.HALF_LINE:
        return (a[0] + b[0], a[1] + b[1])
    return a + b


def _atom_log_parts(domain, atom, x):
    """Exponent and non-exponential factor of one atom at ``x``."""
    if domain is SpectralDomain.REAL_LINE:
        p, a, b = atom
        return (-a * x * x + b * x).astype(complex), x**p
    if domain is SpectralDomain.HALF_LINE:
        g, a = atom
        with np.errstate(divide="ignore"):
            if g == 0:
                return (-a * x).astype(complex), np.ones_like(x)
            return (-a * x).astype(complex), x**g
    return (1j * atom * x), np.ones_like(x)


def gaussian_moment(k: int, a: float) -> float:
    """``int t^k exp(-a t^2) dt`` over the real line."""
    if k % 2:
        return 0.0
    return gamma((k + 1) / 2) / a ** ((k + 1) / 2)


def atom_integral(domain, atom) -> complex:
    if domain is SpectralDomain.REAL_LINE:
        p, a, b = atom
        shift = b / (2 * a)
        s = sum(comb(p, l) * shift ** (p - l) * gaussian_moment(l, a) for l in range(0, p + 1, 2))
        return np.exp(b * b / (4 * a)) * s
    if domain is SpectralDomain.HALF_LINE:
        g, a = atom
        if g <= -1:
            raise DomainError(f"x^{g} e^(-{a} x) is not integrable at 0")
        return np.exp(lgamma(g + 1) - (g + 1) * np.log(a))
    return 2 * pi if atom == 0 else 0.0


def times_vandermonde(w: WeightFunction) -> WeightFunction:
    """Multiply by ``Delta(x)`` (RealLine/HalfLine) or ``Delta(e^{i theta})`` (Torus)."""
    n = w.n
    out: Terms = {}
    for perm, sign in permutations_with_sign(n):
        for key, c in w._terms.items():
            nk = []
            for j, atom in enumerate(key):
                if w.domain is SpectralDomain.REAL_LINE:
                    nk.append((atom[0] + perm[j], atom[1], atom[2]))
                elif w.domain is SpectralDomain.HALF_LINE:
                    nk.append((atom[0] + perm[j], atom[1]))
                else:
                    nk.append(atom + perm[j])
            nk = tuple(nk)
            out[nk] = out.get(nk, 0) + sign * c
    return WeightFunction(w.domain, n, out)


def times_power(w: WeightFunction, power: float) -> WeightFunction:
    """HalfLine only: multiply by ``prod_j x_j^power``."""
    if w.domain is not SpectralDomain.HALF_LINE:
        raise DomainMismatchError("times_power needs a HalfLine weight")
    return WeightFunction(w.domain, w.n, {tuple((g + power, a) for g, a in k): c for k, c in w._terms.items()})


# ---------------------------------------------------------------------------
# operators


class OperatorKind(enum.Enum):
    FLAT = "flat"  # -d/dx on the real line
    HANKEL = "hankel"  # -x^nu d/dx x^(1-nu) d/dx on the half line
    MELLIN = "mellin"  # -x d/dx on the half line
    TORUS = "torus"  # i d/dtheta on the circle
    FLAT_SECOND = "flat_second"  # -d^2/dx^2 on the real line
    HALF_FLAT = "half_flat"  # -d/dx on the half line
    SQRT_FLAT = "sqrt_flat"  # -sqrt(x) d/dx on the half line


OPERATOR_DOMAIN = {
    OperatorKind.FLAT: SpectralDomain.REAL_LINE,
    OperatorKind.FLAT_SECOND: SpectralDomain.REAL_LINE,
    OperatorKind.HANKEL: SpectralDomain.HALF_LINE,
    OperatorKind.MELLIN: SpectralDomain.HALF_LINE,
    OperatorKind.HALF_FLAT: SpectralDomain.HALF_LINE,
    OperatorKind.SQRT_FLAT: SpectralDomain.HALF_LINE,
    OperatorKind.TORUS: SpectralDomain.TORUS,
}


@dataclass(frozen=True)
class VandermondeOperator:
    """``Delta(D) = prod_{j<k} (D_k - D_j)`` for commuting one-dimensional ``D_j``."""

    kind: OperatorKind
    n: int
    nu: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.n < 1:
            raise ConfigurationError("operator arity must be positive")
        if self.kind is OperatorKind.HANKEL:
            if self.nu is None:
                raise ConfigurationError("HankelDeriv needs nu")
            object.__setattr__(self, "nu", float(self.nu))

    @property
    def domain(self) -> SpectralDomain:
        return OPERATOR_DOMAIN[self.kind]

    @classmethod
    def flat(cls, n):
        return cls(OperatorKind.FLAT, n)

    @classmethod
    def hankel(cls, n, nu):
        return cls(OperatorKind.HANKEL, n, nu)

    @classmethod
    def mellin(cls, n):
        return cls(OperatorKind.MELLIN, n)

    @classmethod
    def torus(cls, n):
        return cls(OperatorKind.TORUS, n)


def apply_atom(kind: OperatorKind, atom, nu: Optional[float] = None) -> Dict[Key, complex]:
    """One-dimensional operator applied to a single atom, as an atom sum."""
    out: Dict[Key, complex] = {}

    def add(k, c):
        if c != 0:
            out[k] = out.get(k, 0) + c

    if kind is OperatorKind.FLAT:
        p, a, b = atom
        if p > 0:
            add((p - 1, a, b), -p)
        add((p + 1, a, b), 2 * a)
        add((p, a, b), -b)
    elif kind is OperatorKind.FLAT_SECOND:
        for k1, c1 in apply_atom(OperatorKind.FLAT, atom).items():
            for k2, c2 in apply_atom(OperatorKind.FLAT, k1).items():
                add(k2, -c1 * c2)
    elif kind is OperatorKind.MELLIN:
        g, a = atom
        add((g, a), -g)
        add((g + 1, a), a)
    elif kind is OperatorKind.HANKEL:
        g, a = atom
        add((_canon(g - 1), a), -g * (g - nu))
        add((g, a), a * (2 * g + 1 - nu))
        add((_canon(g + 1), a), -a * a)
    elif kind is OperatorKind.HALF_FLAT:
        g, a = atom
        add((_canon(g - 1), a), -g)
        add((g, a), a)
    elif kind is OperatorKind.SQRT_FLAT:
        g, a = atom
        add((_canon(g - 0.5), a), -g)
        add((_canon(g + 0.5), a), a)
    elif kind is OperatorKind.TORUS:
        add(atom, -atom)
    return out


def _check_family(kind: OperatorKind, w: WeightFunction):
    if not isinstance(w, WeightFunction):
        raise DomainMismatchError(f"expected a WeightFunction, got {type(w).__name__}")
    if OPERATOR_DOMAIN[kind] is not w.domain:
        raise DomainMismatchError(f"operator {kind.value} acts on {OPERATOR_DOMAIN[kind].value}, weight is {w.domain.value}")


def apply_one_dim(op_kind, j: int, w: WeightFunction, nu: Optional[float] = None) -> WeightFunction:
    """Apply the one-dimensional operator ``D_j`` to ``w`` along axis ``j`` (0-based)."""
    kind = OperatorKind(op_kind)
    _check_family(kind, w)
    if kind is OperatorKind.HANKEL and nu is None:
        raise ConfigurationError("HankelDeriv needs nu")
    if not 0 <= j < w.n:
        raise ConfigurationError(f"axis {j} out of range for arity {w.n}")
    out: Terms = {}
    for key, c in w._terms.items():
        for atom, c2 in apply_atom(kind, key[j], nu).items():
            nk = key[:j] + (atom,) + key[j + 1 :]
            out[nk] = out.get(nk, 0) + c * c2
    return WeightFunction(w.domain, w.n, out)


def apply_vandermonde(op: VandermondeOperator, w: WeightFunction, term_cap: int = DEFAULT_TERM_CAP) -> WeightFunction:
    """Exact symbolic ``Delta(D) w = det[D_j^{k-1}] w``.

    Powers of each one-dimensional operator on each atom are cached, and each
    input term expands as a signed sum over permutations of tensor products.
    """
    _check_family(op.kind, w)
    if op.n != w.n:
        raise ConfigurationError(f"operator arity {op.n} != weight arity {w.n}")
    n = w.n
    cache: Dict[Tuple[Key, int], Dict[Key, complex]] = {}

    def power(atom, m):
        if (atom, m) in cache:
            return cache[(atom, m)]
        if m == 0:
            res = {atom: 1.0}
        else:
            res = {}
            for a1, c1 in power(atom, m - 1).items():
                for a2, c2 in apply_atom(op.kind, a1, op.nu).items():
                    res[a2] = res.get(a2, 0) + c1 * c2
        cache[(atom, m)] = res
        return res

    out: Terms = {}
    perms = list(permutations_with_sign(n))
    for key, c in w._terms.items():
        for perm, sign in perms:
            factors = [power(key[j], perm[j]) for j in range(n)]
            for combo in itertools.product(*[f.items() for f in factors]):
                nk = tuple(a for a, _ in combo)
                v = sign * c
                for _, cc in combo:
                    v *= cc
                out[nk] = out.get(nk, 0) + v
                if len(out) > term_cap:
                    raise ResourceError(f"Vandermonde expansion exceeds the cap of {term_cap} terms")
    return WeightFunction(w.domain, n, out)


# ---------------------------------------------------------------------------
# finite differences


def _grid_one_dim(kind: OperatorKind, values: np.ndarray, axis_index: int, grid: GridDensity, nu):
    ax = grid.axes[axis_index]
    h = ax.step
    shape = [1] * values.ndim
    shape[axis_index] = -1
    x = ax.points.reshape(shape)

    def d(v):
        if ax.periodic:
            return (np.roll(v, -1, axis=axis_index) - np.roll(v, 1, axis=axis_index)) / (2 * h)
        return np.gradient(v, h, axis=axis_index, edge_order=2)

    if kind is OperatorKind.FLAT or kind is OperatorKind.HALF_FLAT:
        return -d(values)
    if kind is OperatorKind.FLAT_SECOND:
        return d(d(values)) * -1
    if kind is OperatorKind.MELLIN:
        return -x * d(values)
    if kind is OperatorKind.SQRT_FLAT:
        return -np.sqrt(x) * d(values)
    if kind is OperatorKind.HANKEL:
        return -(x**nu) * d(x ** (1 - nu) * d(values))
    return 1j * d(values)


def _grid_vandermonde(op: VandermondeOperator, grid: GridDensity) -> np.ndarray:
    n = grid.ndim
    vals = np.asarray(grid.values, dtype=complex)
    total = np.zeros_like(vals)
    cache = {}
    for perm, sign in permutations_with_sign(n):
        v = vals
        prefix = ()
        for j in range(n):
            prefix = prefix + (perm[j],)
            if prefix in cache:
                v = cache[prefix]
                continue
            for _ in range(perm[j]):
                v = _grid_one_dim(op.kind, v, j, grid, op.nu)
            cache[prefix] = v
        total = total + sign * v
    return total


def _subsample(grid: GridDensity) -> GridDensity:
    from .grid import GridAxis

    axes = []
    for a in grid.axes:
        if a.periodic:
            axes.append(GridAxis(a.lo, a.hi, a.count // 2, periodic=True))
        else:
            axes.append(GridAxis(a.lo, a.lo + 2 * a.step * ((a.count - 1) // 2), (a.count - 1) // 2 + 1))
    sl = tuple(slice(None, None, 2) if a.periodic else slice(0, 2 * ((a.count - 1) // 2) + 1, 2) for a in grid.axes)
    return GridDensity(grid.domain, tuple(axes), grid.values[sl], normalized=False)


def finite_difference_oracle(
    op: VandermondeOperator,
    w_numeric: GridDensity,
    tol: float = 1e-3,
    margin: int = 4,
) -> GridDensity:
    """Central-difference evaluation of ``Delta(D)`` on a gridded function.

    The truncation error is estimated by Richardson comparison with the grid of
    twice the step; an estimate above ``tol`` (on points at least ``margin``
    cells from a non-periodic boundary) raises :class:`AccuracyError`.
    """
    if w_numeric.ndim != op.n:
        raise ConfigurationError("operator arity does not match grid dimension")
    if any(d is not op.domain for d in w_numeric.domain):
        raise DomainMismatchError("grid domain does not match the operator")
    if op.kind is OperatorKind.HANKEL and any(a.lo <= 0 for a in w_numeric.axes):
        raise DomainError("Hankel finite differences need grids excluding x = 0")
    for a in w_numeric.axes:
        if a.periodic and a.count % 2:
            raise ConfigurationError("periodic axes need an even point count for error estimation")
    fine = _grid_vandermonde(op, w_numeric)
    coarse_grid = _subsample(w_numeric)
    coarse = _grid_vandermonde(op, coarse_grid)
    sl = tuple(slice(None, None, 2) if a.periodic else slice(0, 2 * ((a.count - 1) // 2) + 1, 2) for a in w_numeric.axes)
    est = np.abs(fine[sl] - coarse) / 3.0
    inner = tuple(
        slice(None) if a.periodic else slice(margin, max(margin + 1, c.count - margin))
        for a, c in zip(w_numeric.axes, coarse_grid.axes)
    )
    err = float(np.max(est[inner])) if est[inner].size else 0.0
    values = fine.real if op.kind is not OperatorKind.TORUS and not np.iscomplexobj(w_numeric.values) else fine
    if err > tol:
        raise AccuracyError(f"finite-difference error estimate {err:.3g} exceeds tolerance {tol:.3g}", value=values, error=err)
    out = GridDensity(w_numeric.domain, w_numeric.axes, values, normalized=False)
    out.meta["error_estimate"] = err
    return out


# ---------------------------------------------------------------------------
# convolution and substitution


def _linear_power(alpha: float, beta: float, k: int) -> Dict[int, float]:
    """Coefficients of ``(alpha x + beta)^k`` by power of ``x``."""
    return {r: comb(k, r) * alpha**r * beta ** (k - r) for r in range(k + 1)}


def _convolve_real_atoms(f_atom, g_atom) -> Dict[Key, complex]:
    p, a, b = f_atom
    q, a2, b2 = g_atom
    c = a + a2
    # y = m + t with m = (a2/c) x + (b - b2)/(2c); x - m = (a/c) x - (b - b2)/(2c)
    beta = (b - b2) / (2 * c)
    m_poly = (a2 / c, beta)
    r_poly = (a / c, -beta)
    out_poly: Dict[int, float] = {}
    for i in range(p + 1):
        mp = _linear_power(*m_poly, p - i)
        for l in range(q + 1):
            mom = gaussian_moment(i + l, c)
            if mom == 0:
                continue
            coef = comb(p, i) * comb(q, l) * (-1) ** l * mom
            rp = _linear_power(*r_poly, q - l)
            for r1, c1 in mp.items():
                for r2, c2 in rp.items():
                    out_poly[r1 + r2] = out_poly.get(r1 + r2, 0.0) + coef * c1 * c2
    a_new = a * a2 / c
    b_new = (a2 * b + a * b2) / c
    const = np.exp((b - b2) ** 2 / (4 * c))
    return {(r, a_new, b_new): const * v for r, v in out_poly.items() if v != 0}


def convolve(w1: WeightFunction, w2: WeightFunction, term_cap: int = DEFAULT_TERM_CAP) -> WeightFunction:
    """Coordinatewise additive convolution ``int w1(y) w2(x - y) dy``.

    Exact for RealLine (Gaussian-polynomial atoms) and Torus (Fourier
    coefficients multiply).  HalfLine weights are rejected: their
    multiplicative convolutions leave the atom family.
    """
    w1._check(w2)
    if w1.domain is SpectralDomain.HALF_LINE:
        raise DomainError("symbolic convolution is unavailable on HalfLine; use the numeric route")
    out: Terms = {}
    cache: dict = {}
    for k1, c1 in w1._terms.items():
        for k2, c2 in w2._terms.items():
            per_axis = []
            for a, b in zip(k1, k2):
                if (a, b) not in cache:
                    if w1.domain is SpectralDomain.TORUS:
                        cache[(a, b)] = {a: 2 * pi} if a == b else {}
                    else:
                        cache[(a, b)] = _convolve_real_atoms(a, b)
                per_axis.append(cache[(a, b)])
            for combo in itertools.product(*[f.items() for f in per_axis]):
                nk = tuple(x for x, _ in combo)
                v = c1 * c2
                for _, cc in combo:
                    v *= cc
                out[nk] = out.get(nk, 0) + v
                if len(out) > term_cap:
                    raise ResourceError(f"convolution exceeds the cap of {term_cap} terms")
    return WeightFunction(w1.domain, w1.n, out)


def substitute_square(w: WeightFunction) -> WeightFunction:
    """HalfLine weight ``x -> w(sqrt(x))`` for a RealLine ``w`` without linear exponents."""
    if w.domain is not SpectralDomain.REAL_LINE:
        raise DomainMismatchError("substitute_square takes a RealLine weight")
    out: Terms = {}
    for key, c in w._terms.items():
        nk = []
        for p, a, b in key:
            if b != 0:
                raise DomainError("w(sqrt(x)) leaves the atom family when linear exponents are present")
            nk.append((p / 2, a))
        nk = tuple(nk)
        out[nk] = out.get(nk, 0) + c
    return WeightFunction(SpectralDomain.HALF_LINE, w.n, out)
