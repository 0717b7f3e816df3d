"""Command-line interface: ``rmtweights {sample,density,convolve,verify}``.

Exit codes: 0 success, 1 verification or numerical failure, 2 usage error,
3 domain error.  Every output starts with a metadata record holding the
full configuration, the library version and the Gaussian convention (a
``#``-prefixed JSON line for CSV, a ``{"meta": ...}`` line for JSONL).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from math import pi
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .core import (
    GAUSSIAN_CONVENTION,
    EnsembleSpec,
    Gaussian,
    Ginibre,
    HaarUniform,
    MatrixSpace,
    SpaceKind,
    WishartLike,
    lu_diagonal,
    pseudo_diagonal,
    sample_matrices,
    spectra,
)
from .errors import ConfigurationError, DomainError, RMTError

log = logging.getLogger("rmtweights")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3
ANGLE_COORDS = ("angles", "appendixB")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    seed: Optional[int]
    output_path: Optional[str]
    format: str
    params: dict = field(default_factory=dict)

    def header(self, **extra) -> dict:
        return {"config": asdict(self), "version": __version__, "gaussian_convention": GAUSSIAN_CONVENTION, **extra}


def _num(v: float) -> str:
    return repr(float(v))


class _Writer:
    """Single-threaded writer for CSV (with a ``#`` JSON header line) or JSONL."""

    def __init__(self, stream, fmt: str, header: dict):
        self.stream = stream
        self.fmt = fmt
        if fmt == "csv":
            stream.write("# " + json.dumps(header, sort_keys=True) + "\n")
            self.csv = csv.writer(stream, lineterminator="\n")
        else:
            stream.write(json.dumps({"meta": header}, sort_keys=True) + "\n")
        self.columns: list[str] = []

    def set_columns(self, columns: Sequence[str]):
        self.columns = list(columns)
        if self.fmt == "csv":
            self.csv.writerow(self.columns)

    def row(self, values: Sequence[float]):
        if self.fmt == "csv":
            self.csv.writerow([_num(v) for v in values])
        else:
            self.stream.write(json.dumps(dict(zip(self.columns, map(float, values)))) + "\n")

    def record(self, obj: dict):
        self.stream.write(json.dumps(obj, sort_keys=True) + "\n")


def _open(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# specs and weights


def _space(args) -> MatrixSpace:
    name = args.space
    n = args.n
    if n < 1:
        raise ConfigurationError("--n must be positive")
    ctors = {
        "herm": MatrixSpace.herm,
        "io_even": MatrixSpace.io_even,
        "io_odd": MatrixSpace.io_odd,
        "usp": MatrixSpace.usp,
        "hermplus": MatrixSpace.hermplus,
        "unitary": MatrixSpace.unitary,
    }
    if name == "chiral":
        return MatrixSpace.chiral(n, args.nu)
    return ctors[name](n)


def _density(args):
    d = args.density
    if d == "gaussian":
        return Gaussian(args.scale)
    if d == "ginibre":
        return Ginibre(args.scale)
    if d == "wishart":
        if args.dof is None:
            raise ConfigurationError("--density wishart needs --dof")
        return WishartLike(args.dof)
    return HaarUniform()


def _builtin_weight(name: str, space: MatrixSpace):
    """Named weights: ``gaussian[:scale]``, ``gue``, ``lue``, ``wishart:dof``, ``cue``."""
    from .derivative import wishart_lu_weight
    from .weights import WeightFunction

    head, _, arg = name.partition(":")
    n = space.n
    kind = space.kind
    if head in ("gaussian", "gue", "lue") and kind is not SpaceKind.HERM_PLUS:
        if kind is SpaceKind.UNITARY:
            raise DomainError("no Gaussian weight on the unitary group")
        scale = float(arg) if arg else 1.0
        # pseudo-diagonal variance is scale^2/2 on the Hankel class
        if space.is_hankel:
            scale *= np.sqrt(0.5)
        return WeightFunction.gaussian(n, scale=scale)
    if head in ("wishart", "lue") and kind is SpaceKind.HERM_PLUS:
        return wishart_lu_weight(n, int(arg) if arg else n)
    if head == "cue":
        if kind is not SpaceKind.UNITARY:
            raise DomainError("the CUE weight lives on the unitary group")
        return WeightFunction.cue_weight(n)
    raise ConfigurationError(f"unknown builtin weight {name!r} for space {kind.value}")


def _load_weight(spec: str, space: MatrixSpace):
    from .weights import WeightFunction

    if spec.endswith(".json"):
        try:
            with open(spec, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read weight file {spec}: {exc}") from exc
        w = WeightFunction.from_json(text)
        if w.n != space.n:
            raise ConfigurationError(f"weight arity {w.n} does not match --n {space.n}")
        return w
    return _builtin_weight(spec, space)


def _grid_points(args, space: MatrixSpace) -> tuple[np.ndarray, list[np.ndarray]]:
    if args.points < 1:
        raise ConfigurationError("grid needs at least one point per axis")
    if space.kind is SpaceKind.UNITARY:
        axis = np.linspace(-pi, pi, args.points, endpoint=False)
    else:
        lo = args.lo if args.lo is not None else (-4.0 if space.kind is SpaceKind.HERM else 0.0)
        hi = args.hi if args.hi is not None else (4.0 if space.kind is SpaceKind.HERM else 8.0)
        if not hi > lo:
            raise ConfigurationError("--hi must exceed --lo")
        axis = np.linspace(lo, hi, args.points)
    axes = [axis] * space.n
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, space.n)
    return mesh, axes


def _trapezoid_total(values: np.ndarray, axes: list[np.ndarray], periodic: bool) -> float:
    v = values.reshape([a.size for a in axes])
    for a in axes:
        if a.size < 2:
            return float("nan")
        if periodic:
            v = np.sum(v, axis=0) * (2 * pi / a.size)
        else:
            v = trapezoid(v, a, axis=0)
    return float(v)


def _write_density(cfg: RunConfig, space: MatrixSpace, fn, args, extra: dict) -> int:
    pts, axes = _grid_points(args, space)
    vals = np.real(np.asarray(fn(pts), dtype=complex))
    total = _trapezoid_total(vals, axes, space.kind is SpaceKind.UNITARY)
    stream, close = _open(cfg.output_path)
    try:
        w = _Writer(stream, cfg.format, cfg.header(normalization=total, space=space.describe(), **extra))
        w.set_columns([f"x{j + 1}" for j in range(space.n)] + ["density"])
        for p, v in zip(pts, vals):
            w.row([*p, v])
    finally:
        if close:
            stream.close()
    log.info("grid normalization %.6g", total)
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands


def cmd_sample(args) -> int:
    space = _space(args)
    spec = EnsembleSpec(space, _density(args))
    if args.count < 1:
        raise ConfigurationError("--count must be positive")
    angles = args.coords in ANGLE_COORDS
    if angles and space.kind is not SpaceKind.UNITARY:
        raise ConfigurationError(f"--coords {args.coords} applies to the unitary group")
    cfg = RunConfig("sample", args.seed, args.out, args.format, {**spec.describe(), "count": args.count, "aux": args.aux, "coords": args.coords})
    rng = np.random.default_rng(args.seed)
    n = space.n
    columns = [f"x{j + 1}" for j in range(n)]
    coord_cols: list[str] = []
    if angles:
        from .haarparam import _pairs, build_unitary, sample_haar_coordinates

        c = sample_haar_coordinates(n, rng, args.count)
        X = build_unitary(c)
        pairs = _pairs(n)
        coord_cols = [f"alpha{j + 1}" for j in range(n)] + [f"phi{j}_{k}" for j, k in pairs] + [f"psi{j}_{k}" for j, k in pairs]
        coord_vals = np.concatenate(
            [c.alpha, np.stack([c.phi[:, j - 1, k - 1] for j, k in pairs], axis=-1) if pairs else np.zeros((args.count, 0)),
             np.stack([c.psi[:, j - 1, k - 1] for j, k in pairs], axis=-1) if pairs else np.zeros((args.count, 0))],
            axis=-1,
        )
    else:
        X = sample_matrices(spec, rng, args.count)
    vals = spectra(X, space)
    aux_cols: list[str] = []
    aux = np.zeros((args.count, 0))
    if args.aux == "diagonal":
        aux = pseudo_diagonal(X, space)
        aux_cols = [f"d{j + 1}" for j in range(n)]
    elif args.aux == "lu":
        u = lu_diagonal(X)
        if np.iscomplexobj(u) and space.kind is SpaceKind.UNITARY:
            aux = np.concatenate([u.real, u.imag], axis=-1)
            aux_cols = [f"u{j + 1}_re" for j in range(n)] + [f"u{j + 1}_im" for j in range(n)]
        else:
            aux = np.real(u)
            aux_cols = [f"u{j + 1}" for j in range(n)]
    stream, close = _open(args.out)
    try:
        w = _Writer(stream, args.format, cfg.header(columns=columns + aux_cols + coord_cols))
        w.set_columns(columns + aux_cols + coord_cols)
        for i in range(args.count):
            row = list(vals[i]) + list(aux[i])
            if coord_cols:
                row += list(coord_vals[i])
            w.row(row)
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_density(args) -> int:
    from .derivative import derivative_principle

    space = _space(args)
    if (args.builtin is None) == (args.weight is None):
        raise ConfigurationError("give exactly one of --builtin and --weight")
    weight = _load_weight(args.weight or args.builtin, space)
    f = derivative_principle(space, weight)
    cfg = RunConfig("density", None, args.out, args.format, {"space": space.describe(), "weight": weight.to_json(), "lo": args.lo, "hi": args.hi, "points": args.points})
    extra = {"exact_integral": float(f.integral())} if f.symbolic else {}
    return _write_density(cfg, space, f, args, extra)


def cmd_convolve(args) -> int:
    from .derivative import additive_convolve

    space = _space(args)
    wa = _load_weight(args.weight_a, space)
    wb = _load_weight(args.weight_b, space)
    f = additive_convolve(wa, wb, space)
    cfg = RunConfig("convolve", None, args.out, args.format, {"space": space.describe(), "weight_a": wa.to_json(), "weight_b": wb.to_json(), "lo": args.lo, "hi": args.hi, "points": args.points})
    return _write_density(cfg, space, f, args, {"exact_integral": float(f.integral())})


def _budget(text: str) -> int:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid budget {text!r}") from exc
    if not np.isfinite(v) or v != int(v):
        raise argparse.ArgumentTypeError(f"budget must be a whole number, got {text!r}")
    return int(v)


def cmd_verify(args) -> int:
    from .verify import run_suite

    if args.budget < 1:
        raise ConfigurationError("--budget must be positive")
    reports = run_suite(args.suite, args.budget, args.seed, args.negative_control)
    cfg = RunConfig("verify", args.seed, args.out, "jsonl", {"suite": args.suite, "budget": args.budget, "negative_control": args.negative_control})
    stream, close = _open(args.out)
    try:
        stream.write(json.dumps({"meta": cfg.header()}, sort_keys=True) + "\n")
        for r in reports:
            stream.write(r.to_json() + "\n")
    finally:
        if close:
            stream.close()
    failed = [r.test_name for r in reports if not r.passed]
    for name in failed:
        log.error("failed: %s", name)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


SPACES = ["herm", "io_even", "io_odd", "usp", "chiral", "hermplus", "unitary"]


def _add_space(p):
    p.add_argument("--space", required=True, choices=SPACES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nu", type=int, default=0, help="chiral only: extra columns")


def _add_grid(p):
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--points", type=int, default=81, help="grid points per axis")
    p.add_argument("--out", default=None, help="output path (stdout by default)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rmtweights", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw spectral samples")
    _add_space(p)
    p.add_argument("--density", required=True, choices=["gaussian", "ginibre", "wishart", "haar"])
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--dof", type=int, default=None)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aux", choices=["none", "diagonal", "lu"], default="none")
    p.add_argument("--coords", choices=["matrix", *ANGLE_COORDS], default="matrix", help="unitary: sample through recursive angle coordinates and emit them (appendixB is an alias of angles)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density", help="evaluate a derivative-principle density on a grid")
    _add_space(p)
    p.add_argument("--builtin", default=None, help="gaussian[:scale], gue, lue, wishart:dof, cue")
    p.add_argument("--weight", default=None, help="weight JSON file")
    _add_grid(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("convolve", help="density of A + B from two (pseudo-)diagonal weights")
    _add_space(p)
    p.add_argument("--weight-a", required=True)
    p.add_argument("--weight-b", required=True)
    _add_grid(p)
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("verify", help="run a verification suite and emit JSONL reports")
    p.add_argument("--suite", required=True, choices=["herm", "hankel", "hermplus", "unitary", "haarparam", "transforms", "all"])
    p.add_argument("--budget", type=_budget, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--negative-control", action="store_true", help="perturb the predictions; the run must fail")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"rmtweights: usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DomainError as exc:
        sys.stderr.write(f"rmtweights: domain error: {exc}\n")
        return EXIT_DOMAIN
    except (ConfigurationError, UsageError) as exc:
        sys.stderr.write(f"rmtweights: usage error: {exc}\n")
        return EXIT_USAGE
    except RMTError as exc:
        sys.stderr.write(f"rmtweights: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
