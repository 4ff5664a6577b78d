"""Command-line front end.

Exit codes: 0 success, 1 invalid input (geometry, arguments, output path),
2 numerical failure (branch point, singular B, quadrature), 3 accuracy flag
raised under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .corner_analysis import Parity, PoleError
from .corner_system import DetBZeroError, QuadratureError, build_B, solve_corner_coeffs, wedge_residual
from .corner_system import write_csv as write_B_csv
from .exponent_solver import ContinuationError, exponent_families, write_csv as write_exp_csv
from .geometry import GeometryError, Polygon, equilateral_triangle, right_triangle, unit_square
from .kernels import NearBoundaryWarning
from .nystrom_solver import CompatibilityWarning, SingularSystemError

BUILTIN_GEOMETRIES = {
    "square": unit_square,
    "equilateral": equilateral_triangle,
    "right_triangle": right_triangle,
}


class UsageError(Exception):
    pass


class StrictError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_path(value) -> Path:
    p = Path(value)
    if not p.parent.exists() or not p.parent.is_dir():
        raise UsageError(f"output directory {p.parent} does not exist")
    if p.is_dir():
        raise UsageError(f"output path {p} is a directory")
    return p


def _check_N(N: int) -> int:
    if N < 2:
        raise UsageError("--corner-terms must be at least 2")
    return N


def _theta(value: float) -> float:
    if not 0 < value < 2:
        raise UsageError("--theta must lie in (0, 2)")
    return value


def _parities(value):
    return list(Parity) if value is None else [Parity.parse(value)]


def load_geometry(name: str) -> Polygon:
    if name in BUILTIN_GEOMETRIES:
        return BUILTIN_GEOMETRIES[name]()
    return Polygon.from_json(name)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_exponents(args) -> int:
    theta, N = _theta(args.theta), _check_N(args.corner_terms)
    out = _out_path(args.out)
    rows = []
    for parity in _parities(args.parity):
        fams = exponent_families(theta, N, parity)
        rows += [f for f in fams.values() if not f.special]
    write_exp_csv(rows, out)
    print(f"wrote {len(rows)} exponent families to {out}")
    return 0


def _bmatrix_scan(args, parity, out: Path) -> int:
    lo, hi, step = args.scan
    if step <= 0 or not 0 < lo <= hi < 2:
        raise UsageError("--scan needs 0 < START <= STOP < 2 and STEP > 0")
    thetas = np.round(np.arange(lo, hi + step / 2, step), 12)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["theta", "det_re", "det_im", "cond", "status"])
        for th in thetas:
            try:
                B = build_B(float(th), args.corner_terms, parity)
                d = complex(B.det)
                wr.writerow([repr(float(th)), repr(d.real), repr(d.imag), repr(B.condition), "ok"])
            except (ContinuationError, PoleError) as exc:
                wr.writerow([repr(float(th)), "", "", "", type(exc).__name__])
    print(f"wrote det B scan over {len(thetas)} angles to {out}")
    return 0


def cmd_bmatrix(args) -> int:
    N = _check_N(args.corner_terms)
    out = _out_path(args.out)
    parity = Parity.parse(args.parity or "tone")
    if args.scan:
        return _bmatrix_scan(args, parity, out)
    B = build_B(_theta(args.theta), N, parity)
    # raises DetBZeroError when B is numerically singular
    solve_corner_coeffs(B, np.zeros(2 * N + 2))
    write_B_csv(B, out)
    d = complex(B.det)
    print(f"B({B.theta}) {parity.value} N={N}: det={d.real:.6e}{d.imag:+.6e}j "
          f"cond={B.condition:.3e}{' (limit pattern)' if B.is_limit else ''}")
    return 0


def cmd_wedge_residual(args) -> int:
    theta, N = _theta(args.theta), _check_N(args.corner_terms)
    out = _out_path(args.out)
    parity = Parity.parse(args.parity or "tone")
    rng = np.random.default_rng(args.seed)
    rhs = rng.normal(size=2 * N + 2)
    t = np.geomspace(1e-4, 0.5, args.points)
    with mpmath.workdps(args.dps):
        B = build_B(theta, N, parity, dps=args.dps)
        coeffs = solve_corner_coeffs(B, [mpmath.mpf(float(r)) for r in rhs])
        try:
            res = wedge_residual(theta, N, parity, coeffs, rhs, t, B=B, dps=args.dps)
        except QuadratureError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise QuadratureError(str(exc)) from exc
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "residual"])
        for ti, ri in zip(t, res):
            wr.writerow([repr(float(ti)), repr(float(ri))])
    fit = (t <= 0.1) & (res > 0)
    slope = float(np.polyfit(np.log(t[fit]), np.log(res[fit]), 1)[0]) if fit.sum() >= 2 else math.nan
    print(f"residual slope on t <= 0.1: {slope:.3f} (expected >= {N + 0.5})")
    if args.strict and not slope >= N + 0.5:
        raise StrictError(f"residual slope {slope:.3f} below {N + 0.5}")
    return 0


def cmd_solve(args) -> int:
    from .verification import (
        _rigid_field,
        default_targets,
        load_sources,
        run_problem,
        stokeslet_experiment,
    )

    polygon = load_geometry(args.geom)
    out = _out_path(args.out)
    _check_N(args.corner_terms)
    kw = {"order": args.order, "N": args.corner_terms, "corner_fraction": args.corner_fraction}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.rigid:
            res = run_problem(polygon, _rigid_field(polygon, args.rigid), default_targets(polygon), **kw)
            res.details["data"] = args.rigid
        else:
            sources, targets = (None, None)
            if args.sources:
                sources, targets = load_sources(args.sources)
            res = stokeslet_experiment(polygon, sources, targets, seed=args.seed, **kw)
            res.details["data"] = "stokeslets"
    flags = [f"{w.category.__name__}: {w.message}" for w in caught
             if issubclass(w.category, (CompatibilityWarning, NearBoundaryWarning))]
    rep = res.to_dict()
    rep["flags"] = flags
    rep["seed"] = args.seed
    with open(out, "w") as fh:
        json.dump(rep, fh, indent=2, sort_keys=True)
    print(f"{res.geometry}: n={res.n} E={res.E:.3e} kappa={res.kappa:.3e}")
    if args.strict and flags:
        raise StrictError("; ".join(flags))
    return 0


def cmd_validate_geometry(args) -> int:
    polygon = load_geometry(args.geom)
    print(f"{polygon.name}: {polygon.n_vertices} vertices, perimeter {polygon.total_length:.6g}")
    for k, th in enumerate(polygon.thetas):
        print(f"  vertex {k}: angle {th:.6f} pi")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stokes-corners", description="Stokes flow in polygons")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, theta=True, parity=True):
        if theta:
            sp.add_argument("--theta", type=float, required=True, help="interior angle / pi")
        if parity:
            sp.add_argument("--parity", choices=["tone", "teno"])
        sp.add_argument("--corner-terms", type=int, default=8, metavar="N")
        sp.add_argument("--out", required=True, metavar="PATH")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--strict", action="store_true")

    sp = sub.add_parser("exponents", help="exponent families at one angle (CSV)")
    common(sp)
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("bmatrix", help="corner matrix B, its determinant and condition")
    common(sp, theta=False)
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--scan", type=float, nargs=3, metavar=("START", "STOP", "STEP"),
                    help="write det B over a range of angles instead")
    sp.set_defaults(func=cmd_bmatrix)

    sp = sub.add_parser("wedge-residual", help="velocity residual of the corner expansion")
    common(sp)
    sp.add_argument("--points", type=int, default=12)
    sp.add_argument("--dps", type=int, default=40)
    sp.set_defaults(func=cmd_wedge_residual)

    sp = sub.add_parser("solve", help="interior boundary value problem (JSON report)")
    common(sp, theta=False, parity=False)
    sp.add_argument("--geom", required=True, help="geometry JSON or one of " + ", ".join(BUILTIN_GEOMETRIES))
    sp.add_argument("--order", type=int, default=16)
    sp.add_argument("--corner-fraction", type=float, default=0.5)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--sources", metavar="PATH", help="Stokeslet sources JSON")
    g.add_argument("--rigid", choices=["translation", "rotation"])
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("validate-geometry", help="check a geometry file")
    sp.add_argument("--geom", required=True)
    sp.set_defaults(func=cmd_validate_geometry)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bmatrix" and args.theta is None and not args.scan:
        print("stokes-corners: error: bmatrix needs --theta or --scan", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ContinuationError, DetBZeroError, QuadratureError, SingularSystemError, PoleError) as exc:
        print(f"stokes-corners: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, GeometryError, ValueError) as exc:
        print(f"stokes-corners: error: {exc}", file=sys.stderr)
        return 1
    except StrictError as exc:
        print(f"stokes-corners: strict mode: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
