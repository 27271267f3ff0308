"""Command-line front end.

Examples::

    umbilic scan --surface log_torus --eps 0.5 --grid 24 --out scan.json
    umbilic refine --surface ellipsoid --A 0.3 --B 0.2 --eps 0.02
    umbilic trace --surface ellipsoid --A 0.3 --B 0.2 --eps 0.02 --format csv --out curve.csv
    umbilic index --surface ellipsoid --A 0.3 --B 0.2 --eps 0.02 --local
    umbilic perturb --poly ellipsoid.toml --op q0
    umbilic check-nonumbilic --surface log_torus --eps 1.0

Exit codes: 0 on success, including negative findings that a subcommand
reports as results ("no zero found" from ``refine``, a non-positive slack from
``check-nonumbilic``); 1 when the computation itself hits a mathematical
obstruction (Levi degeneracy, a curve meeting the locus, unstable indices);
2 on usage and input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .index import UnstableIndexError, circle_in_plane, curve_index, local_index
from .locus import (
    CSV_COLUMNS,
    UMBILIC_RTOL,
    DegenerateLocusError,
    NoZeroFoundError,
    NotUmbilicalError,
    jacobian,
    refine_zero,
    rows_to_csv,
    scan,
    trace_curve,
)
from .perturb import genericity_scan, q0
from .surfaces import BUILTIN, SurfaceError, load_poly, load_surface, make_surface
from .tensor import LeviDegeneracyError, OffSurfaceError, evaluate
from .winding import CurveMeetsLocusError, SamplingError

SCHEMA = 1


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


MATH_ERRORS = (LeviDegeneracyError, CurveMeetsLocusError, SamplingError, UnstableIndexError,
               DegenerateLocusError, NotUmbilicalError, OffSurfaceError)


# -- argument parsing -------------------------------------------------------------


def _positive(kind=float):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value

    return parse


def _surface_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("surface")
    g.add_argument("--surface", help=f"builtin surface: {', '.join(BUILTIN)}")
    g.add_argument("--surface-file", type=Path, help="TOML or JSON surface spec")
    g.add_argument("--eps", type=_positive(), help="perturbation / tube parameter ε")
    g.add_argument("--A", type=float, help="ellipsoid coefficient A")
    g.add_argument("--B", type=float, help="ellipsoid coefficient B")
    g.add_argument("--poly", type=Path, help="ρ′ monomial list (TOML/JSON) for perturbed_sphere")
    return p


def _output_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _grid(text: str):
    parts = text.split(",")
    try:
        sizes = [int(x) for x in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be N or N1,N2,N3: {text!r}") from None
    if len(sizes) not in (1, 3) or min(sizes) < 4:
        raise argparse.ArgumentTypeError(f"grid sizes must be >= 4 (one or three): {text!r}")
    return sizes[0] if len(sizes) == 1 else tuple(sizes)


def build_parser() -> argparse.ArgumentParser:
    surf, out = _surface_options(), _output_options()
    ap = argparse.ArgumentParser(prog="umbilic", description="Umbilical tensor toolkit.")
    ap.add_argument("--version", action="version", version=f"umbilic {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", parents=[surf, out], help="|Q| on a chart grid")
    p.add_argument("--grid", type=_grid, default=16)
    p.add_argument("--samples", action="store_true", help="include every grid sample in JSON")

    p = sub.add_parser("refine", parents=[surf, out], help="Gauss–Newton to an umbilical point")
    p.add_argument("--grid", type=_grid, default=16, help="scan used for the default seed")
    p.add_argument("--seed", type=float, nargs=3, metavar="THETA", help="start parameters")
    p.add_argument("--rtol", type=_positive(), default=UMBILIC_RTOL)
    p.add_argument("--max-steps", type=_positive(int), default=100)

    p = sub.add_parser("trace", parents=[surf, out], help="trace an umbilical curve")
    p.add_argument("--grid", type=_grid, default=16)
    p.add_argument("--seed", type=float, nargs=3, metavar="THETA")
    p.add_argument("--step", type=_positive(), default=0.05)
    p.add_argument("--rtol", type=_positive(), default=UMBILIC_RTOL)
    p.add_argument("--max-vertices", type=_positive(int), default=2000)

    p = sub.add_parser("index", parents=[surf, out], help="umbilical index of a closed curve")
    p.add_argument("--center", type=float, nargs=3, metavar="THETA",
                   help="centre of a circle in chart parameters")
    p.add_argument("--e1", type=float, nargs=3, default=[1.0, 0.0, 0.0])
    p.add_argument("--e2", type=float, nargs=3, default=[0.0, 1.0, 0.0])
    p.add_argument("--radius", type=_positive(), default=0.05)
    p.add_argument("--curve-file", type=Path,
                   help="JSON list of parameter triples, a closed polygon in chart parameters")
    p.add_argument("--local", action="store_true",
                   help="local index at the umbilical point refined from --seed or the scan minimum")
    p.add_argument("--seed", type=float, nargs=3, metavar="THETA")
    p.add_argument("--grid", type=_grid, default=16)
    p.add_argument("--samples", type=_positive(int), default=64)
    p.add_argument("--field", choices=("q", "det"), default="q",
                   help="wind Q or det A3 (identical windings)")

    p = sub.add_parser("perturb", parents=[out], help="Q⁰ or genericity scan of a polynomial ρ′")
    p.add_argument("--poly", type=Path, required=True)
    p.add_argument("--op", choices=("q0", "genericity"), default="q0")

    p = sub.add_parser("check-nonumbilic", parents=[surf, out],
                       help="grid minimum of |Q| with a Lipschitz slack report")
    p.add_argument("--grid", type=_grid, default=32)
    return ap


# -- surface resolution --------------------------------------------------------------


def resolve_surface(args):
    if args.surface_file is not None:
        if args.surface is not None:
            raise UsageError("give either --surface or --surface-file, not both")
        try:
            return load_surface(args.surface_file)
        except OSError as exc:
            raise UsageError(f"cannot read {args.surface_file}: {exc.strerror}") from None
        except (ValueError, SurfaceError) as exc:
            raise UsageError(f"{args.surface_file}: {exc}") from None
    if args.surface is None:
        raise UsageError("a surface is required (--surface NAME or --surface-file PATH)")
    if args.surface not in BUILTIN:
        raise UsageError(f"unknown surface {args.surface!r}; choose from {', '.join(BUILTIN)}")
    params = {}
    if args.surface != "sphere":
        if args.eps is None:
            raise UsageError(f"{args.surface} needs --eps")
        params["eps"] = args.eps
    if args.surface == "ellipsoid":
        if args.A is None or args.B is None:
            raise UsageError("ellipsoid needs --A and --B")
        params.update(A=args.A, B=args.B)
    if args.surface == "perturbed_sphere":
        if args.poly is None:
            raise UsageError("perturbed_sphere needs --poly")
        params["rho_prime"] = _read_poly(args.poly)
    try:
        return make_surface(args.surface, **params)
    except SurfaceError as exc:
        raise UsageError(str(exc)) from None


def _read_poly(path):
    try:
        return load_poly(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, SurfaceError) as exc:
        raise UsageError(f"{path}: {exc}") from None


# -- subcommands -----------------------------------------------------------------------


def _floats(x):
    return [float(v) for v in np.ravel(x)]


def _point(p):
    return {"z": [float(p[0].real), float(p[0].imag)], "w": [float(p[1].real), float(p[1].imag)]}


def _seed(s, args):
    if args.seed is not None:
        return np.array(args.seed), None
    sc = scan(s, args.grid)
    return sc.min_location, sc.median_abs_q


def cmd_scan(s, args):
    sc = scan(s, args.grid)
    result = sc.to_dict(include_samples=args.samples)
    return result, sc.to_csv


def cmd_refine(s, args):
    seed, scale = _seed(s, args)
    try:
        theta = refine_zero(s, seed, scale=scale, rtol=args.rtol, max_steps=args.max_steps)
    except NoZeroFoundError as exc:
        result = {"found": False, "finding": "no zero found", "detail": str(exc),
                  "seed": _floats(seed)}
        return result, lambda: rows_to_csv([])
    q, jac = jacobian(s, theta)
    p = s.chart_point(theta)
    result = {"found": True, "seed": _floats(seed), "theta": _floats(theta), **_point(p),
              "abs_q": abs(q), "jacobian_singular_values": _floats(np.linalg.svd(jac)[1])}
    batch = evaluate(s, p[None])

    def csv():
        return rows_to_csv([[*theta, p[0].real, p[0].imag, p[1].real, p[1].imag,
                             q.real, q.imag, abs(q), batch.j_on_m[0]]])

    return result, csv


def cmd_trace(s, args):
    seed, scale = _seed(s, args)
    theta = refine_zero(s, seed, scale=scale, rtol=args.rtol)
    curve = trace_curve(s, theta, step=args.step, scale=scale, rtol=args.rtol,
                        max_vertices=args.max_vertices)
    result = curve.to_dict()
    result["verification"] = curve.verify(s)
    return result, lambda: curve.to_csv(s)


def _polygon(vertices):
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 3 or len(vertices) < 3:
        raise UsageError("curve file must hold at least three parameter triples")
    closed = np.vstack([vertices, vertices[:1]])
    knots = np.linspace(0.0, 1.0, len(closed))

    def curve(t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, knots, closed[:, k]) for k in range(3)], axis=-1)

    return curve


def cmd_index(s, args):
    field = None
    if args.field == "det":
        def field(theta):
            return evaluate(s, s.chart_point(theta)).det_a3
    if args.local:
        seed, scale = _seed(s, args)
        theta = refine_zero(s, seed, scale=scale)
        ix = local_index(s, theta)
        result = {"local": True, "theta": _floats(theta),
                  "index": [ix.numerator, ix.denominator]}
        return result, None
    if args.curve_file is not None:
        try:
            curve = _polygon(json.loads(args.curve_file.read_text(encoding="utf-8")))
        except OSError as exc:
            raise UsageError(f"cannot read {args.curve_file}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"{args.curve_file}: {exc}") from None
    elif args.center is not None:
        curve = circle_in_plane(args.center, args.e1, args.e2, args.radius)
    else:
        raise UsageError("index needs --center, --curve-file or --local")
    tol = 0.0 if field is not None else None
    report = curve_index(s, curve, n=args.samples, tol=tol, field=field)
    result = report.to_dict()
    result["field"] = args.field

    def csv():
        vals = report.q_samples
        return "theta1,theta2,theta3,re,im\n" + "".join(
            f"{th[0]!r},{th[1]!r},{th[2]!r},{v.real!r},{v.imag!r}\n"
            for th, v in zip(report.curve.tolist(), vals.tolist()))

    return result, csv


def cmd_perturb(args):
    poly = _read_poly(args.poly)
    if args.op == "q0":
        out = q0(poly)
        result = {"op": "q0", "is_zero": out.is_zero(), "terms": out.to_monomial_list(),
                  "bidegrees": [list(b) for b in out.bidegrees]}
    else:
        try:
            result = {"op": "genericity", **genericity_scan(poly).to_dict()}
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return result, None


def cmd_check(s, args):
    sc = scan(s, args.grid)
    report = sc.lipschitz_report()
    report.update(min_abs_det=sc.min_abs_det, min_location=_floats(sc.min_location),
                  median_abs_q=sc.median_abs_q,
                  verdict="no umbilical points (numerical)" if report["slack"] > 0 else "inconclusive")
    return report, sc.to_csv


# -- driver ----------------------------------------------------------------------------


def _config(args, surface) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        cfg[k] = v
    if surface is not None:
        cfg["resolved_surface"] = surface.to_dict()
    return cfg


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    surface = None
    try:
        if args.command == "perturb":
            result, csv = cmd_perturb(args)
        else:
            surface = resolve_surface(args)
            handler = {"scan": cmd_scan, "refine": cmd_refine, "trace": cmd_trace,
                       "index": cmd_index, "check-nonumbilic": cmd_check}[args.command]
            result, csv = handler(surface, args)
        header = {"schema": SCHEMA, "version": __version__, "config": _config(args, surface)}
        if args.format == "csv":
            if csv is None:
                raise UsageError(f"{args.command} has no CSV output; use --format json")
            text = "".join(f"# {line}\n" for line in
                           json.dumps(header, sort_keys=True).splitlines()) + csv()
        else:
            text = json.dumps({**header, "result": result}, indent=2, sort_keys=True) + "\n"
        _emit(text, args.out)
    except UsageError as exc:
        print(f"umbilic: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"umbilic: error: {exc}", file=sys.stderr)
        return 2
    except MATH_ERRORS + (NoZeroFoundError,) as exc:
        print(f"umbilic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    raise SystemExit(run())


__all__ = ["run", "main", "build_parser", "CSV_COLUMNS", "SCHEMA"]
