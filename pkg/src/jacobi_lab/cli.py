"""Command-line front end: ``jacobi-lab <command> [flags]``.

Exit codes: 0 success or passing verification, 1 failing verification,
2 usage error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import shlex
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .conformal import balance, conformal_area, equality_residuals, willmore_energy
from .eigen import DEFAULT_SEED, smallest_eigenpairs
from .errors import ConvergenceError, GeometryError, MeshError
from .harness import prop22_scan, verify_section5, verify_theorem1, verify_theorem2
from .mesh import JACOBI_PRODUCT, JACOBI_SPHERE, LAPLACE, assemble_operator, export_off, triangulate
from .surfaces import SURFACE_NAMES, get_surface

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGENCE = 0, 1, 2, 3
RES_MIN, RES_MAX = 8, 1024
THEOREMS = ("section5", "theorem1", "theorem2", "prop22")
OPERATORS = ("laplace", "jacobi", JACOBI_SPHERE, JACOBI_PRODUCT)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--surface", choices=SURFACE_NAMES, help="catalog surface")
    common.add_argument("--r", type=float, help="S^1 radius (section5, prop22)")
    common.add_argument("--t", type=float, help="second circle radius (section5)")
    common.add_argument("--h", type=float, help="height in the S^2 factor (section5)")
    common.add_argument("--res", type=int, nargs="+", metavar="N", help="mesh resolution, one or two integers")
    common.add_argument("--tol", type=float, default=1e-9, help="eigenpair residual / balancing tolerance")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    common.add_argument("--export-mesh", metavar="PATH.off", help="also write the mesh as ASCII OFF")

    parser = _Parser(prog="jacobi-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", parents=[common], help="smallest eigenvalues of an operator")
    p.add_argument("--operator", choices=OPERATORS, default="jacobi")
    p.add_argument("--k", type=int, default=6)

    sub.add_parser("willmore", parents=[common], help="area and Willmore energy")

    p = sub.add_parser("conformal-area", parents=[common], help="area of F_y(Sigma)")
    p.add_argument("--y", type=float, nargs="+", required=True, help="point of the open unit ball")

    p = sub.add_parser("balance", parents=[common], help="Li-Yau balancing point")
    p.add_argument("--weights", choices=("constant", "skewed"), default="constant",
                   help="constant, or 1 + 0.5 cos u")

    p = sub.add_parser("verify", parents=[common], help="run a verification check")
    p.add_argument("--theorem", choices=THEOREMS, required=True)
    p.add_argument("--samples", type=int, default=1000, help="tangent planes for prop22")
    p.add_argument("--k", type=int, default=6)
    return parser


def _resolution(args, default):
    if args.res is None:
        return tuple(default)
    if len(args.res) not in (1, 2):
        raise UsageError("--res takes one or two integers")
    res = tuple(args.res) * (2 // len(args.res))
    if any(not RES_MIN <= n <= RES_MAX for n in res):
        raise UsageError(f"--res components must lie in [{RES_MIN}, {RES_MAX}]")
    return res


def _surface_params(args) -> dict:
    return {k: getattr(args, k) for k in ("r", "t", "h") if getattr(args, k) is not None}


def _surface(args):
    if args.surface is None:
        raise UsageError("--surface is required for this command")
    return get_surface(args.surface, **_surface_params(args))


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing {' '.join(missing)}")


def _operator_kind(name: str, surface) -> str:
    if name == "laplace":
        return LAPLACE
    if name == "jacobi":
        return JACOBI_PRODUCT if surface.is_product else JACOBI_SPHERE
    return name


def _mesh(args, surface):
    mesh = triangulate(surface, _resolution(args, surface.domain.resolution))
    if args.export_mesh:
        export_off(mesh, args.export_mesh)
    return mesh


def _run_spectrum(args):
    surface = _surface(args)
    mesh = _mesh(args, surface)
    kind = _operator_kind(args.operator, surface)
    op = assemble_operator(mesh, kind)
    eig = smallest_eigenpairs(op.matrix, op.mass, k=args.k, tol=args.tol, seed=args.seed)
    results = {
        "operator": kind,
        "eigenvalues": eig.eigenvalues.tolist(),
        "residuals": eig.residuals.tolist(),
        "lambda2": eig.lambda2,
        "area": mesh.area,
        "solver_applications": eig.iterations,
        "shift": eig.shift,
    }
    return surface, mesh.resolution, results, None


def _run_willmore(args):
    surface = _surface(args)
    mesh = _mesh(args, surface)
    W = willmore_energy(mesh)
    results = {"area": mesh.area, "willmore": W, "willmore_over_2pi2": W / (2 * math.pi**2)}
    return surface, mesh.resolution, results, None


def _run_conformal_area(args):
    surface = _surface(args)
    if len(args.y) != surface.ambient_dim:
        raise UsageError(f"--y needs {surface.ambient_dim} components for {surface.name}")
    y = np.array(args.y)
    if not y @ y < 1:
        raise UsageError("--y must lie in the open unit ball")
    mesh = _mesh(args, surface)
    z_res, y_res = equality_residuals(mesh, y)
    results = {
        "y": y.tolist(),
        "conformal_area": conformal_area(mesh, y),
        "willmore": willmore_energy(mesh),
        "equality_residual_z": z_res,
        "equality_residual_y": y_res,
    }
    return surface, mesh.resolution, results, None


def _run_balance(args):
    surface = _surface(args)
    mesh = _mesh(args, surface)
    if args.weights == "constant":
        w = np.ones(mesh.n_vertices)
    else:
        w = 1.0 + 0.5 * np.cos(mesh.params[:, 0])
    tol = max(args.tol, 1e-12)
    out = balance(mesh, w, tol=tol)
    results = {"weights": args.weights, "y": out.y.tolist(), "residual": out.residual, "iterations": out.iterations}
    verdict = "pass" if out.residual <= tol else "fail"
    return surface, mesh.resolution, results, verdict


def _run_verify(args):
    th = args.theorem
    if th == "prop22":
        _require(args, "r")
        report = prop22_scan(args.r, samples=args.samples, seed=args.seed)
        return "product", [], {"r": args.r}, report
    if th in ("section5", "theorem2"):
        _require(args, "r", "t", "h")
        res = _resolution(args, (128, 128))
        fn = verify_section5 if th == "section5" else verify_theorem2
        report = fn(args.r, args.t, args.h, res=res, k=args.k, tol=args.tol, seed=args.seed)
        if args.export_mesh:
            export_off(triangulate(get_surface("section5", r=args.r, t=args.t, h=args.h), res), args.export_mesh)
        return "section5", list(res), _surface_params(args), report
    surface = _surface(args)
    res = _resolution(args, (128, 128))
    report = verify_theorem1(surface, res=res, k=args.k, tol=args.tol, seed=args.seed)
    if args.export_mesh:
        export_off(triangulate(surface, res), args.export_mesh)
    return surface.name, list(res), dict(surface.params), report


def _check_finite(obj, path="$"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise FloatingPointError(f"non-finite value at {path}")


def _plain(obj):
    """numpy scalars and arrays to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _document(args, argv):
    if args.command == "verify":
        name, res, params, report = _run_verify(args)
        results, verdict = report.to_json(), report.verdict
    else:
        runner = {
            "spectrum": _run_spectrum,
            "willmore": _run_willmore,
            "conformal-area": _run_conformal_area,
            "balance": _run_balance,
        }[args.command]
        surface, res, results, verdict = runner(args)
        name, params, res = surface.name, dict(surface.params), list(res)
    doc = {
        "invocation": shlex.join(["jacobi-lab", *argv]),
        "surface": name,
        "params": params,
        "resolution": list(res),
        "results": results,
    }
    if verdict is not None:
        doc["verdict"] = verdict
    doc["seed"] = args.seed
    doc["version"] = __version__
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc = _plain(doc)
    _check_finite(doc)
    return doc, verdict


def _csv_table(doc) -> str:
    res = doc["results"]
    values = res.get("eigenvalues", res.get("lambda"))
    if not values:
        raise UsageError("--format csv is only available for eigenvalue tables")
    residuals = res.get("residuals", [""] * len(values))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "eigenvalue", "residual"])
    for i, (v, r) in enumerate(zip(values, residuals), start=1):
        writer.writerow([i, repr(v), repr(r) if r != "" else ""])
    return buf.getvalue()


def _fail(code, error, detail):
    sys.stderr.write(json.dumps({"error": error, "detail": detail}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        doc, verdict = _document(args, argv)
        text = _csv_table(doc) if args.format == "csv" else json.dumps(doc, indent=2, allow_nan=False) + "\n"
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except (GeometryError, MeshError, KeyError, ValueError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, str(exc))
    except (ConvergenceError, FloatingPointError) as exc:
        return _fail(EXIT_NONCONVERGENCE, type(exc).__name__, str(exc))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if verdict == "fail" else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
