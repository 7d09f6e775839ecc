"""Command-line front end: ``spindirac {spectrum,bounds,reilly}``.

Output is JSON (or CSV for eigenvalues) written to ``--out DIR`` or stdout.
The exit status is 0 only when every verdict requested by the run passes;
library errors (unreadable mesh, solver failure, ...) exit with status 2.
``SPINDIRAC_THREADS`` caps the BLAS thread pool.
"""

import argparse
import json
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import compare, refinement_tolerance
from .clifford import build_rep
from .dirac import SCHEMA_VERSION, assemble, spectrum
from .errors import SpinDiracError
from .mesh import curvature, load_mesh, make_ellipsoid, make_sphere, make_torus
from .reilly import (
    MIN_RESOLUTION,
    PolynomialSpinor,
    RadialQuadraticSpinor,
    TwistorFamilySpinor,
    random_spinor,
    verify,
)

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _floats(text, count, flag):
    parts = text.split(",")
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"{flag} expects {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{flag}: {exc}") from None


def _sphere(text):
    r, s = _floats(text, 2, "--sphere")
    return ("sphere", r, int(s))


def _torus(text):
    R, r, nu, nv = _floats(text, 4, "--torus")
    return ("torus", R, r, int(nu), int(nv))


def _ellipsoid(text):
    a, b, c, s = _floats(text, 4, "--ellipsoid")
    return ("ellipsoid", a, b, c, int(s))


def _build(spec, coarser=False):
    kind = spec[0]
    if kind == "mesh":
        return None if coarser else load_mesh(spec[1])
    if kind == "sphere":
        _, r, s = spec
        return make_sphere(r, s - 1 if coarser else s)
    if kind == "ellipsoid":
        _, a, b, c, s = spec
        return make_ellipsoid(a, b, c, s - 1 if coarser else s)
    _, R, r, nu, nv = spec
    if coarser:
        nu, nv = nu // 2, nv // 2
    return make_torus(R, r, nu, nv)


def _has_coarser(spec):
    if spec[0] in ("sphere", "ellipsoid"):
        return spec[-1] - 1 >= 3
    if spec[0] == "torus":
        return min(spec[3], spec[4]) // 2 >= 3
    return False


def _emit(args, name, text):
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _stamp(d, args):
    if not args.no_timestamp:
        d["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return d


def _dumps(d):
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _solve(mesh, k, seed):
    curv = curvature(mesh)
    op = assemble(mesh, build_rep(), curv)
    return curv, spectrum(op, k, seed=seed)


def cmd_spectrum(args):
    mesh = _build(args.source)
    _, rep = _solve(mesh, args.k, args.seed)
    if args.format == "csv":
        _emit(args, "spectrum.csv", rep.to_csv())
    else:
        _emit(args, "spectrum.json", _dumps(_stamp(rep.to_dict(timestamp=False), args)))
    return EXIT_OK if rep.symmetric else EXIT_FAIL


def cmd_bounds(args):
    mesh = _build(args.source)
    curv, rep = _solve(mesh, args.k, args.seed)
    coarse_curv, tol = None, args.tolerance
    if _has_coarser(args.source):
        coarse_curv, coarse = _solve(_build(args.source, coarser=True), args.k, args.seed)
        if tol is None:
            tol = refinement_tolerance(rep.lambda1(), coarse.lambda1(), float(np.max(rep.residuals)))
    report = compare(rep, curv, tolerance=tol, coarse_curvature=coarse_curv,
                     pointwise_rtol=args.pointwise_rtol)
    if args.format == "table":
        _emit(args, "bounds.txt", report.table())
    else:
        _emit(args, "bounds.json", _dumps(_stamp(report.to_dict(), args)))
    return EXIT_OK if report.passed else EXIT_FAIL


def _reilly_field(family, rng):
    if family == "twistor":
        return TwistorFamilySpinor(random_spinor(rng), random_spinor(rng))
    if family == "non-twistor":
        return RadialQuadraticSpinor(random_spinor(rng))
    return PolynomialSpinor.random(rng)


def cmd_reilly(args):
    warnings = []
    if args.resolution < MIN_RESOLUTION:
        msg = f"resolution {args.resolution} is below the minimum {MIN_RESOLUTION}"
        warnings.append(msg)
        print(f"warning: {msg}", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    records, ok = [], True
    for _ in range(args.trials):
        rec = verify(_reilly_field(args.family, rng), args.resolution, rtol=args.rtol)
        passed = rec.defect < args.rtol and rec.emt_margin >= -args.rtol * (abs(rec.lhs) + 1)
        if args.family == "twistor":
            passed &= abs(rec.inequality_margin) < args.rtol * (abs(rec.lhs) + 1)
        else:
            passed &= rec.inequality_margin > args.rtol * (abs(rec.lhs) + 1)
        ok &= bool(passed)
        records.append(dict(rec.to_dict(), passed=bool(passed)))
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": "reilly",
        "family": args.family,
        "resolution": args.resolution,
        "trials": args.trials,
        "seed": args.seed,
        "rtol": args.rtol,
        "max_defect": max(r["defect"] for r in records) if records else 0.0,
        "records": records,
        "warnings": warnings,
        "passed": ok,
        "version": __version__,
    }
    _emit(args, "reilly.json", _dumps(_stamp(out, args)))
    return EXIT_OK if ok else EXIT_FAIL


def _add_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--mesh", type=lambda t: ("mesh", t), dest="source", metavar="PATH",
                   help="OFF or OBJ file")
    g.add_argument("--sphere", type=_sphere, dest="source", metavar="r,s",
                   help="icosphere of radius r, subdivision level s")
    g.add_argument("--torus", type=_torus, dest="source", metavar="R,r,nu,nv",
                   help="torus of revolution on an nu x nv grid")
    g.add_argument("--ellipsoid", type=_ellipsoid, dest="source", metavar="a,b,c,s",
                   help="icosphere scaled to semi-axes a, b, c")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="spindirac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="write files here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp field for byte-identical output")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", parents=[common], help="smallest-magnitude Dirac eigenvalues")
    _add_source(sp)
    sp.add_argument("-k", type=_positive_int, default=12, help="number of eigenpairs (default 12)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_spectrum)

    bp = sub.add_parser("bounds", parents=[common], help="compare lambda_1 against the lower bounds")
    _add_source(bp)
    bp.add_argument("-k", type=_positive_int, default=8, help="eigenpairs to resolve (default 8)")
    bp.add_argument("--format", choices=("json", "table"), default="json")
    bp.add_argument("--tolerance", type=float, default=None,
                    help="override the discretization allowance on lambda_1 "
                         "(default: 3x the change over one refinement step plus solver residual)")
    bp.add_argument("--pointwise-rtol", type=float, default=0.02,
                    help="relative allowance in R <= 2H^2 (default 0.02)")
    bp.set_defaults(func=cmd_bounds)

    rp = sub.add_parser("reilly", parents=[common], help="check the integral identities on the unit ball")
    rp.add_argument("--resolution", type=_positive_int, default=32, help="quadrature resolution (default 32)")
    rp.add_argument("--trials", type=_positive_int, default=20, help="random draws (default 20)")
    rp.add_argument("--family", choices=("twistor", "non-twistor", "polynomial"), default="twistor")
    rp.add_argument("--rtol", type=float, default=1e-6, help="identity tolerance (default 1e-6)")
    rp.set_defaults(func=cmd_reilly)
    return parser


def _thread_limit():
    n = os.environ.get("SPINDIRAC_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except SpinDiracError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
