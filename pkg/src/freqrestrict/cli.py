"""Command-line front end.

Subcommands: ``freq``, ``decompose``, ``certify``, ``restrict`` and
``counterexample``.  Machine-readable results go to ``--out``; a short
summary goes to stdout.  Exit codes: 0 ok, 2 invalid input, 3 numerical
budget exhausted, 4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import decomposition as dec
from .analytic import frequency, frequency_monotone_scan, nth_derivative
from .curves import CurveSpec, SpecError
from .errors import FreqRestrictError
from .geometry import (RecursiveEvalConfig, SimpleCurve, calibrate_recursion, certify_piece,
                       jacobian_direct, lambda_recursive)
from .restriction import (GridSpec, TestFunction, counterexample_scan, exponent_pair,
                          extension_norm, gnuplot_data, longest_increasing_run, scan_csv)


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)}")


def _out(args, name: str) -> str | None:
    return os.path.join(args.out, name) if args.out else None


def _emit(args, name: str, text: str) -> None:
    path = _out(args, name)
    if path:
        write_atomic(path, text)
        print(f"wrote {path}")


def _spec(args) -> CurveSpec:
    if not args.spec:
        raise SpecError("--spec is required")
    try:
        return CurveSpec.load(args.spec)
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc}") from None


def _series_spec(args) -> CurveSpec:
    spec = _spec(args)
    if not spec.in_class:
        raise SpecError(f"{spec.name} is a closed-form curve without a series representation")
    return spec


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_freq(args) -> int:
    spec = _series_spec(args)
    phi = spec.series()
    R = args.R
    value = frequency(phi, R)
    radii = [R * 2.0 ** (k - args.scan + 1) for k in range(args.scan)]
    table = frequency_monotone_scan(phi, radii)
    print(f"frequency({spec.name}, R={R}) = {value!r}")
    print("R\tN(R)")
    for r, n in table:
        print(f"{r!r}\t{n!r}")
    _emit(args, "frequency.json", _dump({"R": R, "frequency": value,
                                         "scan": [list(row) for row in table],
                                         "spec": spec.to_dict()}))
    return 0


def _decompose(args, spec: CurveSpec):
    phi = spec.series()
    lo, hi = spec.interval
    decomp = dec.full_decompose(phi, spec.d, lo, hi, theta=args.theta,
                                normalize=not args.strict_class, source=spec.name)
    # the Taylor shift leaves phi^(d) unchanged
    return phi, decomp, nth_derivative(phi, spec.d)


def cmd_decompose(args) -> int:
    spec = _series_spec(args)
    _, decomp, fd = _decompose(args, spec)
    cert = dec.decomposition_certificate(decomp, fd)
    cert["config"] = {"theta": args.theta, "margin": dec.MARGIN, "depth_max": dec.DEPTH_MAX,
                      "search_points": dec.SEARCH_POINTS, "verify_points": dec.VERIFY_POINTS,
                      "normalized": not args.strict_class}
    for p in decomp.pieces:
        print(f"[{p.lo!r}, {p.hi!r}]  center={p.center!r}  k={p.exponent}  "
              f"c={p.lower_const:.6g}  C={p.upper_const:.6g}  sign={p.sign:+d}")
    print(f"{len(decomp.pieces)} pieces, re-verification {'pass' if cert['all_pass'] else 'FAIL'}")
    _emit(args, "pieces.csv", decomp.to_csv())
    _emit(args, "certificate.json", _dump(cert))
    return 0 if cert["all_pass"] else 4


def cmd_certify(args) -> int:
    spec = _series_spec(args)
    if spec.d > 4:
        raise SpecError("certification is limited to d <= 4")
    phi, decomp, _ = _decompose(args, spec)
    curve = SimpleCurve(spec.d, phi, name=spec.name)
    cfg = calibrate_recursion(spec.d, RecursiveEvalConfig(quad_order=args.quad_order))
    out = []
    for i, piece in enumerate(decomp.pieces):
        cert = certify_piece(curve, piece, budget=args.budget, seed=args.seed, piece_id=i)
        row = cert.to_dict()
        t = np.array(cert.argmin)
        if np.all(np.diff(t) > 0):
            J = float(jacobian_direct(curve, t))
            L = float(lambda_recursive(curve, t, cfg))
            row["recursion_check"] = {"jacobian": J, "lambda": L,
                                      "rel_err": abs(J - L) / abs(J) if J else None}
        out.append(row)
        print(f"piece {i} [{piece.lo!r}, {piece.hi!r}]: K_est={cert.K_est!r} at {cert.argmin}")
    _emit(args, "certificates.json", _dump({"spec": spec.to_dict(), "budget": args.budget,
                                            "seed": args.seed, "calibration": cfg.calibration,
                                            "quad_order": cfg.quad_order, "certificates": out}))
    return 0


def cmd_restrict(args) -> int:
    spec = _spec(args)
    curve = spec.curve()
    lo, hi = args.support if args.support else spec.interval
    f = TestFunction(args.test, lo, hi)
    pair = exponent_pair(_parse_p(args.p), spec.d)
    grid = GridSpec(args.box, args.grid_n, spec.d)
    rep = extension_norm(curve, f, pair, grid, weighted=not args.unweighted,
                         panel_cap=args.panel_cap, allow_degraded=args.allow_degraded)
    print(f"extension norm {rep.extension_norm!r}, source norm {rep.source_norm!r}, "
          f"ratio {rep.ratio!r}, flags {rep.flags}")
    _emit(args, "norm_report.json", _dump(rep.to_dict()))
    return 0


def cmd_counterexample(args) -> int:
    alpha, beta, d = args.alpha, args.beta, 3
    if args.spec:
        spec = _spec(args)
        if spec.name != "sjolin_chen":
            raise SpecError("counterexample needs the sjolin_chen builtin")
        alpha = float(spec.params.get("alpha", alpha))
        beta = float(spec.params.get("beta", beta))
        d = spec.d
    pair = exponent_pair(_parse_p(args.p), d)
    grid = GridSpec(args.box, args.grid_n, d)
    rows = counterexample_scan(alpha, beta, d, args.scales, pair, grid,
                               normalize=not args.raw, panel_cap=args.panel_cap,
                               allow_degraded=args.allow_degraded)
    for r in rows:
        print(f"m={r.scale}\tratio={r.ratio!r}\t{';'.join(r.flags)}")
    ratios = [r.ratio for r in rows]
    print(f"longest strictly increasing run: {longest_increasing_run(ratios)} scales")
    _emit(args, "scan.csv", scan_csv(rows))
    _emit(args, "scan.dat", gnuplot_data([r.scale for r in rows], ratios,
                                         f"alpha={alpha} beta={beta} d={d}: scale ratio"))
    _emit(args, "scan.json", _dump([{"scale": r.scale, "ratio": r.ratio, "flags": r.flags,
                                     "error": r.error,
                                     "report": r.report.to_dict() if r.report else None}
                                    for r in rows]))
    return 0


def _parse_p(text) -> float | Fraction:
    text = str(text)
    return Fraction(text) if "/" in text else float(text)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqrestrict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="curve description file (JSON)")
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("freq", parents=[common], help="frequency and monotone scan")
    p.add_argument("--R", type=float, default=1.0, help="radius (default 1)")
    p.add_argument("--scan", type=int, default=5, help="number of scan radii ending at R")
    p.set_defaults(func=cmd_freq)

    for name, func, helptext in (("decompose", cmd_decompose, "monomial decomposition"),
                                 ("certify", cmd_certify, "geometric certificates per piece")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--theta", type=float, default=dec.THETA, help="comparability ratio cap")
        p.add_argument("--strict-class", action="store_true",
                       help="require phi, ..., phi^(d-1) to vanish at the midpoint instead of "
                            "subtracting the Taylor polynomial")
        if name == "certify":
            p.add_argument("--quad-order", type=int, default=24)
            p.add_argument("--budget", type=int, default=4096, help="samples per piece")
        p.set_defaults(func=func)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--p", default="12/11", help="exponent p (fractions allowed)")
    grid.add_argument("--grid-n", type=int, default=32)
    grid.add_argument("--box", type=float, default=8.0)
    grid.add_argument("--panel-cap", type=int, default=2 ** 16)
    grid.add_argument("--allow-degraded", action="store_true",
                      help="cap the panel count and flag the result instead of failing")

    p = sub.add_parser("restrict", parents=[common, grid], help="extension norm ratio")
    p.add_argument("--test", choices=("indicator", "bump"), default="indicator")
    p.add_argument("--support", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--unweighted", action="store_true")
    p.set_defaults(func=cmd_restrict)

    p = sub.add_parser("counterexample", parents=[common, grid], help="dyadic-scale ratio scan")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--scales", type=int, default=5)
    p.add_argument("--raw", action="store_true", help="skip the per-scale affine rescaling")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FreqRestrictError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
