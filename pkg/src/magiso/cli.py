"""Command line entry point: ``magiso <command> ...``.

Exit status is 0 when every inequality the command asserts holds, 1 when
one fails, and 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import geom, harness, magfem, radial, rearr
from .validation import ConvergenceError, DomainError

SHAPES = {
    "disk": (geom.disk, 1),
    "ellipse": (geom.ellipse, 2),
    "square": (geom.square, 1),
    "stadium": (geom.stadium, 2),
    "perturbed": (geom.perturbed_disk, 3),
}


def parse_shape(text):
    """``name:p1,p2,...``, e.g. ``ellipse:2,0.5`` or ``perturbed:1,0.1,3``."""
    name, _, params = text.partition(":")
    if name not in SHAPES:
        raise argparse.ArgumentTypeError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}")
    fn, nargs = SHAPES[name]
    vals = [float(v) for v in params.split(",")] if params else []
    if len(vals) != nargs:
        raise argparse.ArgumentTypeError(f"{name} takes {nargs} parameter(s), got {len(vals)}")
    if name == "perturbed":
        vals[2] = int(vals[2])
    return fn(*vals)


def _domain(args):
    if getattr(args, "domain", None):
        with open(args.domain) as fh:
            return geom.PlanarDomain.from_json(fh.read())
    if getattr(args, "shape", None) is not None:
        return args.shape
    raise SystemExit("error: give --domain FILE or --shape SPEC")


def _add_domain_args(p):
    p.add_argument("--domain", help="domain JSON file")
    p.add_argument("--shape", type=parse_shape, help="built-in shape, e.g. ellipse:2,0.5")


def cmd_solve(args):
    dom = _domain(args)
    cv = magfem.solve_levels(dom, args.B, levels=args.levels, n_rings=args.n_rings)
    print(f"lambda = {cv.value:.10f} +- {cv.error:.2e}  (raw {', '.join(f'{v:.8f}' for v in cv.raw)};"
          f" order {cv.order if cv.order is None else round(cv.order, 3)})")
    if args.dump:
        res = cv.finest
        with open(args.dump, "w") as fh:
            json.dump({"B": args.B, "eigenvalue": res.eigenvalue,
                       "nodes": res.mesh.nodes.tolist(),
                       "triangles": res.mesh.triangles.tolist(),
                       "re": res.eigenfunction.real.tolist(),
                       "im": res.eigenfunction.imag.tolist()}, fh)
    return 0


def cmd_disk(args):
    val, err = radial.lambda_disk_extrapolated(args.B, args.R, args.N)
    print(f"lambda(B={args.B:g}, D_{args.R:g}) = {val:.10f} +- {err:.1e}")
    if args.B == 0:
        ref = radial.J01**2 / args.R**2
        ok = abs(val - ref) <= 1e-4 * ref
        print(f"j01^2 / R^2 = {ref:.10f}  [{'pass' if ok else 'FAIL'}]")
        return 0 if ok else 1
    return 0 if val > args.B else 1


def cmd_asymmetry(args):
    dom = _domain(args)
    rep = geom.asymmetry_report(dom)
    iso = geom.quant_iso_check(dom, args.kind)
    print(f"area        {geom.area(dom):.10f}")
    print(f"perimeter   {geom.perimeter(dom):.10f}")
    print(f"A_F         {rep.fraenkel:.8f}  (center {rep.best_fraenkel_center[0]:.6f}, "
          f"{rep.best_fraenkel_center[1]:.6f})")
    print(f"A_I         {rep.interior:.8f}  (inscribed radius {rep.inscribed_radius:.8f})")
    c = "n/a" if iso.c_empirical is None else f"{iso.c_empirical:.6f}"
    print(f"isoperimetric deficit {iso.deficit:.3e}, empirical constant ({args.kind}) {c}"
          f"  [{'pass' if iso.holds else 'FAIL'}]")
    return 0 if iso.holds else 1


def cmd_rearrange(args):
    dom = _domain(args)
    cv = magfem.solve_levels(dom, args.B, levels=args.levels, n_rings=args.n_rings)
    prof = rearr.build_profile(cv.finest, args.n_levels, args.kind)
    text = prof.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    sw = rearr.potential_sandwich(prof)
    lb = rearr.rearrangement_lower_bound(prof)
    ok = sw.holds and cv.raw[-1] >= lb - 3 * max(cv.error, abs(cv.raw[-1] - cv.value))
    print(f"# layer cake {prof.layer_cake():.8f}; lower bound {lb:.8f} vs lambda {cv.raw[-1]:.8f};"
          f" sandwich {'pass' if sw.holds else 'FAIL'}", file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(args):
    if args.config:
        with open(args.config) as fh:
            cfg = harness.ExperimentConfig.from_json(fh.read())
    else:
        cfg = harness.ExperimentConfig()
    if args.csv:
        cfg.csv_path = args.csv
    if args.json:
        cfg.json_path = args.json
    rows, noise = harness.verify_theorem1(cfg)
    harness.write_reports(rows, noise, cfg)
    if not cfg.csv_path:
        sys.stdout.write(harness.rows_to_csv(rows))
    summ = harness.summarize(rows, noise)
    print(f"# rows {summ['rows']}, min c weak {summ['min_c_thm1_weak']}, "
          f"min c strong {summ['min_c_thm1_strong']}, failed {summ['failed']}", file=sys.stderr)
    ok = summ["all_passed"]
    for key in ("min_c_thm1_weak", "min_c_thm1_strong"):
        if summ[key] is not None and not summ[key] > 0:
            ok = False
    return 0 if ok else 1


def cmd_compare(args):
    run = harness.comparison_property_run(args.seeds, args.N, seed0=args.seed)
    print(f"monotonicity {run.monotone_pass}/{run.seeds}; remainder {run.remainder_pass}/{run.seeds}")
    for f in run.failures:
        print(f"  seed {f['seed']}: {f}")
    return 0 if run.all_passed else 1


def cmd_converge(args):
    dom = _domain(args)
    tab = harness.convergence_study(dom, args.B, args.levels, args.n_rings)
    sys.stdout.write(tab.to_csv())
    order = "n/a" if tab.order is None else f"{tab.order:.3f}"
    print(f"# extrapolated {tab.extrapolated:.10f} +- {tab.error:.2e}, observed order {order}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="magiso", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="principal eigenvalue of one domain")
    _add_domain_args(s)
    s.add_argument("--B", type=float, default=1.0)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--n-rings", type=int, default=12)
    s.add_argument("--dump", help="write the finest eigenfunction as JSON")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("disk", help="radial solver for the disk")
    s.add_argument("--B", type=float, default=0.0)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--N", type=int, default=2048)
    s.set_defaults(func=cmd_disk)

    s = sub.add_parser("asymmetry", help="asymmetries and isoperimetric check")
    _add_domain_args(s)
    s.add_argument("--kind", choices=["fraenkel", "interior"], default="interior")
    s.set_defaults(func=cmd_asymmetry)

    s = sub.add_parser("rearrange", help="rearranged profile as CSV")
    _add_domain_args(s)
    s.add_argument("--B", type=float, default=1.0)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--n-rings", type=int, default=12)
    s.add_argument("--n-levels", type=int, default=256)
    s.add_argument("--kind", choices=["fraenkel", "interior"], default="fraenkel")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rearrange)

    s = sub.add_parser("verify", help="full verification sweep")
    s.add_argument("--config", help="ExperimentConfig JSON")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("compare", help="comparison-lemma property run")
    s.add_argument("--seeds", type=int, default=200)
    s.add_argument("--N", type=int, default=2048)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("converge", help="refinement study")
    _add_domain_args(s)
    s.add_argument("--B", type=float, default=0.0)
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--n-rings", type=int, default=12)
    s.set_defaults(func=cmd_converge)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
