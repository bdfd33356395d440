"""Command-line client over the report layer.

Subcommands mirror the service endpoints: check, eta, gv, gvs, vary,
critical, metric-el, index, reeb-solve, reeb-family, bott, holo-check,
plus `serve` to run the HTTP service.  Reports are printed as JSON (or
written to --out along with any CSV artifacts); the exit code is 0 iff
every requested tolerance passed.  FOLIA_THREADS bounds quadrature
parallelism.
"""

import argparse
import json
import os
import sys

from . import reports
from .errors import FoliaError, SceneError
from .scenes import load_scene


def _add_scene_arg(p):
    p.add_argument("scene", help="path to a .scene file")
    p.add_argument("--res", type=int, nargs="+", default=None,
                   help="quadrature resolution per coordinate (or one value)")
    p.add_argument("--eps0", type=float, default=None,
                   help="first excision radius as a fraction of the box width")
    p.add_argument("--seed", type=int, default=None, help="override the sample seed")
    p.add_argument("--out", default=None, help="directory for the report and artifacts")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="folia",
        description="Godbillon-Vey type invariants, variational residuals and "
        "criticality diagnostics for framed distributions",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    for name, hlp in [
        ("check", "identity battery and invariant number"),
        ("eta", "sample the transverse torsion one-form"),
        ("gv", "the Godbillon-Vey type number"),
        ("metric-el", "metric Euler-Lagrange residuals and the metric functional"),
    ]:
        _add_scene_arg(sub.add_parser(name, help=hlp))

    p = sub.add_parser("gvs", help="frame-weighted invariant family")
    _add_scene_arg(p)
    p.add_argument("--s", type=int, nargs="+", required=True,
                   help="wedge exponents s_0 .. s_q with |s| = q")

    p = sub.add_parser("vary", help="first/second variation vs finite differences")
    _add_scene_arg(p)
    p.add_argument("--case", choices=["i", "ii", "iii"], default="iii")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--fd-step", type=float, default=1e-3)

    p = sub.add_parser("critical", help="criticality / multiplier residuals")
    _add_scene_arg(p)
    p.add_argument("--lam", type=float, default=None)

    p = sub.add_parser("index", help="index-form symmetry battery")
    _add_scene_arg(p)
    p.add_argument("--pairs", type=int, default=10)

    p = sub.add_parser("reeb-solve", help="solve one profile ODE")
    p.add_argument("--ode", choices=["cond2", "cond3", "reduced"], default="cond2")
    p.add_argument("--A0", type=float, default=1.0)
    p.add_argument("--A1", type=float, default=0.25)
    p.add_argument("--A2", type=float, default=0.0)
    p.add_argument("--A3", type=float, default=0.0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--tildeA0", type=float, default=0.5)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--out", default=None)

    p = sub.add_parser("reeb-family", help="solve a family of profiles")
    p.add_argument("--A0", type=float, default=1.0)
    p.add_argument("--A2", type=float, default=0.0)
    p.add_argument("--A1", type=str, default="0.125,0.25,0.375,0.5,0.625",
                   help="comma-separated initial slopes")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bott", help="closed-form holomorphic invariant")
    p.add_argument("--lam", metavar="RE,IM", nargs="+", required=True,
                   help="q+1 weights, each 're' or 're,im'")
    p.add_argument("--out", default=None)

    p = sub.add_parser("holo-check", help="chart-model integrability battery")
    p.add_argument("--lam0", type=float, default=1.0)
    p.add_argument("--lam1", type=float, default=1.0)
    p.add_argument("--res", type=int, nargs="+", default=None)
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return ap


def _scene_and_quad(args):
    scene, opts = load_scene(args.scene)
    quad = dict(opts.get("quadrature", {}))
    if args.res is not None:
        quad["resolution"] = args.res if len(args.res) > 1 else args.res[0]
    if args.eps0 is not None:
        quad["eps0"] = args.eps0
    if getattr(args, "seed", None) is not None:
        scene.seed = args.seed
    return scene, quad


def _emit(report, out_dir):
    artifacts = report.pop("artifacts", {})
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
        for name, content in artifacts.items():
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                fh.write(content)
    else:
        sys.stdout.write(text)
    return 0 if report.get("passed", False) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            import uvicorn

            from .service import app

            uvicorn.run(app, host=args.host, port=args.port)
            return 0

        if args.command == "reeb-solve":
            report = reports.report_reeb_solve(
                ode=args.ode, A0=args.A0, A1=args.A1, A2=args.A2, A3=args.A3,
                lam=args.lam, tildeA0=args.tildeA0, rtol=args.rtol,
            )
            return _emit(report, args.out)

        if args.command == "reeb-family":
            a1s = tuple(float(x) for x in args.A1.split(","))
            report = reports.report_reeb_family(
                A0=args.A0, A2=args.A2, A1_list=a1s, rtol=args.rtol
            )
            return _emit(report, args.out)

        if args.command == "bott":
            lams = []
            for token in args.lam:
                parts = token.split(",")
                lams.append(complex(float(parts[0]),
                                    float(parts[1]) if len(parts) > 1 else 0.0))
            return _emit(reports.report_bott(lams), args.out)

        if args.command == "holo-check":
            options = None
            if args.res is not None or args.eps0 is not None:
                options = {}
                if args.res is not None:
                    options["resolution"] = args.res if len(args.res) > 1 else args.res[0]
                if args.eps0 is not None:
                    options["eps0"] = args.eps0
            return _emit(reports.report_holo_check(args.lam0, args.lam1, options), args.out)

        scene, quad = _scene_and_quad(args)
        if args.command == "check":
            report = reports.report_check(scene, quad)
        elif args.command == "eta":
            report = reports.report_eta(scene)
        elif args.command == "gv":
            report = reports.report_gv(scene, quad)
        elif args.command == "gvs":
            report = reports.report_gvs(scene, args.s, quad)
        elif args.command == "vary":
            report = reports.report_vary(scene, args.case, args.count, quad, args.fd_step)
        elif args.command == "critical":
            report = reports.report_critical(scene, args.lam, quad)
        elif args.command == "metric-el":
            report = reports.report_metric_el(scene, quad)
        elif args.command == "index":
            report = reports.report_index(scene, args.pairs, quad)
        else:  # pragma: no cover
            raise FoliaError(f"unhandled command {args.command}")
        return _emit(report, args.out)

    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return 2
    except FoliaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
