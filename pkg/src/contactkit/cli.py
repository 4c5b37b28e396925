"""Command-line entry point: ``contactkit <subcommand> ...``.

Every run prints (or writes to ``--out``) a report holding the tool
version, the full configuration and the result. Exit codes: 0 success,
1 verification failure, 2 input error, 3 precondition violation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import expr as ex
from . import mcg, perturb, planefields, surfdyn, symplectic
from .errors import ContactKitError, InputError, VerificationError
from .forms import MARGIN, ZERO_TOL, KForm, VectorFieldChart, parse_form, parse_surface

GLOBALS = {
    "grid": dict(type=int, help="grid resolution per axis"),
    "margin": dict(type=float, help=f"strict-positivity margin (default {MARGIN:g})"),
    "tol": dict(type=float, help=f"zero tolerance (default {ZERO_TOL:g})"),
    "seed": dict(type=int, help="random seed (default 0)"),
    "out": dict(help="write the report to this file instead of stdout"),
    "format": dict(choices=("json", "text", "csv", "svg"), help="report format (default json)"),
}
DEFAULTS = {"grid": None, "margin": MARGIN, "tol": ZERO_TOL, "seed": 0, "out": None, "format": "json"}


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _number(text):
    try:
        return float(text)
    except ValueError:
        pass
    e = ex.parse_expr(text)
    if ex.free_vars(e):
        raise InputError(f"bound {text!r} must be a constant expression")
    return float(ex.evaluate_array(e, (), ()))


def parse_intervals(text):
    """``"-1:1, 0:2*pi"`` -> ``[(-1, 1), (0, 2 pi)]``."""
    out = []
    for part in text.split(","):
        if ":" not in part:
            raise InputError(f"interval {part.strip()!r} must look like lo:hi")
        lo, hi = part.split(":", 1)
        out.append((_number(lo.strip()), _number(hi.strip())))
    return out


def parse_flags(text, n):
    if not text:
        return (False,) * n
    flags = [p.strip().lower() in ("1", "true", "yes", "p") for p in text.split(",")]
    if len(flags) != n:
        raise InputError(f"--periodic needs {n} entries")
    return tuple(flags)


def parse_params(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"parameter {item!r} must look like name=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = int(v) if v.strip().lstrip("-").isdigit() else _number(v.strip())
        except (InputError, ex.ParseError):
            out[k.strip()] = v.strip()
    return out


def build_chart(args, name="M"):
    variables = [v.strip() for v in args.chart.split(",") if v.strip()]
    domain = parse_intervals(args.domain) if args.domain else [(-1.0, 1.0)] * len(variables)
    if len(domain) != len(variables):
        raise InputError(f"--domain has {len(domain)} intervals for {len(variables)} variables")
    return ex.make_chart(name, variables, domain, parse_flags(args.periodic, len(variables)))


def plane_field(args):
    if args.example:
        return planefields.example(args.example, **parse_params(args.param))
    if not args.form:
        raise InputError("give --form or --example")
    return planefields.PlaneFieldChart.parse(args.form, build_chart(args))


def _chart_args(p, default_chart="x,y,z"):
    p.add_argument("--form", help='1-form literal, e.g. "dz - y*dx"')
    p.add_argument("--example", help="catalog plane field (see the examples subcommand)")
    p.add_argument("--param", action="append", help="example parameter name=value (repeatable)")
    p.add_argument("--chart", default=default_chart, help="comma-separated chart variables")
    p.add_argument("--domain", help='intervals "lo:hi,..." (default [-1,1] per axis)')
    p.add_argument("--periodic", help='flags "0,0,1" per variable')


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_classify(args):
    pf = plane_field(args)
    rep = planefields.classify(pf, args.grid or 41, margin=args.margin, zero_tol=args.tol, interior=args.interior)
    return {"plane_field": pf.label, "form": pf.form.to_text(), "chart": pf.chart.describe(), **rep.to_dict()}, 0


def _surface(args, pf):
    if args.surface:
        dom = parse_intervals(args.surface_domain) if args.surface_domain else [(-1.0, 1.0)] * 2
        return parse_surface(args.surface, pf.chart, dom, parse_flags(args.surface_periodic, 2))
    if args.example == "lutz":
        lo, hi = pf.chart.domain[0]
        return parse_surface("u,v -> (u, v, 0)", pf.chart, [(lo, hi), (0.0, 2 * math.pi)], (False, True))
    raise InputError("give --surface 'u,v -> (e1, e2, e3)'")


def cmd_charfol(args):
    pf = plane_field(args)
    patch = _surface(args, pf)
    fol = surfdyn.characteristic_foliation(pf, patch, seeds=args.seeds, grid=args.grid or 81, step=args.step,
                                           max_steps=args.max_steps)
    reasons = {}
    for sl in fol.streamlines:
        reasons[sl.reason] = reasons.get(sl.reason, 0) + 1
    result = {
        "form": pf.form.to_text(),
        "surface": args.surface,
        "singular_points": [p.to_dict() for p in fol.singular],
        "singular_rows_u": fol.singular_rows(0),
        "rows_with_singularities_u": fol.rows_with_singularities(0),
        "streamlines": len(fol.streamlines),
        "termination": dict(sorted(reasons.items())),
        "max_residual": max((float(np.max(surfdyn.streamline_residuals(fol, sl))) for sl in fol.streamlines
                             if len(sl)), default=0.0),
    }
    if args.format == "csv":
        return streamlines_csv(fol), 0
    if args.format == "svg":
        return foliation_svg(fol), 0
    return result, 0


def streamlines_csv(fol):
    names = fol.patch.target.variables
    buf = io.StringIO()
    buf.write(",".join(["curve_id", "s", "u", "v", *names]) + "\n")
    for k, sl in enumerate(fol.streamlines):
        if not len(sl):
            continue
        img = fol.patch.apply((sl.samples[:, 1], sl.samples[:, 2]))
        cols = [sl.samples[:, 0], sl.samples[:, 1], sl.samples[:, 2]] + [np.broadcast_to(c, sl.samples[:, 0].shape)
                                                                          for c in img]
        for row in zip(*cols):
            buf.write(str(k) + "," + ",".join(f"{x:.9g}" for x in row) + "\n")
    return buf.getvalue()


def foliation_svg(fol, size=480):
    (u0, u1), (v0, v1) = fol.patch.source.domain
    sx = size / (u1 - u0)
    sy = size / (v1 - v0)

    def pt(u, v):
        return f"{(u - u0) * sx:.2f},{(v1 - v) * sy:.2f}"

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white" stroke="black"/>']
    for sl in fol.streamlines:
        if len(sl) < 2:
            continue
        path = " ".join(pt(u, v) for u, v in sl.samples[:: max(1, len(sl) // 400), 1:3])
        lines.append(f'<polyline points="{path}" fill="none" stroke="steelblue" stroke-width="1"/>')
    for p in fol.singular:
        x, y = pt(p.u, p.v).split(",")
        lines.append(f'<circle cx="{x}" cy="{y}" r="3" fill="crimson"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _holonomy_setup(args):
    if args.example == "shear":
        pf = perturb.shear_foliation()
        return pf, perturb.shear_annulus(pf, args.z0, args.eps)
    pf = plane_field(args)
    if args.annulus:
        s_range = parse_intervals(args.s_range)[0]
        p_range = parse_intervals(args.p_range)[0]
        p0 = _number(args.transversal) if args.transversal else None
        return pf, surfdyn.TransverseAnnulus.parse(args.annulus, pf.chart, s_range, p_range, p0)
    if args.example == "reeb":
        return pf, surfdyn.reeb_annulus(pf, args.eps)
    raise InputError("give --annulus 's,p -> (e1, e2, e3)' with --s-range and --p-range")


def cmd_holonomy(args):
    pf, ann = _holonomy_setup(args)
    rm = surfdyn.holonomy_return_map(pf, ann, direction=args.direction, seeds=args.seeds, loops=args.loops,
                                     step=args.step, tol=args.holonomy_tol, one_sided=args.one_sided or "")
    cls = surfdyn.classify_holonomy(rm, derivative_margin=args.derivative_margin)
    return {"form": pf.form.to_text(), "return_map": rm.to_dict(), "table": rm.table(),
            "classification": cls.to_dict()}, 0


def cmd_perturb(args):
    kind = args.kind
    grid = args.grid
    if kind == "tangent-arc":
        r = perturb.tangent_arc_contactize(args.a or "pos(y-1/2)^3", t=args.t, grid=grid or 21, margin=args.margin)
        return r.to_dict(), 0
    if kind == "holonomy":
        h = perturb.radial_bump(args.h) if args.h else None
        r = perturb.holonomy_contactize(args.a or "-z", h, eps=args.eps, grid=grid or 41, margin=args.margin)
        return r.to_dict(), 0
    if kind == "shear":
        pf = perturb.shear_foliation(grid=grid or 21)
        ann = perturb.shear_annulus(pf, args.z0, 0.1)
        seeds = np.linspace(-0.015, 0.015, args.seeds)
        rm = surfdyn.holonomy_return_map(pf, ann, direction=args.direction, seeds=seeds)
        cls = surfdyn.classify_holonomy(rm)
        return {"form": pf.form.to_text(), "z0": args.z0, "return_map": rm.to_dict(),
                "classification": cls.to_dict()}, 0
    if kind == "interpolate":
        r = perturb.interpolate_plane_fields(args.a0 or "-z", args.a1 or "-z + 1/2", grid=grid or 21,
                                             margin=args.margin)
        return r.to_dict(), 0
    if kind == "diffeo":
        v = args.v or ["z", "z + z^3", "sin(z)"]
        d = perturb.monotone_graph_diffeo(v, eps=args.eps_support)
        return d.to_dict(), 0
    raise InputError(f"unknown perturbation {kind!r}")


def cmd_symplectic(args):
    kind = args.kind
    if kind == "fill":
        if args.alpha:
            chart = build_chart(args)
            alpha = parse_form(args.alpha, chart)
            v = VectorFieldChart.parse([c.strip() for c in args.field.split(",")], chart)
            Omega = parse_form(args.volume, chart) if args.volume else KForm.volume(chart)
        else:
            alpha, v, Omega = symplectic.taut_t3_example()
        cert = symplectic.weak_filling_form(alpha, v, Omega, eps=args.eps, grid=args.grid or 9,
                                            margin=args.margin, tol=args.tol)
        return cert.to_dict(), 0 if cert.valid else 1
    if kind == "dilating":
        chart, omega, v = symplectic.standard_r4()
        if args.omega:
            omega = parse_form(args.omega, chart)
        if args.field:
            v = VectorFieldChart.parse([c.strip() for c in args.field.split(",")], chart)
        r = symplectic.check_dilating(v, omega, args.grid or 7, args.tol)
        return r.to_dict(), 0 if r.ok else 1
    if kind == "boundary-form":
        polar, omega, v, param = symplectic.polar_r4()
        b = symplectic.induced_boundary_form(v, omega, param, grid=args.grid or 21, tol=args.tol, seed=args.seed)
        return b.to_dict(), 0 if b.report.verdict == "positive-contact" else 1
    if kind == "dominate":
        pf = plane_field(args)
        omega = parse_form(args.omega, pf.chart) if args.omega else None
        if omega is None:
            raise InputError("give --omega, a 2-form on the plane field's chart")
        r = symplectic.weak_domination_check(omega, pf, args.grid or 21, margin=args.margin)
        return r.to_dict(), 0 if r.ok else 1
    raise InputError(f"unknown symplectic check {kind!r}")


def cmd_mcg(args):
    kind, g = args.kind, args.genus
    if kind == "chain":
        w = mcg.chain_relation_word(g)
        rep = mcg.hom_rep(w)
        base = mcg.hom_rep(mcg.chain_word(g))
        return {"genus": g, "length": len(w), "identity": rep.is_identity(), "base": base.tolist(),
                "base_order": base.order()}, 0
    ob = mcg.OpenBook.parse(g, args.word or "1")
    if kind == "rep":
        rep = mcg.hom_rep(ob.monodromy)
        return {"word": ob.monodromy.to_text(), "matrix": rep.tolist(), "symplectic": rep.is_symplectic(),
                "order": rep.order(), "det_minus_identity": rep.det_minus_identity()}, 0
    if kind == "reduce":
        return {"word": ob.monodromy.to_text(), "reduced": mcg.word_reduce(ob.monodromy).to_text()}, 0
    if kind == "stabilize":
        new = mcg.positive_stabilize(ob)
        return {"genus": new.genus, "word": new.monodromy.to_text()}, 0
    if kind == "surgery":
        if not args.curve:
            raise InputError("give --curve for Legendrian surgery")
        new, rec = mcg.legendrian_surgery(ob, args.curve)
        return {"genus": new.genus, "word": new.monodromy.to_text(), "handle": rec.to_dict()}, 0
    if kind == "homsphere":
        d = mcg.homology_sphere_check(ob)
        return {"word": ob.monodromy.to_text(), "det_minus_identity": d,
                "homology_sphere": d == 1, "positive_betti": d == 0}, 0
    if kind == "cap":
        p = mcg.cap_pipeline(ob)
        if args.format == "text":
            return p.table() + "\n", 0
        return p.to_dict(), 0
    raise InputError(f"unknown mcg command {kind!r}")


EXAMPLE_NOTES = {
    "xi1": "dz on the cube: foliation",
    "xi2": "dz - y dx on the cube: positive contact",
    "xi3": "dz + y dx on the cube: negative contact",
    "lutz": "cos(r) dz + r sin(r) dtheta on a cylinder (params r_min, r_max)",
    "reeb": "Reeb component, e^-z d(g(x^2+y^2) e^z) (param profile=linear|smooth)",
    "t3": "t cos(2 pi n z) dx + t sin(2 pi n z) dy + dz on the 3-torus (params t, n)",
    "s3": "r1^2 dtheta1 + r2^2 dtheta2 restricted to the unit sphere",
}


def cmd_examples(args):
    return {"examples": [{"name": n, "description": EXAMPLE_NOTES[n]} for n in planefields.CATALOG]}, 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_globals(p, suppress):
    for name, kw in GLOBALS.items():
        kw = dict(kw)
        if suppress:
            kw["default"] = argparse.SUPPRESS
        p.add_argument("--" + name, **kw)


def build_parser():
    root = argparse.ArgumentParser(prog="contactkit", description="Contact structures, foliations and open books.")
    root.add_argument("--version", action="version", version=f"contactkit {__version__}")
    _add_globals(root, False)
    root.set_defaults(**DEFAULTS)
    sub = root.add_subparsers(dest="command", required=True)

    def leaf(parent, name, func, **kw):
        p = parent.add_parser(name, **kw)
        _add_globals(p, True)
        p.set_defaults(func=func)
        return p

    p = leaf(sub, "classify", cmd_classify, help="contact/foliation verdict of ker(alpha)")
    _chart_args(p)
    p.add_argument("--interior", action="store_true", help="sample the open interior only")

    p = leaf(sub, "charfol", cmd_charfol, help="characteristic foliation on a surface")
    _chart_args(p)
    p.add_argument("--surface", help='"u,v -> (e1, e2, e3)"')
    p.add_argument("--surface-domain", help='parameter intervals "lo:hi,lo:hi"')
    p.add_argument("--surface-periodic", help='flags "0,0"')
    p.add_argument("--seeds", type=int, default=16)
    p.add_argument("--step", type=float, default=surfdyn.STEP)
    p.add_argument("--max-steps", type=int, default=20000)

    p = leaf(sub, "holonomy", cmd_holonomy, help="return map along a leaf loop")
    _chart_args(p)
    p.add_argument("--annulus", help='"s,p -> (e1, e2, e3)"; s transverse, p periodic along the loop')
    p.add_argument("--s-range", default="-0.3:0.3")
    p.add_argument("--p-range", default="0:1")
    p.add_argument("--transversal", help="p value of the transversal (default: start of the p range)")
    p.add_argument("--eps", type=float, default=0.3, help="annulus half-width for built-in annuli")
    p.add_argument("--z0", type=float, default=0.0, help="loop height for the shear example")
    p.add_argument("--direction", type=int, default=1, choices=(1, -1))
    p.add_argument("--loops", type=int, default=1)
    p.add_argument("--seeds", type=int, default=41)
    p.add_argument("--step", type=float, default=surfdyn.STEP)
    p.add_argument("--one-sided", choices=("+", "-"))
    p.add_argument("--holonomy-tol", type=float, default=surfdyn.HOLONOMY_TOL)
    p.add_argument("--derivative-margin", type=float, default=surfdyn.DERIVATIVE_MARGIN)

    pp = sub.add_parser("perturb", help="perturb foliations into contact structures")
    ps = pp.add_subparsers(dest="kind", required=True)
    p = leaf(ps, "tangent-arc", cmd_perturb)
    p.add_argument("--a", help="slope a(x, y, z) of dz - a dx (default pos(y-1/2)^3)")
    p.add_argument("--t", type=float, default=0.05)
    p = leaf(ps, "holonomy", cmd_perturb)
    p.add_argument("--a", help="holonomy normal form a(x, z) (default -z)")
    p.add_argument("--h", help="radial profile in u (default (1-u)^2)")
    p.add_argument("--eps", type=float, default=0.1)
    p = leaf(ps, "shear", cmd_perturb)
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--direction", type=int, default=1, choices=(1, -1))
    p.add_argument("--seeds", type=int, default=41)
    p = leaf(ps, "interpolate", cmd_perturb)
    p.add_argument("--a0", help="slope at y <= -1/2 (default -z)")
    p.add_argument("--a1", help="slope at y >= 1/2 (default -z + 1/2)")
    p = leaf(ps, "diffeo", cmd_perturb)
    p.add_argument("--v", action="append", help="v_x(z) expression (repeatable)")
    p.add_argument("--eps-support", type=float, help="support half-width (default: all of [-1, 1])")

    sp = sub.add_parser("symplectic", help="filling and dilating-field checks")
    ss = sp.add_subparsers(dest="kind", required=True)
    p = leaf(ss, "fill", cmd_symplectic)
    p.add_argument("--chart", default="x,y,z")
    p.add_argument("--domain")
    p.add_argument("--periodic")
    p.add_argument("--alpha", help="1-form defining the foliation (default: taut T^3 example)")
    p.add_argument("--field", help='transverse field components "c1,c2,c3"')
    p.add_argument("--volume", help="volume form (default dx^dy^dz)")
    p.add_argument("--eps", type=float)
    p = leaf(ss, "dilating", cmd_symplectic)
    p.add_argument("--omega", help="2-form on (x1, y1, x2, y2)")
    p.add_argument("--field", help="vector field components")
    leaf(ss, "boundary-form", cmd_symplectic)
    p = leaf(ss, "dominate", cmd_symplectic)
    _chart_args(p)
    p.add_argument("--omega", help="2-form on the plane field's chart")

    mp = sub.add_parser("mcg", help="Dehn-twist words and open books")
    ms = mp.add_subparsers(dest="kind", required=True)
    for name in ("rep", "reduce", "chain", "stabilize", "surgery", "cap", "homsphere"):
        p = leaf(ms, name, cmd_mcg)
        p.add_argument("--genus", type=int, default=1)
        if name != "chain":
            p.add_argument("--word", default="1", help='e.g. "c^2 * s1^-1"')
        if name == "surgery":
            p.add_argument("--curve", help="curve name, e.g. g1")

    leaf(sub, "examples", cmd_examples, help="list the catalog plane fields")
    return root


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def render(report, fmt):
    if isinstance(report, str):
        return report
    if fmt == "text":
        return _text(report) + "\n"
    return json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _text(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        rows = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not all(isinstance(x, (int, float)) for x in v):
                rows.append(f"{pad}{k}:")
                rows.append(_text(v, indent + 1))
            else:
                rows.append(f"{pad}{k}: {v}")
        return "\n".join(rows)
    if isinstance(obj, list):
        return "\n".join(_text(x, indent) if isinstance(x, dict) else f"{pad}{x}" for x in obj)
    return f"{pad}{obj}"


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    for name in ("margin", "tol"):
        if getattr(args, name) <= 0:
            print(f"error: --{name} must be positive", file=stderr)
            return 2
    try:
        result, status = args.func(args)
    except VerificationError as e:
        print(f"verification failed: {e}", file=stderr)
        return e.exit_code
    except ContactKitError as e:
        msg = e.annotated() if hasattr(e, "annotated") else str(e)
        print(f"error: {msg}", file=stderr)
        return e.exit_code
    if isinstance(result, str):
        text = result
    else:
        report = {"tool": "contactkit", "version": __version__, "config": _config(args), "result": result}
        text = render(report, args.format if args.format in ("json", "text") else "json")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
