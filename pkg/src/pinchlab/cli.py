"""Command-line front end.

Commands: ``generate``, ``analyze``, ``rigidity``, ``sweep`` and ``example``.
Every option can also be given in an INI file passed with ``--config``; the
section name is the command (``[sweep]``), keys are option names with dashes
or underscores, and the command line wins.  Exit codes: 0 ok, 1 numerical
failure, 2 usage or I/O error.  Outputs are written to a temporary file and
renamed, so a failed run leaves no partial file behind.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .curvature import h_infty, mean_curvature, norm_B_q, shape_operator
from .gluedspheres import (FamilyParams, build_mesh, lambda1_upper_bound_via_test_function,
                           neck_B2_discrete, neck_B2_integral)
from .mesh import (MeshError, atomic_write_text, generate_icosphere, generate_revolution, perturb_radially,
                   read_mesh, total_area, triangle_quality, vertex_measures, write_mesh)
from .pinch import StageError, assemble_report
from .rigidity import (FocalPointError, RadialCurvatureProfile, integrate_riccati, profile_with_defect,
                       rigidity_certificate)
from .spaceform import AmbientModel, DomainError
from .spectral import ConvergenceError, assemble, lambda1

logger = logging.getLogger("pinchlab")

NUMERIC_ERRORS = (StageError, ConvergenceError, ArithmeticError, DomainError, np.linalg.LinAlgError)

AMPLITUDE_TREND = ("eps_spec", "hausdorff", "psi_infty", "Xtan_l2sq", "laplace_dev")
GLUED_TREND = ("lambda1", "quotient", "h_infty_dev", "B_q1", "B_q4")


class UsageError(Exception):
    """Invalid parameters detected after argument parsing."""


# -- helpers -----------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    return vals


def _wave(text: str):
    if str(text).strip().lower() == "random":
        return None
    try:
        l, m = (int(x) for x in str(text).split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("wave must be 'l,m' or 'random'") from exc
    if abs(m) > l or l < 0:
        raise argparse.ArgumentTypeError("wave needs |m| <= l")
    return (l, m)


def _num(x) -> str:
    """Shortest round-trip text for CSV cells; blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(row.get(h)) for h in header])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, _csv_text(header, rows))


def _model(delta) -> AmbientModel:
    return AmbientModel(0.0 if delta is None else float(delta))


def _base_mesh(args):
    model = _model(args.ambient_delta)
    return generate_icosphere(model, radius=args.radius, subdivisions=args.subdiv)


def _perturbed(args, amplitude):
    return perturb_radially(_base_mesh(args), amplitude, wave=args.wave, seed=args.seed)


def _summary(mesh) -> str:
    E = len(mesh.edges)
    q = float(triangle_quality(mesh).min())
    return (f"V={mesh.n_vertices} E={E} F={mesh.n_faces} chi={mesh.euler_characteristic} "
            f"area={total_area(mesh):.10g} min_quality={q:.4g}")


# -- commands ----------------------------------------------------------------------


def cmd_generate(args) -> int:
    if not args.out:
        raise UsageError("generate needs --out (.off or .obj)")
    fam = args.family
    if fam == "icosphere":
        mesh = _base_mesh(args)
    elif fam == "perturbed":
        mesh = _perturbed(args, args.amplitude)
    elif fam == "glued":
        if args.ambient_delta not in (None, 0):
            raise UsageError("the glued family lives in the euclidean chart")
        try:
            mesh = build_mesh(FamilyParams(args.eps, args.necks, args.spheres, (args.nr, args.ntheta)))
        except NotImplementedError as exc:
            raise UsageError(str(exc)) from exc
    elif fam == "revolution":
        if args.ambient_delta not in (None, 0):
            raise UsageError("surfaces of revolution are built in the euclidean chart only")
        a, c = args.radius, args.semi_axis if args.semi_axis is not None else args.radius
        upper = lambda r: c * np.sqrt(np.maximum(1 - (r / a) ** 2, 0.0))  # noqa: E731
        mesh = generate_revolution(_model(0.0), (upper, (0.0, a)), args.ntheta, n_r=args.nr)
    else:  # argparse restricts the choices
        raise UsageError(f"unknown family {fam!r}")
    write_mesh(args.out, mesh)
    print(_summary(mesh))
    return 0


def _vertex_rows(data):
    for i in range(len(data.H)):
        yield {"vertex": i, "H": data.H[i], "B_norm": data.B_norm[i], "norm_X": data.norm_X[i],
               "psi": data.psi[i], "laplace_r": data.laplace_r[i]}


def cmd_analyze(args) -> int:
    if not args.mesh:
        raise UsageError("analyze needs --mesh")
    mesh = read_mesh(args.mesh, args.ambient_delta)
    report, data = assemble_report(mesh, tol=args.tol, seed=args.seed, return_data=True)
    text = report.to_json()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.vertex_csv:
        write_csv(args.vertex_csv, ["vertex", "H", "B_norm", "norm_X", "psi", "laplace_r"], _vertex_rows(data))
    return 0


RIGIDITY_HEADER = ["profile", "seed", "eps", "mu", "delta", "R", "boundary_defect", "max_ratio", "bound",
                   "C_explicit", "d0", "F_monotone", "ok", "status"]


def _certificate_row(base, sol, eps):
    cert = rigidity_certificate(sol, eps)
    # reported on the eps scale: (rho(R) - phi(R)) / n with n = 2
    base.update(boundary_defect=cert.boundary_defect / 2, max_ratio=cert.max_ratio, bound=cert.bound,
                C_explicit=cert.C_explicit if math.isfinite(cert.C_explicit) else None, d0=cert.d0,
                F_monotone=cert.F_monotone, ok=cert.ok, status="ok" if cert.ok else "certificate violated")
    return base


def rigidity_rows(family, mu, delta, R, eps_list, count, seed, steps):
    dt = R / steps
    rows = []
    if family == "random":
        jobs = [(seed + i, e) for e in eps_list for i in range(count)]
    else:
        jobs = [(None, e) for e in eps_list]
    for s, e in jobs:
        row = {"profile": family, "seed": s, "eps": e, "mu": mu, "delta": delta, "R": R}
        try:
            if family == "random":
                if e == 0:
                    prof = RadialCurvatureProfile.constant(delta, mu, delta, R)
                else:
                    prof = profile_with_defect(s, e, mu, delta, R, dt)
            else:
                prof = RadialCurvatureProfile.constant(delta, mu, delta, R)
            rows.append(_certificate_row(row, integrate_riccati(prof, dt), e))
        except FocalPointError as exc:
            row.update(status=f"focal failure at t={exc.t:.6g}")
            rows.append(row)
        except (ValueError, ArithmeticError) as exc:
            row.update(status=f"hypothesis violated: {exc}")
            rows.append(row)
    return rows


def cmd_rigidity(args) -> int:
    if not args.eps:
        raise UsageError("rigidity needs a non-empty --eps list")
    if args.steps < 1000:
        raise UsageError("--steps must be at least 1000")
    rows = rigidity_rows(args.profile, args.mu, args.delta, args.R, args.eps, args.count, args.seed, args.steps)
    text = _csv_text(RIGIDITY_HEADER, rows)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _report_scalars(report) -> dict:
    d = asdict(report)
    d.pop("p0")
    d["flags"] = ";".join(d["flags"])
    return d


def amplitude_row(args, a):
    mesh = _perturbed(args, a)
    rep = assemble_report(mesh, tol=args.tol, seed=args.seed)
    return _report_scalars(rep)


def glued_row(args, eps):
    mesh = build_mesh(FamilyParams(eps, resolution=(args.nr, args.ntheta)))
    measure = vertex_measures(mesh)
    op = assemble(mesh)
    eig = lambda1(op, tol=args.tol, seed=args.seed)
    H = mean_curvature(mesh, measure)
    cf = shape_operator(mesh)
    hinf = h_infty(H)
    return {
        "n_vertices": mesh.n_vertices, "n_faces": mesh.n_faces, "area": measure.total,
        "lambda1": eig.lambda1, "lambda1_residual": eig.residual,
        "quotient": lambda1_upper_bound_via_test_function(mesh, op=op),
        "h_infty": hinf, "h_infty_dev": abs(hinf - 1.0),
        "B_q1": norm_B_q(cf, measure, 1), "B_q2": norm_B_q(cf, measure, 2), "B_q4": norm_B_q(cf, measure, 4),
        "neck_B2_discrete": neck_B2_discrete(mesh, cf), "neck_B2_exact": neck_B2_integral(eps),
        "clamped_edges": op.clamped_edges, "min_quality": mesh.min_quality,
        "neck_max_aspect": mesh.neck_max_aspect,
    }


def _plot_path(out, col):
    stem, ext = os.path.splitext(out)
    return f"{stem}.{col}{ext or '.csv'}"


def cmd_sweep(args) -> int:
    if not args.values:
        raise UsageError("sweep needs a non-empty --values list")
    if not args.out:
        raise UsageError("sweep needs --out (CSV path)")
    axis = "amplitude" if args.axis == "amplitude" else "eps"
    fn = amplitude_row if args.axis == "amplitude" else glued_row
    trend = AMPLITUDE_TREND if args.axis == "amplitude" else GLUED_TREND
    rows = []
    for v in args.values:
        row = {axis: v}
        try:
            row.update(fn(args, v))
            row["status"] = "ok"
        except NUMERIC_ERRORS + (MeshError, ValueError) as exc:
            row["status"] = f"failed: {exc}"
        rows.append(row)
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys and k not in (axis, "status")]
    header = [axis] + keys + ["status"]
    write_csv(args.out, header, rows)
    for col in trend:
        pts = [{"x": r[axis], "y": r.get(col)} for r in rows]
        write_csv(_plot_path(args.out, col), ["x", "y"], pts)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} rows, {failed} failed -> {args.out}")
    return 0


def cmd_example(args) -> int:
    """Small end-to-end demonstrations written into ``--out`` (a directory)."""
    out = args.out or "pinchlab-example"
    os.makedirs(out, exist_ok=True)
    name = args.name
    if name == "sphere":
        mesh = generate_icosphere(_model(args.ambient_delta), radius=args.radius, subdivisions=4)
        write_mesh(os.path.join(out, "sphere.off"), mesh)
        rep = assemble_report(mesh, tol=args.tol, seed=args.seed)
        atomic_write_text(os.path.join(out, "sphere_report.json"), rep.to_json())
        print(f"eps_spec={rep.eps_spec:.3e} hausdorff={rep.hausdorff:.3e}")
    elif name == "glued":
        mesh = build_mesh(FamilyParams(0.1, resolution=(64, 64)))
        write_mesh(os.path.join(out, "glued.off"), mesh)
        op = assemble(mesh)
        eig = lambda1(op, tol=args.tol, seed=args.seed)
        q = lambda1_upper_bound_via_test_function(mesh, op=op)
        info = {"eps": 0.1, "lambda1": eig.lambda1, "quotient": q, "n_vertices": mesh.n_vertices}
        atomic_write_text(os.path.join(out, "glued.json"), json.dumps(info, indent=2) + "\n")
        print(f"lambda1={eig.lambda1:.6g} quotient={q:.6g}")
    else:
        rows = rigidity_rows("random", -1.0, 0.0, 1.0, [1e-4], 5, args.seed, 1000)
        write_csv(os.path.join(out, "rigidity.csv"), RIGIDITY_HEADER, rows)
        print(f"{sum(r.get('ok') is True for r in rows)}/{len(rows)} certificates ok")
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; section per command, command line wins")
    common.add_argument("--ambient-delta", type=float, default=None,
                        help="ambient sectional curvature (default 0; analyze reads it from the mesh file)")
    common.add_argument("--out", help="output path")
    common.add_argument("--tol", type=float, default=1e-10, help="eigen-solver tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pinchlab", description="Spectral pinching diagnostics for closed surfaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a fixture mesh (OFF/OBJ)")
    g.add_argument("family", choices=["icosphere", "perturbed", "glued", "revolution"])
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--subdiv", type=int, default=4)
    g.add_argument("--amplitude", type=float, default=0.1)
    g.add_argument("--wave", type=_wave, default=None, help="'l,m' or 'random' (seeded)")
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--necks", type=int, default=1)
    g.add_argument("--spheres", type=int, default=2)
    g.add_argument("--nr", type=int, default=128)
    g.add_argument("--ntheta", type=int, default=128)
    g.add_argument("--semi-axis", type=float, default=None, help="polar semi-axis (revolution)")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", parents=[common], help="pinch report of a mesh as JSON")
    a.add_argument("--mesh", help="input OFF/OBJ")
    a.add_argument("--vertex-csv", help="optional per-vertex CSV")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("rigidity", parents=[common], help="Riccati certificates as CSV")
    r.add_argument("--profile", choices=["random", "constant"], default="random")
    r.add_argument("--mu", type=float, default=-1.0)
    r.add_argument("--delta", type=float, default=0.0)
    r.add_argument("--R", type=float, default=1.0)
    r.add_argument("--eps", type=_floats, default=[1e-4])
    r.add_argument("--count", type=int, default=100)
    r.add_argument("--steps", type=int, default=2000)
    r.set_defaults(func=cmd_rigidity)

    s = sub.add_parser("sweep", parents=[common], help="amplitude or glued-family sweep as CSV")
    s.add_argument("axis", choices=["amplitude", "glued"])
    s.add_argument("--values", type=_floats, default=None)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--subdiv", type=int, default=4)
    s.add_argument("--wave", type=_wave, default=(2, 0))
    s.add_argument("--nr", type=int, default=128)
    s.add_argument("--ntheta", type=int, default=128)
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("example", parents=[common], help="run a small demonstration")
    e.add_argument("name", choices=["sphere", "glued", "rigidity"])
    e.add_argument("--radius", type=float, default=1.0)
    e.set_defaults(func=cmd_example)
    return p


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, argv, ns):
    """Re-parse with defaults from the config section of the chosen command."""
    cfg = configparser.ConfigParser()
    if not cfg.read(ns.config):
        raise OSError(f"cannot read config file {ns.config}")
    if not cfg.has_section(ns.command):
        return ns
    sp = _subparser(parser, ns.command)
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, raw in cfg.items(ns.command):
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} in [{ns.command}]")
        act = known[dest]
        if act.type is not None:
            defaults[dest] = act.type(raw)
        elif isinstance(act.const, bool) or act.nargs == 0:
            defaults[dest] = cfg.getboolean(ns.command, key)
        else:
            defaults[dest] = raw
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.config:
            ns = _apply_config(parser, argv, ns)
        return ns.func(ns)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"pinchlab: error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"pinchlab: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (OSError, MeshError) as exc:
        print(f"pinchlab: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"pinchlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
