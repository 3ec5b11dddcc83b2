"""Batch front-end: JSON job specs in, JSON reports (and CSV trajectories)
out.

Subcommands: verify-surface, lie-classify, geodesic, dynamics-check,
extend-certify.  Exit codes: 0 all checks pass, 1 verification failure,
2 input error.  Reports carry "schema": "skewric/1" and are byte-stable
for a fixed spec and seed when --reproducible suppresses the timestamp.

Connections in specs are either builtin names ("halfplane", "cnc",
"wong:<expr>") or serialized objects {"chart": {...}, "gamma": {...}}.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import expr as ex
from . import lie2
from . import surface as sf
from . import walker4 as w4
from .chart import Chart2
from .errors import (
    MagnitudeCollapseError,
    RecurrenceUndefinedError,
    SkewricError,
)

SCHEMA = "skewric/1"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


class InputSpecError(Exception):
    pass


def _load_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputSpecError(f"cannot read spec {path}: {exc}") from exc


def _chart_from_spec(spec, default_box=((-1.0, 1.0), (-1.0, 1.0))):
    box = spec.get("box", default_box)
    excluded = tuple(ex.parse(s) for s in spec.get("excluded", []))
    return Chart2(box=tuple(tuple(iv) for iv in box), excluded=excluded)


def build_connection(spec):
    """Resolve the "connection" entry of a job spec.

    Returns (connection, gauge one-form or None, potential or None).
    """
    conn_spec = spec.get("connection")
    if conn_spec is None:
        raise InputSpecError("spec lacks a \"connection\" entry")
    if isinstance(conn_spec, str):
        chart = _chart_from_spec(spec)
        if conn_spec == "halfplane":
            return lie2.halfplane_connection(chart), lie2.halfplane_xi(), None
        if conn_spec == "cnc":
            conn, _, _ = lie2.cnc_connection(chart)
            return conn, sf.ZERO_FORM, None
        if conn_spec.startswith("wong:"):
            phi = ex.parse(conn_spec[len("wong:"):])
            return sf.wong_connection(phi, chart), sf.wong_gauge(phi), phi
        raise InputSpecError(f"unknown builtin connection {conn_spec!r}")
    if isinstance(conn_spec, dict):
        conn = sf.connection_from_dict(conn_spec)
        xi = None
        if "xi" in spec:
            xi = sf.OneForm2(ex.parse(spec["xi"][0]), ex.parse(spec["xi"][1]))
        return conn, xi, None
    raise InputSpecError("\"connection\" must be a builtin name or an object")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_report(report, args, name):
    if not args.reproducible:
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    print(path)


# ---------------------------------------------------------------------------
# subcommands

def cmd_verify_surface(args):
    spec = _load_spec(args.spec)
    conn, xi, _ = build_connection(spec)
    tol = float(spec.get("tol", args.tol))
    n_points = int(spec.get("n_points", 100))
    points = conn.chart.sample(n=n_points, seed=args.seed)

    checks = {}
    skew = sf.is_ricci_skew(conn, tol=tol, points=points)
    checks["ricci_skew"] = {"pass": skew.ok, "residual": skew.residual}
    flat = sf.is_projectively_flat(conn, tol=tol, points=points)
    checks["projectively_flat"] = {"pass": flat.ok, "residual": flat.residual}

    if xi is None:
        checks["decomposition"] = {"skipped": "no gauge one-form supplied"}
    else:
        try:
            _, rep = sf.decompose_with(conn, xi, tol=tol, points=points)
            checks["decomposition"] = {
                "pass": True,
                "hypothesis_residual": rep.hypothesis_residual,
                "flatness_residual": rep.flatness_residual,
            }
        except SkewricError as exc:
            checks["decomposition"] = {"pass": False, "error": str(exc)}

    try:
        _, rep = sf.recurrence_form(conn, tol=max(tol, 1e-8), points=points)
        checks["recurrence"] = {
            "pass": rep.identity_residual <= max(tol, 1e-8),
            "identity_residual": rep.identity_residual,
            "masked": rep.masked,
            "total": rep.total,
        }
        ric = sf.ricci(conn)
        rho_vals = ex.evaluate_many(ric[0][1], points)
        checks["recurrence"]["rho_12_range"] = [float(np.min(rho_vals)),
                                                float(np.max(rho_vals))]
    except RecurrenceUndefinedError as exc:
        checks["recurrence"] = {"skipped": str(exc)}

    ok = all(entry.get("pass", True) for entry in checks.values())
    report = {
        "schema": SCHEMA,
        "command": "verify-surface",
        "seed": args.seed,
        "tolerance": tol,
        "connection": spec.get("connection"),
        "checks": checks,
        "pass": ok,
    }
    _write_report(report, args, "verify_surface.json")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_lie_classify(args):
    spec = _load_spec(args.spec)
    try:
        conn = lie2.leftinv_from_dict(spec)
    except (KeyError, ValueError, SkewricError) as exc:
        raise InputSpecError(f"bad left-invariant connection spec: {exc}") from exc
    hom = lie2.is_homomorphism(conn)
    report = {
        "schema": SCHEMA,
        "command": "lie-classify",
        "seed": args.seed,
        "input": lie2.leftinv_to_dict(conn),
        "homomorphism": {"pass": hom.ok, "residual": hom.residual},
    }
    ok = hom.ok
    if hom.ok:
        rank = lie2.rank_class(conn)
        report["rank"] = rank
        report["ricci_12"] = lie2.leftinv_ricci(conn)
        if rank == 2:
            nf = lie2.classify_subalgebra(conn.psi1, conn.psi2)
            report["normal_form"] = {
                "a": nf.a.ravel().tolist(),
                "b": nf.b.ravel().tolist(),
                "w": nf.w.tolist(),
                "wp": nf.wp.tolist(),
                "bracket_residual": float(np.max(np.abs(lie2.comm(nf.a, nf.b) - nf.a))),
                "null_residual": abs(lie2.killing(nf.a, nf.a)),
            }
        else:
            report["normal_form"] = {"skipped": f"rank {rank} image spans no subalgebra"}
    else:
        report["rank"] = None
        report["ricci_12"] = None
    report["pass"] = ok
    _write_report(report, args, "lie_classify.json")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_geodesic(args):
    spec = _load_spec(args.spec)
    conn, _, phi = build_connection(spec)
    initial = spec.get("initial", [0.0, 0.0, 1.0, 1.0])
    state0 = dyn.GeodesicState(tuple(initial[0:2]), tuple(initial[2:4]))
    t_end = float(spec.get("t_end", 1.0))
    dt = float(spec.get("dt", 1e-3))
    drift_tol = float(spec.get("drift_tol", 1e-6))

    traj = dyn.integrate_geodesic(conn, state0, t_end, dt)
    omega = dyn.wong_first_integral(phi) if phi is not None else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectory.csv"
    dyn.write_trajectory_csv(csv_path, traj, omega)

    report = {
        "schema": SCHEMA,
        "command": "geodesic",
        "seed": args.seed,
        "connection": spec.get("connection"),
        "initial": list(initial),
        "t_end": t_end,
        "dt": dt,
        "n_samples": int(len(traj.t)),
        "exited_chart": bool(traj.exited),
        "csv": csv_path.name,
    }
    ok = True
    if omega is not None:
        try:
            drift = dyn.first_integral_drift(omega, traj)
            report["first_integral"] = {
                "max_arg_drift": drift.max_drift,
                "zero_branch": drift.zero_branch,
                "min_abs": drift.min_abs,
                "pass": drift.zero_branch or drift.max_drift <= drift_tol,
            }
            ok = report["first_integral"]["pass"]
        except MagnitudeCollapseError as exc:
            report["first_integral"] = {"pass": False, "error": str(exc)}
            ok = False
    report["pass"] = ok
    _write_report(report, args, "geodesic.json")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_dynamics_check(args):
    spec = _load_spec(args.spec)
    phi_text = spec.get("phi", "y1*y2")
    phi = ex.parse(phi_text)
    chart = _chart_from_spec(spec, default_box=((-2.0, 2.0), (-2.0, 2.0)))
    conn = sf.wong_connection(phi, chart)
    fd = dyn.wong_frame_data(phi, chart)
    initial = spec.get("initial", [0.0, 0.0, 1.0, 1.0])
    state0 = dyn.GeodesicState(tuple(initial[0:2]), tuple(initial[2:4]))
    t_end = float(spec.get("t_end", 1.0))
    dt = float(spec.get("dt", 1e-3))
    n_states = int(spec.get("n_states", 100))
    tols = {
        "legendre_roundtrip": 1e-14,
        "hamiltonian_matches_lagrangian": 1e-12,
        "symplectic": 1e-9,
        "pushforward": 1e-7,
        "euler_lagrange": 1e-6,
    }
    tols.update(spec.get("tolerances", {}))

    rng = np.random.default_rng(args.seed)
    a = rng.uniform(0.1, 2.0, n_states) * rng.choice([-1.0, 1.0], n_states)
    b = rng.uniform(-2.0, 2.0, n_states)
    rt = 0.0
    hl = 0.0
    for ai, bi in zip(a, b):
        r, s = dyn.legendre(ai, bi)
        a2, b2 = dyn.legendre_inverse(r, s)
        rt = max(rt, abs(a2 - ai), abs(b2 - bi))
        hl = max(hl, abs(r / s + bi / ai))
    ys = chart.sample(n=n_states, seed=args.seed)
    rs_states = np.column_stack([ys, rng.uniform(-1.5, 1.5, n_states),
                                 rng.uniform(0.2, 1.5, n_states)])
    ab_states = np.column_stack([ys, a[:, None], b[:, None]])
    sym = dyn.symplectic_residual(fd, rs_states)
    push = dyn.legendre_pushforward_residual(fd, ab_states)
    el = dyn.euler_lagrange_equivalence(conn, fd, state0, t_end, dt)

    values = {
        "legendre_roundtrip": rt,
        "hamiltonian_matches_lagrangian": hl,
        "symplectic": sym,
        "pushforward": push,
        "euler_lagrange": el,
    }
    checks = {name: {"residual": val, "tolerance": tols[name],
                     "pass": val <= tols[name]}
              for name, val in values.items()}
    ok = all(c["pass"] for c in checks.values())
    report = {
        "schema": SCHEMA,
        "command": "dynamics-check",
        "seed": args.seed,
        "phi": phi_text,
        "initial": list(initial),
        "t_end": t_end,
        "dt": dt,
        "n_states": n_states,
        "checks": checks,
        "pass": ok,
    }
    _write_report(report, args, "dynamics_check.json")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_extend_certify(args):
    spec = _load_spec(args.spec)
    conn, _, _ = build_connection(spec)
    lam = None
    if "lambda" in spec and spec["lambda"]:
        entries = spec["lambda"]
        l11 = ex.parse(entries.get("11", "0"))
        l12 = ex.parse(entries.get("12", "0"))
        l22 = ex.parse(entries.get("22", "0"))
        lam = ((l11, l12), (l12, l22))
    fibre_box = tuple(tuple(iv) for iv in spec.get("fibre_box",
                                                   ((-1.0, 1.0), (-1.0, 1.0))))
    n_points = int(spec.get("n_points", 50))
    tols = {
        "ricci": 1e-8,
        "asd": 1e-8,
        "walker": 1e-10,
        "rvu": 1e-8,
        "projection": 1e-9,
    }
    tols.update(spec.get("tolerances", {}))

    cert = w4.certify(conn, lam, fibre_box=fibre_box, n_points=n_points,
                      seed=args.seed)
    summary = cert.summary
    checks = {
        "ricci_flat": {"residual": summary["max_ricci_residual"],
                       "tolerance": tols["ricci"],
                       "pass": summary["max_ricci_residual"] <= tols["ricci"]},
        "self_dual": {"residual": summary["max_asd_residual"],
                      "tolerance": tols["asd"],
                      "pass": summary["max_asd_residual"] <= tols["asd"]},
        "walker_null_parallel": {"residual": summary["max_walker_residual"],
                                 "tolerance": tols["walker"],
                                 "pass": summary["max_walker_residual"] <= tols["walker"]},
        "vertical_curvature": {"residual": summary["max_rvu_residual"],
                               "tolerance": tols["rvu"],
                               "pass": summary["max_rvu_residual"] <= tols["rvu"]},
        "projection_roundtrip": {"residual": summary["max_projection_residual"],
                                 "tolerance": tols["projection"],
                                 "pass": summary["max_projection_residual"] <= tols["projection"]},
        "petrov_type_iii": {"pass": summary["all_nondegenerate_type_iii"],
                            "types": summary["petrov_types"]},
    }
    ok = all(c["pass"] for c in checks.values())
    report = cert.to_json_dict()
    report.update({
        "command": "extend-certify",
        "seed": args.seed,
        "connection": spec.get("connection"),
        "checks": checks,
        "pass": ok,
    })
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cert.write_csv(out_dir / "certification_points.csv")
    _write_report(report, args, "extend_certify.json")
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="skewric",
        description="verification suites for plane connections with "
                    "skew-symmetric Ricci tensor and their extension metrics")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "verify-surface": cmd_verify_surface,
        "lie-classify": cmd_lie_classify,
        "geodesic": cmd_geodesic,
        "dynamics-check": cmd_dynamics_check,
        "extend-certify": cmd_extend_certify,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, help="JSON job spec")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=24389)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--reproducible", action="store_true",
                       help="suppress the timestamp for byte-stable reports")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputSpecError, SkewricError, KeyError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
