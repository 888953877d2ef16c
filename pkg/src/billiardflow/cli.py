"""Reproducible experiment runner.

Every subcommand writes a CSV of results plus a JSON sidecar (same stem,
.json) echoing the resolved configuration, library versions, and the key
residuals, so a run can be reproduced bit-identically on the same build.
Floats are written with 17 significant digits and files are written
atomically (temp file + rename).

Config values may also come from a key=value file via --config; flags
given on the command line override the file.

Exit codes: 0 success, 2 usage or domain error, 3 property violation,
4 numerical guard.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, dynamics, flow, geometry, melnikov
from .errors import DomainError, NumericalGuard, PropertyViolation

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROPERTY = 3
EXIT_GUARD = 4


# ----------------------------------------------------------------------
# artifact writing
# ----------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_atomic(path: str, payload: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def write_json(path: str, payload: dict) -> None:
    _write_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def sidecar_path(out_csv: str) -> str:
    stem, _ = os.path.splitext(out_csv)
    return stem + ".json"


def _meta(args, **extra) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "config") and v is not None}
    import scipy
    return {
        "config": cfg,
        "versions": {"billiardflow": __version__,
                     "numpy": np.__version__, "scipy": scipy.__version__},
        **extra,
    }


def _caustic_json(ca: geometry.CausticData) -> dict:
    return {
        "lambda": ca.lam, "k": ca.modulus.k, "kc": ca.modulus.kc,
        "K": ca.modulus.K, "Kprime": ca.modulus.Kprime,
        "delta": ca.delta, "zeta": ca.zeta, "rho": ca.rho,
    }


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_caustic(args) -> int:
    table = geometry.make_table(args.a, args.b)
    if (args.m is None) == (args.lam is None):
        raise DomainError("give exactly one of --m/--n or --lambda")
    if args.m is not None:
        if args.n is None:
            raise DomainError("--m requires --n")
        res = geometry.Resonance(args.m, args.n)
        ca = geometry.resonant_caustic(table, res)
        n_pts = res.n
    else:
        ca = geometry.caustic_from_lambda(table, args.lam)
        n_pts = args.samples
    ts = args.t0 + ca.delta * np.arange(n_pts + 1)
    verts = geometry.point_t(table, ca, ts)
    tangency = geometry.tangency_residual(table, ca, ts[:-1])
    rows = [(_fmt(t), _fmt(x), _fmt(y)) for t, (x, y) in zip(ts, verts)]
    write_csv(args.out, ["t", "x", "y"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, caustic=_caustic_json(ca),
        residuals={"rho_minus_target": (None if args.m is None
                                        else ca.rho - args.m / args.n),
                   "max_tangency_residual": float(np.max(np.abs(tangency)))}))
    return EXIT_OK


def cmd_melnikov(args) -> int:
    table = geometry.make_table(args.a, args.b)
    if args.kind == "sub":
        if args.m is None or args.n is None:
            raise DomainError("subharmonic potential requires --m and --n")
        res = geometry.Resonance(args.m, args.n)
        prof = melnikov.subharmonic_profile(table, res, samples=args.samples)
        extra = {"caustic": _caustic_json(geometry.resonant_caustic(table, res))}
    else:
        prof = melnikov.homoclinic_profile(table, samples=args.samples, tol=args.tol)
        extra = {"truncation_tol": args.tol}
    rows = zip(prof.grid, prof.values, prof.derivatives)
    write_csv(args.out, ["argument", "value", "derivative"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, kind=prof.kind, period=prof.period,
        critical_points=[{"location": c.location,
                          "second_derivative": c.second_derivative}
                         for c in prof.critical_points],
        nondegeneracy_margin=prof.nondegeneracy_margin,
        nonconstancy_margin=prof.nonconstancy_margin, **extra))
    return EXIT_OK


def cmd_limit(args) -> int:
    table = geometry.make_table(args.a, args.b)
    if args.parity == "odd":
        seq = [geometry.Resonance(j, 2 * j + 1) for j in range(args.j_min, args.j_max + 1)]
    else:
        seq = [geometry.Resonance(2 * j - 1, 4 * j) for j in range(args.j_min, args.j_max + 1)]
    code = EXIT_OK
    try:
        gaps = melnikov.limit_gap(table, seq, interval=tuple(args.compact),
                                  samples=args.samples, swap_kappa=args.swap_kappa)
    except PropertyViolation as exc:
        gaps = exc.details
        code = EXIT_PROPERTY
    rows = [(r.m, r.n, g) for r, g in zip(seq, gaps)]
    write_csv(args.out, ["m", "n", "gap"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, gaps=list(map(float, gaps)), monotone_decreasing=(code == EXIT_OK)))
    return code


def cmd_flow_validate(args) -> int:
    table = geometry.make_table(args.a, args.b)
    ladder = args.eps_ladder
    if len(ladder) < 3:
        raise DomainError("need a ladder of at least 3 epsilon values")
    errors = [flow.validate_first_order(table, e, args.mesh) for e in ladder]
    ratios = [e1 / e2 for e1, e2 in zip(errors, errors[1:])]
    ok = all(1.4 <= r <= 2.6 for r in ratios)
    rows = [(e, err) for e, err in zip(ladder, errors)]
    write_csv(args.out, ["epsilon", "error_norm"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, error_norms=errors, halving_ratios=ratios, ratios_ok=ok))
    return EXIT_OK if ok else EXIT_PROPERTY


def _dyn_table(args):
    table = geometry.make_table(args.a, args.b)
    return table, flow.perturbed_table(table, args.eps)


def cmd_dynamics_orbit(args) -> int:
    table, boundary = _dyn_table(args)
    res = geometry.Resonance(args.m, args.n)
    ca = geometry.resonant_caustic(table, res)
    found = dynamics.birkhoff_sweep(boundary, res, n_seeds=args.seeds, caustic=ca)
    rows = []
    for idx, (phase, orb) in enumerate(found):
        for st, (x, y) in zip(orb.states, orb.points):
            rows.append((idx, phase, geometry.wrap_angle(st.phi), x, y))
    write_csv(args.out, ["orbit", "phase", "phi", "x", "y"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, caustic=_caustic_json(ca), n_orbits=len(found),
        orbits=[{"phase": ph, "length": o.length, "winding": o.winding,
                 "closure_residual": o.closure_residual} for ph, o in found]))
    return EXIT_OK


def cmd_dynamics_hyperbolic(args) -> int:
    table, boundary = _dyn_table(args)
    hyp = dynamics.hyperbolic_orbit(boundary)
    h = geometry.characteristic_exponent(table)
    rows = [(x, y) for x, y in hyp.points]
    write_csv(args.out, ["x", "y"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, multiplier=hyp.multiplier, eigenvalues=list(hyp.eigenvalues),
        jacobian=[list(map(float, r)) for r in hyp.jacobian],
        residuals={"det_minus_1": hyp.det - 1.0,
                   "multiplier_minus_exp_h": hyp.multiplier - h.eigenvalue}))
    return EXIT_OK


def cmd_dynamics_manifolds(args) -> int:
    _, boundary = _dyn_table(args)
    branches = ["unstable", "stable"] if args.branch == "both" else [args.branch]
    rows = []
    for br in branches:
        seg = dynamics.manifold_segment(boundary, br, n_points=args.n_points,
                                        n_iterates=args.n_iterates)
        for phi, p in seg.points:
            rows.append((br, geometry.wrap_angle(phi), p))
    write_csv(args.out, ["branch", "phi", "p"], rows)
    write_json(sidecar_path(args.out), _meta(args, branches=branches))
    return EXIT_OK


def cmd_dynamics_splitting(args) -> int:
    table = geometry.make_table(args.a, args.b)
    ladder = args.eps_ladder if args.eps_ladder else [args.eps]
    h = geometry.characteristic_exponent(table).h
    melnikov_sign = math.copysign(
        1.0, melnikov.homoclinic_potential(table, h / 2)
        - melnikov.homoclinic_potential(table, 0.0))
    rows = []
    ok = True
    for eps in ladder:
        sp = dynamics.splitting_measure(flow.perturbed_table(table, eps),
                                        n_points=args.n_points)
        rows.append((eps, sp.signed_gap, sp.signed_gap / eps,
                     sp.crossings[0], sp.crossings[1], int(sp.transversal)))
        ok = ok and sp.transversal and (
            math.copysign(1.0, sp.signed_gap) == melnikov_sign)
    if len(ladder) > 1:
        scaled = [r[2] for r in rows]
        ok = ok and max(scaled) / min(scaled) <= 1.2 and min(scaled) * max(scaled) > 0
    write_csv(args.out, ["epsilon", "gap", "gap_over_eps",
                         "crossing_0", "crossing_1", "transversal"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, melnikov_gap_sign=melnikov_sign, ladder_ok=ok))
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_dynamics_drift(args) -> int:
    table, boundary = _dyn_table(args)
    res = geometry.Resonance(args.m, args.n)
    ca = geometry.resonant_caustic(table, res)
    lams = dynamics.caustic_drift(boundary, ca, args.t0, args.bounces)
    base = flow.perturbed_table(table, 0.0)
    lams0 = dynamics.caustic_drift(base, ca, args.t0, args.bounces)
    drift = float(np.max(np.abs(lams - lams[0])))
    resid0 = float(np.max(np.abs(lams0 - lams0[0])))
    rows = [(i, v) for i, v in enumerate(lams)]
    write_csv(args.out, ["bounce", "lambda"], rows)
    write_json(sidecar_path(args.out), _meta(
        args, caustic=_caustic_json(ca), drift=drift,
        unperturbed_residual=resid0))
    return EXIT_OK if args.eps == 0.0 or drift >= 10.0 * resid0 else EXIT_PROPERTY


# ----------------------------------------------------------------------
# argument plumbing
# ----------------------------------------------------------------------

def _eps_ladder(text: str) -> list:
    return [float(x) for x in text.split(",") if x]


def _add_table_args(p):
    p.add_argument("--a", type=float, default=2.0, help="major semi-axis")
    p.add_argument("--b", type=float, default=1.0, help="minor semi-axis")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="billiardflow",
        description="numerical experiments on billiards in flow-deformed ellipses")
    ap.add_argument("--config", help="key=value file with defaults; flags override")
    ap.add_argument("--seed", type=int, default=0,
                    help="seed echoed into metadata for randomized sweeps")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("caustic", help="resonant or explicit confocal caustic")
    _add_table_args(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=64,
                   help="bounces to emit when --lambda is given")
    p.add_argument("--out", default="caustic.csv")
    p.set_defaults(func=cmd_caustic)

    p = sub.add_parser("melnikov", help="sampled Melnikov potential")
    _add_table_args(p)
    p.add_argument("--kind", choices=["sub", "hom"], required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default="melnikov.csv")
    p.set_defaults(func=cmd_melnikov)

    p = sub.add_parser("limit", help="subharmonic-to-homoclinic limit gaps")
    _add_table_args(p)
    p.add_argument("--parity", choices=["odd", "even"], required=True)
    p.add_argument("--j-min", type=int, default=2)
    p.add_argument("--j-max", type=int, required=True)
    p.add_argument("--compact", type=float, nargs=2, default=[-1.0, 1.0])
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--swap-kappa", action="store_true",
                   help="negative control: swap the parity weights")
    p.add_argument("--out", default="limit.csv")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("flow-validate", help="first-order flow model vs PDE")
    _add_table_args(p)
    p.add_argument("--eps-ladder", type=_eps_ladder, default=[4e-3, 2e-3, 1e-3])
    p.add_argument("--mesh", type=int, default=2048)
    p.add_argument("--out", default="flow_validate.csv")
    p.set_defaults(func=cmd_flow_validate)

    pd = sub.add_parser("dynamics", help="billiard-map experiments")
    dsub = pd.add_subparsers(dest="experiment", required=True)

    p = dsub.add_parser("orbit", help="Birkhoff periodic orbits by seed sweep")
    _add_table_args(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=32)
    p.add_argument("--out", default="orbits.csv")
    p.set_defaults(func=cmd_dynamics_orbit)

    p = dsub.add_parser("hyperbolic", help="axis orbit multiplier")
    _add_table_args(p)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--out", default="hyperbolic.csv")
    p.set_defaults(func=cmd_dynamics_hyperbolic)

    p = dsub.add_parser("manifolds", help="invariant manifold polylines")
    _add_table_args(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--branch", choices=["both", "unstable", "stable"], default="both")
    p.add_argument("--n-points", type=int, default=400)
    p.add_argument("--n-iterates", type=int, default=None)
    p.add_argument("--out", default="manifolds.csv")
    p.set_defaults(func=cmd_dynamics_manifolds)

    p = dsub.add_parser("splitting", help="separatrix splitting gap")
    _add_table_args(p)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--eps-ladder", type=_eps_ladder, default=None)
    p.add_argument("--n-points", type=int, default=600)
    p.add_argument("--out", default="splitting.csv")
    p.set_defaults(func=cmd_dynamics_splitting)

    p = dsub.add_parser("drift", help="caustic-parameter drift under perturbation")
    _add_table_args(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t0", type=float, default=0.3)
    p.add_argument("--bounces", type=int, default=300)
    p.add_argument("--out", default="drift.csv")
    p.set_defaults(func=cmd_dynamics_drift)

    return ap


def _apply_config_file(parser: argparse.ArgumentParser, argv: list) -> list:
    """Load key=value defaults from --config; command-line flags override."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    pairs = {}
    with open(known.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            pairs[key.strip().replace("-", "_")] = val.strip()
    # route values through each option's declared type
    def apply(p):
        for action in p._actions:
            if action.dest in pairs:
                raw = pairs[action.dest]
                p.set_defaults(**{action.dest: action.type(raw) if action.type else raw})
            if isinstance(action, argparse._SubParsersAction):
                for subp in action.choices.values():
                    apply(subp)
    apply(parser)
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except NumericalGuard as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
