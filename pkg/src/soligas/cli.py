"""Command line interface: ``soligas <command> ...``.

Exit codes: 0 success, 1 a verification failed, 2 bad arguments or input,
3 a numerical solver failed.  Every written file gets a sibling
``*.manifest.json`` recording the command, arguments and versions.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

EXIT_OK, EXIT_VERIFY, EXIT_ARGS, EXIT_SOLVER = 0, 1, 2, 3


def _apply_thread_cap() -> int | None:
    raw = os.environ.get("SOLIGAS_THREADS")
    if not raw:
        return None
    try:
        n = max(1, int(raw))
    except ValueError:
        return None
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


def _versions() -> dict:
    import numpy
    import scipy

    from importlib import metadata

    out = {"python": platform.python_version(), "numpy": numpy.__version__, "scipy": scipy.__version__}
    for dist in ("artifact", "python-flint"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


def write_manifest(path: Path, args: argparse.Namespace, extra: dict | None = None) -> Path:
    manifest = {
        "command": args.command,
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "threads": os.environ.get("SOLIGAS_THREADS"),
        "versions": _versions(),
        "created": datetime.now(timezone.utc).isoformat(),
        "output": str(path),
        "outputs": [str(path)],
    }
    if extra:
        manifest.update(extra)
    mpath = path.with_name(path.name + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return mpath


def _write_json(data, out: str | None, args) -> None:
    text = json.dumps(data, indent=2)
    if out is None:
        print(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")
    write_manifest(path, args)


def _write_csv(path: str | Path, header: list[str], rows, args) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    write_manifest(path, args)
    return path


def _load_config(path: str):
    from .core import SolitonConfig

    return SolitonConfig.load(path)


# --- commands ---------------------------------------------------------------


def cmd_field(args) -> int:
    import numpy as np

    from .tau import field

    cfg = _load_config(args.config)
    x = np.linspace(args.xmin, args.xmax, args.points)
    order = max(args.order, 2)
    jet = field(cfg, x, order=order, representation=args.representation)
    names = ["u", "u_x", "u_xx", "u_xxx", "u_xxxx"][: order + 1]
    header = ["x"] + names + ["log_tau", "representation"]
    rows = (
        [float(x[m])] + [float(jet.derivs[k, m]) for k in range(order + 1)] + [float(jet.log_tau[m]), jet.representation]
        for m in range(len(x))
    )
    _write_csv(args.out, header, rows, args)
    return EXIT_OK


def cmd_charges(args) -> int:
    from .observables import exact_charge, integrate_density

    cfg = _load_config(args.config)
    out = {"interval": args.interval, "charges": []}
    for k in args.k:
        res = integrate_density(cfg, k, tuple(args.interval) if args.interval else None)
        item = {"k": k, "value": res.value, "quadrature_error": res.error, "interval": list(res.interval)}
        if not args.interval:
            item["exact"] = exact_charge(cfg, k)
        out["charges"].append(item)
    _write_json(out, args.out, args)
    return EXIT_OK


def cmd_positions(args) -> int:
    from .positions import PositionPath

    cfg = _load_config(args.config)
    path = PositionPath(cfg, args.eps)
    out = {"x_star": args.xstar, "eps": args.eps}
    if args.xstar is not None:
        X = path.positions(args.xstar)
        out["X"] = X.tolist()
        out["d"] = (X - args.xstar).tolist()
    if args.extremal or args.xstar is None:
        ext = path.extremal
        out.update({"X_minus": ext.X_minus.tolist(), "X_plus": ext.X_plus.tolist(), "core": list(ext.core)})
    _write_json(out, args.out, args)
    return EXIT_OK


def cmd_effective(args) -> int:
    import numpy as np

    from .effective import bethe_residual, position_trajectory, scan_effective
    from .positions import PositionPath

    cfg = _load_config(args.config)
    path = PositionPath(cfg, args.eps, margin=3.0 * (args.deltaX + args.eps))
    eff = scan_effective(cfg, args.deltaX, args.eps, path=path)
    out = eff.to_dict()
    out["bethe"] = bethe_residual(cfg, eff).to_dict()
    _write_json(out, args.out, args)
    traj = args.trajectory or (str(Path(args.out).with_suffix("")) + "_trajectory.csv" if args.out else None)
    if traj:
        grid = np.linspace(path.x_start - 1.0, path.x_end + 1.0, args.samples)
        table = position_trajectory(path, grid)
        _write_csv(traj, ["x_star"] + [f"X{i}" for i in range(cfg.n)], table.tolist(), args)
    return EXIT_OK


def cmd_project(args) -> int:
    from .projections import fluid_cell_projection, local_projection

    cfg = _load_config(args.config)
    if args.cell:
        proj = fluid_cell_projection(cfg, tuple(args.cell), args.deltaX, args.eps)
    else:
        proj = local_projection(cfg, args.xstar, args.width, args.eps)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        proj.config.save(args.out)
        write_manifest(Path(args.out), args, {"kept": proj.kept.tolist(), "plus": proj.plus.tolist(), "minus": proj.minus.tolist()})
    else:
        print(json.dumps(proj.to_dict(), indent=2))
    return EXIT_OK


def cmd_gas(args) -> int:
    from .gas import generate_ultra_dilute, generate_uniform

    if args.kind == "ultra-dilute":
        cfg = generate_ultra_dilute(args.n, args.R, args.eps_exp, args.chi_star, args.C)
    else:
        cfg = generate_uniform(args.n, args.ell, tuple(args.chi_range), args.seed)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        cfg.save(args.out)
        write_manifest(Path(args.out), args)
    else:
        print(cfg.to_json())
    return EXIT_OK


def cmd_check(args) -> int:
    from .gas import AssumptionParams, check_assumptions

    cfg = _load_config(args.config)
    params = AssumptionParams(**json.loads(args.params)) if args.params else AssumptionParams()
    rep = check_assumptions(cfg, params, args.eps)
    _write_json(rep.to_dict(), args.report, args)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_ghd(args) -> int:
    import numpy as np

    from .hydro import DensityField, ghd_evolve

    rows = np.loadtxt(args.rho0, delimiter=",", skiprows=1, ndmin=2)
    state = DensityField.from_long(rows)
    if len(state.chi) > 1 and args.chi_nodes and args.chi_nodes != len(state.chi):
        nodes = np.linspace(state.chi[0], state.chi[-1], args.chi_nodes)
        rho = np.array([np.interp(nodes, state.chi, state.rho[:, m]) for m in range(len(state.x))]).T
        state = DensityField(nodes, state.x, rho)
    final = ghd_evolve(state, args.t_end, args.cfl, args.boundary)
    _write_csv(args.out, ["chi", "x", "rho"], final.to_long().tolist(), args)
    return EXIT_OK


def cmd_micro(args) -> int:
    from .hydro import microscopic_trajectories

    cfg = _load_config(args.config)
    traj = microscopic_trajectories(cfg, args.times, args.deltaX, args.eps)
    rows = [[float(t), i, float(traj[m, i])] for m, t in enumerate(args.times) for i in range(cfg.n)]
    _write_csv(args.out, ["t", "i", "x_eff"], rows, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite, write_reports

    cfg = _load_config(args.config) if args.config else None
    reports = run_suite(args.suite, cfg, args.deltaX)
    summary = write_reports(reports, args.out)
    outputs = [str(summary)] + [str(Path(args.out) / f"{r.name}.json") for r in reports]
    write_manifest(summary, args, {"passed": {r.name: r.passed for r in reports}, "outputs": outputs})
    for r in reports:
        print(f"{r.name}: {'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def cmd_plot(args) -> int:
    from .plotting import plot_csv

    made = [plot_csv(p, args.out, args.kind) for p in args.inputs]
    for m in made:
        print(f"{m['gnuplot']} {m['png']}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _eps_arg(p):
    p.add_argument("--eps", type=float, default=1e-3, help="regularization width of the sign function")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soligas", description="KdV soliton gas toolkit")
    parser.add_argument("--seed", type=int, default=0, help="seed for random generators")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="field and derivatives on a grid (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--order", type=int, default=0, choices=range(0, 5))
    p.add_argument("--representation", default="auto", choices=["auto", "expansion", "determinant"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("charges", help="integrated conserved densities (JSON)")
    p.add_argument("--config", required=True)
    p.add_argument("--k", type=int, nargs="+", default=[0, 1, 2], choices=[0, 1, 2])
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_charges)

    p = sub.add_parser("positions", help="positions seen from an observer (JSON)")
    p.add_argument("--config", required=True)
    p.add_argument("--xstar", type=float)
    p.add_argument("--extremal", action="store_true")
    _eps_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_positions)

    p = sub.add_parser("effective", help="effective positions (JSON) and position trajectory (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--deltaX", type=float, required=True)
    _eps_arg(p)
    p.add_argument("--out")
    p.add_argument("--trajectory", help="CSV path for X_i(x_star)")
    p.add_argument("--samples", type=int, default=2001)
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("project", help="fluid-cell or local projection (JSON config)")
    p.add_argument("--config", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cell", type=float, nargs=2, metavar=("A", "B"))
    g.add_argument("--xstar", type=float)
    p.add_argument("--deltaX", type=float, default=1.0)
    p.add_argument("--width", type=float, default=10.0, help="kept width for local projection")
    _eps_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gas", help="generate a configuration (JSON)")
    p.add_argument("--kind", choices=["ultra-dilute", "uniform"], default="ultra-dilute")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--eps", dest="eps_exp", type=float, default=0.1, help="dilution exponent")
    p.add_argument("--chi-star", dest="chi_star", type=float, default=1.0)
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--ell", type=float, default=100.0, help="box length for uniform gases")
    p.add_argument("--chi-range", dest="chi_range", type=float, nargs=2, default=[0.5, 3.0], metavar=("LO", "HI"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_gas)

    p = sub.add_parser("check", help="check gas hypotheses (JSON report)")
    p.add_argument("--config", required=True)
    p.add_argument("--params", help="JSON object overriding hypothesis constants")
    _eps_arg(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ghd", help="evolve a density with the hydrodynamic equation (CSV)")
    p.add_argument("--rho0", required=True, help="CSV with columns chi,x,rho")
    p.add_argument("--chi-nodes", dest="chi_nodes", type=int, default=64)
    p.add_argument("--t-end", dest="t_end", type=float, required=True)
    p.add_argument("--cfl", type=float, default=0.9)
    p.add_argument("--boundary", choices=["periodic", "outflow"], default="periodic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ghd)

    p = sub.add_parser("micro", help="effective-position trajectories (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--times", type=float, nargs="+", required=True)
    p.add_argument("--deltaX", type=float, required=True)
    _eps_arg(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_micro)

    p = sub.add_parser("verify", help="run verification checks")
    p.add_argument("--suite", default="all")
    p.add_argument("--config")
    p.add_argument("--deltaX", type=float)
    p.add_argument("--out", default="reports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="gnuplot scripts and PNG figures for CSV outputs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--kind", choices=["field", "trajectories", "density", "positions"])
    p.add_argument("--out", help="output directory (default: next to each CSV)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import CFLError, InvalidConfigError, RepresentationError, SolverError, UnsupportedOrderError

    try:
        return args.func(args)
    except (SolverError, RepresentationError, CFLError) as exc:
        print(f"soligas: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidConfigError, UnsupportedOrderError, ValueError, FileNotFoundError, IndexError) as exc:
        print(f"soligas: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
