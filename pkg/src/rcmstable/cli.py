"""Command-line front end.

Verbs: env, verify, simulate, exit-times, exact, stable, experiment.
Gridded numerics go to CSV, reports to JSON, paths to JSONL; figure PNGs
land next to report and grid outputs.  Flags --seed, --threads, --replicas
and --out fall back to RCM_SEED / RCM_THREADS / RCM_REPLICAS / RCM_OUT
environment variables, then to the config file.  Exit codes: 0 success,
1 assertion failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash, parse_config
from .lattice import ball, distance
from .seeds import mix
from .walker import ProcessSpec, sample_exit_times, simulate_path

_T_GRID_HELP = ("time grid: 'geometric:lo,hi,n', 'linear:lo,hi,n', "
                "or a comma list of values")


def _env_default(name, fallback=None):
    return os.environ.get("RCM_" + name.upper(), fallback)


def parse_t_grid(text: str) -> np.ndarray:
    kind, _, rest = text.partition(":")
    if kind in ("geometric", "linear"):
        parts = rest.split(",")
        if len(parts) != 3:
            raise ValueError("grid spec needs lo,hi,n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        fn = np.geomspace if kind == "geometric" else np.linspace
        return fn(lo, hi, n)
    return np.asarray([float(v) for v in text.split(",")])


def _load(args):
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = int(args.seed)
    if getattr(args, "threads", None) is not None:
        cfg.threads = int(args.threads)
    return cfg


def _process(cfg, raw_process=None) -> ProcessSpec:
    block = dict(raw_process or cfg.raw.get("process", {}))
    return ProcessSpec(
        alpha=cfg.alpha,
        variant=block.get("variant", "full"),
        delta=block.get("delta"),
        x0=tuple(block["x0"]) if "x0" in block else None,
        R=block.get("R"),
        n=int(block.get("n", 1)))


def _stamp(fh, cfg_hash: str):
    fh.write("# rcmstable %s config %s\n" % (__version__, cfg_hash))


def _out_path(args, default_name: str) -> Path:
    out = getattr(args, "out", None) or _env_default("out") or default_name
    p = Path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def cmd_env_dump(args) -> int:
    cfg = _load(args)
    fld = cfg.field()
    spec = cfg.lattice
    verts = sorted(ball(spec, spec.origin, args.radius))
    path = _out_path(args, "env.csv")
    with open(path, "w", newline="") as fh:
        _stamp(fh, cfg.hash)
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "w"])
        for i, x in enumerate(verts):
            for y in verts[i + 1:]:
                wr.writerow([" ".join(map(str, x)), " ".join(map(str, y)),
                             repr(fld.conductance(x, y))])
    print("wrote", path)
    return 0


def cmd_verify_exi(args) -> int:
    from .assumptions import verify_exi
    cfg = _load(args)
    opts = dict(cfg.raw.get("verify", {}))
    if "R_grid" in opts:
        opts["R_grid"] = tuple(int(v) for v in opts["R_grid"])
    rep = verify_exi(cfg.field(), cfg.alpha, seed=cfg.seed, **opts)
    payload = rep.to_dict()
    payload["config_hash"] = cfg.hash
    payload["version"] = __version__
    path = _out_path(args, "exi_report.json")
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("wrote", path)
    return 0 if rep.passed else 1


def cmd_simulate(args) -> int:
    cfg = _load(args)
    proc = _process(cfg)
    fld = cfg.field()
    block = cfg.raw.get("process", {})
    T = float(getattr(args, "horizon", None) or block.get("T", 1.0))
    x0 = tuple(block.get("x0", cfg.lattice.origin))
    n_rep = int(args.replicas or _env_default("replicas")
                or block.get("replicas", 1))
    path = _out_path(args, "paths.jsonl")
    with open(path, "w") as fh:
        for i in range(n_rep):
            ps = simulate_path(fld, proc, x0, T, mix(cfg.seed, i))
            rec = {"replica": i, "config_hash": cfg.hash,
                   "version": __version__, "x0": list(ps.x0),
                   "times": [float(t) for t in ps.times],
                   "vertices": [[int(c) for c in v] for v in ps.vertices],
                   "censored": ps.censored}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print("wrote", path)
    return 0


def cmd_exit_times(args) -> int:
    cfg = _load(args)
    proc = _process(cfg)
    fld = cfg.field()
    radii = [float(v) for v in args.r.split(",")]
    n_rep = int(args.replicas or _env_default("replicas")
                or cfg.raw.get("process", {}).get("replicas", 100))
    path = _out_path(args, "exits.csv")
    with open(path, "w", newline="") as fh:
        _stamp(fh, cfg.hash)
        wr = csv.writer(fh)
        wr.writerow(["r", "tau", "exit_distance", "censored"])
        for r in radii:
            res = sample_exit_times(fld, proc, cfg.lattice.origin, r, n_rep,
                                    mix(cfg.seed, int(r)))
            for tau, dist, cen in zip(res["tau"], res["exit_distance"],
                                      res["censored"]):
                wr.writerow([r, repr(float(tau)), repr(float(dist)),
                             bool(cen)])
    print("wrote", path)
    return 0


def _write_grid_csv(path, cfg_hash, header, rows):
    with open(path, "w", newline="") as fh:
        _stamp(fh, cfg_hash)
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow(row)


def cmd_exact(args) -> int:
    from . import exact
    from .figures import render_curve
    cfg = _load(args)
    fld = cfg.field()
    spec = cfg.lattice
    origin = spec.origin
    proc = cfg.raw.get("process", {})
    delta = args.delta if args.delta is not None else proc.get("delta")
    what = args.what

    if what == "heatkernel":
        ts = parse_t_grid(args.t_grid)
        verts = ball(spec, origin, args.window)
        G = exact.build_generator(fld, cfg.alpha, verts, mode="conservative",
                                  delta=delta)
        grid = exact.heat_kernel_grid(G, ts, origin)
        i0 = G.locate(origin)
        diag = [float(p[i0]) for p in grid["p"]]
        path = _out_path(args, "hk.csv")
        rows = [[repr(float(t)), " ".join(map(str, origin)), repr(pd),
                 repr(float(mass))]
                for t, pd, mass in zip(ts, diag, grid["row_mass"])]
        _write_grid_csv(path, cfg.hash, ["t", "x", "p", "row_mass"], rows)
        render_curve(path.with_suffix(".png"), ts, diag, "t", "p(t,x,x)",
                     loglog=True,
                     ref_slope=-spec.volume_dimension / cfg.alpha)
        print("wrote", path)
        return 0

    if what == "nash":
        ts = parse_t_grid(args.t_grid)
        verts = ball(spec, origin, args.window)
        G = exact.build_generator(fld, cfg.alpha, verts, mode="conservative",
                                  delta=delta)
        prof = exact.nash_profile(G, origin, ts)
        path = _out_path(args, "nash.csv")
        rows = [[repr(float(t)), repr(float(m)), repr(float(q)),
                 repr(float(k))]
                for t, m, q, k in zip(prof.times, prof.displacement,
                                      prof.entropy, prof.K)]
        _write_grid_csv(path, cfg.hash, ["t", "M", "Q", "K"], rows)
        render_curve(path.with_suffix(".png"), prof.times,
                     np.maximum(prof.displacement, 1e-300), "t", "M(t)",
                     loglog=True)
        print("wrote", path)
        return 0

    if what == "exitcdf":
        ts = parse_t_grid(args.t_grid)
        verts = ball(spec, origin, args.r)
        G = exact.build_generator(fld, cfg.alpha, verts, mode="dirichlet",
                                  delta=delta)
        F = exact.dirichlet_exit_cdf(G, origin, ts)
        path = _out_path(args, "exitcdf.csv")
        _write_grid_csv(path, cfg.hash, ["t", "cdf"],
                        [[repr(float(t)), repr(float(f))]
                         for t, f in zip(ts, F)])
        render_curve(path.with_suffix(".png"), ts, F, "t",
                     "P(exit by t)")
        print("wrote", path)
        return 0

    if what == "oscillation":
        res = exact.parabolic_oscillation(
            fld, cfg.alpha, origin, args.r,
            lambda v: float(v[0]), k_max=args.levels)
        path = _out_path(args, "oscillation.csv")
        rows = [[k, repr(float(rk)), repr(float(o)),
                 repr(float(res["eta"]))]
                for k, (rk, o) in enumerate(zip(res["radii"], res["osc"]))]
        _write_grid_csv(path, cfg.hash, ["level", "radius", "osc", "eta"],
                        rows)
        render_curve(path.with_suffix(".png"), range(len(res["osc"])),
                     np.maximum(res["osc"], 1e-300), "nesting level",
                     "oscillation")
        print("wrote", path)
        return 0
    raise ValueError("unknown exact sub-verb %r" % (what,))


def cmd_stable_table(args) -> int:
    from .figures import render_curve
    from .stable import Cdf1d, StableLaw, limit_scale_constant
    scale = args.scale
    if scale is None:
        scale = (limit_scale_constant(args.d, args.alpha)
                 if args.scale_from_kernel else 1.0)
    law = StableLaw(args.alpha, 1, scale)
    table = Cdf1d(law)
    xs = np.linspace(-args.x_max, args.x_max, args.n)
    vals = table(xs)
    path = _out_path(args, "cdf.csv")
    meta = {"alpha": args.alpha, "d": args.d, "scale": scale}
    _write_grid_csv(path, config_hash(meta), ["x", "cdf"],
                    [[repr(float(x)), repr(float(v))]
                     for x, v in zip(xs, vals)])
    render_curve(path.with_suffix(".png"), xs, vals, "x", "CDF")
    print("wrote", path)
    return 0


def cmd_experiment_run(args) -> int:
    from .config import load_toml
    from .experiments import run_suite, write_reports
    manifest = load_toml(args.manifest)
    if args.seed is not None:
        manifest.setdefault("suite", {})["seed"] = int(args.seed)
    reports = run_suite(manifest)
    out = getattr(args, "out", None) or _env_default("out") or "reports"
    paths = write_reports(reports, out, figures=not args.no_figures)
    for rep in reports:
        status = {True: "pass", False: "FAIL"}[rep.passed]
        print("%-28s %s  (%d metrics, %.1fs)"
              % (rep.experiment, status, len(rep.metrics), rep.runtime_s))
    print("wrote", paths["summary"])
    return 0 if all(r.passed for r in reports) else 1


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required
                   and _env_default("config") is None,
                   default=_env_default("config"))
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int,
                   default=_env_default("seed"))
    p.add_argument("--threads", type=int, default=_env_default("threads"),
                   help="parallelism cap (runs are serial today; the flag"
                        " is accepted for forward compatibility)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rcm",
        description="Random conductance models with stable-like jumps: "
                    "simulation, exact windowed computation, verification "
                    "campaigns.",
        epilog="Environment overrides: RCM_CONFIG, RCM_OUT, RCM_SEED, "
               "RCM_THREADS, RCM_REPLICAS.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("env", help="realized environment utilities")
    esub = p.add_subparsers(dest="what", required=True)
    pd = esub.add_parser("dump", help="edge table on a ball as CSV")
    _add_common(pd)
    pd.add_argument("--radius", type=float, default=8.0)
    pd.set_defaults(func=cmd_env_dump)

    p = sub.add_parser("verify", help="structural condition grids")
    vsub = p.add_subparsers(dest="what", required=True)
    pv = vsub.add_parser("exi", help="exit-regularity condition report")
    _add_common(pv)
    pv.set_defaults(func=cmd_verify_exi)

    p = sub.add_parser("simulate", help="sample paths to JSONL")
    _add_common(p)
    p.add_argument("--replicas", type=int, default=_env_default("replicas"))
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exit-times", help="exit observations to CSV")
    _add_common(p)
    p.add_argument("--r", default="8,16,32", help="comma list of radii")
    p.add_argument("--replicas", type=int, default=_env_default("replicas"))
    p.set_defaults(func=cmd_exit_times)

    p = sub.add_parser("exact", help="windowed exact computations")
    xsub = p.add_subparsers(dest="what", required=True)
    for what in ("heatkernel", "nash", "exitcdf", "oscillation"):
        px = xsub.add_parser(what)
        _add_common(px)
        px.add_argument("--delta", type=float, default=None,
                        help="truncate jumps beyond this range")
        if what in ("heatkernel", "nash"):
            px.add_argument("--window", type=float, default=512.0)
            px.add_argument("--t-grid", dest="t_grid",
                            default="geometric:0.5,64,16", help=_T_GRID_HELP)
        if what == "exitcdf":
            px.add_argument("--r", type=float, default=8.0)
            px.add_argument("--t-grid", dest="t_grid",
                            default="geometric:0.5,64,16", help=_T_GRID_HELP)
        if what == "oscillation":
            px.add_argument("--r", type=float, default=64.0)
            px.add_argument("--levels", type=int, default=3)
        px.set_defaults(func=cmd_exact, what=what)

    p = sub.add_parser("stable", help="reference stable-law tables")
    ssub = p.add_subparsers(dest="what", required=True)
    pt = ssub.add_parser("table", help="CDF grid to CSV")
    pt.add_argument("--alpha", type=float, required=True)
    pt.add_argument("--d", type=int, default=1)
    pt.add_argument("--scale", type=float, default=None)
    pt.add_argument("--scale-from-kernel", action="store_true",
                    help="use the jump-kernel constant c(d, alpha)")
    pt.add_argument("--x-max", dest="x_max", type=float, default=8.0)
    pt.add_argument("--n", type=int, default=201)
    pt.add_argument("--out", default=None)
    pt.set_defaults(func=cmd_stable_table)

    p = sub.add_parser("experiment", help="verification campaigns")
    rsub = p.add_subparsers(dest="what", required=True)
    pr = rsub.add_parser("run", help="execute a manifest")
    pr.add_argument("--manifest", required=True)
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=_env_default("seed"))
    pr.add_argument("--no-figures", action="store_true")
    pr.set_defaults(func=cmd_experiment_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print("error:", exc, file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print("failure:", exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
