"""Command-line interface.

Subcommands:
  solve    integrate one system (ins or cns) from a TOML config, writing a
           run directory with manifest and snapshot files
  analyze  dyadic-block breakdown of a field snapshot, or (with
           --functionals) the full functional report for a cns/ins run pair
  sweep    the viscosity sweep experiment driven by a TOML config
"""

import argparse
import json
import math
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .compressible import CnsConfig, CompressibleSolver
from .dyadic import besov_norm, build_partition
from .experiments import (
    ExperimentConfig,
    InitSpec,
    generate_initial_data,
    run_nu_sweep,
)
from .fields import make_grid
from .functionals import (
    check_smallness,
    check_stability_bound,
    compute_XYZWV,
    perturbation_fields,
)
from .helmholtz import project_P, project_Q
from .incompressible import InsConfig, IncompressibleSolver, compute_M
from .runio import load_run, save_run
from .snapshot import load_field


def _load_toml(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _grid_from(cfg):
    g = cfg.get("grid", {})
    return make_grid(g.get("dim", 2), g.get("n", 64), g.get("length", 2.0 * math.pi))


def _init_spec(cfg):
    init = cfg.get("init", {})
    return InitSpec(
        kind=init.get("kind", "taylor-green"),
        v_amplitude=init.get("v_amplitude", 1.0),
        q_amplitude=init.get("q_amplitude", 0.0),
        a_amplitude=init.get("a_amplitude", 0.0),
        band=tuple(init.get("band", (0, 2))),
        a_scaling=init.get("a_scaling", "fixed"),
    ), int(init.get("seed", 0))


def cmd_solve(args):
    cfg = _load_toml(args.config)
    grid = _grid_from(cfg)
    partition = build_partition(grid)
    spec, seed = _init_spec(cfg)
    a0, v0 = generate_initial_data(spec, grid, partition, seed)
    t0 = time.perf_counter()
    if args.system == "ins":
        ins_cfg = InsConfig(
            grid,
            cfg.get("mu", 1.0),
            cfg.get("dt", 1e-3),
            cfg.get("t_end", 1.0),
            save_every=cfg.get("save_every", 1),
            integrator=cfg.get("integrator", "if-rk4"),
        )
        traj = IncompressibleSolver(ins_cfg).run(project_P(v0))
    else:
        cns_cfg = CnsConfig(
            grid,
            cfg.get("mu", 1.0),
            cfg.get("lambda", 8.0),
            gamma=cfg.get("gamma", 2.0),
            dt=cfg.get("dt", 1e-3),
            t_end=cfg.get("t_end", 1.0),
            save_every=cfg.get("save_every", 1),
            acoustic_implicit=cfg.get("acoustic_implicit", True),
        )
        traj = CompressibleSolver(cns_cfg).run(a0, v0)
    wall = time.perf_counter() - t0
    save_run(traj, args.out, args.system, cfg, wall)
    print(f"wrote {len(traj)} snapshots to {args.out} ({wall:.2f}s)")
    return 0


def cmd_analyze(args):
    if args.functionals:
        return _analyze_functionals(args)
    field, _t = load_field(args.paths[0])
    partition = build_partition(field.grid)
    s = args.s if args.s is not None else field.grid.dim / 2.0 - 1.0
    norm = besov_norm(partition, field, s)
    lines = ["j,block_norm,weight_s"]
    for j in partition.js:
        weighted = norm.per_block[j]
        raw = weighted / 2.0 ** (j * s)
        lines.append(f"{j},{raw:.17g},{weighted:.17g}")
    lines.append(f"besov_norm,{s:g},{norm.value:.17g}")
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _analyze_functionals(args):
    cns_dir, ins_dir = args.paths
    cns_traj, cns_manifest = load_run(cns_dir)
    ins_traj, _ = load_run(ins_dir)
    grid = cns_traj.states[0].a.grid
    partition = build_partition(grid)
    params = cns_traj.states[0].params
    nu = params.nu
    mu = params.mu
    pert = perturbation_fields(cns_traj, ins_traj)
    report = compute_XYZWV(pert, partition, nu, mu=mu)
    out_dir = args.out or cns_dir
    os.makedirs(out_dir, exist_ok=True)
    prof = report.profiles
    with open(os.path.join(out_dir, "functionals.csv"), "w") as fh:
        fh.write("T,Xd,Yd,Zd,Wd,Vd,E\n")
        for i, t in enumerate(prof["t"]):
            vals = [prof[k][i] for k in ("Xd", "Yd", "Zd", "Wd", "Vd", "E")]
            fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in vals) + "\n")

    s_low = grid.dim / 2.0 - 1.0
    s_high = grid.dim / 2.0
    a0 = cns_traj.states[0].a
    qv0 = project_Q(cns_traj.states[0].v)
    M = compute_M(ins_traj, partition)
    a0_low = besov_norm(partition, a0, s_low).value
    a0_high = besov_norm(partition, a0, s_high).value
    qu0 = besov_norm(partition, qv0, s_low).value
    C = args.c_constant
    small = check_smallness(a0_low, a0_high, qu0, M, mu, nu, C=C)
    bound = check_stability_bound(report, a0_low, a0_high, qu0, M, C=C)
    conditions = {
        "nu": nu,
        "mu": mu,
        "M": M,
        "C": C,
        "smallness": {
            "lhs": small.lhs,
            "rhs": small.rhs,
            "ratio": small.ratio,
            "largest_admissible_C": small.c_boundary,
        },
        "stability_bound": {
            "lhs": bound.lhs,
            "rhs": bound.rhs,
            "empirical_C": bound.empirical_C,
        },
        "functionals": {
            "Xd": report.Xd,
            "Yd": report.Yd,
            "Zd": report.Zd,
            "Wd": report.Wd,
            "Vd": report.Vd,
            "E": report.E,
        },
    }
    with open(os.path.join(out_dir, "conditions.json"), "w") as fh:
        json.dump(conditions, fh, indent=2, sort_keys=True)
    print(f"wrote functionals.csv and conditions.json to {out_dir}")
    return 0


def cmd_sweep(args):
    cfg = _load_toml(args.config)
    init = cfg.get("init", {})
    spec = InitSpec(
        kind=init.get("kind", "taylor-green"),
        v_amplitude=init.get("v_amplitude", 1.0),
        q_amplitude=init.get("q_amplitude", 0.0),
        a_amplitude=init.get("a_amplitude", 0.0),
        band=tuple(init.get("band", (0, 2))),
        a_scaling=init.get("a_scaling", "fixed"),
    )
    g = cfg.get("grid", {})
    config = ExperimentConfig(
        dim=g.get("dim", 2),
        n=g.get("n", 64),
        length=g.get("length", 2.0 * math.pi),
        mu=cfg.get("mu", 1.0),
        gamma=cfg.get("gamma", 2.0),
        dt=cfg.get("dt", 1e-3),
        t_end=cfg.get("t_end", 1.0),
        save_every=cfg.get("save_every", 10),
        nu_values=tuple(cfg.get("nu_values", (10.0, 100.0, 1000.0, 10000.0))),
        seeds=tuple(cfg.get("seeds", (0, 1, 2))),
        init=spec,
        output_dir=cfg.get("output_dir", args.out or "sweep_out"),
        c_constant=cfg.get("c_constant", 1.0),
    )
    expected = len(config.nu_values) * len(config.seeds)
    result = run_nu_sweep(config)
    from .experiments import _existing_rows  # count includes resumed rows

    completed = len(_existing_rows(os.path.join(config.output_dir, "sweep.csv")))
    if result.fit is not None:
        print(
            f"fitted slope {result.fit.slope:+.3f} "
            f"(r2 {result.fit.r2:.3f}, ci {result.fit.slope_ci:.3f})"
        )
    print(f"{completed}/{expected} rows in {config.output_dir}/sweep.csv")
    return 0 if completed == expected else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="criticalflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="integrate one system from a TOML config")
    p_solve.add_argument("--system", choices=("ins", "cns"), required=True)
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True)
    p_solve.set_defaults(func=cmd_solve)

    p_an = sub.add_parser("analyze", help="dyadic block analysis of snapshots or run pairs")
    p_an.add_argument("paths", nargs="+", help="snapshot file, or cns and ins run dirs")
    p_an.add_argument("--functionals", action="store_true")
    p_an.add_argument("--s", type=float, default=None, help="regularity exponent")
    p_an.add_argument("--out", default=None)
    p_an.add_argument("--c-constant", type=float, default=1.0)
    p_an.set_defaults(func=cmd_analyze)

    p_sweep = sub.add_parser("sweep", help="viscosity sweep experiment")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    if args.command == "analyze":
        if args.functionals and len(args.paths) != 2:
            parser.error("--functionals needs a cns run dir and an ins run dir")
        if not args.functionals and len(args.paths) != 1:
            parser.error("analyze needs exactly one snapshot file")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
