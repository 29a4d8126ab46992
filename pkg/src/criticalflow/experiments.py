"""Viscosity-sweep experiments: data generation, runs, rate fits, outputs.

One incompressible reference is computed per seed from the divergence-free
part of the initial velocity; one compressible run per (nu, seed) pair.  The
convergence error E per run comes from the functionals module.  Rows are
persisted incrementally so a crash loses at most one run, and reruns skip
rows already present.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .compressible import CnsConfig, CompressibleSolver, continuation_monitor
from .dyadic import besov_norm, build_partition
from .fields import apply_multiplier, make_grid, transform, zero_field
from .functionals import check_stability_bound, compute_XYZWV, iter_perturbation
from .helmholtz import project_P, project_Q
from .incompressible import InsConfig, IncompressibleSolver, compute_M
from .states import CFLError, VacuumError

INIT_KINDS = ("taylor-green", "random-band", "random-band-plus-density")
A_SCALINGS = ("fixed", "inverse-nu", "inverse-sqrt-nu")

CSV_HEADER = "nu,seed,E,Xd,Yd,Zd,Wd,Vd,flag,wall_s"


class InitError(ValueError):
    """Unreachable initial-data request."""


@dataclass(frozen=True)
class InitSpec:
    """Initial data request.

    kind 'taylor-green' builds the vortex (scaled to v_amplitude in the
    critical norm) plus, when q_amplitude > 0, a random-band potential
    component scaled to q_amplitude; kind 'random-band' draws an unprojected
    band-limited velocity (both parts generally nonzero).  a_amplitude > 0
    adds a random-band density deviation with zero mean, scaled in the
    higher critical norm; its per-run scaling with nu is set by a_scaling.
    """

    kind: str = "taylor-green"
    v_amplitude: float = 1.0
    q_amplitude: float = 0.0
    a_amplitude: float = 0.0
    band: tuple = (0, 2)
    a_scaling: str = "fixed"

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise InitError(f"kind must be one of {INIT_KINDS}")
        if self.a_scaling not in A_SCALINGS:
            raise InitError(f"a_scaling must be one of {A_SCALINGS}")
        if self.kind == "random-band-plus-density" and not self.a_amplitude > 0:
            raise InitError("random-band-plus-density needs a_amplitude > 0")

    def a_target(self, nu):
        if self.a_scaling == "inverse-nu":
            return self.a_amplitude / nu
        if self.a_scaling == "inverse-sqrt-nu":
            return self.a_amplitude / math.sqrt(nu)
        return self.a_amplitude


def _band_multiplier(partition, band):
    j_lo, j_hi = band
    if j_lo > j_hi or j_lo < partition.j_min or j_hi > partition.j_max:
        raise InitError(
            f"band {band} outside partition range [{partition.j_min}, {partition.j_max}]"
        )
    rows = [j - partition.j_min for j in range(j_lo, j_hi + 1)]
    return partition.weights[rows].sum(axis=0).reshape(partition.grid.shape)


def _random_band(grid, partition, band, rng, components):
    white = rng.standard_normal((components,) + grid.shape)
    f = transform(grid, white)
    return f, _band_multiplier(partition, band)


def _scaled_to(partition, f, s, target):
    if target == 0.0:
        return zero_field(f.grid, f.components)
    measured = besov_norm(partition, f, s).value
    if measured == 0.0:
        raise InitError("unreachable target norm: band carries no content")
    return (target / measured) * f


def taylor_green(grid):
    """The decaying-vortex initial velocity on [0, length)^dim."""
    x = grid.points()
    if grid.dim == 2:
        comps = np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
    else:
        comps = np.stack(
            [
                np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
                -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
                np.zeros(grid.shape),
            ]
        )
    return transform(grid, comps)


def generate_initial_data(spec, grid, partition, seed):
    """Deterministic (a0, v0) from the init spec and seed.

    The velocity and density shapes are drawn from independent seeded
    streams, so rescaling one amplitude never changes the other field.
    """
    s_low = grid.dim / 2.0 - 1.0
    s_high = grid.dim / 2.0
    rng_v = np.random.default_rng([int(seed), 1])
    rng_a = np.random.default_rng([int(seed), 2])

    if spec.kind == "taylor-green":
        v0 = _scaled_to(partition, taylor_green(grid), s_low, spec.v_amplitude)
        if spec.q_amplitude > 0.0:
            raw, mult = _random_band(grid, partition, spec.band, rng_v, grid.dim)
            qpart = project_Q(apply_multiplier(raw, mult))
            v0 = v0 + _scaled_to(partition, qpart, s_low, spec.q_amplitude)
    else:
        raw, mult = _random_band(grid, partition, spec.band, rng_v, grid.dim)
        v0 = _scaled_to(partition, apply_multiplier(raw, mult), s_low, spec.v_amplitude)

    raw_a, mult_a = _random_band(grid, partition, spec.band, rng_a, 1)
    a0 = _scaled_to(partition, apply_multiplier(raw_a, mult_a), s_high, spec.a_amplitude)
    return a0, v0


@dataclass(frozen=True)
class SweepRow:
    nu: float
    seed: int
    E: float
    Xd: float
    Yd: float
    Zd: float
    Wd: float
    Vd: float
    flag: str
    wall_s: float
    extra: dict = field(default_factory=dict, compare=False)

    def csv_line(self):
        vals = [self.nu, self.seed, self.E, self.Xd, self.Yd, self.Zd, self.Wd, self.Vd]
        body = ",".join(_fmt(v) for v in vals)
        return f"{body},{self.flag},{self.wall_s:.3f}"


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    slope_ci: float
    per_seed: dict


@dataclass
class SweepResult:
    rows: list
    fit: object = None
    config: object = None


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 2
    n: int = 64
    length: float = 2.0 * math.pi
    mu: float = 1.0
    gamma: float = 2.0
    dt: float = 1e-3
    t_end: float = 1.0
    save_every: int = 10
    nu_values: tuple = (10.0, 100.0, 1000.0, 10000.0)
    seeds: tuple = (0, 1, 2)
    init: InitSpec = field(default_factory=InitSpec)
    output_dir: str = ""
    c_constant: float = 1.0
    noise_floor: float = 1e-8

    def __post_init__(self):
        nus = tuple(float(v) for v in self.nu_values)
        if any(b <= a for a, b in zip(nus, nus[1:])):
            raise ValueError("nu_values must be strictly increasing")
        if any(v < self.mu for v in nus):
            raise ValueError("every nu must satisfy nu >= mu")
        object.__setattr__(self, "nu_values", nus)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def grid(self):
        return make_grid(self.dim, self.n, self.length)


def _worker_count():
    env = os.environ.get("CRITICALFLOW_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _load_rows(path):
    """Rows already persisted in a sweep.csv (without in-memory reports)."""
    rows = []
    if not os.path.exists(path):
        return rows
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("nu,"):
            return rows
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 10:
                continue
            rows.append(
                SweepRow(
                    nu=float(parts[0]),
                    seed=int(parts[1]),
                    E=float(parts[2]),
                    Xd=float(parts[3]),
                    Yd=float(parts[4]),
                    Zd=float(parts[5]),
                    Wd=float(parts[6]),
                    Vd=float(parts[7]),
                    flag=parts[8],
                    wall_s=float(parts[9]),
                )
            )
    return rows


def _existing_rows(path):
    return {(row.nu, row.seed) for row in _load_rows(path)}


def _run_one(config, grid, partition, nu, seed, reference):
    """One compressible run against a shared reference; returns a SweepRow."""
    t0 = time.perf_counter()
    v0 = reference["v0"]
    a0_unit = reference["a0_unit"]
    spec = config.init
    target = spec.a_target(nu)
    s_high = grid.dim / 2.0
    if target > 0.0:
        a_norm = besov_norm(partition, a0_unit, s_high).value
        a0 = (target / a_norm) * a0_unit if a_norm > 0.0 else a0_unit
    else:
        a0 = zero_field(grid, 1)
    cns_cfg = CnsConfig(
        grid,
        config.mu,
        nu - 2.0 * config.mu,
        gamma=config.gamma,
        dt=config.dt,
        t_end=config.t_end,
        save_every=config.save_every,
    )
    traj = CompressibleSolver(cns_cfg).run(a0, v0)
    pert = iter_perturbation(traj, reference["traj"])
    report = compute_XYZWV(pert, partition, nu, mu=config.mu)
    monitor = continuation_monitor(traj, partition)
    flag = ""
    if monitor.flagged:
        flag = "monitor"
    elif report.E < config.noise_floor:
        flag = "degenerate"
    s_low = grid.dim / 2.0 - 1.0
    bound = check_stability_bound(
        report,
        besov_norm(partition, a0, s_low).value,
        besov_norm(partition, a0, s_high).value,
        besov_norm(partition, project_Q(v0), s_low).value,
        reference["M"],
        C=config.c_constant,
    )
    wall = time.perf_counter() - t0
    return SweepRow(
        nu=nu,
        seed=seed,
        E=report.E,
        Xd=report.Xd,
        Yd=report.Yd,
        Zd=report.Zd,
        Wd=report.Wd,
        Vd=report.Vd,
        flag=flag,
        wall_s=wall,
        extra={"report": report, "bound": bound, "monitor": monitor},
    )


def run_nu_sweep(config):
    """Run the sweep; returns a SweepResult with one row per (nu, seed)."""
    grid = config.grid()
    partition = build_partition(grid)
    out_dir = config.output_dir
    csv_path = os.path.join(out_dir, "sweep.csv") if out_dir else None
    prior = []
    if csv_path:
        os.makedirs(out_dir, exist_ok=True)
        prior = _load_rows(csv_path)
        if not os.path.exists(csv_path):
            with open(csv_path, "w") as fh:
                fh.write(CSV_HEADER + "\n")
    done = {(row.nu, row.seed) for row in prior}

    references = {}
    for seed in config.seeds:
        a0_unit, v0 = generate_initial_data(
            replace(config.init, a_amplitude=1.0 if config.init.a_amplitude > 0 else 0.0),
            grid,
            partition,
            seed,
        )
        V0 = project_P(v0)
        # the reference shares the compressible runs' two-stage IMEX scheme,
        # keeping time-discretization error common mode in v - V
        ins_cfg = InsConfig(
            grid,
            config.mu,
            config.dt,
            config.t_end,
            save_every=config.save_every,
            integrator="imex-ars2",
        )
        ref_traj = IncompressibleSolver(ins_cfg).run(V0)
        references[seed] = {
            "traj": ref_traj,
            "M": compute_M(ref_traj, partition),
            "v0": v0,
            "a0_unit": a0_unit,
        }

    jobs = [
        (seed, nu)
        for seed in config.seeds
        for nu in config.nu_values
        if (float(nu), int(seed)) not in done
    ]

    rows = []
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        futures = {
            pool.submit(
                _run_one, config, grid, partition, nu, seed, references[seed]
            ): (seed, nu)
            for seed, nu in jobs
        }
        for fut, (seed, nu) in futures.items():  # submission order: CSV stays deterministic
            try:
                row = fut.result()
            except (CFLError, VacuumError) as exc:
                row = SweepRow(
                    nu=nu,
                    seed=seed,
                    E=math.nan,
                    Xd=math.nan,
                    Yd=math.nan,
                    Zd=math.nan,
                    Wd=math.nan,
                    Vd=math.nan,
                    flag=f"error:{type(exc).__name__}",
                    wall_s=0.0,
                )
            rows.append(row)
            if csv_path:
                with open(csv_path, "a") as fh:
                    fh.write(row.csv_line() + "\n")

    # canonical order (seed-major, nu-minor) so resumed sweeps rewrite the
    # same file a fresh run would produce
    all_rows = prior + rows
    order = {
        (float(nu), int(seed)): (i, j)
        for i, seed in enumerate(config.seeds)
        for j, nu in enumerate(config.nu_values)
    }
    all_rows.sort(key=lambda r: order.get((r.nu, r.seed), (len(order), 0)))
    result = SweepResult(rows=rows, config=config)
    complete = SweepResult(rows=all_rows, config=config)
    if len([r for r in all_rows if not r.flag]) >= 2:
        try:
            fit = fit_rate(complete)
        except ValueError:
            fit = None
        result.fit = fit
        complete.fit = fit
    if out_dir:
        emit_outputs(complete, out_dir)
    return result


def fit_rate(result, noise_floor=None):
    """Least-squares slope of log E against log nu, per seed then averaged."""
    floor = noise_floor
    if floor is None:
        floor = result.config.noise_floor if result.config else 1e-8
    per_seed = {}
    for row in result.rows:
        if row.flag or row.E <= floor:
            continue
        per_seed.setdefault(row.seed, []).append((row.nu, row.E))
    slopes, intercepts, r2s = [], [], []
    detail = {}
    for seed, pts in sorted(per_seed.items()):
        if len(pts) < 2:
            continue
        x = np.log(np.array([p[0] for p in pts]))
        y = np.log(np.array([p[1] for p in pts]))
        slope, intercept = np.polyfit(x, y, 1)
        yhat = slope * x + intercept
        ss_res = float(np.sum((y - yhat) ** 2))
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        slopes.append(slope)
        intercepts.append(intercept)
        r2s.append(r2)
        detail[seed] = {"slope": float(slope), "intercept": float(intercept), "r2": r2}
    if not slopes:
        raise ValueError("degenerate data: no seed has two unflagged rows above the noise floor")
    slopes = np.array(slopes)
    ci = 1.96 * float(np.std(slopes)) / math.sqrt(len(slopes)) if len(slopes) > 1 else 0.0
    return FitResult(
        slope=float(np.mean(slopes)),
        intercept=float(np.mean(intercepts)),
        r2=float(np.mean(r2s)),
        slope_ci=ci,
        per_seed=detail,
    )


_PLOT_TEMPLATE = """# log-log convergence of E against the volume viscosity
set terminal pngcairo size 900,650
set output 'sweep.png'
set datafile separator ','
set logscale xy
set xlabel 'nu'
set ylabel 'E(nu)'
set key left bottom
set grid
plot 'sweep.csv' skip 1 using 1:3 with points pt 7 ps 1.4 title 'measured E', \\
     {ref:.6e} * x**(-0.5) with lines dt 2 lw 2 title 'slope -1/2 reference'
"""


def emit_outputs(result, out_dir):
    """Write sweep.csv, fit.json (when fitted), and the gnuplot script."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in result.rows:
            fh.write(row.csv_line() + "\n")
    if result.fit is not None:
        fit = result.fit
        payload = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r2": fit.r2,
            "slope_ci": fit.slope_ci,
            "per_seed": fit.per_seed,
        }
        with open(os.path.join(out_dir, "fit.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    rows = [r for r in result.rows if not r.flag and r.E > 0]
    if rows:
        # anchor the reference line at the geometric center of the data
        ref = math.exp(
            float(np.mean([math.log(r.E) + 0.5 * math.log(r.nu) for r in rows]))
        )
    else:
        ref = 1.0
    with open(os.path.join(out_dir, "plot_sweep.gp"), "w") as fh:
        fh.write(_PLOT_TEMPLATE.format(ref=ref))
