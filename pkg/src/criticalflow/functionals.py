"""A-priori functionals of a compressible/incompressible run pair.

Given a compressible trajectory (a, v) and an incompressible reference V on
matching time stamps, the perturbation is u = v - V, split into its
potential part Qu and divergence-free part Pu.  The headline quantities are

    X(T)  sup-in-time critical norms of (Qu, a, nu grad a)
    Y(T)  time-integrated norms of (Qu_t, nu grad^2 Qu, nu grad^2 a_low,
          grad a_high)
    Z(T)  sup-in-time norm of Pu
    W(T)  time-integrated norms of (Pu_t, grad^2 Pu)
    V(T)  same shape for the reference solution itself
    E(T)  the convergence error: Z plus W (with the mu weight) plus the
          sup-in-time higher norm of a

with joint norms of several fields read as the sum of the individual norms.
Time derivatives always come from the right-hand sides, never from finite
differences of snapshots; L1-in-time is the trapezoid rule over snapshots,
sup-in-time the max over snapshots.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .compressible import cns_rhs
from .dyadic import besov_norm, dyadic_block, split_low_high
from .fields import SpectralField, apply_multiplier
from .helmholtz import project_P, project_Q
from .incompressible import ins_rhs, smallest_growth_constant


@dataclass(frozen=True)
class PerturbationSnapshot:
    t: float
    a: SpectralField
    u: SpectralField
    qu: SpectralField
    pu: SpectralField
    u_t: SpectralField
    qu_t: SpectralField
    pu_t: SpectralField
    V: SpectralField
    V_t: SpectralField


def iter_perturbation(cns_traj, ins_traj):
    """Lazily yield perturbation snapshots u = v - V with projections and u_t.

    Trajectories must share grids and time stamps; u_t is the difference of
    the two right-hand sides.
    """
    if len(cns_traj) != len(ins_traj):
        raise ValueError("trajectory lengths differ")
    for cs, vs in zip(cns_traj.states, ins_traj.states):
        if abs(cs.t - vs.t) > 1e-10 * max(1.0, abs(cs.t)):
            raise ValueError(f"time stamps differ: {cs.t} vs {vs.t}")
        if cs.v.grid != vs.V.grid:
            raise ValueError("grids differ between runs")
        u = cs.v - vs.V
        _, dv = cns_rhs(cs)
        V_t = ins_rhs(vs)
        u_t = dv - V_t
        yield PerturbationSnapshot(
            t=cs.t,
            a=cs.a,
            u=u,
            qu=project_Q(u),
            pu=project_P(u),
            u_t=u_t,
            qu_t=project_Q(u_t),
            pu_t=project_P(u_t),
            V=vs.V,
            V_t=V_t,
        )


def perturbation_fields(cns_traj, ins_traj):
    """Materialized list of perturbation snapshots (see iter_perturbation)."""
    return list(iter_perturbation(cns_traj, ins_traj))


@dataclass
class FunctionalReport:
    nu: float
    mu: float
    s_low: float
    s_high: float
    Xd: float
    Yd: float
    Zd: float
    Wd: float
    Vd: float
    E: float
    profiles: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)
    lj_blocks: dict = field(default_factory=dict)


def _prefix_max(series):
    return np.maximum.accumulate(series)


def _prefix_trapezoid(times, series):
    out = np.zeros_like(series)
    if len(times) > 1:
        out[1:] = np.cumsum(np.diff(times) * 0.5 * (series[1:] + series[:-1]))
    return out


def compute_XYZWV(pert, partition, nu, mu=1.0):
    """Evaluate the functionals over perturbation snapshots.

    `pert` may be a list or any iterable (snapshots are consumed one at a
    time, so dense trajectories need not be materialized).
    """
    grid = partition.grid
    d = grid.dim
    s = d / 2.0 - 1.0
    sh = d / 2.0
    km = grid.kmod
    k2 = grid.k2

    def bn(f, order):
        return besov_norm(partition, f, order).value

    series = {
        name: []
        for name in (
            "t",
            "qu",
            "a_low_norm",
            "grad_a",
            "qu_t",
            "hess_qu",
            "hess_a_low",
            "grad_a_high",
            "pu",
            "pu_t",
            "hess_pu",
            "v_ref",
            "v_ref_t",
            "hess_v",
            "a_high_order",
        )
    }
    final = None
    for p in pert:
        final = p
        series["t"].append(p.t)
        series["qu"].append(bn(p.qu, s))
        series["a_low_norm"].append(bn(p.a, s))
        series["grad_a"].append(bn(apply_multiplier(p.a, km), s))
        series["qu_t"].append(bn(p.qu_t, s))
        series["hess_qu"].append(bn(apply_multiplier(p.qu, k2), s))
        al, ah = split_low_high(partition, p.a, nu)
        series["hess_a_low"].append(bn(apply_multiplier(al, k2), s))
        series["grad_a_high"].append(bn(apply_multiplier(ah, km), s))
        series["pu"].append(bn(p.pu, s))
        series["pu_t"].append(bn(p.pu_t, s))
        series["hess_pu"].append(bn(apply_multiplier(p.pu, k2), s))
        series["v_ref"].append(bn(p.V, s))
        series["v_ref_t"].append(bn(p.V_t, s))
        series["hess_v"].append(bn(apply_multiplier(p.V, k2), s))
        series["a_high_order"].append(bn(p.a, sh))
    if final is None:
        raise ValueError("empty perturbation trajectory")

    times = np.asarray(series["t"])
    qu = np.asarray(series["qu"])
    a_low_norm = np.asarray(series["a_low_norm"])
    grad_a = np.asarray(series["grad_a"])
    qu_t = np.asarray(series["qu_t"])
    hess_qu = np.asarray(series["hess_qu"])
    hess_a_low = np.asarray(series["hess_a_low"])
    grad_a_high = np.asarray(series["grad_a_high"])
    pu = np.asarray(series["pu"])
    pu_t = np.asarray(series["pu_t"])
    hess_pu = np.asarray(series["hess_pu"])
    v_ref = np.asarray(series["v_ref"])
    v_ref_t = np.asarray(series["v_ref_t"])
    hess_v = np.asarray(series["hess_v"])
    a_high_order = np.asarray(series["a_high_order"])

    X_prof = _prefix_max(qu) + _prefix_max(a_low_norm) + nu * _prefix_max(grad_a)
    Y_prof = (
        _prefix_trapezoid(times, qu_t)
        + nu * _prefix_trapezoid(times, hess_qu)
        + nu * _prefix_trapezoid(times, hess_a_low)
        + _prefix_trapezoid(times, grad_a_high)
    )
    Z_prof = _prefix_max(pu)
    W_prof = _prefix_trapezoid(times, pu_t) + _prefix_trapezoid(times, hess_pu)
    V_prof = (
        _prefix_max(v_ref)
        + _prefix_trapezoid(times, v_ref_t)
        + _prefix_trapezoid(times, hess_v)
    )
    E_prof = (
        _prefix_max(pu)
        + _prefix_trapezoid(times, pu_t)
        + mu * _prefix_trapezoid(times, hess_pu)
        + _prefix_max(a_high_order)
    )

    lj_blocks = {}
    qu_final = final.qu
    for j in partition.js:
        aj = dyadic_block(partition, final.a, j)
        quj = dyadic_block(partition, qu_final, j)
        lj_blocks[j] = (lj_energy(aj, quj, nu), parabolic_split_rate(j, nu))

    norms = {
        "qu_linf": float(np.max(qu)),
        "a_linf_low": float(np.max(a_low_norm)),
        "grad_a_linf": float(np.max(grad_a)),
        "a_linf_high": float(np.max(a_high_order)),
        "qu_t_l1": float(_prefix_trapezoid(times, qu_t)[-1]),
        "hess_qu_l1": float(_prefix_trapezoid(times, hess_qu)[-1]),
        "pu_linf": float(np.max(pu)),
        "pu_t_l1": float(_prefix_trapezoid(times, pu_t)[-1]),
        "hess_pu_l1": float(_prefix_trapezoid(times, hess_pu)[-1]),
    }

    return FunctionalReport(
        nu=nu,
        mu=mu,
        s_low=s,
        s_high=sh,
        Xd=float(X_prof[-1]),
        Yd=float(Y_prof[-1]),
        Zd=float(Z_prof[-1]),
        Wd=float(W_prof[-1]),
        Vd=float(V_prof[-1]),
        E=float(E_prof[-1]),
        profiles={
            "t": times,
            "Xd": X_prof,
            "Yd": Y_prof,
            "Zd": Z_prof,
            "Wd": W_prof,
            "Vd": V_prof,
            "E": E_prof,
        },
        norms=norms,
        lj_blocks=lj_blocks,
    )


def lj_energy(aj, quj, nu):
    """Block energy L_j: sqrt of int 2 a_j^2 + 2|Qu_j|^2 + 2 nu Qu_j.grad a_j
    + |nu grad a_j|^2.

    Algebraically equal to 2 a_j^2 + |Qu_j|^2 + |Qu_j + nu grad a_j|^2, so a
    radicand below -1e-12 (relative) signals an implementation bug.
    """
    grid = aj.grid
    vol = grid.length ** grid.dim
    a2 = float(np.sum(np.abs(aj.coeffs) ** 2))
    q2 = float(np.sum(np.abs(quj.coeffs) ** 2))
    grad_a2 = float(np.sum(grid.k2 * np.abs(aj.coeffs) ** 2))
    cross = 0.0
    for ax in range(grid.dim):
        cross += float(
            np.sum(np.real(np.conj(quj.coeffs[ax]) * (1j * grid.kvec[ax] * aj.coeffs[0])))
        )
    val = vol * (2.0 * a2 + 2.0 * q2 + 2.0 * nu * cross + nu * nu * grad_a2)
    scale = vol * (2.0 * a2 + 2.0 * q2 + nu * nu * grad_a2)
    if val < -1e-12 * max(scale, 1.0):
        raise ValueError(f"negative block energy {val:g}: broken quadratic form")
    return math.sqrt(max(val, 0.0))


def parabolic_split_rate(j, nu):
    """Per-block decay rate annotation min(nu 2^{2j}, 1/nu)."""
    return min(nu * 2.0 ** (2 * j), 1.0 / nu)


@dataclass(frozen=True)
class ConditionReport:
    lhs: float
    rhs: float
    ratio: float
    c_boundary: float


def check_smallness(a0_norm_low, a0_norm_high, qu0_norm, M, mu, nu, C=1.0):
    """Admissibility condition: C e^{CM} (||a0|| + nu||a0||_high + ||Qu0|| +
    M^2 + mu^2) <= sqrt(nu mu).

    Returns both sides, their ratio, and the largest C for which the
    condition still holds (constants are reported, never asserted).
    """
    bracket = a0_norm_low + nu * a0_norm_high + qu0_norm + M * M + mu * mu
    lhs = C * math.exp(C * M) * bracket
    rhs = math.sqrt(nu) * math.sqrt(mu)
    if bracket <= 0.0:
        return ConditionReport(lhs, rhs, 0.0, math.inf)
    c_boundary = smallest_growth_constant(rhs, bracket, M)
    return ConditionReport(lhs, rhs, lhs / rhs, c_boundary)


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    empirical_C: float


def stability_bound_lhs(report):
    """Left side of the stability bound, from a FunctionalReport."""
    n = report.norms
    nu = report.nu
    mu = report.mu
    return (
        n["qu_linf"]
        + n["qu_t_l1"]
        + nu * n["hess_qu_l1"]
        + n["a_linf_low"]
        + nu * n["a_linf_high"]
        + math.sqrt(nu)
        * (n["pu_linf"] + n["pu_t_l1"] + mu * n["hess_pu_l1"])
    )


def check_stability_bound(report, a0_norm_low, a0_norm_high, qu0_norm, M, C=1.0):
    """Evaluate the stability bound and the smallest constant making it hold."""
    nu, mu = report.nu, report.mu
    bracket = a0_norm_low + nu * a0_norm_high + qu0_norm + M * M + mu * mu
    lhs = stability_bound_lhs(report)
    rhs = C * math.exp(C * M) * bracket
    empirical = smallest_growth_constant(lhs, bracket, M)
    return BoundReport(lhs, rhs, empirical)
