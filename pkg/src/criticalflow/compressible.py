"""Pseudospectral integrator for the barotropic compressible system.

Unknowns are the density deviation a = rho - 1 and the velocity v:

    a_t = -div((1 + a) v)
    v_t = -v . grad v + (mu Lap v + (lam + mu) grad div v - P'(1+a) grad a) / (1+a)

with the gamma-law pressure P(rho) = rho^gamma / gamma (P'(1) = 1).  The
volume viscosity can be very large, so the step is an L-stable two-stage
IMEX Runge-Kutta scheme: the linear part (viscosity plus, by default, the
acoustic coupling grad a / div v) is solved implicitly per Fourier mode
through a 2x2 block on the potential component, everything nonlinear is
explicit.  The zero mode of a is untouched by every term, so the mass mean
is conserved exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dyadic import besov_norm
from .fields import SpectralField, gradient
from .states import CFLError, CnsState, PressureLaw, Trajectory, VacuumError, ViscosityParams

# Two-stage, second-order, L-stable IMEX pair (implicit diagonal gamma).
_GAMMA = 1.0 - math.sqrt(2.0) / 2.0
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)


@dataclass(frozen=True)
class CnsConfig:
    grid: object
    mu: float
    lam: float
    gamma: float = 2.0
    dt: float = 1e-3
    t_end: float = 1.0
    save_every: int = 1
    acoustic_implicit: bool = True

    def __post_init__(self):
        ViscosityParams(self.mu, self.lam)  # validates mu > 0, nu > 0
        PressureLaw(self.gamma)
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")

    @property
    def nu(self):
        return self.lam + 2.0 * self.mu


def pressure_kappa(law, a):
    """k(a) = P'(1 + a) - 1 evaluated pointwise (dealiased)."""
    grid = a.grid
    axes = tuple(range(1, grid.dim + 1))
    ac = a.coeffs * grid.dealias_mask
    a_phys = np.real(np.fft.ifftn(ac, axes=axes) * grid.size)
    if np.min(1.0 + a_phys) <= 0.0:
        raise VacuumError(f"1 + a reaches {np.min(1.0 + a_phys):g}")
    k_phys = law.kappa_pointwise(a_phys)
    coeffs = (np.fft.fftn(k_phys, axes=axes) / grid.size) * grid.dealias_mask
    return SpectralField(grid, coeffs)


class _Workspace:
    """Per-step evaluation of the explicit terms and linear symbols."""

    def __init__(self, grid, params, law, acoustic_implicit):
        self.grid = grid
        self.params = params
        self.law = law
        self.acoustic_implicit = acoustic_implicit
        self.axes = tuple(range(1, grid.dim + 1))
        self.mask = grid.dealias_mask
        self.kvec = grid.kvec
        self.k2 = grid.k2
        # flattened tables for the per-mode implicit solve
        self.kvec_flat = np.ascontiguousarray(grid.kvec.reshape(grid.dim, -1))
        self.k2_flat = np.ascontiguousarray(grid.k2.reshape(-1))

    def viscous_coeffs(self, vc):
        """mu Lap v + (lam + mu) grad div v, on coefficient arrays."""
        p = self.params
        kdotv = np.zeros(self.grid.shape, dtype=np.complex128)
        for ax in range(self.grid.dim):
            kdotv += self.kvec[ax] * vc[ax]
        out = np.empty_like(vc)
        for ax in range(self.grid.dim):
            out[ax] = -p.mu * self.k2 * vc[ax] - (p.lam + p.mu) * self.kvec[ax] * kdotv
        return out

    def linear_coeffs(self, ac, vc):
        """The implicitly-treated linear operator applied to (a, v)."""
        Lv = self.viscous_coeffs(vc)
        La = np.zeros_like(ac)
        if self.acoustic_implicit:
            for ax in range(self.grid.dim):
                La[0] -= 1j * self.kvec[ax] * vc[ax]
                Lv[ax] -= 1j * self.kvec[ax] * ac[0]
        return La, Lv

    def explicit_terms(self, ac, vc):
        """Explicit remainder N = full RHS - linear part, plus diagnostics.

        Returns (Na, Nv, visc_coeffs, info); info carries max_speed, rho_min,
        rho_max from the physical samples used for the products.
        """
        grid, axes, mask = self.grid, self.axes, self.mask
        law = self.law
        at = ac * mask
        vt = vc * mask
        a_phys = np.real(np.fft.ifftn(at, axes=axes) * grid.size)[0]
        v_phys = np.real(np.fft.ifftn(vt, axes=axes) * grid.size)
        rho = 1.0 + a_phys
        rho_min = float(np.min(rho))
        rho_max = float(np.max(rho))
        if rho_min <= 0.0:
            raise VacuumError(f"density reached {rho_min:g}")
        max_speed = float(np.max(np.sqrt(np.sum(v_phys ** 2, axis=0))))

        # convective term (v . grad) v
        adv_phys = np.zeros_like(v_phys)
        for ax in range(grid.dim):
            dva = np.real(np.fft.ifftn(vt * (1j * self.kvec[ax]), axes=axes) * grid.size)
            adv_phys += v_phys[ax] * dva

        visc = self.viscous_coeffs(vt)
        visc_phys = np.real(np.fft.ifftn(visc, axes=axes) * grid.size)

        ratio = a_phys / rho
        Nv_phys = -adv_phys - ratio * visc_phys

        need_grad_a = (not self.acoustic_implicit) or law.gamma != 2.0
        if need_grad_a:
            grad_a = np.real(
                np.fft.ifftn(at[0] * (1j * self.kvec), axes=axes) * grid.size
            )
            if self.acoustic_implicit:
                # pressure correction beyond the linearized gradient
                m = rho ** (law.gamma - 2.0) - 1.0
                Nv_phys -= m * grad_a
            else:
                Nv_phys -= (law.pressure_prime(rho) / rho) * grad_a

        Nv = (np.fft.fftn(Nv_phys, axes=axes) / grid.size) * mask

        av = (np.fft.fftn(a_phys * v_phys, axes=axes) / grid.size) * mask
        Na = np.zeros_like(ac)
        for ax in range(grid.dim):
            Na[0] -= 1j * self.kvec[ax] * av[ax]
        if not self.acoustic_implicit:
            for ax in range(grid.dim):
                Na[0] -= 1j * self.kvec[ax] * vt[ax]

        info = {"max_speed": max_speed, "rho_min": rho_min, "rho_max": rho_max}
        return Na, Nv, visc, info

    def implicit_solve(self, ba, bv, c):
        """Solve (I - c L)(a, v) = (ba, bv) per mode."""
        p = self.params
        if self.acoustic_implicit:
            xa, xv = _kernels.implicit_acoustic_solve(
                np.ascontiguousarray(ba.reshape(-1)),
                np.ascontiguousarray(bv.reshape(self.grid.dim, -1)),
                self.kvec_flat,
                self.k2_flat,
                c,
                p.mu,
                p.nu,
            )
            return (
                xa.reshape(ba.shape),
                xv.reshape(bv.shape),
            )
        # viscous-only: diagonal on the transverse part, scalar on the
        # potential part, density untouched
        km = np.sqrt(self.k2)
        safe = np.where(km > 0, km, 1.0)
        bq = np.zeros(self.grid.shape, dtype=np.complex128)
        for ax in range(self.grid.dim):
            bq += self.kvec[ax] * bv[ax]
        bq /= safe
        xv = np.empty_like(bv)
        for ax in range(self.grid.dim):
            khat = self.kvec[ax] / safe
            perp = (bv[ax] - bq * khat) / (1.0 + c * p.mu * self.k2)
            xv[ax] = bq / (1.0 + c * p.nu * self.k2) * khat + perp
        zero = km == 0
        for ax in range(self.grid.dim):
            xv[ax][zero] = bv[ax][zero]
        return ba.copy(), xv


def cns_rhs(state):
    """Full right-hand side (da_dt, dv_dt) as spectral fields."""
    ws = _Workspace(state.a.grid, state.params, state.law, acoustic_implicit=False)
    Na, Nv, visc, _ = ws.explicit_terms(state.a.coeffs, state.v.coeffs)
    da = SpectralField(state.a.grid, Na)
    dv = SpectralField(state.a.grid, Nv + visc)
    return da, dv


def _cfl_bound(cfg, info):
    """Largest admissible dt: advective/acoustic CFL and the explicit
    residual of the stiff operator."""
    grid = cfg.grid
    law = PressureLaw(cfg.gamma)
    cs = math.sqrt(law.pressure_prime(info["rho_max"]))
    adv = grid.spacing / (info["max_speed"] + cs)
    ratio_max = max(abs(1.0 - 1.0 / info["rho_min"]), abs(1.0 - 1.0 / info["rho_max"]))
    k2max = float(np.max(grid.k2[grid.dealias_mask]))
    stiff = math.inf
    if ratio_max > 0.0 and k2max > 0.0:
        stiff = 1.0 / (ratio_max * cfg.nu * k2max)
    return 0.5 * min(adv, stiff)


class CompressibleSolver:
    """Owns one run; cross-instance parallelism over (nu, seed) pairs."""

    def __init__(self, config):
        self.config = config
        self.params = ViscosityParams(config.mu, config.lam)
        self.law = PressureLaw(config.gamma)
        self.ws = _Workspace(config.grid, self.params, self.law, config.acoustic_implicit)

    def step_arrays(self, ac, vc, dt, info_out=None):
        """One IMEX step on coefficient arrays; returns new (ac, vc)."""
        ws = self.ws
        h = dt
        c = _GAMMA * h
        N0a, N0v, _, info = ws.explicit_terms(ac, vc)
        bound = _cfl_bound(self.config, info)
        if dt > bound:
            raise CFLError(dt, bound, "advective/acoustic CFL or stiff residual")
        if info_out is not None:
            info_out.update(info)
        ba = ac + (h * _GAMMA) * N0a
        bv = vc + (h * _GAMMA) * N0v
        a1, v1 = ws.implicit_solve(ba, bv, c)
        L1a, L1v = ws.linear_coeffs(a1, v1)
        N1a, N1v, _, _ = ws.explicit_terms(a1, v1)
        ba = ac + h * ((1.0 - _GAMMA) * L1a + _DELTA * N0a + (1.0 - _DELTA) * N1a)
        bv = vc + h * ((1.0 - _GAMMA) * L1v + _DELTA * N0v + (1.0 - _DELTA) * N1v)
        return ws.implicit_solve(ba, bv, c)

    def run(self, a0, v0, t0=0.0):
        cfg = self.config
        grid = cfg.grid
        vol = grid.length ** grid.dim
        ac = a0.coeffs.copy()
        vc = v0.coeffs.copy()
        n_steps = int(round(cfg.t_end / cfg.dt))

        def snap(t):
            return CnsState(
                t,
                SpectralField(grid, ac.copy()),
                SpectralField(grid, vc.copy()),
                self.params,
                self.law,
            )

        states = [snap(t0)]
        diag = {"t": [], "mean_a": [], "energy": [], "max_speed": [], "rho_min": []}

        def record(t, info):
            diag["t"].append(t)
            diag["mean_a"].append(float(np.real(ac[(0,) + (0,) * grid.dim])))
            diag["energy"].append(vol * float(np.sum(np.abs(vc) ** 2)))
            diag["max_speed"].append(info.get("max_speed", np.nan))
            diag["rho_min"].append(info.get("rho_min", np.nan))

        for step in range(1, n_steps + 1):
            info = {}
            ac, vc = self.step_arrays(ac, vc, cfg.dt, info_out=info)
            t = t0 + step * cfg.dt
            record(t, info)
            if step % cfg.save_every == 0 or step == n_steps:
                states.append(snap(t))

        diagnostics = {k: np.asarray(v) for k, v in diag.items()}
        return Trajectory(states, diagnostics, meta={"config": cfg})


def cns_step(state, dt, acoustic_implicit=True):
    """One IMEX step from a CnsState."""
    cfg = CnsConfig(
        state.a.grid,
        state.params.mu,
        state.params.lam,
        gamma=state.law.gamma,
        dt=dt,
        t_end=dt,
        acoustic_implicit=acoustic_implicit,
    )
    solver = CompressibleSolver(cfg)
    ac, vc = solver.step_arrays(state.a.coeffs, state.v.coeffs, dt)
    return CnsState(
        state.t + dt,
        SpectralField(state.a.grid, ac),
        SpectralField(state.a.grid, vc),
        state.params,
        state.law,
    )


def rescale_config(mu, lam, t_end, length):
    """Normalize the shear viscosity to 1.

    The solution map is (rho~, v~)(t, x) = (rho, v)(mu t, mu x), so both the
    domain period and the horizon contract by mu and the volume viscosity
    becomes lam/mu.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    return 1.0, lam / mu, t_end / mu, length / mu


@dataclass(frozen=True)
class MonitorReport:
    grad_v_time_integral: float
    a_sup_norm: float
    rho_inf: float
    flagged: bool
    reasons: tuple


def continuation_monitor(traj, partition, rho_floor=0.01, grad_ceiling=1e4, a_ceiling=1e4):
    """Blow-up monitors: int ||grad v||_Linf dt, sup_t ||a||_{B^{d/2}}, inf rho.

    Integrals use the trapezoid rule over saved states; extrema are over the
    physical grid at saved times.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    grid = traj.states[0].a.grid
    s_high = grid.dim / 2.0
    times = traj.times
    grad_linf = np.empty(len(traj))
    a_norm = np.empty(len(traj))
    rho_inf = math.inf
    for i, st in enumerate(traj.states):
        gv = gradient(st.v).to_physical()
        grad_linf[i] = float(np.max(np.sqrt(np.sum(gv ** 2, axis=0))))
        a_norm[i] = besov_norm(partition, st.a, s_high).value
        rho_inf = min(rho_inf, 1.0 + float(np.min(st.a.to_physical())))
    grad_int = float(np.trapezoid(grad_linf, times)) if len(traj) > 1 else 0.0
    a_sup = float(np.max(a_norm))
    reasons = []
    if rho_inf <= rho_floor:
        reasons.append(f"inf rho = {rho_inf:g} <= {rho_floor:g}")
    if grad_int > grad_ceiling:
        reasons.append(f"int ||grad v||_Linf = {grad_int:g} > {grad_ceiling:g}")
    if a_sup > a_ceiling:
        reasons.append(f"sup ||a|| = {a_sup:g} > {a_ceiling:g}")
    return MonitorReport(grad_int, a_sup, rho_inf, bool(reasons), tuple(reasons))


def _canonical_root_order(roots):
    roots = np.asarray(roots, dtype=complex)
    return roots[np.lexsort((roots.real, roots.imag))]


def acoustic_exact_roots(kmod, nu):
    """Continuous-time eigenvalues: roots of z^2 + nu k^2 z + k^2 = 0."""
    k2 = kmod * kmod
    disc = np.lib.scimath.sqrt((nu * k2) ** 2 - 4.0 * k2)
    return _canonical_root_order([(-nu * k2 + disc) / 2.0, (-nu * k2 - disc) / 2.0])


def acoustic_step_matrix(kmod, dt, nu):
    """One-step propagator of the implicit scheme on the (a, q) pair.

    q is the longitudinal velocity amplitude; the matrix is exact for the
    scheme (nonlinear terms vanish on the linearized system).
    """
    A = np.array([[0.0, -1j * kmod], [-1j * kmod, -nu * kmod * kmod]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    M = np.linalg.inv(eye - _GAMMA * dt * A)
    return M + dt * (1.0 - _GAMMA) * (M @ A @ M)


def acoustic_scheme_roots(kmod, dt, nu):
    """log(eigenvalues)/dt of the scheme propagator, sorted like the exact roots."""
    eigs = np.linalg.eigvals(acoustic_step_matrix(kmod, dt, nu))
    return _canonical_root_order(np.log(eigs.astype(complex)) / dt)
