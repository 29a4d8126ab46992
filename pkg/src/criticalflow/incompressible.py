"""Pseudospectral integrator for the incompressible system.

The pressure is eliminated by the Leray projection, so the advanced equation
is  V_t = P(-V . grad V) + mu * Lap V  on divergence-free fields.

Integrators:
  * ``rk4``      classical explicit Runge-Kutta on the full right-hand side;
  * ``if-rk4``   Lawson integrating-factor RK4 with the exact viscous factor
                 exp(-mu |k|^2 dt) (default: unconditionally stable in the
                 stiff viscous part);
  * ``imex-bdf2`` BDF2 with implicit viscosity and extrapolated advection
                 (run-loop only, needs one step of history);
  * ``imex-ars2`` the same two-stage L-stable IMEX pair the compressible
                 solver uses, restricted to the projected system.  Sweep
                 references use it so that time-discretization error is
                 common mode between the two runs and cancels in v - V.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from .dyadic import besov_norm
from .fields import advect, apply_multiplier, laplacian
from .helmholtz import project_P
from .states import CFLError, InsState, Trajectory, trapezoid

INTEGRATORS = ("rk4", "if-rk4", "imex-bdf2", "imex-ars2")

# L-stable two-stage IMEX coefficients shared with the compressible stepper
_GAMMA = 1.0 - math.sqrt(2.0) / 2.0
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)


@dataclass(frozen=True)
class InsConfig:
    grid: object
    mu: float
    dt: float
    t_end: float
    save_every: int = 1
    integrator: str = "if-rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")


def ins_rhs(state):
    """P(-V . grad V) + mu * Lap V with the dealiased convective term."""
    V = state.V
    return project_P(-1.0 * advect(V, V)) + state.mu * laplacian(V)


def _cfl_check(V, dt, max_speed=None, explicit_viscous_mu=0.0):
    grid = V.grid
    if max_speed is None:
        max_speed = V.max_norm()
    bound = math.inf
    detail = ""
    if max_speed > 0.0:
        bound = 0.5 * grid.spacing / max_speed
        detail = "advective CFL"
    if explicit_viscous_mu > 0.0:
        # fully explicit schemes must keep mu k^2 dt inside the stability
        # interval for every resolved mode (rounding seeds all of them)
        visc = 2.5 / (explicit_viscous_mu * float(np.max(grid.k2)))
        if visc < bound:
            bound = visc
            detail = "explicit viscous stability"
    if dt > bound:
        raise CFLError(dt, bound, detail)
    return max_speed


class IncompressibleSolver:
    """Owns one run; states are immutable and shareable across threads."""

    def __init__(self, config):
        self.config = config
        grid = config.grid
        self._lam_visc = -config.mu * grid.k2  # per-mode viscous symbol
        self._exp_half = {}

    def rhs_field(self, V):
        return project_P(-1.0 * advect(V, V)) + apply_multiplier(V, self._lam_visc)

    def _factors(self, dt):
        key = round(dt, 16)
        if key not in self._exp_half:
            self._exp_half[key] = np.exp(0.5 * dt * self._lam_visc)
        return self._exp_half[key]

    def step_rk4(self, V, dt):
        k1 = self.rhs_field(V)
        k2 = self.rhs_field(V + (0.5 * dt) * k1)
        k3 = self.rhs_field(V + (0.5 * dt) * k2)
        k4 = self.rhs_field(V + dt * k3)
        out = V + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return project_P(out)

    def step_ifrk4(self, V, dt):
        """Lawson RK4: exact exp(mu Lap dt) factor, RK4 on the projected
        convective term."""
        e1 = self._factors(dt)
        e2 = e1 * e1

        def nl(W):
            return project_P(-1.0 * advect(W, W))

        k1 = nl(V)
        k2 = nl(apply_multiplier(V + (0.5 * dt) * k1, e1))
        k3 = nl(apply_multiplier(V, e1) + (0.5 * dt) * k2)
        k4 = nl(apply_multiplier(V, e2) + dt * apply_multiplier(k3, e1))
        out = apply_multiplier(V, e2) + (dt / 6.0) * (
            apply_multiplier(k1, e2)
            + 2.0 * apply_multiplier(k2 + k3, e1)
            + k4
        )
        return project_P(out)

    def _bdf2_solve_mult(self, dt):
        return 1.0 / (1.5 - dt * self._lam_visc)

    def step_ars2(self, V, dt):
        """Two-stage L-stable IMEX step matching the compressible scheme."""
        solve = 1.0 / (1.0 - (_GAMMA * dt) * self._lam_visc)

        def nl(W):
            return project_P(-1.0 * advect(W, W))

        n0 = nl(V)
        v1 = apply_multiplier(V + (dt * _GAMMA) * n0, solve)
        l1 = apply_multiplier(v1, self._lam_visc)
        n1 = nl(v1)
        b = V + dt * ((1.0 - _GAMMA) * l1 + _DELTA * n0 + (1.0 - _DELTA) * n1)
        return project_P(apply_multiplier(b, solve))

    def run(self, V0, t0=0.0):
        cfg = self.config
        grid = cfg.grid
        V = project_P(V0)
        n_steps = int(round(cfg.t_end / cfg.dt))
        vol = grid.length ** grid.dim

        states = [InsState(t0, V, cfg.mu)]
        diag = {"t": [], "energy": [], "grad_sq": [], "max_speed": []}

        def record(t, W, max_speed):
            diag["t"].append(t)
            diag["energy"].append(vol * float(np.sum(np.abs(W.coeffs) ** 2)))
            diag["grad_sq"].append(vol * float(np.sum(grid.k2 * np.abs(W.coeffs) ** 2)))
            diag["max_speed"].append(max_speed)

        record(t0, V, V.max_norm())

        prev = None  # BDF2 history
        nl_prev = None
        solve_mult = self._bdf2_solve_mult(cfg.dt) if cfg.integrator == "imex-bdf2" else None

        explicit_mu = cfg.mu if cfg.integrator == "rk4" else 0.0
        for step in range(1, n_steps + 1):
            _cfl_check(V, cfg.dt, explicit_viscous_mu=explicit_mu)
            if cfg.integrator == "rk4":
                V_new = self.step_rk4(V, cfg.dt)
            elif cfg.integrator == "if-rk4":
                V_new = self.step_ifrk4(V, cfg.dt)
            elif cfg.integrator == "imex-ars2":
                V_new = self.step_ars2(V, cfg.dt)
            else:  # imex-bdf2
                nl = project_P(-1.0 * advect(V, V))
                if prev is None:
                    V_new = self.step_ifrk4(V, cfg.dt)  # startup step
                else:
                    rhs = (
                        2.0 * V - 0.5 * prev + cfg.dt * (2.0 * nl - 1.0 * nl_prev)
                    )
                    V_new = project_P(apply_multiplier(rhs, solve_mult))
                prev, nl_prev = V, nl
            V = V_new
            t = t0 + step * cfg.dt
            record(t, V, V.max_norm())
            if step % cfg.save_every == 0 or step == n_steps:
                states.append(InsState(t, V, cfg.mu))

        diagnostics = {k: np.asarray(v) for k, v in diag.items()}
        return Trajectory(states, diagnostics, meta={"config": cfg})


def ins_step(state, dt, integrator="if-rk4"):
    """One step from an InsState (stateless schemes; BDF2 needs the run loop)."""
    if integrator == "imex-bdf2":
        raise ValueError("imex-bdf2 keeps history; use IncompressibleSolver.run")
    cfg = InsConfig(state.V.grid, state.mu, dt, dt, integrator=integrator)
    solver = IncompressibleSolver(cfg)
    _cfl_check(state.V, dt, explicit_viscous_mu=state.mu if integrator == "rk4" else 0.0)
    stepper = {
        "rk4": solver.step_rk4,
        "if-rk4": solver.step_ifrk4,
        "imex-ars2": solver.step_ars2,
    }[integrator]
    return InsState(state.t + dt, stepper(state.V, dt), state.mu)


def energy_identity_residual(traj):
    """Max over saved times of |E(t) + 2 mu int ||grad V||^2 - E(0)| / E(0).

    Uses the dense per-step series when present, otherwise the snapshots;
    the time integral is the trapezoid rule.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    mu = traj.states[0].mu
    if "energy" in traj.diagnostics:
        t = np.asarray(traj.diagnostics["t"])
        energy = np.asarray(traj.diagnostics["energy"])
        grad_sq = np.asarray(traj.diagnostics["grad_sq"])
    else:
        t = traj.times
        grid = traj.states[0].V.grid
        vol = grid.length ** grid.dim
        energy = np.array([vol * np.sum(np.abs(s.V.coeffs) ** 2) for s in traj.states])
        grad_sq = np.array(
            [vol * np.sum(grid.k2 * np.abs(s.V.coeffs) ** 2) for s in traj.states]
        )
    if energy[0] == 0.0:
        return 0.0
    dissip = np.concatenate(
        [[0.0], np.cumsum(np.diff(t) * 0.5 * (grad_sq[1:] + grad_sq[:-1]))]
    )
    residual = np.abs(energy + 2.0 * mu * dissip - energy[0]) / energy[0]
    return float(np.max(residual))


def vd_profile(traj, partition):
    """Reference-solution functional over time.

    Returns (times, values) with value(T) = sup_{t<=T} ||V||_{B^{d/2-1}} plus
    the L1-in-time norms of V_t and of the second gradient (trapezoid,
    V_t evaluated through the right-hand side, never finite differences).
    """
    grid = traj.states[0].V.grid
    s = grid.dim / 2.0 - 1.0
    times = traj.times
    v_norm = np.empty(len(traj))
    vt_norm = np.empty(len(traj))
    hess_norm = np.empty(len(traj))
    for i, st in enumerate(traj.states):
        v_norm[i] = besov_norm(partition, st.V, s).value
        vt_norm[i] = besov_norm(partition, ins_rhs(st), s).value
        hess_norm[i] = besov_norm(partition, apply_multiplier(st.V, grid.k2), s).value
    values = np.empty(len(traj))
    sup = 0.0
    int_v = 0.0
    for i in range(len(traj)):
        sup = max(sup, v_norm[i])
        if i > 0:
            dt = times[i] - times[i - 1]
            int_v += 0.5 * dt * (vt_norm[i] + vt_norm[i - 1])
            int_v += 0.5 * dt * (hess_norm[i] + hess_norm[i - 1])
        values[i] = sup + int_v
    return times, values


def compute_M(traj, partition):
    """Measured sup over T of the reference functional (its final value)."""
    _, values = vd_profile(traj, partition)
    return float(values[-1])


def compute_M_bound(V0, partition, mu, C=1.0):
    """Closed-form 2D bound C ||P V0||_{B^0} exp(C mu^-4 ||P V0||_{L2}^4)."""
    if V0.grid.dim != 2:
        raise ValueError("the explicit bound is two-dimensional")
    PV0 = project_P(V0)
    b0 = besov_norm(partition, PV0, 0.0).value
    l2 = PV0.l2_norm()
    return C * b0 * math.exp(C * l2 ** 4 / mu ** 4)


def smallest_growth_constant(target, base, expo):
    """Smallest C >= 0 with C * exp(C * expo) * base >= target.

    Solved through the Lambert W function; `expo >= 0`, `base > 0` expected.
    """
    if target <= 0.0:
        return 0.0
    if base <= 0.0:
        return math.inf
    ratio = target / base
    if expo == 0.0:
        return ratio
    w = lambertw(expo * ratio)
    return float(np.real(w)) / expo


def appendix_bound_constant(traj, partition):
    """Empirical constant of the reference a-priori bound.

    Smallest C with measured V-functional <= C ||V0||_{B^0} exp(C mu^-4
    ||V0||_{L2}^4); reported, never asserted against a guessed value.
    """
    V0 = traj.states[0].V
    mu = traj.states[0].mu
    measured = compute_M(traj, partition)
    b0 = besov_norm(partition, V0, 0.0).value
    expo = V0.l2_norm() ** 4 / mu ** 4
    return smallest_growth_constant(measured, b0, expo)


def interpolation_constant(traj, partition, floor=1e-10):
    """Empirical C in mu^{1/4} ||V||_{L4(B^{1/2})} <= C ||V0||_{L2}.

    The time integral is truncated once the integrand has decayed below
    `floor` times its initial value.
    """
    mu = traj.states[0].mu
    times = traj.times
    vals = np.array(
        [besov_norm(partition, s.V, 0.5).value ** 4 for s in traj.states]
    )
    if vals[0] > 0.0:
        keep = np.nonzero(vals >= floor * vals[0])[0]
        last = keep[-1] + 1 if len(keep) else len(vals)
        times, vals = times[: last + 1], vals[: last + 1]
    lhs = mu ** 0.25 * trapezoid(times, vals) ** 0.25
    l2 = traj.states[0].V.l2_norm()
    if l2 == 0.0:
        return 0.0
    return lhs / l2
