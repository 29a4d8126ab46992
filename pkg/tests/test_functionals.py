import math

import numpy as np
import pytest

from criticalflow.compressible import CnsConfig, CompressibleSolver
from criticalflow.dyadic import dyadic_block
from criticalflow.fields import transform, zero_field
from criticalflow.functionals import (
    PerturbationSnapshot,
    check_smallness,
    check_stability_bound,
    compute_XYZWV,
    lj_energy,
    parabolic_split_rate,
    perturbation_fields,
    stability_bound_lhs,
)
from criticalflow.helmholtz import project_P, project_Q
from criticalflow.incompressible import InsConfig, IncompressibleSolver
from criticalflow.states import InsState, Trajectory

from conftest import random_field, taylor_green_raw


def synthetic_snapshots(grid, times, a_of_t, u=None):
    """Perturbation snapshots with prescribed density and zero reference."""
    snaps = []
    zv = zero_field(grid, grid.dim)
    for t in times:
        a = a_of_t(t)
        uu = u if u is not None else zv
        snaps.append(
            PerturbationSnapshot(
                t=t,
                a=a,
                u=uu,
                qu=project_Q(uu),
                pu=project_P(uu),
                u_t=zv,
                qu_t=zv,
                pu_t=zv,
                V=zv,
                V_t=zv,
            )
        )
    return snaps


class TestPerturbation:
    def _pair(self, grid32, part32):
        from criticalflow.experiments import InitSpec, generate_initial_data

        spec = InitSpec(kind="random-band", v_amplitude=0.4, a_amplitude=0.02, band=(0, 1))
        a0, v0 = generate_initial_data(spec, grid32, part32, seed=5)
        cfg = CnsConfig(grid32, 1.0, 98.0, dt=2e-3, t_end=0.1, save_every=10)
        cns = CompressibleSolver(cfg).run(a0, v0)
        icfg = InsConfig(grid32, 1.0, 2e-3, 0.1, save_every=10, integrator="imex-ars2")
        ins = IncompressibleSolver(icfg).run(project_P(v0))
        return cns, ins

    def test_projector_completeness(self, grid32, part32):
        cns, ins = self._pair(grid32, part32)
        for p in perturbation_fields(cns, ins):
            scale = max(np.max(np.abs(p.u.coeffs)), 1e-30)
            assert np.max(np.abs(p.qu.coeffs + p.pu.coeffs - p.u.coeffs)) <= 1e-12 * scale

    def test_identical_trajectories_give_zero(self, grid32, part32):
        _, ins = self._pair(grid32, part32)
        cns_like = Trajectory(
            [
                type(s)(s.t, s.V, s.mu) if False else s
                for s in ins.states
            ]
        )
        # build a cns trajectory whose v equals V and a = 0
        from criticalflow.states import CnsState, PressureLaw, ViscosityParams

        states = [
            CnsState(s.t, zero_field(grid32), s.V, ViscosityParams(1.0, 98.0), PressureLaw(2.0))
            for s in ins.states
        ]
        pert = perturbation_fields(Trajectory(states), ins)
        for p in pert:
            assert np.max(np.abs(p.u.coeffs)) == 0.0

    def test_time_mismatch_error(self, grid32, part32):
        cns, ins = self._pair(grid32, part32)
        shifted = Trajectory([InsState(s.t + 0.05, s.V, s.mu) for s in ins.states])
        with pytest.raises(ValueError):
            perturbation_fields(cns, shifted)


class TestFunctionals:
    def test_all_zero(self, grid32, part32):
        times = np.linspace(0.0, 1.0, 11)
        snaps = synthetic_snapshots(grid32, times, lambda t: zero_field(grid32))
        rep = compute_XYZWV(snaps, part32, nu=10.0)
        assert rep.Xd == rep.Yd == rep.Zd == rep.Wd == 0.0
        assert rep.E == 0.0

    def test_only_reference_nonzero(self, grid32, part32):
        tg = taylor_green_raw(grid32)
        zv = zero_field(grid32, 2)
        times = np.linspace(0.0, 0.5, 26)
        snaps = []
        for t in times:
            V = math.exp(-2.0 * t) * tg
            snaps.append(
                PerturbationSnapshot(
                    t=t, a=zero_field(grid32), u=zv, qu=zv, pu=zv,
                    u_t=zv, qu_t=zv, pu_t=zv, V=V, V_t=-2.0 * V,
                )
            )
        rep = compute_XYZWV(snaps, part32, nu=100.0)
        assert rep.Xd == rep.Yd == rep.Zd == rep.Wd == 0.0
        assert rep.Vd > 0.0

    def test_single_mode_closed_form(self, grid32, part32):
        """a(t) = e^{-t} sin x, u = 0, nu = 1: X and Y in closed form."""
        x = grid32.points()
        base = transform(grid32, np.sin(x[0]))
        A = base.l2_norm()
        times = np.linspace(0.0, 1.0, 101)
        snaps = synthetic_snapshots(grid32, times, lambda t: math.exp(-t) * base)
        rep = compute_XYZWV(snaps, part32, nu=1.0)
        X_expected = 2.0 * A  # |k| = 1: density and its gradient contribute A each
        Y_expected = A * (1.0 - math.exp(-1.0))  # all content low at nu = 1
        assert abs(rep.Xd - X_expected) <= 0.01 * X_expected
        assert abs(rep.Yd - Y_expected) <= 0.01 * Y_expected
        assert rep.Zd == 0.0 and rep.Wd == 0.0

    def test_profiles_monotone(self, grid32, part32):
        x = grid32.points()
        base = transform(grid32, np.sin(x[0]) + 0.3 * np.cos(2 * x[1]))
        times = np.linspace(0.0, 1.0, 21)
        snaps = synthetic_snapshots(grid32, times, lambda t: math.exp(-t) * base)
        rep = compute_XYZWV(snaps, part32, nu=4.0)
        for key in ("Xd", "Yd", "Zd", "Wd", "Vd"):
            prof = rep.profiles[key]
            assert np.all(np.diff(prof) >= -1e-12), key


class TestBlockEnergy:
    def test_zero_density(self, grid32, part32):
        qu = dyadic_block(part32, project_Q(random_field(grid32, 2, seed=6)), 1)
        val = lj_energy(zero_field(grid32), qu, nu=3.0)
        assert abs(val - math.sqrt(2.0) * qu.l2_norm()) <= 1e-12 * val

    def test_zero_velocity(self, grid32, part32):
        aj = dyadic_block(part32, random_field(grid32, seed=7), 1)
        nu = 2.5
        grad = np.sqrt(
            grid32.length ** 2 * float(np.sum(grid32.k2 * np.abs(aj.coeffs) ** 2))
        )
        expected = math.sqrt(2.0 * aj.l2_norm() ** 2 + nu ** 2 * grad ** 2)
        val = lj_energy(aj, zero_field(grid32, 2), nu)
        assert abs(val - expected) <= 1e-12 * expected

    def test_equivalence_ratio_window(self, grid32, part32):
        """L_j stays comparable to the plain norm of (Qu_j, a_j, nu grad a_j)."""
        rng_seeds = range(60)
        for nu in (1.0, 10.0, 1000.0):
            for seed in rng_seeds:
                a = random_field(grid32, seed=1000 + seed)
                qu = project_Q(random_field(grid32, 2, seed=2000 + seed))
                j = part32.j_min + seed % part32.n_blocks
                aj = dyadic_block(part32, a, j)
                quj = dyadic_block(part32, qu, j)
                denom_sq = (
                    quj.l2_norm() ** 2
                    + aj.l2_norm() ** 2
                    + nu ** 2
                    * grid32.length ** 2
                    * float(np.sum(grid32.k2 * np.abs(aj.coeffs) ** 2))
                )
                if denom_sq == 0.0:
                    continue
                ratio = lj_energy(aj, quj, nu) / math.sqrt(denom_sq)
                assert 0.25 <= ratio <= 4.0


class TestRates:
    def test_parabolic_split_rate(self):
        assert parabolic_split_rate(0, 100.0) == pytest.approx(0.01)
        assert parabolic_split_rate(3, 1.0) == 1.0
        nu = 8.0
        j = -3  # 2^j = 1/nu
        assert parabolic_split_rate(j, nu) == pytest.approx(nu * 2.0 ** (2 * j))
        assert parabolic_split_rate(j, nu) == pytest.approx(1.0 / nu)


class TestConditions:
    def test_smallness_trivial_data(self):
        rep = check_smallness(0.0, 0.0, 0.0, M=0.0, mu=1.0, nu=4.0, C=1.0)
        assert rep.lhs == 1.0  # only the mu^2 term survives, e^0 = 1
        assert rep.rhs == 2.0
        assert rep.ratio == 0.5
        rep = check_smallness(0.0, 0.0, 0.0, M=0.0, mu=1.0, nu=0.81, C=1.0)
        assert rep.lhs > rep.rhs  # holds iff nu >= 1

    def test_smallness_scaling_invariance(self):
        a_high = 0.3
        r1 = check_smallness(0.0, a_high, 0.0, M=0.0, mu=1.0, nu=10.0)
        r2 = check_smallness(0.0, a_high / 2.0, 0.0, M=0.0, mu=1.0, nu=20.0)
        # the nu * ||a0||_high contribution is invariant under this rescaling
        assert abs((r1.lhs - 1.0) - (r2.lhs - 1.0)) < 1e-14

    def test_smallness_boundary_constant(self):
        rep = check_smallness(0.1, 0.01, 0.2, M=1.5, mu=1.0, nu=100.0, C=1.0)
        c = rep.c_boundary
        bracket = 0.1 + 100.0 * 0.01 + 0.2 + 1.5 ** 2 + 1.0
        assert abs(c * math.exp(c * 1.5) * bracket - rep.rhs) < 1e-8 * rep.rhs

    def test_stability_bound_zero_data(self, grid32, part32):
        times = np.linspace(0.0, 0.2, 5)
        snaps = synthetic_snapshots(grid32, times, lambda t: zero_field(grid32))
        rep = compute_XYZWV(snaps, part32, nu=50.0)
        bound = check_stability_bound(rep, 0.0, 0.0, 0.0, M=0.0, C=1.0)
        assert bound.lhs == 0.0
        assert bound.empirical_C == 0.0

    def test_stability_bound_lhs_composition(self, grid32, part32):
        x = grid32.points()
        base = transform(grid32, np.sin(x[0]))
        times = np.linspace(0.0, 0.5, 11)
        snaps = synthetic_snapshots(grid32, times, lambda t: math.exp(-t) * base)
        rep = compute_XYZWV(snaps, part32, nu=2.0)
        lhs = stability_bound_lhs(rep)
        n = rep.norms
        manual = (
            n["qu_linf"]
            + n["qu_t_l1"]
            + 2.0 * n["hess_qu_l1"]
            + n["a_linf_low"]
            + 2.0 * n["a_linf_high"]
            + math.sqrt(2.0) * (n["pu_linf"] + n["pu_t_l1"] + 1.0 * n["hess_pu_l1"])
        )
        assert abs(lhs - manual) < 1e-12 * max(manual, 1.0)
