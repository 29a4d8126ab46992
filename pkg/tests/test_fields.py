import numpy as np
import pytest

from criticalflow.fields import (
    FieldError,
    GridError,
    advect,
    dealiased_product,
    derivative,
    inverse_laplacian,
    laplacian,
    make_grid,
    transform,
    zero_field,
)
from criticalflow.snapshot import load_field, save_field

from conftest import random_field


class TestMakeGrid:
    def test_wavevector_range(self):
        g = make_grid(2, 64, 2 * np.pi)
        assert set(g.modes) == set(range(-32, 32))
        assert g.kvec.shape == (2, 64, 64)

    def test_not_power_of_two(self):
        with pytest.raises(GridError):
            make_grid(2, 7)
        with pytest.raises(GridError):
            make_grid(2, 48)

    def test_3d(self):
        g = make_grid(3, 32, 2 * np.pi)
        assert g.size == 32 ** 3

    def test_bad_dim_and_length(self):
        with pytest.raises(GridError):
            make_grid(4, 16)
        with pytest.raises(GridError):
            make_grid(2, 16, -1.0)
        with pytest.raises(GridError):
            make_grid(2, 4)


class TestTransform:
    def test_constant_field(self, grid32):
        f = transform(grid32, np.ones(grid32.shape))
        assert abs(f.coeffs[0, 0, 0] - 1.0) < 1e-14
        nz = np.abs(f.coeffs.copy())
        nz[0, 0, 0] = 0.0
        assert np.max(nz) < 1e-14

    def test_single_mode(self, grid32):
        x = grid32.points()
        f = transform(grid32, np.sin(x[0]))
        c = f.coeffs[0]
        assert abs(c[1, 0] + 0.5j) < 1e-14
        assert abs(c[-1, 0] - 0.5j) < 1e-14
        mask = np.ones(grid32.shape, bool)
        mask[1, 0] = mask[-1, 0] = False
        assert np.max(np.abs(c[mask])) < 1e-14

    def test_round_trip_random(self, grid32):
        rng = np.random.default_rng(7)
        samples = rng.standard_normal((2,) + grid32.shape)
        back = transform(grid32, samples).to_physical()
        assert np.max(np.abs(back - samples)) <= 1e-12 * np.max(np.abs(samples))

    def test_shape_mismatch(self, grid32):
        with pytest.raises(FieldError):
            transform(grid32, np.ones((3, 3)))


class TestDerivative:
    def test_sin_to_cos(self, grid32):
        x = grid32.points()
        d = derivative(transform(grid32, np.sin(x[0])), 0)
        assert np.max(np.abs(d.to_physical()[0] - np.cos(x[0]))) < 1e-12

    def test_constant_to_zero(self, grid32):
        d = derivative(transform(grid32, np.ones(grid32.shape)), 0)
        assert np.max(np.abs(d.coeffs)) < 1e-14

    def test_laplacian_of_plane_wave(self, grid32):
        x = grid32.points()
        f = transform(grid32, np.cos(2 * x[0]))
        dd = derivative(derivative(f, 0), 0, 1)
        dd = dd + derivative(derivative(f, 1), 1, 1)
        assert np.max(np.abs(dd.to_physical()[0] + 4.0 * np.cos(2 * x[0]))) < 1e-11
        assert np.max(np.abs(laplacian(f).coeffs - dd.coeffs)) < 1e-13

    def test_linearity_exact_to_rounding(self, grid32):
        f = random_field(grid32, seed=1)
        g = random_field(grid32, seed=2)
        lhs = derivative(2.5 * f + (-1.25) * g, 1)
        rhs = 2.5 * derivative(f, 1) + (-1.25) * derivative(g, 1)
        scale = np.max(np.abs(rhs.coeffs)) + 1.0
        assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 4e-16 * scale * grid32.n

    def test_bad_axis(self, grid32):
        with pytest.raises(FieldError):
            derivative(random_field(grid32), 2)


class TestDealiasedProduct:
    def test_sin_cos(self, grid32):
        x = grid32.points()
        f = transform(grid32, np.sin(x[0]))
        g = transform(grid32, np.cos(x[0]))
        prod = dealiased_product(f, g)
        assert np.max(np.abs(prod.to_physical()[0] - 0.5 * np.sin(2 * x[0]))) < 1e-12

    def test_one_times_g_truncates(self, grid32):
        one = transform(grid32, np.ones(grid32.shape))
        g = transform(grid32, np.random.default_rng(3).standard_normal(grid32.shape))
        prod = dealiased_product(one, g)
        expected = g.coeffs * grid32.dealias_mask
        assert np.max(np.abs(prod.coeffs - expected)) < 1e-14

    def test_resolution_doubling_oracle(self):
        """Product of band-limited fields at n=64 vs exact convolution at n=128."""
        g64 = make_grid(2, 64)
        g128 = make_grid(2, 128)
        rng = np.random.default_rng(11)
        cut = 64 // 3
        keep64 = np.abs(g64.modes) <= cut

        def band_field(grid, keep_axis):
            f = transform(grid, rng.standard_normal(grid.shape))
            mask = keep_axis[:, None] & keep_axis[None, :]
            return f, mask

        rng0 = np.random.default_rng(11)
        phys = rng0.standard_normal(g64.shape)
        f64 = transform(g64, phys)
        mask64 = keep64[:, None] & keep64[None, :]
        from criticalflow.fields import apply_multiplier

        f64 = apply_multiplier(f64, mask64.astype(float))
        rng1 = np.random.default_rng(13)
        phys_g = rng1.standard_normal(g64.shape)
        h64 = apply_multiplier(transform(g64, phys_g), mask64.astype(float))

        # place identical coefficients on the n=128 grid
        def upsample(f):
            c = np.zeros((1,) + g128.shape, dtype=complex)
            for i, mi in enumerate(g64.modes):
                for j, mj in enumerate(g64.modes):
                    c[0, mi, mj] = f.coeffs[0, i, j]
            from criticalflow.fields import SpectralField

            return SpectralField(g128, c)

        p64 = dealiased_product(f64, h64)
        p128 = dealiased_product(upsample(f64), upsample(h64))
        # compare on the modes retained by the n=64 2/3 rule
        for mi in range(-cut, cut + 1):
            row64 = p64.coeffs[0, mi, :]
        err = 0.0
        for mi in range(-cut, cut + 1):
            for mj in range(-cut, cut + 1):
                err = max(err, abs(p64.coeffs[0, mi, mj] - p128.coeffs[0, mi, mj]))
        assert err <= 1e-10

    def test_symmetric_bitwise(self, grid32):
        f = random_field(grid32, seed=5)
        g = random_field(grid32, seed=6)
        assert np.array_equal(dealiased_product(f, g).coeffs, dealiased_product(g, f).coeffs)

    def test_grid_mismatch(self, grid32):
        other = make_grid(2, 64)
        with pytest.raises(FieldError):
            dealiased_product(random_field(grid32), random_field(other))


class TestInverseLaplacian:
    def test_sin(self, grid32):
        x = grid32.points()
        f = transform(grid32, -np.sin(x[0]))
        assert np.max(np.abs(inverse_laplacian(f).to_physical()[0] - np.sin(x[0]))) < 1e-12

    def test_constant_to_zero(self, grid32):
        f = transform(grid32, 3.0 * np.ones(grid32.shape))
        assert np.max(np.abs(inverse_laplacian(f).coeffs)) == 0.0

    def test_identity_on_mean_zero(self, grid32):
        f = random_field(grid32, seed=9)
        back = laplacian(inverse_laplacian(f))
        expected = f.coeffs.copy()
        expected[0, 0, 0] = 0.0
        assert np.max(np.abs(back.coeffs - expected)) <= 1e-12 * np.max(np.abs(f.coeffs))


class TestAdvect:
    def test_matches_componentwise_products(self, grid32):
        v = random_field(grid32, components=2, seed=21)
        f = random_field(grid32, seed=22)
        direct = advect(v, f)
        assembled = zero_field(grid32, 1)
        for ax in range(2):
            assembled = assembled + dealiased_product(v.component(ax), derivative(f, ax))
        assert np.max(np.abs(direct.coeffs - assembled.coeffs)) < 1e-12


class TestSnapshotIO:
    def test_round_trip(self, tmp_path, grid32):
        f = random_field(grid32, components=2, seed=31)
        path = tmp_path / "snap.csv"
        save_field(f, path, time=0.625)
        g, t = load_field(path)
        assert t == 0.625
        assert g.grid == grid32
        assert np.max(np.abs(g.coeffs - f.coeffs)) < 1e-12

    def test_header(self, tmp_path, grid32):
        path = tmp_path / "snap.csv"
        save_field(random_field(grid32), path)
        first = path.read_text().splitlines()[0]
        assert first == "dim,n,length,components,time"
