"""Periodic-domain spectral fields: grids, transforms, derivatives, products.

Fields are stored as full complex Fourier coefficient arrays with the
convention  f(x) = sum_xi c[xi] exp(i * k(xi) . x),  k(xi) = 2*pi*xi/length,
so the zero mode carries the spatial mean.  All operations are pure: they
never mutate their inputs and return fresh fields.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


class GridError(ValueError):
    """Invalid grid parameters."""


class FieldError(ValueError):
    """Field/grid incompatibility."""


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, length)^dim with n points per axis."""

    dim: int
    n: int
    length: float

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n ** self.dim

    @property
    def spacing(self):
        return self.length / self.n

    @cached_property
    def modes(self):
        """Integer mode indices along one axis, FFT layout: 0..n/2-1, -n/2..-1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def kvec(self):
        """Physical wavevectors, shape (dim,) + shape: k_axis = 2*pi*mode/length."""
        scale = TWO_PI / self.length
        axes = np.meshgrid(*([self.modes] * self.dim), indexing="ij")
        return np.stack([scale * ax for ax in axes]).astype(np.float64)

    @cached_property
    def k2(self):
        """|k|^2 per mode."""
        return np.sum(self.kvec ** 2, axis=0)

    @cached_property
    def kmod(self):
        """|k| per mode."""
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: True where |mode_axis| <= n/3 on every axis."""
        cut = self.n // 3
        keep = np.abs(self.modes) <= cut
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            mask &= keep.reshape(shape)
        return mask

    def points(self):
        """Physical coordinates, shape (dim,) + shape."""
        x = np.arange(self.n) * self.spacing
        axes = np.meshgrid(*([x] * self.dim), indexing="ij")
        return np.stack(axes)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.dim, self.n) == (other.dim, other.n) and np.isclose(
            self.length, other.length, rtol=0.0, atol=1e-14 * max(1.0, abs(self.length))
        )

    def __hash__(self):
        return hash((self.dim, self.n, round(self.length, 14)))


def make_grid(dim, n, length=TWO_PI):
    """Validated Grid constructor with precomputed wavevector tables."""
    if dim not in (2, 3):
        raise GridError(f"dim must be 2 or 3, got {dim}")
    if not isinstance(n, (int, np.integer)) or not _is_power_of_two(int(n)) or n < 8:
        raise GridError(f"n must be a power of two >= 8, got {n}")
    if not length > 0:
        raise GridError(f"length must be positive, got {length}")
    grid = Grid(int(dim), int(n), float(length))
    grid.kvec  # force table construction
    return grid


@dataclass(frozen=True)
class SpectralField:
    """Real scalar/vector field stored as Fourier coefficients.

    coeffs has shape (components,) + grid.shape, complex128, with conjugate
    symmetry (the physical field is real).  components is 1 for scalars and
    grid.dim for vectors.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = self.grid.shape
        if self.coeffs.ndim != self.grid.dim + 1 or self.coeffs.shape[1:] != expected:
            raise FieldError(
                f"coefficient shape {self.coeffs.shape} does not match grid {expected}"
            )
        if self.coeffs.dtype != np.complex128:
            object.__setattr__(self, "coeffs", self.coeffs.astype(np.complex128))
        self.coeffs.setflags(write=False)

    @property
    def components(self):
        return self.coeffs.shape[0]

    @property
    def is_scalar(self):
        return self.components == 1

    @property
    def is_vector(self):
        return self.components == self.grid.dim

    def to_physical(self):
        """Sample values on the grid; shape (components,) + grid.shape."""
        axes = tuple(range(1, self.grid.dim + 1))
        return np.real(np.fft.ifftn(self.coeffs, axes=axes) * self.grid.size)

    def mean(self):
        """Spatial mean per component."""
        idx = (slice(None),) + (0,) * self.grid.dim
        return np.real(self.coeffs[idx])

    def l2_norm(self):
        """L2 norm over the domain (all components), by Parseval."""
        vol = self.grid.length ** self.grid.dim
        return float(np.sqrt(vol * np.sum(np.abs(self.coeffs) ** 2)))

    def max_norm(self):
        """Max over grid points of the pointwise Euclidean magnitude."""
        phys = self.to_physical()
        return float(np.max(np.sqrt(np.sum(phys ** 2, axis=0))))

    def component(self, i):
        return SpectralField(self.grid, self.coeffs[i : i + 1].copy())

    def __add__(self, other):
        _check_same(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


def _check_same(f, g):
    if f.grid != g.grid:
        raise FieldError("fields live on different grids")
    if f.components != g.components:
        raise FieldError("component count mismatch")


def zero_field(grid, components=1):
    return SpectralField(grid, np.zeros((components,) + grid.shape, dtype=np.complex128))


def transform(grid, samples):
    """Physical samples -> SpectralField.

    samples may have shape grid.shape (scalar) or (components,) + grid.shape.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.shape == grid.shape:
        arr = arr[np.newaxis]
    if arr.shape[1:] != grid.shape:
        raise FieldError(f"sample shape {np.asarray(samples).shape} does not match grid")
    axes = tuple(range(1, grid.dim + 1))
    coeffs = np.fft.fftn(arr, axes=axes) / grid.size
    return SpectralField(grid, coeffs)


def derivative(f, axis, order=1):
    """Differentiate: multiply mode xi by (i * 2*pi*xi_axis / length)^order."""
    if not 0 <= axis < f.grid.dim:
        raise FieldError(f"axis {axis} out of range for dim {f.grid.dim}")
    if order < 1:
        raise FieldError("order must be >= 1")
    mult = (1j * f.grid.kvec[axis]) ** order
    return SpectralField(f.grid, f.coeffs * mult)


def gradient(f):
    """Full gradient; output components ordered [component, axis]."""
    grid = f.grid
    out = np.empty((f.components * grid.dim,) + grid.shape, dtype=np.complex128)
    for c in range(f.components):
        for ax in range(grid.dim):
            out[c * grid.dim + ax] = f.coeffs[c] * (1j * grid.kvec[ax])
    return SpectralField(grid, out)


def divergence(f):
    """Divergence of a vector field -> scalar field."""
    if not f.is_vector:
        raise FieldError("divergence needs a vector field")
    coeffs = np.zeros((1,) + f.grid.shape, dtype=np.complex128)
    for ax in range(f.grid.dim):
        coeffs[0] += 1j * f.grid.kvec[ax] * f.coeffs[ax]
    return SpectralField(f.grid, coeffs)


def laplacian(f):
    return SpectralField(f.grid, f.coeffs * (-f.grid.k2))


def apply_multiplier(f, mult):
    """Apply a scalar Fourier multiplier (array over grid modes)."""
    return SpectralField(f.grid, f.coeffs * mult)


def inverse_laplacian(f):
    """Divide mode xi != 0 by -|k|^2; the zero mode is annihilated."""
    grid = f.grid
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(grid.k2 > 0.0, -1.0 / np.where(grid.k2 > 0.0, grid.k2, 1.0), 0.0)
    return SpectralField(grid, f.coeffs * inv)


def _truncate(coeffs, grid):
    return coeffs * grid.dealias_mask


def dealiased_product(f, g):
    """Pointwise product with the 2/3 rule applied before and after.

    Component rules: scalar*scalar, scalar*vector (broadcast), or
    componentwise for equal component counts.
    """
    if f.grid != g.grid:
        raise FieldError("dealiased_product: grid mismatch")
    grid = f.grid
    if f.components != g.components and 1 not in (f.components, g.components):
        raise FieldError("dealiased_product: incompatible component counts")
    axes = tuple(range(1, grid.dim + 1))
    fp = np.real(np.fft.ifftn(_truncate(f.coeffs, grid), axes=axes) * grid.size)
    gp = np.real(np.fft.ifftn(_truncate(g.coeffs, grid), axes=axes) * grid.size)
    prod = fp * gp
    coeffs = _truncate(np.fft.fftn(prod, axes=axes) / grid.size, grid)
    return SpectralField(grid, coeffs)


def advect(v, f):
    """Dealiased convective term (v . grad) f, batched over FFT calls."""
    if not v.is_vector:
        raise FieldError("advect needs a vector advecting field")
    if v.grid != f.grid:
        raise FieldError("advect: grid mismatch")
    grid = v.grid
    axes = tuple(range(1, grid.dim + 1))
    vp = np.real(np.fft.ifftn(_truncate(v.coeffs, grid), axes=axes) * grid.size)
    out_phys = np.zeros((f.components,) + grid.shape)
    fc = _truncate(f.coeffs, grid)
    for ax in range(grid.dim):
        dc = fc * (1j * grid.kvec[ax])
        dp = np.real(np.fft.ifftn(dc, axes=axes) * grid.size)
        out_phys += vp[ax] * dp
    coeffs = _truncate(np.fft.fftn(out_phys, axes=axes) / grid.size, grid)
    return SpectralField(grid, coeffs)
