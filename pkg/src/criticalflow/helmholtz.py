"""Helmholtz/Leray projections as degree-zero Fourier multipliers.

Q extracts the potential (gradient) part, P = Id - Q the divergence-free
part.  The zero mode is assigned to P: a mean velocity is trivially
divergence-free, and Q output stays mean-free as befits a gradient.
"""

import numpy as np

from .fields import FieldError, SpectralField


def project_Q(v):
    """Potential part: per mode k != 0, (Qv)^ = k (k . v^) / |k|^2."""
    if not v.is_vector:
        raise FieldError("project_Q needs a vector field")
    grid = v.grid
    k2 = grid.k2
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_k2 = np.where(k2 > 0.0, 1.0 / np.where(k2 > 0.0, k2, 1.0), 0.0)
    kdotv = np.zeros(grid.shape, dtype=np.complex128)
    for ax in range(grid.dim):
        kdotv += grid.kvec[ax] * v.coeffs[ax]
    scal = kdotv * inv_k2
    out = np.empty_like(v.coeffs)
    for ax in range(grid.dim):
        out[ax] = grid.kvec[ax] * scal
    return SpectralField(grid, out)


def project_P(v):
    """Divergence-free part: v - Qv, zero mode retained."""
    return v - project_Q(v)
