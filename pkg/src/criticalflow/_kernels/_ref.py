"""Pure-numpy reference implementations of the hot per-mode kernels.

The compiled extension (`_core`) provides the same functions with identical
semantics; either backend must pass the same test suite.
"""

import numpy as np


def implicit_acoustic_solve(ba, bv, kvec, k2, c, mu, nu):
    """Solve (I - c*A) x = b per Fourier mode.

    A couples the density-like scalar a and the velocity v through
        a' = -i k . v
        v' = -mu|k|^2 v - (nu - mu) k (k.v)/|k|^2 * |k|^2 - i k a
    i.e. the potential velocity component sees the full viscosity nu and the
    acoustic coupling, the transverse part only mu.  Shapes: ba (N,), bv
    (d, N) complex128; kvec (d, N), k2 (N,) float64.  Returns (xa, xv).
    """
    km = np.sqrt(k2)
    safe_km = np.where(km > 0.0, km, 1.0)
    bq = np.einsum("di,di->i", kvec, bv) / safe_km  # longitudinal RHS component
    det = 1.0 + c * nu * k2 + (c * c) * k2
    ick = 1j * c * km
    xa = ((1.0 + c * nu * k2) * ba - ick * bq) / det
    xq = (bq - ick * ba) / det
    khat = kvec / safe_km
    perp = (bv - bq * khat) / (1.0 + c * mu * k2)
    xv = xq * khat + perp
    zero = km == 0.0
    if np.any(zero):
        xa = np.where(zero, ba, xa)
        xv = np.where(zero, bv, xv)
    return xa, xv


def block_l2_sq_profile(coeffs, weights):
    """Per-block weighted spectral energies.

    coeffs: (C, N) complex128; weights: (J, N) float64 (block multiplier
    values; squared internally).  Returns out (J,) with
    out[j] = sum_i weights[j, i]^2 * sum_c |coeffs[c, i]|^2.
    """
    dens = np.sum(np.abs(coeffs) ** 2, axis=0)
    return (weights * weights) @ dens
