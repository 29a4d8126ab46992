# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-mode kernels: fused loops over Fourier modes.

Semantics match `_ref` exactly; see there for the contracts.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def implicit_acoustic_solve(
    cnp.ndarray[cnp.complex128_t, ndim=1] ba,
    cnp.ndarray[cnp.complex128_t, ndim=2] bv,
    cnp.ndarray[cnp.float64_t, ndim=2] kvec,
    cnp.ndarray[cnp.float64_t, ndim=1] k2,
    double c,
    double mu,
    double nu,
):
    cdef Py_ssize_t n = ba.shape[0]
    cdef Py_ssize_t d = bv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xa = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] xv = np.empty((d, n), dtype=np.complex128)
    cdef Py_ssize_t i, a
    cdef double km, kk, det, vfac, kh
    cdef double complex bq, ick, xq, ai, pa
    for i in range(n):
        kk = k2[i]
        if kk == 0.0:
            xa[i] = ba[i]
            for a in range(d):
                xv[a, i] = bv[a, i]
            continue
        km = sqrt(kk)
        bq = 0.0
        for a in range(d):
            bq = bq + kvec[a, i] * bv[a, i]
        bq = bq / km
        det = 1.0 + c * nu * kk + c * c * kk
        ick = 1j * (c * km)
        ai = ((1.0 + c * nu * kk) * ba[i] - ick * bq) / det
        xq = (bq - ick * ba[i]) / det
        vfac = 1.0 / (1.0 + c * mu * kk)
        xa[i] = ai
        for a in range(d):
            kh = kvec[a, i] / km
            pa = (bv[a, i] - bq * kh) * vfac
            xv[a, i] = xq * kh + pa
    return xa, xv


def block_l2_sq_profile(
    cnp.ndarray[cnp.complex128_t, ndim=2] coeffs,
    cnp.ndarray[cnp.float64_t, ndim=2] weights,
):
    cdef Py_ssize_t ncomp = coeffs.shape[0]
    cdef Py_ssize_t n = coeffs.shape[1]
    cdef Py_ssize_t nj = weights.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nj, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dens = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, c, j
    cdef double s, w, re, im
    for i in range(n):
        s = 0.0
        for c in range(ncomp):
            re = coeffs[c, i].real
            im = coeffs[c, i].imag
            s += re * re + im * im
        dens[i] = s
    for j in range(nj):
        s = 0.0
        for i in range(n):
            w = weights[j, i]
            if w != 0.0:
                s += w * w * dens[i]
        out[j] = s
    return out
