"""Independent oracles used by the tests.

These deliberately avoid the package's own evaluation paths: the Besov
oracle re-evaluates the profile in multi-precision arithmetic and re-derives
the mode table; the two-mode commutator oracle assembles products by hand
convolution over explicit mode dictionaries.
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def mp_bump(t):
    t = mp.mpf(t)
    if t <= 0:
        return mp.mpf(0)
    if t >= 1:
        return mp.mpf(1)
    a = mp.exp(-1 / t)
    b = mp.exp(-1 / (1 - t))
    return a / (a + b)


def mp_chi(r):
    r = abs(mp.mpf(r))
    return mp_bump((mp.mpf(4) / 3 - r) / (mp.mpf(4) / 3 - mp.mpf(3) / 4))


def mp_phi(r):
    r = mp.mpf(r)
    return mp_chi(r / 2) - mp_chi(r)


def _modes(n):
    return [i if i < n // 2 else i - n for i in range(n)]


def besov_oracle(coeffs, dim, n, length, s, j_min, j_max):
    """Direct high-precision evaluation of sum_j 2^{js} ||Delta_j f||_L2.

    coeffs: complex ndarray (components,) + (n,)*dim, same layout as the
    toolkit uses, but everything else re-derived here.
    """
    scale = 2 * mp.pi / mp.mpf(length)
    modes = _modes(n)
    dens = np.sum(np.abs(coeffs) ** 2, axis=0)
    # bucket |k|^2 (exact integers in mode units) -> accumulated density
    buckets = {}
    it = np.ndindex(*([n] * dim))
    for idx in it:
        m2 = sum(modes[i] ** 2 for i in idx)
        if m2 == 0:
            continue
        buckets[m2] = buckets.get(m2, 0.0) + float(dens[idx])
    vol = mp.mpf(length) ** dim
    total = mp.mpf(0)
    for j in range(j_min, j_max + 1):
        acc = mp.mpf(0)
        for m2, d in buckets.items():
            r = mp.sqrt(mp.mpf(m2)) * scale / mp.mpf(2) ** j
            w = mp_phi(r)
            if w != 0:
                acc += w * w * mp.mpf(d)
        total += mp.mpf(2) ** (mp.mpf(j) * s) * mp.sqrt(vol * acc)
    return float(total)


class ModeDict:
    """Tiny spectral representation over explicit integer modes (tests only)."""

    def __init__(self, dim, length, data=None):
        self.dim = dim
        self.length = length
        self.data = dict(data or {})

    def add(self, mode, coef):
        mode = tuple(int(m) for m in mode)
        self.data[mode] = self.data.get(mode, 0.0) + coef
        return self

    def kvec(self, mode):
        return 2 * np.pi * np.asarray(mode, dtype=float) / self.length

    def l2(self):
        vol = self.length ** self.dim
        return np.sqrt(vol * sum(abs(c) ** 2 for c in self.data.values()))


def real_mode_pair(dim, length, mode, coef):
    """Real single-frequency scalar: coef at +mode, conj at -mode."""
    f = ModeDict(dim, length)
    f.add(mode, coef)
    f.add(tuple(-m for m in mode), np.conj(coef))
    return f


def convolve(f, g):
    """Pointwise product via convolution of mode dictionaries."""
    out = ModeDict(f.dim, f.length)
    for m1, c1 in f.data.items():
        for m2, c2 in g.data.items():
            out.add(tuple(a + b for a, b in zip(m1, m2)), c1 * c2)
    return out


def directional_derivative(f, direction):
    """(w_hat . grad) with a CONSTANT direction applied modewise: returns
    i (k . direction) f per mode (helper for assembling w . grad f)."""
    out = ModeDict(f.dim, f.length)
    for m, c in f.data.items():
        out.add(m, 1j * float(np.dot(f.kvec(m), direction)) * c)
    return out


def advect_modes(w_components, f):
    """w . grad f for w given as a list of scalar ModeDicts (components)."""
    out = ModeDict(f.dim, f.length)
    for ax, w in enumerate(w_components):
        df = ModeDict(f.dim, f.length)
        for m, c in f.data.items():
            df.add(m, 1j * f.kvec(m)[ax] * c)
        prod = convolve(w, df)
        for m, c in prod.data.items():
            out.add(m, c)
    return out


def apply_phi_block(f, j):
    """Delta_j on a ModeDict with the high-precision profile."""
    out = ModeDict(f.dim, f.length)
    for m, c in f.data.items():
        r = float(np.linalg.norm(f.kvec(m))) / 2.0 ** j
        out.add(m, float(mp_phi(r)) * c)
    return out


def besov_of_modes(f, s, j_min, j_max):
    total = 0.0
    for j in range(j_min, j_max + 1):
        total += 2.0 ** (j * s) * apply_phi_block(f, j).l2()
    return total
