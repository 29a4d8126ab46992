#!/usr/bin/env python3
"""Benchmark: compiled kernels against the pure-numpy fallback.

Micro-benchmarks the two per-mode kernels at several grid sizes, then times
one full compressible step end to end with each backend.  Run after an
editable install:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

import criticalflow._kernels as kernels
from criticalflow._kernels import _ref

try:
    from criticalflow._kernels import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeat=20):
    fn(*args)  # warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_micro():
    print("== per-mode kernels (best of 20, milliseconds) ==")
    header = f"{'kernel':34s} {'N':>8s} {'numpy':>9s} {'cython':>9s} {'speedup':>8s}"
    print(header)
    rng = np.random.default_rng(0)
    for n in (64, 128, 256):
        N = n * n
        ba = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        bv = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
        kvec = np.ascontiguousarray(rng.standard_normal((2, N)) * 10.0)
        kvec[:, 0] = 0.0
        k2 = np.ascontiguousarray(np.sum(kvec ** 2, axis=0))
        args = (ba, bv, kvec, k2, 3e-4, 1.0, 1e4)
        t_ref = timeit(_ref.implicit_acoustic_solve, *args)
        t_core = timeit(_core.implicit_acoustic_solve, *args) if _core else float("nan")
        print(
            f"{'implicit_acoustic_solve':34s} {N:>8d} {t_ref*1e3:>9.3f} "
            f"{t_core*1e3:>9.3f} {t_ref/t_core:>7.1f}x"
        )
    for n in (64, 128, 256):
        N = n * n
        coeffs = np.ascontiguousarray(
            rng.standard_normal((3, N)) + 1j * rng.standard_normal((3, N))
        )
        weights = np.ascontiguousarray(np.abs(rng.standard_normal((10, N))))
        weights[weights < 1.0] = 0.0  # typical block sparsity
        t_ref = timeit(_ref.block_l2_sq_profile, coeffs, weights)
        t_core = timeit(_core.block_l2_sq_profile, coeffs, weights) if _core else float("nan")
        print(
            f"{'block_l2_sq_profile':34s} {N:>8d} {t_ref*1e3:>9.3f} "
            f"{t_core*1e3:>9.3f} {t_ref/t_core:>7.1f}x"
        )


def bench_step():
    """Whole compressible step with each backend (FFT cost included)."""
    from criticalflow.compressible import CnsConfig, CompressibleSolver
    from criticalflow.dyadic import build_partition
    from criticalflow.experiments import InitSpec, generate_initial_data
    from criticalflow.fields import make_grid

    print("\n== end-to-end compressible step (best of 20, milliseconds) ==")
    for n in (64, 128):
        grid = make_grid(2, n)
        partition = build_partition(grid)
        # density amplitude scaled like the sweeps do (~1/nu) so the stiff
        # explicit-residual bound admits dt = 1e-3
        spec = InitSpec(
            kind="taylor-green", v_amplitude=1.0, q_amplitude=0.3, a_amplitude=1e-5, band=(0, 2)
        )
        a0, v0 = generate_initial_data(spec, grid, partition, seed=0)
        cfg = CnsConfig(grid, 1.0, 1e4 - 2.0, dt=1e-3, t_end=1e-3)
        solver = CompressibleSolver(cfg)

        results = {}
        backends = {"numpy": _ref}
        if _core is not None:
            backends["cython"] = _core
        saved = kernels.implicit_acoustic_solve
        try:
            for name, mod in backends.items():
                kernels.implicit_acoustic_solve = mod.implicit_acoustic_solve
                results[name] = timeit(
                    lambda: solver.step_arrays(a0.coeffs, v0.coeffs, 1e-3), repeat=20
                )
        finally:
            kernels.implicit_acoustic_solve = saved
        core_ms = results.get("cython", float("nan")) * 1e3
        ratio = results["numpy"] / results.get("cython", float("nan"))
        print(
            f"{'cns step n=' + str(n):34s} {n*n:>8d} {results['numpy']*1e3:>9.3f} "
            f"{core_ms:>9.3f} {ratio:>7.2f}x"
        )


if __name__ == "__main__":
    print(f"active backend: {kernels.BACKEND}")
    if _core is None:
        print("compiled kernels not built; numpy timings only")
    bench_micro()
    bench_step()
