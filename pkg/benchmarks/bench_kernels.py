#!/usr/bin/env python3
"""Benchmark the compiled stencil kernels against the numpy reference.

Times the three hot kernels and a full inner CG solve on representative 2D
and 3D grids.  Run after an editable install:

    python3 benchmarks/bench_kernels.py [--repeats 7]
"""

import argparse
import time

import numpy as np

from nlspc import _reference, build_grid, kernels, potential_values
from nlspc.cg import cg_solve
from nlspc.grid import _inv_h2

try:
    from nlspc import _stencil
except ImportError:
    _stencil = None


def make_backend(name):
    if name == "numpy":
        return _reference.laplacian, _reference.apply_operator, \
            _reference.dirichlet_energy
    if _stencil is None:
        raise SystemExit("compiled backend not built; reinstall with Cython")

    def lap(u, inv_h2):
        out = np.empty_like(u)
        if u.ndim == 2:
            _stencil.laplacian_2d(u, *inv_h2, out)
        else:
            _stencil.laplacian_3d(u, *inv_h2, out)
        return out

    def op(u, v, inv_h2):
        out = np.empty_like(u)
        if u.ndim == 2:
            _stencil.apply_operator_2d(u, v, *inv_h2, out)
        else:
            _stencil.apply_operator_3d(u, v, *inv_h2, out)
        return out

    def energy(u, inv_h2):
        if u.ndim == 2:
            return _stencil.dirichlet_energy_2d(u, *inv_h2)
        return _stencil.dirichlet_energy_3d(u, *inv_h2)

    return lap, op, energy


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    grids = [
        ("2D 255x255", build_grid(2, 1, (8.0, 8.0), (255, 255))),
        ("3D 63x63x63", build_grid(3, 2, (6.0, 6.0, 6.0), (63, 63, 63))),
    ]
    backends = ["numpy"] + (["compiled"] if _stencil is not None else [])
    print(f"selected backend at import: {kernels.backend_name}")
    header = f"{'grid':<14}{'kernel':<18}" + "".join(
        f"{b:>12}" for b in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(0)
    for label, spec in grids:
        u = rng.standard_normal(spec.shape)
        vpot = potential_values(spec).values
        inv_h2 = _inv_h2(spec)
        rows = {
            "laplacian": lambda L, O, E: L(u, inv_h2),
            "apply_operator": lambda L, O, E: O(u, vpot, inv_h2),
            "dirichlet_energy": lambda L, O, E: E(u, inv_h2),
        }
        for kernel_name, call in rows.items():
            times = []
            for b in backends:
                fns = make_backend(b)
                times.append(best_of(lambda: call(*fns), args.repeats))
            speed = times[0] / times[-1] if len(times) > 1 else 1.0
            print(f"{label:<14}{kernel_name:<18}" + "".join(
                f"{t * 1e3:>10.2f}ms" for t in times) + f"{speed:>9.2f}x")

        # full CG solve on the bare operator (the solver's inner loop)
        b_rhs = rng.standard_normal(spec.shape)
        times = []
        for b in backends:
            _, op, _ = make_backend(b)
            times.append(best_of(
                lambda: cg_solve(lambda x: op(x, vpot, inv_h2), b_rhs,
                                 rel_tol=1e-8),
                max(1, args.repeats // 3)))
        speed = times[0] / times[-1] if len(times) > 1 else 1.0
        print(f"{label:<14}{'cg_solve 1e-8':<18}" + "".join(
            f"{t * 1e3:>10.2f}ms" for t in times) + f"{speed:>9.2f}x")


if __name__ == "__main__":
    main()
