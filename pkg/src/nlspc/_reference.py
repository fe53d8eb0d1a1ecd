"""Pure numpy stencil kernels (reference implementation, any dimension).

These are the fallback for the compiled extension and the ground truth it is
benchmarked against.  All functions treat the array as interior values of a
Dirichlet box: every neighbour outside the array is an implicit zero.
"""

import numpy as np

BACKEND = "numpy"


def laplacian(u: np.ndarray, inv_h2: tuple) -> np.ndarray:
    """Second-order central-difference Laplacian with zero ghost values."""
    out = u * (-2.0 * float(sum(inv_h2)))
    for axis, w in enumerate(inv_h2):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        out[lo] += w * u[hi]
        out[hi] += w * u[lo]
    return out


def apply_operator(u: np.ndarray, vpot: np.ndarray, inv_h2: tuple) -> np.ndarray:
    """Fused -laplacian(u) + vpot*u."""
    out = u * (2.0 * float(sum(inv_h2)) + vpot)
    for axis, w in enumerate(inv_h2):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        out[lo] -= w * u[hi]
        out[hi] -= w * u[lo]
    return out


def dirichlet_energy(u: np.ndarray, inv_h2: tuple) -> float:
    """Sum over axes of squared forward differences, boundary faces included.

    Unscaled by the cell volume; the caller applies the quadrature weight.
    """
    total = 0.0
    for axis, w in enumerate(inv_h2):
        d = np.diff(u, axis=axis)
        acc = float(np.sum(d * d))
        first = [slice(None)] * u.ndim
        last = [slice(None)] * u.ndim
        first[axis] = 0
        last[axis] = -1
        acc += float(np.sum(u[tuple(first)] ** 2))
        acc += float(np.sum(u[tuple(last)] ** 2))
        total += w * acc
    return total
