"""Kernel backend selection: compiled extension when available, numpy otherwise.

The compiled backend covers 2D/3D contiguous arrays (the hot shapes for the
solver); every other case routes to the numpy reference.  Set NLS_KERNEL=numpy
to force the fallback, e.g. for benchmarking or debugging.
"""

import os

import numpy as np

from . import _reference

_compiled = None
if os.environ.get("NLS_KERNEL", "auto").lower() != "numpy":
    try:
        from . import _stencil as _compiled
    except ImportError:
        _compiled = None

backend_name = "compiled" if _compiled is not None else "numpy"


def available_backends() -> tuple:
    return ("numpy", "compiled") if _compiled is not None else ("numpy",)


def laplacian(u: np.ndarray, inv_h2: tuple) -> np.ndarray:
    if _compiled is not None and u.ndim in (2, 3) and u.flags.c_contiguous:
        out = np.empty_like(u)
        if u.ndim == 2:
            _compiled.laplacian_2d(u, inv_h2[0], inv_h2[1], out)
        else:
            _compiled.laplacian_3d(u, inv_h2[0], inv_h2[1], inv_h2[2], out)
        return out
    return _reference.laplacian(u, inv_h2)


def apply_operator(u: np.ndarray, vpot: np.ndarray, inv_h2: tuple) -> np.ndarray:
    if (_compiled is not None and u.ndim in (2, 3)
            and u.flags.c_contiguous and vpot.flags.c_contiguous):
        out = np.empty_like(u)
        if u.ndim == 2:
            _compiled.apply_operator_2d(u, vpot, inv_h2[0], inv_h2[1], out)
        else:
            _compiled.apply_operator_3d(u, vpot, inv_h2[0], inv_h2[1],
                                        inv_h2[2], out)
        return out
    return _reference.apply_operator(u, vpot, inv_h2)


def dirichlet_energy(u: np.ndarray, inv_h2: tuple) -> float:
    if _compiled is not None and u.ndim in (2, 3) and u.flags.c_contiguous:
        if u.ndim == 2:
            return _compiled.dirichlet_energy_2d(u, inv_h2[0], inv_h2[1])
        return _compiled.dirichlet_energy_3d(u, inv_h2[0], inv_h2[1], inv_h2[2])
    return _reference.dirichlet_energy(u, inv_h2)
