"""Independent brute-force references for the main build.

The dense matrix is assembled from Kronecker products of 1D tridiagonals (not
from the stencil kernels), the scale scan evaluates the functional on actually
scaled fields over a log grid, and the gradient check differentiates the
energy by central differences.  None of these call the routines they are
meant to validate.
"""

from dataclasses import dataclass

import numpy as np

from . import variational as var
from .grid import Field, GridSpec

DENSE_SIZE_CAP = 4096


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleTolerance:
    name: str
    abs_tol: float
    rel_tol: float

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise OracleError("tolerances must be positive")


DEFAULT_TOLERANCES = {
    t.name: t for t in (
        OracleTolerance("laplacian_vs_dense", 1e-12, 1e-12),
        OracleTolerance("eigenpair_vs_dense", 1e-8, 1e-8),
        OracleTolerance("nehari_scale_vs_scan", 1e-8, 3e-3),
        OracleTolerance("first_variation_vs_fd", 1e-6, 1e-6),
        OracleTolerance("sobolev_gradient_vs_dense", 1e-10, 1e-10),
    )
}


def dense_operator_matrix(spec: GridSpec, V: Field) -> np.ndarray:
    """Explicit matrix of -laplacian + V from 1D tridiagonal Kroneckers."""
    if spec.size > DENSE_SIZE_CAP:
        raise OracleError(f"dense oracle capped at {DENSE_SIZE_CAP} points, "
                          f"grid has {spec.size}")
    if V.spec != spec:
        raise OracleError("potential lives on a different grid")
    mats = []
    for a in range(spec.total_dims):
        n = spec.points_per_axis[a]
        h2 = spec.spacings[a] ** 2
        t = (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h2
        mats.append(t)
    total = np.zeros((spec.size, spec.size))
    for a, t in enumerate(mats):
        term = np.eye(1)
        for b in range(spec.total_dims):
            block = t if b == a else np.eye(spec.points_per_axis[b])
            term = np.kron(term, block)
        total += term
    total += np.diag(V.flat)
    return total


@dataclass(frozen=True)
class ScaleScan:
    t_residual_root: float
    t_energy_max: float
    sign_changes: int
    t_grid: np.ndarray


def dense_scale_scan(u: Field, model, V: Field, t_grid=None) -> ScaleScan:
    """Evaluate the functional and the Nehari residual on scaled copies of u.

    The residual of t*u vanishes like t^2 at the origin, so the argmin is
    taken over |residual|/t^2, which removes the degenerate root and leaves
    the single genuine crossing.  Under the monotonicity hypothesis the
    residual changes sign exactly once and the crossing coincides with the
    energy argmax (the fibering peak).
    """
    if float(np.max(np.abs(u.values))) == 0.0:
        raise var.ZeroFieldError("scale scan is undefined on the zero field")
    if t_grid is None:
        t_grid = np.logspace(-6.0, 6.0, 10_000)
    t_grid = np.asarray(t_grid, dtype=float)
    residuals = np.empty(len(t_grid))
    energies = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        scaled = Field(u.spec, t * u.values, validate=False)
        residuals[i] = var.nehari_residual(scaled, model, V)
        energies[i] = var.energy(scaled, model, V).total
    signs = np.sign(residuals)
    changes = int(np.count_nonzero(np.diff(signs[signs != 0])))
    normalized = np.abs(residuals) / t_grid**2
    return ScaleScan(
        t_residual_root=float(t_grid[int(np.argmin(normalized))]),
        t_energy_max=float(t_grid[int(np.argmax(energies))]),
        sign_changes=changes,
        t_grid=t_grid,
    )


@dataclass(frozen=True)
class GradientCheck:
    defects: dict
    observed_order: float
    worst_defect: float


def fd_gradient_check(u: Field, model, V: Field, directions,
                      eps_list=(1e-2, 1e-3, 1e-4)) -> GradientCheck:
    """Central differences of the energy against the first variation.

    ``defects[eps]`` is the worst absolute mismatch over the directions;
    ``observed_order`` is the least-squares slope of log defect vs log eps.
    """
    r = var.first_variation(u, model, V)
    defects = {}
    for eps in eps_list:
        worst = 0.0
        for v in directions:
            up = Field(u.spec, u.values + eps * v.values, validate=False)
            down = Field(u.spec, u.values - eps * v.values, validate=False)
            fd = (var.energy(up, model, V).total
                  - var.energy(down, model, V).total) / (2.0 * eps)
            analytic = u.spec.cell_volume * float(
                np.sum(v.values * r.values))
            worst = max(worst, abs(fd - analytic))
        defects[eps] = worst
    xs = np.log(np.array(sorted(defects)))
    ys = np.log(np.array([max(defects[e], 1e-300) for e in sorted(defects)]))
    if len(xs) >= 2 and np.ptp(xs) > 0:
        order = float(np.polyfit(xs, ys, 1)[0])
    else:
        order = float("nan")
    return GradientCheck(defects, order, max(defects.values()))
