"""Iterative engines: constrained descent, multi-start, linear eigenpair.

The ground-state search runs Sobolev-gradient descent with every iterate
projected back to the constraint set: symmetrize, then rescale onto the
Nehari set.  Backtracking line search on the projected energy enforces a
monotone trace.  For the unconstrained scenario the nonlinear terms are
evaluated at the positive part during descent (negative values then only cost
energy), and the output is post-processed to its absolute value, which is the
positive ground state.

``linear_ground_eigenpair`` validates the discretization: inverse power
iteration on the bare confined operator, whose lowest eigenvalue is known in
closed form for harmonic plus box confinement.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import variational as var
from .cg import LinearSolveError, cg_solve
from .grid import Field, GridSpec, _inv_h2, integrate
from .kernels import apply_operator
from .model import NonlinearityModel, potential_values
from .symmetry import SymmetryConstraint, symmetrize


class SolverError(RuntimeError):
    pass


class InternalConsistencyError(SolverError):
    """Projected energy increased along an accepted step."""


class MultiStartError(SolverError):
    def __init__(self, reports):
        self.reports = reports
        lines = ", ".join(f"start {i}: grad={r.grad_residual:.2e}"
                          for i, r in enumerate(reports))
        super().__init__(f"no start converged ({lines})")


@dataclass(frozen=True)
class ArmijoRule:
    c1: float = 1e-4
    backtrack: float = 0.5

    def __post_init__(self):
        if not (0 <= self.c1 < 1):
            raise ValueError("Armijo constant must lie in [0, 1)")
        if not (0 < self.backtrack < 1):
            raise ValueError("backtracking factor must lie in (0, 1)")


@dataclass(frozen=True)
class FixedRule:
    """Fixed trial step; still backtracks if the energy would increase, so the
    monotone-trace guarantee survives."""
    eta: float = 1.0


@dataclass(frozen=True)
class GaussianBump:
    center: tuple | None = None
    width: float = 1.0


@dataclass(frozen=True)
class RandomInit:
    pass


@dataclass(frozen=True)
class FileInit:
    path: str


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    grad_tol: float = 1e-6
    step_rule: object = ArmijoRule()
    lin_tol: float = 1e-8
    seed: int = 0
    init: object = None
    constraint: SymmetryConstraint = field(default_factory=SymmetryConstraint.full_space)

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0 or self.lin_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolveReport:
    final_energy: float
    h_norm_sq: float
    nehari_residual: float
    grad_residual: float
    iterations: int
    nodal_count: int
    symmetry_residual: float
    decay_metric: float
    min_interior_value: float
    trace: list
    converged: bool
    symmetry_exact: bool = True


def _default_init(spec: GridSpec, constraint: SymmetryConstraint,
                  rng: np.random.Generator) -> np.ndarray:
    """Gaussian bump times the sign pattern of the constraint, so the
    symmetrized seed does not vanish."""
    grids = spec.coord_grids()
    r2 = sum((g * np.ones(spec.shape)) ** 2 for g in grids)
    bump = np.exp(-0.5 * r2)
    if constraint.kind == "k_odd":
        pattern = np.ones(spec.shape)
        for a in range(constraint.k):
            pattern = pattern * grids[a]
        return bump * pattern
    if constraint.kind == "cyclic_odd":
        ell = constraint.fold
        zc = (grids[0] + 1j * grids[1]) * np.ones(spec.shape)
        harmonic = np.real(zc ** ell) if ell % 2 == 1 else np.imag(zc ** ell)
        return bump * harmonic
    if constraint.kind == "g_invariant":
        return _random_values(spec, rng)
    return bump


def _random_values(spec: GridSpec, rng: np.random.Generator) -> np.ndarray:
    envelope_w = min(spec.half_widths) / 3.0
    grids = spec.coord_grids()
    r2 = sum((g * np.ones(spec.shape)) ** 2 for g in grids)
    return rng.standard_normal(spec.shape) * np.exp(-0.5 * r2 / envelope_w ** 2)


def _initial_values(spec, config) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    init = config.init
    if init is None:
        return _default_init(spec, config.constraint, rng)
    if isinstance(init, GaussianBump):
        grids = spec.coord_grids()
        center = init.center or (0.0,) * spec.total_dims
        r2 = sum(((g - c) * np.ones(spec.shape)) ** 2
                 for g, c in zip(grids, center))
        return np.exp(-0.5 * r2 / init.width ** 2)
    if isinstance(init, RandomInit):
        return _random_values(spec, rng)
    if isinstance(init, FileInit):
        from .serialization import read_field
        f = read_field(init.path)
        if f.spec != spec:
            raise SolverError("initialization file lives on a different grid")
        return f.values
    raise SolverError(f"unknown init specification {init!r}")


def _l2_norm(u: Field) -> float:
    return math.sqrt(integrate(Field(u.spec, u.values ** 2, validate=False)))


def solve_constrained_ground_state(spec: GridSpec, model: NonlinearityModel,
                                   config: SolverConfig,
                                   V: Field | None = None):
    """Minimize the action on the Nehari set of the constraint subspace.

    Returns ``(field, report)``.  Non-convergence within ``max_iters`` is not
    an exception: the report carries ``converged=False``.
    """
    constraint = config.constraint
    constraint.validate_grid(spec, require_odd_counts=True)
    if V is None:
        V = potential_values(spec)
    positive = constraint.kind == "full"

    values = _initial_values(spec, config)
    u = symmetrize(Field(spec, values), constraint)
    for attempt in range(8):
        ok = float(np.max(np.abs(u.values))) > 0.0
        if ok and positive:
            ok = float(np.max(u.values)) > 0.0
        if ok:
            break
        rng = np.random.default_rng(config.seed + 1000 * (attempt + 1))
        u = symmetrize(Field(spec, _random_values(spec, rng)), constraint)
    else:
        raise SolverError("initialization vanished after symmetrization "
                          "(8 reseed attempts)")

    def project(w: Field) -> Field:
        w = symmetrize(w, constraint)
        t = var.nehari_scale(w, model, V, positive_part=positive)
        return Field(spec, t * w.values, validate=False)

    if isinstance(config.step_rule, ArmijoRule):
        c1, backtrack, eta0 = (config.step_rule.c1,
                               config.step_rule.backtrack, 1.0)
    elif isinstance(config.step_rule, FixedRule):
        c1, backtrack, eta0 = 0.0, 0.5, config.step_rule.eta
    else:
        raise SolverError(f"unknown step rule {config.step_rule!r}")

    u = project(u)
    e = var.energy(u, model, V, positive_part=positive).total
    inv_h2 = _inv_h2(spec)
    trace = []
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iters + 1):
        r = var.first_variation(u, model, V, positive_part=positive)
        try:
            g_vals, _ = cg_solve(
                lambda x: apply_operator(x, V.values, inv_h2),
                r.values, rel_tol=config.lin_tol)
        except LinearSolveError as exc:
            raise var.DescentDirectionError(str(exc)) from exc
        slope = spec.cell_volume * float(np.dot(g_vals.reshape(-1),
                                                r.flat))
        slope = max(slope, 0.0)
        u_h_norm = math.sqrt(var.quadratic_form(u, V))
        grad_res = math.sqrt(slope) / u_h_norm
        trace.append((e, grad_res))

        l2_stat = (_l2_norm(r) / _l2_norm(u))
        if grad_res <= config.grad_tol and l2_stat <= 10.0 * config.grad_tol:
            converged = True
            break

        eta = eta0
        accepted = False
        while eta > 1e-14:
            candidate = project(Field(spec, u.values - eta * g_vals,
                                      validate=False))
            e_new = var.energy(candidate, model, V,
                               positive_part=positive).total
            if e_new <= e - c1 * eta * slope:
                accepted = True
                break
            eta *= backtrack
        if not accepted:
            break
        if e_new > e + 1e-12 * max(1.0, abs(e)):
            raise InternalConsistencyError(
                "projected energy increased along an accepted step")
        u, e = candidate, e_new

    if positive:
        u = project(Field(spec, np.abs(u.values), validate=False))

    report = _build_report(u, model, V, config, trace, iterations, converged)
    return u, report


def gradient_residual(u: Field, model, V: Field, lin_tol: float) -> float:
    """H-norm of the Sobolev gradient relative to the H-norm of u.

    Recomputable from a stored field, which is what ``analyze`` does to
    reproduce the solver report.
    """
    r = var.first_variation(u, model, V)
    g = var.sobolev_gradient(u, model, V, lin_tol)
    slope = u.spec.cell_volume * float(np.dot(g.flat, r.flat))
    return math.sqrt(max(slope, 0.0)) / math.sqrt(var.quadratic_form(u, V))


def _build_report(u, model, V, config, trace, iterations, converged):
    from .analysis import count_nodal_domains, decay_metric
    from .symmetry import symmetry_residual

    bd = var.energy(u, model, V)
    res = var.nehari_residual(u, model, V)
    grad_res = gradient_residual(u, model, V, config.lin_tol)
    max_abs = float(np.max(np.abs(u.values)))
    nodal = count_nodal_domains(u, 1e-6 * max_abs).total if max_abs > 0 else 0
    sym_res = (symmetry_residual(u, config.constraint)
               if config.constraint.kind != "full" and max_abs > 0 else 0.0)
    return SolveReport(
        final_energy=bd.total,
        h_norm_sq=bd.h_norm_sq,
        nehari_residual=res,
        grad_residual=grad_res,
        iterations=iterations,
        nodal_count=nodal,
        symmetry_residual=sym_res,
        decay_metric=decay_metric(u),
        min_interior_value=float(np.min(u.values)),
        trace=trace,
        converged=converged,
        symmetry_exact=config.constraint.is_grid_exact(u.spec),
    )


def _thread_cap() -> int:
    raw = os.environ.get("NLS_THREADS")
    if raw is None:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError("NLS_THREADS must be a positive integer")
    return n


def multi_start(spec: GridSpec, model: NonlinearityModel, config: SolverConfig,
                n_starts: int):
    """Best converged run over seeds seed+0 .. seed+n_starts-1.

    Deterministic given the base seed; runs execute concurrently when
    NLS_THREADS allows, results are ordered by start index either way.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    configs = [replace(config, seed=config.seed + i) for i in range(n_starts)]
    V = potential_values(spec)

    def run(cfg):
        return solve_constrained_ground_state(spec, model, cfg, V=V)

    workers = min(_thread_cap(), n_starts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(cfg) for cfg in configs]

    reports = [rep for _, rep in results]
    converged = [(f, rep) for f, rep in results if rep.converged]
    if not converged:
        raise MultiStartError(reports)
    best_field, best_report = min(converged, key=lambda fr: fr[1].final_energy)
    return best_field, best_report, reports


class EigenSolverError(RuntimeError):
    pass


def linear_ground_eigenpair(spec: GridSpec, V: Field, tol: float,
                            max_iters: int = 200):
    """Lowest eigenpair of the bare operator by inverse power iteration.

    The eigenvector is L2-normalized w.r.t. the quadrature weight and the
    returned Rayleigh quotient satisfies |A phi - lambda phi|_L2 <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    inv_h2 = _inv_h2(spec)
    vol = spec.cell_volume

    def apply_a(x):
        return apply_operator(x, V.values, inv_h2)

    grids = spec.coord_grids()
    r2 = sum((gr * np.ones(spec.shape)) ** 2 for gr in grids)
    x = np.exp(-0.5 * r2)
    x /= math.sqrt(vol * float(np.sum(x * x)))

    lam = float("nan")
    inner_tol = max(min(tol * 1e-2, 1e-8), 1e-14)
    for _ in range(max_iters):
        y, _ = cg_solve(apply_a, x, rel_tol=inner_tol)
        x = y / math.sqrt(vol * float(np.sum(y * y)))
        ax = apply_a(x)
        lam = vol * float(np.sum(x * ax))
        resid = math.sqrt(vol * float(np.sum((ax - lam * x) ** 2)))
        if resid <= tol:
            phi = Field(spec, x if float(np.sum(x)) >= 0 else -x,
                        validate=False)
            return lam, phi
    raise EigenSolverError(
        f"inverse power iteration did not reach tol={tol:g} in "
        f"{max_iters} iterations (last residual {resid:.3e})")
