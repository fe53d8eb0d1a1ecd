"""Conjugate gradient iteration for the symmetric positive definite stencils."""

from dataclasses import dataclass

import numpy as np


class LinearSolveError(RuntimeError):
    """CG failed to reach the requested residual within the iteration cap."""


@dataclass(frozen=True)
class CGInfo:
    iterations: int
    relative_residual: float


def cg_solve(apply_a, b: np.ndarray, rel_tol: float, max_iters: int | None = None,
             x0: np.ndarray | None = None):
    """Solve A x = b for SPD ``apply_a`` to |A x - b| <= rel_tol |b|.

    Starting from zero the iterates satisfy <x, b> >= 0 (CG minimizes the
    quadratic energy, which is nonpositive at every iterate).
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    b_norm = float(np.linalg.norm(b.reshape(-1)))
    if b_norm == 0.0:
        return np.zeros_like(b), CGInfo(0, 0.0)
    if max_iters is None:
        max_iters = max(200, 10 * b.size)

    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_a(x) if x0 is not None else b.copy()
    p = r.copy()
    rs = float(np.dot(r.reshape(-1), r.reshape(-1)))
    target = rel_tol * b_norm

    for it in range(1, max_iters + 1):
        ap = apply_a(p)
        denom = float(np.dot(p.reshape(-1), ap.reshape(-1)))
        if denom <= 0.0:
            raise LinearSolveError("operator is not positive definite along "
                                   "the search direction")
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.dot(r.reshape(-1), r.reshape(-1)))
        if np.sqrt(rs_new) <= target:
            return x, CGInfo(it, np.sqrt(rs_new) / b_norm)
        p = r + (rs_new / rs) * p
        rs = rs_new

    raise LinearSolveError(f"CG did not converge in {max_iters} iterations "
                           f"(residual {np.sqrt(rs) / b_norm:.3e}, "
                           f"target {rel_tol:.3e})")
