"""Energy functional, first variation, and the Nehari/fibering machinery.

The action is J(u) = (1/2) [dirichlet_energy(u) + int V u^2] - int F(u), whose
critical points solve the confined equation.  ``positive_part=True`` switches
the nonlinear terms to evaluate F and f at max(u, 0); descent on that variant
cannot profit from negative values, which is how the positive ground state is
produced before taking absolute values.

Every nonzero field has a unique positive scale t* placing t* u on the Nehari
set (the superquadratic growth makes the residual strictly monotone in t);
``nehari_scale`` finds it in closed form for a single power and by bracketed
Newton otherwise, while ``fibering_max`` locates the same point independently
as the peak of t -> J(t u).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cg import LinearSolveError, cg_solve
from .grid import Field, dirichlet_energy, same_grid, _inv_h2
from .model import NonlinearityModel


class ZeroFieldError(ValueError):
    """Operation undefined on the zero field."""


class NumericalOverflowError(ArithmeticError):
    """A functional evaluation produced a non-finite intermediate."""


class DescentDirectionError(RuntimeError):
    """Inner linear solve for the descent direction failed."""


@dataclass(frozen=True)
class EnergyBreakdown:
    h_norm_sq: float
    kinetic_part: float
    potential_part: float
    nonlinear_part: float
    total: float


def _effective(u: Field, positive_part: bool) -> np.ndarray:
    return np.maximum(u.values, 0.0) if positive_part else u.values


def quadratic_form(u: Field, V: Field) -> float:
    """|u|_H^2 = dirichlet_energy(u) + int V u^2."""
    same_grid(u, V)
    return dirichlet_energy(u) + u.spec.cell_volume * float(
        np.sum(V.values * u.values * u.values))


def h_inner_product(u: Field, v: Field, V: Field) -> float:
    """Polarization (1/4)[Q(u+v) - Q(u-v)] of the quadratic form above."""
    same_grid(u, v, V)
    plus = Field(u.spec, u.values + v.values, validate=False)
    minus = Field(u.spec, u.values - v.values, validate=False)
    return 0.25 * (quadratic_form(plus, V) - quadratic_form(minus, V))


def energy(u: Field, model: NonlinearityModel | None, V: Field,
           positive_part: bool = False) -> EnergyBreakdown:
    same_grid(u, V)
    kinetic = dirichlet_energy(u)
    potential = u.spec.cell_volume * float(np.sum(V.values * u.values ** 2))
    if model is None:
        nonlinear = 0.0
    else:
        nonlinear = u.spec.cell_volume * float(
            np.sum(model.F(_effective(u, positive_part))))
    h_norm_sq = kinetic + potential
    total = 0.5 * h_norm_sq - nonlinear
    for name, value in (("kinetic", kinetic), ("potential", potential),
                        ("nonlinear", nonlinear), ("total", total)):
        if not math.isfinite(value):
            raise NumericalOverflowError(f"{name} part of the energy is not finite")
    return EnergyBreakdown(h_norm_sq, kinetic, potential, nonlinear, total)


def first_variation(u: Field, model: NonlinearityModel | None, V: Field,
                    positive_part: bool = False) -> Field:
    """L2 representation of the derivative: -lap(u) + V u - f(u)."""
    same_grid(u, V)
    r = kernels.apply_operator(u.values, V.values, _inv_h2(u.spec))
    if model is not None:
        r = r - model.f(_effective(u, positive_part))
    return Field(u.spec, r, validate=False)


def sobolev_gradient(u: Field, model: NonlinearityModel | None, V: Field,
                     lin_tol: float, positive_part: bool = False,
                     max_iters: int | None = None) -> Field:
    """Gradient in the confined Sobolev metric: solves (-lap + V) g = J'(u).

    The preconditioner is the SPD stencil itself, so <g, J'(u)>_L2 = |g|_H^2
    is nonnegative by construction.
    """
    if lin_tol <= 0:
        raise ValueError("lin_tol must be positive")
    r = first_variation(u, model, V, positive_part)
    inv_h2 = _inv_h2(u.spec)
    try:
        g, _ = cg_solve(lambda x: kernels.apply_operator(x, V.values, inv_h2),
                        r.values, rel_tol=lin_tol, max_iters=max_iters)
    except LinearSolveError as exc:
        raise DescentDirectionError(str(exc)) from exc
    return Field(u.spec, g, validate=False)


def nehari_residual(u: Field, model: NonlinearityModel, V: Field,
                    positive_part: bool = False) -> float:
    """|u|_H^2 - int f(u) u; zero exactly on the constraint set."""
    same_grid(u, V)
    ueff = _effective(u, positive_part)
    nonlinear = u.spec.cell_volume * float(np.sum(model.f(ueff) * ueff))
    return quadratic_form(u, V) - nonlinear


def _moments(u: Field, model: NonlinearityModel, positive_part: bool):
    """Power moments int a_j |u|^(p_j); with them the scaled residual is
    t^2 Q - sum_j M_j t^(p_j), exact for the sum-of-powers family."""
    ueff = np.abs(_effective(u, positive_part))
    vol = u.spec.cell_volume
    return [(p, a * vol * float(np.sum(ueff ** p))) for a, p in model.terms]


def nehari_scale(u: Field, model: NonlinearityModel, V: Field,
                 positive_part: bool = False, method: str = "auto") -> float:
    """Unique t* > 0 with t* u on the Nehari set.

    Single power p: closed form (Q / M_p)^(1/(p-2)).  Multiple terms: the map
    phi(t) = Q - sum_j M_j t^(p_j - 2) is strictly decreasing from Q > 0 to
    -inf, so the root is bracketed by doubling and polished with safeguarded
    Newton until |t^2 phi(t)| <= 1e-10 * Q(t u).  ``method`` forces one route
    ("closed_form" is only available for a single power); the two are
    cross-validated against each other and against the dense scan.
    """
    if method not in ("auto", "closed_form", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    q = quadratic_form(u, V)
    if q == 0.0:
        raise ZeroFieldError("nehari_scale is undefined on the zero field")
    moments = _moments(u, model, positive_part)
    total_m = sum(m for _, m in moments)
    if total_m <= 0.0:
        raise ZeroFieldError("nonlinear term vanishes on this field "
                             "(positive part is zero?)")
    if len(moments) == 1 and method != "iterative":
        p, m = moments[0]
        return (q / m) ** (1.0 / (p - 2.0))
    if method == "closed_form":
        raise ValueError("closed form needs a single-power nonlinearity")

    def phi(t):
        return q - sum(m * t ** (p - 2.0) for p, m in moments)

    def dphi(t):
        return -sum((p - 2.0) * m * t ** (p - 3.0) for p, m in moments)

    lo, hi = 1.0, 1.0
    while phi(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ZeroFieldError("no Nehari crossing below t = 1e12")
    while phi(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-12:
            raise ZeroFieldError("no Nehari crossing above t = 1e-12")

    t = 0.5 * (lo + hi)
    for _ in range(200):
        val = phi(t)
        if val > 0.0:
            lo = t
        else:
            hi = t
        step = val / dphi(t)
        t_new = t - step
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * t:
            t = t_new
            break
        t = t_new
    if abs(t * t * phi(t)) > 1e-10 * (t * t * q):
        raise ArithmeticError("Nehari root finder did not reach tolerance")
    return t


def scaled_energy(t: float, q: float, moments_f: list) -> float:
    """J(t u) from precomputed moments: (1/2) t^2 Q - sum (a_j/p_j)|u|^p t^p."""
    return 0.5 * t * t * q - sum(mf * t ** p for p, mf in moments_f)


def fibering_max(u: Field, model: NonlinearityModel, V: Field,
                 positive_part: bool = False) -> tuple:
    """Maximize t -> J(t u) over t > 0: log-grid bracketing, then golden section.

    Independent of ``nehari_scale``; under the monotonicity hypothesis the two
    coincide and the pair is cross-checked in the tests.
    """
    q = quadratic_form(u, V)
    if q == 0.0:
        raise ZeroFieldError("fibering_max is undefined on the zero field")
    moments = _moments(u, model, positive_part)
    if sum(m for _, m in moments) <= 0.0:
        raise ZeroFieldError("nonlinear term vanishes on this field")
    moments_f = [(p, m / p) for p, m in moments]

    ts = np.logspace(-6.0, 6.0, 241)
    vals = [scaled_energy(t, q, moments_f) for t in ts]
    k = int(np.argmax(vals))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, len(ts) - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = scaled_energy(c, q, moments_f)
    fd = scaled_energy(d, q, moments_f)
    while b - a > 1e-12 * max(1.0, b):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = scaled_energy(c, q, moments_f)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = scaled_energy(d, q, moments_f)
    t_max = 0.5 * (a + b)
    return t_max, scaled_energy(t_max, q, moments_f)
