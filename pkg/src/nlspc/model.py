"""Confinement potential and the sum-of-powers nonlinearity family.

The nonlinearity is restricted to finite positive combinations of pure powers
f(s) = sum_j a_j |s|^(p_j - 2) s with every p_j > 2.  For this family the
standard structural hypotheses (superlinearity at zero, subcritical growth,
the Ambrosetti-Rabinowitz inequality with gamma = min p_j, and strict
monotonicity of f(s)/|s|) hold by construction and are machine-checkable;
``check_hypotheses`` verifies them and reports a growth-bound witness for the
derivative.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, GridSpec


class ModelError(ValueError):
    """Invalid nonlinearity or potential construction."""


@dataclass(frozen=True)
class PotentialModel:
    """Harmonic potential on the first ``confined_dims`` coordinates."""

    confined_dims: int

    def values(self, spec: GridSpec) -> Field:
        return potential_values(spec, self.confined_dims)


def potential_values(spec: GridSpec, confined_dims: int | None = None) -> Field:
    """Field of x_1^2 + ... + x_m^2 at every interior node."""
    m = spec.confined_dims if confined_dims is None else confined_dims
    if m > spec.total_dims:
        raise ModelError(f"confined_dims {m} exceeds grid dimension")
    out = np.zeros(spec.shape)
    grids = spec.coord_grids()
    for a in range(m):
        out = out + grids[a] ** 2
    return Field(spec, out, validate=False)


@dataclass(frozen=True)
class NonlinearityModel:
    """Odd sum-of-powers nonlinearity with positive coefficients.

    ``terms`` is a nonempty sequence of (coefficient, exponent) pairs with
    coefficient > 0 and exponent > 2.  The subcritical bound p < 2N/(N-2)
    depends on the dimension and is enforced by ``check_hypotheses`` (and by
    the config parser, which knows N).
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(a), float(p)) for a, p in self.terms)
        if not terms:
            raise ModelError("nonlinearity needs at least one term")
        for a, p in terms:
            if not (a > 0):
                raise ModelError(f"coefficient must be positive, got {a}")
            if not (p > 2):
                raise ModelError(f"exponent must exceed 2, got {p}")
        object.__setattr__(self, "terms", terms)

    @property
    def gamma(self) -> float:
        return min(p for _, p in self.terms)

    @property
    def sigma_bounds(self) -> tuple:
        ps = [p for _, p in self.terms]
        return (min(ps) - 2.0, max(ps) - 2.0)

    def f(self, s):
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        for a, p in self.terms:
            out = out + a * np.abs(s) ** (p - 2.0) * s
        return out if out.ndim else float(out)

    def F(self, s):
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        for a, p in self.terms:
            out = out + (a / p) * np.abs(s) ** p
        return out if out.ndim else float(out)

    def fprime(self, s):
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        for a, p in self.terms:
            out = out + a * (p - 1.0) * np.abs(s) ** (p - 2.0)
        return out if out.ndim else float(out)


def pure_power(p: float, coefficient: float = 1.0) -> NonlinearityModel:
    return NonlinearityModel(((coefficient, p),))


def f_eval(model: NonlinearityModel, s):
    return model.f(s)


def F_eval(model: NonlinearityModel, s):
    return model.F(s)


def fprime_eval(model: NonlinearityModel, s):
    return model.fprime(s)


def critical_exponent(n_dims: int) -> float:
    """2N/(N-2) for N >= 3; no finite bound in dimension 2."""
    if n_dims <= 2:
        return float("inf")
    return 2.0 * n_dims / (n_dims - 2.0)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple
    gamma: float
    sigma_bounds: tuple
    growth_constant: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]


def check_hypotheses(model: NonlinearityModel, n_dims: int) -> HypothesisReport:
    """Analytic verification of the structural hypotheses for this family.

    Closed-form checks, no sampling: superlinearity at 0 and monotonicity of
    f(s)/|s| reduce to every exponent exceeding 2; subcritical growth to
    p < 2N/(N-2); the inequality gamma*F(s) <= f(s)*s holds term by term with
    gamma = min p_j.  The derivative growth witness is
    f'(s) <= C (s^sigma1 + s^sigma2) with C = sum a_j (p_j - 1).
    """
    two_star = critical_exponent(n_dims)
    ps = [p for _, p in model.terms]
    checks = []

    f1_ok = all(p > 2 for p in ps)
    checks.append(HypothesisCheck(
        "f1", f1_ok, "f(s)/s -> 0 at 0 since every exponent exceeds 2"))

    bad = [p for p in ps if not (p < two_star)]
    f2_detail = (f"exponents {bad} violate p < 2*={two_star:g} (N={n_dims})"
                 if bad else f"all exponents below 2*={two_star:g}")
    checks.append(HypothesisCheck("f2", not bad, f2_detail))

    gamma = model.gamma
    checks.append(HypothesisCheck(
        "f3", gamma > 2,
        f"gamma*F(s) <= f(s)*s holds with gamma = min p = {gamma:g}"))

    checks.append(HypothesisCheck(
        "f4", f1_ok,
        "f(s)/|s| = sum a_j |s|^(p_j-2) strictly increasing away from 0"))

    sigma = model.sigma_bounds
    growth_c = sum(a * (p - 1.0) for a, p in model.terms)
    checks.append(HypothesisCheck(
        "growth_bound", True,
        f"f'(s) <= {growth_c:g} (s^{sigma[0]:g} + s^{sigma[1]:g}) for s >= 0"))

    return HypothesisReport(tuple(checks), gamma, sigma, growth_c)
