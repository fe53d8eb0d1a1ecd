import math

import numpy as np
import pytest

from nlspc import (Field, GaussianBump, RandomInit, SolverConfig,
                   SymmetryConstraint, build_grid, first_variation, integrate,
                   linear_ground_eigenpair, multi_start, nehari_residual,
                   potential_values, pure_power, solve_constrained_ground_state,
                   symmetry_residual)
from nlspc.oracle import dense_operator_matrix
from nlspc.solver import MultiStartError
from nlspc.symmetry import SymmetryError
from nlspc.variational import quadratic_form


@pytest.fixture(scope="module")
def spec2d():
    return build_grid(2, 1, (6.0, 8.0), (47, 63))


@pytest.fixture(scope="module")
def quartic_model():
    return pure_power(4.0)


@pytest.fixture(scope="module")
def ground(spec2d, quartic_model):
    cfg = SolverConfig(grad_tol=1e-6, max_iters=300)
    return solve_constrained_ground_state(spec2d, quartic_model, cfg)


class TestGroundState:
    def test_converges(self, ground):
        _, rep = ground
        assert rep.converged
        assert rep.iterations <= 300

    def test_positive_single_domain(self, ground):
        u, rep = ground
        assert rep.min_interior_value > 0
        assert rep.nodal_count == 1

    def test_monotone_trace(self, ground):
        _, rep = ground
        energies = [e for e, _ in rep.trace]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    def test_nehari_adherence(self, ground, spec2d, quartic_model):
        u, rep = ground
        V = potential_values(spec2d)
        q = quadratic_form(u, V)
        assert abs(nehari_residual(u, quartic_model, V)) <= 1e-10 * q

    def test_stationarity(self, ground, spec2d, quartic_model):
        u, _ = ground
        V = potential_values(spec2d)
        r = first_variation(u, quartic_model, V)
        r_norm = math.sqrt(integrate(Field(spec2d, r.values**2)))
        u_norm = math.sqrt(integrate(Field(spec2d, u.values**2)))
        assert r_norm / u_norm <= 10 * 1e-6

    def test_emergent_reflection_symmetry(self, ground):
        u, _ = ground
        # an even-in-x1 profile emerges without being enforced
        flipped = np.flip(u.values, axis=0)
        rel = np.linalg.norm(flipped - u.values) / np.linalg.norm(u.values)
        assert rel <= 1e-3

    def test_determinism(self, spec2d, quartic_model, ground):
        cfg = SolverConfig(grad_tol=1e-6, max_iters=300)
        u2, rep2 = solve_constrained_ground_state(spec2d, quartic_model, cfg)
        u1, rep1 = ground
        np.testing.assert_array_equal(u1.values, u2.values)
        assert rep1.trace == rep2.trace


class TestConstrainedSolves:
    def test_k_odd_1(self, quartic_model):
        spec = build_grid(3, 2, (4.0, 4.0, 6.0), (23, 23, 31))
        cfg = SolverConfig(grad_tol=1e-5, max_iters=300,
                           constraint=SymmetryConstraint.k_odd(1))
        u, rep = solve_constrained_ground_state(spec, quartic_model, cfg)
        assert rep.converged
        assert rep.nodal_count == 2
        mid = spec.points_per_axis[0] // 2
        assert np.max(np.abs(u.values[mid, :, :])) <= 1e-12
        assert rep.symmetry_residual <= 1e-12

    def test_cyclic_odd_2(self, quartic_model):
        spec = build_grid(3, 2, (4.0, 4.0, 6.0), (23, 23, 31))
        cfg = SolverConfig(grad_tol=1e-5, max_iters=300,
                           constraint=SymmetryConstraint.cyclic_odd(2))
        u, rep = solve_constrained_ground_state(spec, quartic_model, cfg)
        assert rep.converged
        assert rep.nodal_count == 4
        assert rep.symmetry_residual <= 1e-12

    def test_energy_ordering(self, quartic_model):
        spec = build_grid(3, 2, (4.0, 4.0, 6.0), (23, 23, 31))
        energies = {}
        for name, c in (("full", SymmetryConstraint.full_space()),
                        ("k1", SymmetryConstraint.k_odd(1))):
            cfg = SolverConfig(grad_tol=1e-5, max_iters=300, constraint=c)
            _, rep = solve_constrained_ground_state(spec, quartic_model, cfg)
            energies[name] = rep.final_energy
        assert energies["k1"] >= energies["full"] - 1e-6

    def test_even_count_rejected_for_odd_constraint(self, quartic_model):
        spec = build_grid(3, 2, (4.0, 4.0, 6.0), (24, 24, 31))
        cfg = SolverConfig(constraint=SymmetryConstraint.k_odd(1))
        with pytest.raises(SymmetryError, match="odd point count"):
            solve_constrained_ground_state(spec, quartic_model, cfg)

    def test_constraint_preserved_along_iterates(self, quartic_model):
        spec = build_grid(3, 2, (3.0, 3.0, 4.0), (15, 15, 21))
        c = SymmetryConstraint.k_odd(2)
        cfg = SolverConfig(grad_tol=1e-5, max_iters=200, constraint=c)
        u, rep = solve_constrained_ground_state(spec, quartic_model, cfg)
        assert symmetry_residual(u, c) <= 1e-12


class TestInitialization:
    def test_explicit_gaussian(self, spec2d, quartic_model):
        cfg = SolverConfig(grad_tol=1e-5, max_iters=300,
                           init=GaussianBump(center=(0.5, -1.0), width=1.5))
        _, rep = solve_constrained_ground_state(spec2d, quartic_model, cfg)
        assert rep.converged

    def test_random_init_converges_to_same_level(self, spec2d, quartic_model,
                                                 ground):
        cfg = SolverConfig(grad_tol=1e-6, max_iters=400, init=RandomInit(),
                           seed=5)
        _, rep = solve_constrained_ground_state(spec2d, quartic_model, cfg)
        assert rep.converged
        _, rep0 = ground
        assert rep.final_energy == pytest.approx(rep0.final_energy, rel=1e-5)

    def test_even_seed_reseeds_for_odd_constraint(self, quartic_model):
        # a symmetric bump annihilates under k-odd projection; the solver
        # must fall back to random reseeding and still converge
        spec = build_grid(3, 2, (3.0, 3.0, 4.0), (15, 15, 21))
        cfg = SolverConfig(grad_tol=1e-4, max_iters=300,
                           constraint=SymmetryConstraint.k_odd(1),
                           init=GaussianBump())
        _, rep = solve_constrained_ground_state(spec, quartic_model, cfg)
        assert rep.converged
        assert rep.nodal_count == 2


class TestMultiStart:
    def test_single_start_matches_solve(self, spec2d, quartic_model, ground):
        cfg = SolverConfig(grad_tol=1e-6, max_iters=300)
        best, rep, reports = multi_start(spec2d, quartic_model, cfg, 1)
        assert len(reports) == 1
        u0, _ = ground
        np.testing.assert_array_equal(best.values, u0.values)

    def test_spread_across_random_starts(self, spec2d, quartic_model):
        cfg = SolverConfig(grad_tol=1e-6, max_iters=400, init=RandomInit())
        best, rep, reports = multi_start(spec2d, quartic_model, cfg, 4)
        assert rep.converged
        energies = [r.final_energy for r in reports if r.converged]
        assert len(energies) >= 2
        spread = (max(energies) - min(energies)) / abs(min(energies))
        assert spread <= 1e-6

    def test_all_failed_raises(self, spec2d, quartic_model):
        cfg = SolverConfig(grad_tol=1e-14, max_iters=2, init=RandomInit())
        with pytest.raises(MultiStartError):
            multi_start(spec2d, quartic_model, cfg, 2)


class TestEigenpair:
    def test_partial_confinement_level(self):
        spec = build_grid(2, 1, (8.0, 8.0), (255, 255))
        lam, _ = linear_ground_eigenpair(spec, potential_values(spec), 1e-6)
        assert lam == pytest.approx(1 + (math.pi / 16) ** 2, abs=1e-2)

    def test_full_confinement_level(self):
        spec = build_grid(2, 1, (8.0, 8.0), (255, 255))
        V = potential_values(spec, confined_dims=2)
        lam, _ = linear_ground_eigenpair(spec, V, 1e-6)
        assert lam == pytest.approx(2.0, abs=1e-2)

    def test_positivity_at_desk_scale(self):
        spec = build_grid(2, 1, (4.0, 4.0), (31, 31))
        _, phi = linear_ground_eigenpair(spec, potential_values(spec), 1e-10)
        assert phi.values.min() > 0

    def test_matches_dense_eigensolve(self):
        spec = build_grid(2, 1, (3.0, 3.0), (15, 15))
        V = potential_values(spec)
        lam, _ = linear_ground_eigenpair(spec, V, 1e-10)
        dense = np.linalg.eigvalsh(dense_operator_matrix(spec, V))[0]
        assert lam == pytest.approx(dense, rel=1e-8)


class TestStepRules:
    def test_fixed_rule_still_monotone(self, spec2d, quartic_model):
        from nlspc import FixedRule
        cfg = SolverConfig(grad_tol=1e-5, max_iters=200,
                           step_rule=FixedRule(0.5))
        _, rep = solve_constrained_ground_state(spec2d, quartic_model, cfg)
        assert rep.converged
        energies = [e for e, _ in rep.trace]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


class TestThreadCap:
    def test_multi_start_thread_pool_matches_sequential(
            self, spec2d, quartic_model, monkeypatch):
        cfg = SolverConfig(grad_tol=1e-5, max_iters=300, init=RandomInit())
        best_seq, rep_seq, _ = multi_start(spec2d, quartic_model, cfg, 3)
        monkeypatch.setenv("NLS_THREADS", "3")
        best_par, rep_par, _ = multi_start(spec2d, quartic_model, cfg, 3)
        np.testing.assert_array_equal(best_seq.values, best_par.values)
        assert rep_seq.final_energy == rep_par.final_energy

    def test_invalid_thread_cap_rejected(self, spec2d, quartic_model,
                                         monkeypatch):
        monkeypatch.setenv("NLS_THREADS", "0")
        cfg = SolverConfig(grad_tol=1e-4, max_iters=50)
        with pytest.raises(ValueError, match="NLS_THREADS"):
            multi_start(spec2d, quartic_model, cfg, 2)
