import numpy as np
import pytest

from nlspc import (Field, GridError, NonlinearityModel, build_grid, energy,
                   fibering_max, first_variation, h_inner_product, integrate,
                   laplacian_apply, nehari_residual, nehari_scale,
                   sobolev_gradient)
from nlspc.grid import GridSpec
from nlspc.oracle import dense_operator_matrix, dense_scale_scan
from nlspc.variational import ZeroFieldError, quadratic_form


class TestHInnerProduct:
    def test_zero_partner(self, random_field, small_V, small_spec):
        zero = Field.zeros(small_spec)
        assert h_inner_product(random_field, zero, small_V) == pytest.approx(
            0.0, abs=1e-12)

    def test_diagonal_is_quadratic_form(self, random_field, small_V):
        q = quadratic_form(random_field, small_V)
        assert q >= 0
        assert h_inner_product(random_field, random_field,
                               small_V) == pytest.approx(q, rel=1e-12)

    def test_summation_by_parts_oracle(self, small_spec, small_V, rng):
        u = Field(small_spec, rng.standard_normal(small_spec.shape))
        v = Field(small_spec, rng.standard_normal(small_spec.shape))
        ip = h_inner_product(u, v, small_V)
        operator_side = integrate(Field(
            small_spec,
            v.values * (-laplacian_apply(u).values
                        + small_V.values * u.values)))
        assert ip == pytest.approx(operator_side, rel=1e-10, abs=1e-10)

    def test_grid_mismatch(self, random_field, small_V):
        other = build_grid(2, 1, 5.0, 9)
        with pytest.raises(GridError):
            h_inner_product(random_field, Field.zeros(other), small_V)


class TestEnergy:
    def test_zero_field(self, small_spec, small_V, quartic):
        bd = energy(Field.zeros(small_spec), quartic, small_V)
        assert bd.total == bd.h_norm_sq == bd.nonlinear_part == 0.0

    def test_breakdown_identity(self, random_field, small_V, quartic):
        bd = energy(random_field, quartic, small_V)
        assert bd.h_norm_sq == pytest.approx(
            bd.kinetic_part + bd.potential_part, rel=1e-14)
        assert bd.total == pytest.approx(0.5 * bd.h_norm_sq - bd.nonlinear_part,
                                         rel=1e-14)

    def test_nehari_energy_identity_pure_power(self, random_field, small_V,
                                               quartic):
        # on the constraint set, I = (1/2 - 1/p)|u|^2 for a single power p
        t = nehari_scale(random_field, quartic, small_V)
        u = Field(random_field.spec, t * random_field.values)
        bd = energy(u, quartic, small_V)
        assert bd.total == pytest.approx(0.25 * bd.h_norm_sq, rel=1e-12)


class TestFirstVariation:
    def test_zero_field(self, small_spec, small_V, quartic):
        r = first_variation(Field.zeros(small_spec), quartic, small_V)
        assert np.all(r.values == 0.0)

    def test_linear_eigenpair(self, small_spec, small_V):
        # with f = 0 the variation is the bare operator; the dense ground
        # eigenvector is an exact fixed direction
        A = dense_operator_matrix(small_spec, small_V)
        lam, vecs = np.linalg.eigh(A)
        phi = Field(small_spec, vecs[:, 0].reshape(small_spec.shape))
        r = first_variation(phi, None, small_V)
        np.testing.assert_allclose(r.values, lam[0] * phi.values,
                                   rtol=1e-9, atol=1e-9)

    def test_directional_derivative(self, small_spec, small_V, quartic, rng):
        u = Field(small_spec, rng.standard_normal(small_spec.shape))
        v = Field(small_spec, rng.standard_normal(small_spec.shape))
        r = first_variation(u, quartic, small_V)
        analytic = integrate(Field(small_spec, v.values * r.values))
        defects = []
        for eps in (1e-3, 1e-4):
            up = energy(Field(small_spec, u.values + eps * v.values),
                        quartic, small_V).total
            dn = energy(Field(small_spec, u.values - eps * v.values),
                        quartic, small_V).total
            defects.append(abs((up - dn) / (2 * eps) - analytic))
        assert defects[0] <= 1e-4 * (1 + abs(analytic))
        # second-order convergence: defect shrinks ~100x for 10x smaller eps
        assert defects[1] <= defects[0] / 50


class TestSobolevGradient:
    def test_zero_variation(self, small_spec, small_V):
        g = sobolev_gradient(Field.zeros(small_spec), None, small_V, 1e-10)
        assert np.all(g.values == 0.0)

    def test_matches_dense_solve_1d(self, rng):
        spec = GridSpec(1, 0, (2.0,), (3,))
        V = Field(spec, np.array([50.0, 80.0, 60.0]))  # strongly V-dominated
        u = Field(spec, rng.standard_normal(3))
        quartic = NonlinearityModel(((1.0, 4.0),))
        g = sobolev_gradient(u, quartic, V, 1e-12)
        h2 = spec.spacings[0] ** 2
        A = (2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)) / h2 \
            + np.diag(V.values)
        r = first_variation(u, quartic, V)
        np.testing.assert_allclose(g.values, np.linalg.solve(A, r.values),
                                   rtol=1e-10, atol=1e-12)

    def test_preconditioner_identity(self, small_spec, small_V, quartic, rng):
        u = Field(small_spec, rng.standard_normal(small_spec.shape))
        g = sobolev_gradient(u, quartic, small_V, 1e-10)
        r = first_variation(u, quartic, small_V)
        lhs = h_inner_product(g, g, small_V)
        rhs = integrate(Field(small_spec, g.values * r.values))
        assert lhs == pytest.approx(rhs, rel=1e-8)
        assert rhs >= 0


class TestNehari:
    def test_zero_field_residual(self, small_spec, small_V, quartic):
        assert nehari_residual(Field.zeros(small_spec), quartic,
                               small_V) == 0.0

    def test_scaled_to_constraint(self, random_field, small_V, quartic):
        t = nehari_scale(random_field, quartic, small_V)
        u = Field(random_field.spec, t * random_field.values)
        q = quadratic_form(u, small_V)
        assert abs(nehari_residual(u, quartic, small_V)) <= 1e-10 * q

    def test_doubling_leaves_constraint(self, random_field, small_V, quartic):
        t = nehari_scale(random_field, quartic, small_V)
        u2 = Field(random_field.spec, 2 * t * random_field.values)
        q = quadratic_form(Field(random_field.spec, t * random_field.values),
                           small_V)
        # residual of 2u is (4 - 2^p)|u|^2 for the pure power p=4
        assert nehari_residual(u2, quartic, small_V) == pytest.approx(
            (4 - 16) * q, rel=1e-10)

    def test_closed_form_quartic(self, random_field, small_V, quartic):
        q = quadratic_form(random_field, small_V)
        m4 = integrate(Field(random_field.spec, random_field.values ** 4))
        assert nehari_scale(random_field, quartic, small_V) == pytest.approx(
            (q / m4) ** 0.5, rel=1e-12)

    def test_zero_field_errors(self, small_spec, small_V, quartic):
        with pytest.raises(ZeroFieldError):
            nehari_scale(Field.zeros(small_spec), quartic, small_V)
        with pytest.raises(ZeroFieldError):
            fibering_max(Field.zeros(small_spec), quartic, small_V)

    def test_multi_term_against_scan(self, small_spec, small_V, rng):
        model = NonlinearityModel(((1.0, 3.0), (1.0, 4.0)))
        u = Field(small_spec, rng.standard_normal(small_spec.shape))
        t = nehari_scale(u, model, small_V)
        scan = dense_scale_scan(u, model, small_V,
                                t_grid=np.logspace(-3, 3, 20_000))
        assert np.log(t / scan.t_residual_root) == pytest.approx(
            0.0, abs=2 * 6 * np.log(10) / 20_000)
        scaled = Field(small_spec, t * u.values)
        q = quadratic_form(scaled, small_V)
        assert abs(nehari_residual(scaled, model, small_V)) <= 1e-10 * q

    @pytest.mark.parametrize("a", [0.25, 4.0])
    def test_scale_covariance(self, random_field, small_V, quartic, a):
        t1 = nehari_scale(random_field, quartic, small_V)
        ta = nehari_scale(Field(random_field.spec, a * random_field.values),
                          quartic, small_V)
        assert ta == pytest.approx(t1 / a, rel=1e-8)


class TestFibering:
    def test_peak_on_constraint_is_one(self, random_field, small_V, quartic):
        t = nehari_scale(random_field, quartic, small_V)
        u = Field(random_field.spec, t * random_field.values)
        t_max, i_max = fibering_max(u, quartic, small_V)
        assert t_max == pytest.approx(1.0, abs=1e-6)
        assert i_max == pytest.approx(energy(u, quartic, small_V).total,
                                      rel=1e-9)

    def test_agrees_with_nehari_scale(self, small_spec, small_V, rng):
        model = NonlinearityModel(((0.5, 3.0), (1.5, 4.5)))
        for _ in range(5):
            u = Field(small_spec, rng.standard_normal(small_spec.shape))
            t_max, _ = fibering_max(u, model, small_V)
            assert abs(t_max - nehari_scale(u, model, small_V)) <= 1e-6

    def test_single_local_max_on_log_grid(self, random_field, small_V,
                                          quartic):
        # scan check of fibering uniqueness for a sum-of-powers model
        q = quadratic_form(random_field, small_V)
        m4 = integrate(Field(random_field.spec, random_field.values ** 4))
        ts = np.logspace(-4, 4, 2000)
        vals = 0.5 * ts**2 * q - 0.25 * ts**4 * m4
        interior = (vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:])
        assert int(np.count_nonzero(interior)) == 1


class TestErrorPaths:
    def test_overflow_names_the_part(self, small_spec, small_V, quartic):
        u = Field(small_spec, np.full(small_spec.shape, 1e200))
        from nlspc.variational import NumericalOverflowError
        with np.errstate(over="ignore"), \
                pytest.raises(NumericalOverflowError, match="part"):
            energy(u, quartic, small_V)

    def test_descent_direction_error_on_tiny_cap(self, small_spec, small_V,
                                                 quartic, rng):
        from nlspc.variational import DescentDirectionError
        u = Field(small_spec, rng.standard_normal(small_spec.shape))
        with pytest.raises(DescentDirectionError):
            sobolev_gradient(u, quartic, small_V, 1e-14, max_iters=1)
