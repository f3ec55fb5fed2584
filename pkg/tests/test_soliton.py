"""Residuals of the generalized Einstein equation and parameter recovery."""

import numpy as np
import pytest

from finslerflow import (
    FinslerStructure, Sample, SolitonTriple, VectorField, combine_fields,
    estimate_lambda, estimate_vector_field, f2_value, residual_report,
    scalar_residual, tensor_residual, zero_field,
)
from finslerflow.sampling import grid_samples, random_samples
from tests.conftest import assert_close

S0 = Sample((0.3, -0.4), (0.8, 0.6))


def gaussian_setup():
    F = FinslerStructure(2, "y1^2 + y2^2", name="euclid")
    V = VectorField(2, ("0.5*x1", "0.5*x2"), name="halfradial")
    return SolitonTriple(F, V, 0.5)


class TestTriple:
    def test_none_field_becomes_zero(self, sphere):
        st = SolitonTriple(sphere, None, 1.0)
        assert st.V.dim == 2
        X = np.array([[0.3, 0.7]])
        assert_close(st.V.values(X), np.zeros((1, 2)), 0.0)

    def test_dimension_mismatch_rejected(self, sphere):
        with pytest.raises(ValueError):
            SolitonTriple(sphere, VectorField(3, ("x1", "x2", "x3")), 1.0)


class TestKnownSolutions:
    def test_gaussian_scalar_residual_vanishes(self):
        st = gaussian_setup()
        for s in random_samples(2, 20, seed=2):
            assert scalar_residual(st, s) == pytest.approx(0.0, abs=1e-12)

    def test_gaussian_tensor_residual_vanishes(self):
        st = gaussian_setup()
        assert_close(tensor_residual(st, S0), np.zeros((2, 2)), 1e-12)

    def test_sphere_einstein_without_field(self, sphere, sphere_samples):
        st = SolitonTriple(sphere, None, 1.0)
        rep = residual_report(st, sphere_samples)
        assert rep.max < 1e-10
        assert rep.tensor_max < 1e-9

    def test_flat_steady_soliton(self, euclid):
        st = SolitonTriple(euclid, None, 0.0)
        rep = residual_report(st, random_samples(2, 15, seed=4))
        assert rep.max < 1e-13

    def test_wrong_lambda_leaves_residual(self, sphere, sphere_samples):
        st = SolitonTriple(sphere, None, 0.7)
        rep = residual_report(st, sphere_samples)
        # residual |2 F^2 (Ric - lambda)| normalized by 2 F^2 is 0.3
        assert rep.max == pytest.approx(0.3, rel=1e-6)


class TestEstimateLambda:
    def test_sphere_recovers_one(self, sphere, sphere_samples):
        lam, rep = estimate_lambda(sphere, None, sphere_samples)
        assert lam == pytest.approx(1.0, abs=1e-12)
        assert rep.rms < 1e-12

    def test_gaussian_recovers_half(self):
        st = gaussian_setup()
        samples = random_samples(2, 25, seed=6)
        lam, rep = estimate_lambda(st.F0, st.V, samples)
        assert lam == pytest.approx(0.5, abs=1e-12)
        assert rep.max < 1e-10

    def test_scaled_sphere_lambda_scales_inversely(self, sphere):
        from finslerflow import scale

        F2 = scale(sphere, 2.0)
        samples = random_samples(2, 20, seed=8, structure=F2)
        lam, _ = estimate_lambda(F2, None, samples)
        assert lam == pytest.approx(0.25, abs=1e-10)


class TestCombineFields:
    def test_linear_combination(self):
        b1 = VectorField(2, ("x1", "0"))
        b2 = VectorField(2, ("0", "x2"))
        V = combine_fields([b1, b2], [2.0, -1.0])
        assert_close(V.values(np.array([[1.0, 1.0]])), [[2.0, -1.0]], 1e-15)

    def test_empty_basis_rejected(self):
        with pytest.raises(ValueError):
            combine_fields([], [])


class TestEstimateVectorField:
    def test_solution_satisfies_equation(self, euclid):
        # the design is rank deficient (every lambda admits a matching
        # radial drift), so check membership, not the specific point
        basis = [VectorField(2, ("x1", "x2"), name="radial")]
        samples = random_samples(2, 30, seed=9)
        coeffs, lam, rep = estimate_vector_field(euclid, basis, samples)
        assert rep.max < 1e-8
        V = combine_fields(basis, coeffs)
        check = residual_report(SolitonTriple(euclid, V, lam), samples)
        assert check.max < 1e-8

    def test_null_direction_reported(self, euclid):
        basis = [VectorField(2, ("x1", "x2"), name="radial")]
        samples = random_samples(2, 30, seed=9)
        _, _, rep = estimate_vector_field(euclid, basis, samples)
        assert len(rep.null_directions) == 1
        d = rep.null_directions[0]
        # the invisible combination trades drift against lambda: (1,1)/sqrt2
        assert abs(abs(float(np.dot(d, [1, 1] / np.sqrt(2)))) - 1.0) < 1e-9

    def test_killing_field_lands_in_null_space(self, sphere):
        # a rotation generator never changes the residual on this metric
        basis = [VectorField(2, ("-x2", "x1"), name="rot")]
        samples = random_samples(2, 25, seed=11, structure=sphere)
        coeffs, lam, rep = estimate_vector_field(sphere, basis, samples)
        assert lam == pytest.approx(1.0, abs=1e-8)
        assert rep.max < 1e-8
        assert len(rep.null_directions) == 1

    def test_well_posed_mixed_basis(self, sphere):
        # adding a genuinely useless direction must not corrupt lambda
        basis = [VectorField(2, ("-x2", "x1"), name="rot"),
                 VectorField(2, ("x1^2", "0"), name="bump")]
        samples = random_samples(2, 40, seed=12, structure=sphere)
        coeffs, lam, rep = estimate_vector_field(sphere, basis, samples)
        assert lam == pytest.approx(1.0, abs=1e-6)
        assert abs(coeffs[1]) < 1e-6

    def test_too_few_samples_rejected(self, euclid):
        basis = [VectorField(2, ("x1", "x2"))]
        with pytest.raises(ValueError):
            estimate_vector_field(euclid, basis,
                                  random_samples(2, 1, seed=0))

    def test_empty_basis_delegates(self, sphere, sphere_samples):
        coeffs, lam, rep = estimate_vector_field(sphere, [], sphere_samples)
        assert coeffs.size == 0
        assert lam == pytest.approx(1.0, abs=1e-10)


class TestReportShape:
    def test_fields_populated(self, sphere, sphere_samples):
        rep = residual_report(SolitonTriple(sphere, None, 1.0), sphere_samples)
        m = len(sphere_samples)
        assert len(rep.scalar_raw) == m
        assert len(rep.scalar_rel) == m
        assert len(rep.tensor_norms) == m
        assert rep.rms <= rep.max + 1e-18

    def test_scalar_only_mode_skips_tensor_work(self, sphere, sphere_samples):
        rep = residual_report(SolitonTriple(sphere, None, 1.0),
                              sphere_samples, tensor=False)
        assert rep.tensor_max == 0.0
        assert not np.any(rep.tensor_norms)
