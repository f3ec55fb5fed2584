"""Flow families from soliton data, their residuals, and round trips."""

import math

import numpy as np
import pytest

from finslerflow import (
    FinslerStructure, Sample, SolitonTriple, VectorField, construct_flow,
    evaluate_family, extract_soliton, f2_value, flow_residual,
    flow_residual_grid, integrate_conformal_flow, ricci_of_family,
    ricci_scalar,
)
from finslerflow.errors import (
    DomainExceededError, NotEinsteinError, StepUnderflowError,
)
from finslerflow.ricciflow import evaluate_family_batch
from finslerflow.sampling import random_samples
from tests.conftest import assert_close

S0 = Sample((0.3, -0.4), (0.8, 0.6))


def gaussian_family(steps_per_unit=None):
    F = FinslerStructure(2, "y1^2 + y2^2", name="euclid")
    V = VectorField(2, ("0.5*x1", "0.5*x2"), name="halfradial")
    return construct_flow(SolitonTriple(F, V, 0.5),
                          steps_per_unit=steps_per_unit)


def sphere_family(sphere):
    return construct_flow(SolitonTriple(sphere, None, 1.0))


class TestFamilyBasics:
    def test_tau_and_critical_time(self, sphere):
        fam = sphere_family(sphere)
        assert fam.tau(0.0) == 1.0
        assert fam.tau(0.25) == 0.5
        assert fam.critical_time == 0.5

    def test_no_critical_time_for_steady(self, euclid):
        fam = construct_flow(SolitonTriple(euclid, None, 0.0))
        assert fam.critical_time == math.inf

    def test_radial_drift_has_closed_form(self):
        fam = gaussian_family()
        assert fam.has_symbolic_diffeo

    def test_generic_drift_has_no_closed_form(self, sphere):
        V = VectorField(2, ("x1^2", "0"))
        fam = construct_flow(SolitonTriple(sphere, V, 1.0))
        assert not fam.has_symbolic_diffeo

    def test_initial_structure_is_input(self, sphere):
        fam = sphere_family(sphere)
        assert evaluate_family(fam, S0, 0.0) == pytest.approx(
            f2_value(sphere, S0), rel=1e-14)


class TestGaussianStationarity:
    """The flow of a flat-metric soliton only reparametrizes: F^2 stays flat."""

    def test_family_value_constant_in_time(self):
        fam = gaussian_family()
        base = f2_value(fam.F0, S0)
        for t in (0.2, 0.5, 0.9):
            assert evaluate_family(fam, S0, t) == pytest.approx(
                base, rel=1e-6)

    def test_symbolic_and_numeric_transport_agree(self):
        fam = gaussian_family()
        for t in (0.3, 0.8):
            d = fam.symbolic_diffeo(t)
            X = np.array([S0.x])
            J = d.jacobian_values(X)[0]
            phi = d.map_points(X)[0]
            xt, Jn = fam.flow.map(S0.x, t)
            assert_close(phi, xt, 1e-9, "flow point")
            assert_close(J, Jn, 1e-9, "flow Jacobian")


class TestFlowResidual:
    def test_sphere_satisfies_flow_equation(self, sphere, sphere_samples):
        fam = sphere_family(sphere)
        times = [0.0, 0.1, 0.2, 0.3, 0.4]
        rep = flow_residual_grid(fam, sphere_samples[:10], times)
        assert rep.max_abs < 1e-4
        assert rep.path_gap < 1e-10

    def test_single_point_residual(self, sphere):
        fam = sphere_family(sphere)
        r = flow_residual(fam, S0, 0.2)
        assert abs(r) < 1e-4

    def test_scaling_path_matches_symbolic_path(self, sphere):
        fam = sphere_family(sphere)
        a = ricci_of_family(fam, S0, 0.3, path="symbolic")
        b = ricci_of_family(fam, S0, 0.3, path="scaling")
        assert a == pytest.approx(b, rel=1e-9)

    def test_ricci_grows_toward_collapse(self, sphere):
        fam = sphere_family(sphere)
        r0 = ricci_of_family(fam, S0, 0.0)
        r4 = ricci_of_family(fam, S0, 0.4)
        assert r4 == pytest.approx(r0 / fam.tau(0.4), rel=1e-8)

    def test_beyond_critical_time_rejected(self, sphere):
        fam = sphere_family(sphere)
        with pytest.raises(DomainExceededError) as ei:
            evaluate_family(fam, S0, 0.6)
        assert ei.value.critical_time == pytest.approx(0.5)

    def test_report_summary_mentions_worst_time(self, sphere, sphere_samples):
        fam = sphere_family(sphere)
        rep = flow_residual_grid(fam, sphere_samples[:5], [0.0, 0.2])
        text = rep.summary()
        assert "max" in text and "t=" in text


class TestConformalFlow:
    def test_sphere_shrinks_linearly(self, sphere):
        samples = random_samples(2, 12, seed=3, structure=sphere)
        tr = integrate_conformal_flow(sphere, samples, 1e-3, 0.4)
        # c(t) = 1 - 2t for Ric = 1
        for t, c in zip(tr.times, tr.values):
            assert c == pytest.approx(1.0 - 2.0 * t, abs=1e-9)
        assert tr.final() == pytest.approx(0.2, abs=1e-9)

    def test_flat_metric_is_constant(self, euclid):
        samples = random_samples(2, 10, seed=5)
        tr = integrate_conformal_flow(euclid, samples, 1e-3, 0.5)
        assert tr.final() == 1.0

    def test_non_einstein_input_rejected(self):
        F = FinslerStructure(2, "(1 + 0.3*x1^2)*(y1^2 + y2^2)", name="bumpy")
        samples = random_samples(2, 12, seed=6, structure=F)
        with pytest.raises(NotEinsteinError) as ei:
            integrate_conformal_flow(F, samples, 1e-3, 0.2)
        assert ei.value.spread > ei.value.tolerance

    def test_collapse_detected(self, sphere):
        samples = random_samples(2, 8, seed=7, structure=sphere)
        with pytest.raises(StepUnderflowError):
            integrate_conformal_flow(sphere, samples, 1e-3, 0.8)


class TestRoundTrip:
    def test_soliton_recovered_from_family(self, sphere, sphere_samples):
        fam = sphere_family(sphere)
        st, rep = extract_soliton(fam, samples=sphere_samples)
        assert st.lam == pytest.approx(1.0, abs=1e-9)
        assert st.F0 is sphere
        assert rep.max < 1e-8

    def test_drift_field_identity_preserved(self):
        fam = gaussian_family()
        st, _ = extract_soliton(fam, samples=random_samples(2, 10, seed=1))
        assert st.V is fam.V
        assert st.lam == pytest.approx(0.5, abs=1e-9)

    def test_extraction_without_samples_skips_report(self, sphere):
        fam = sphere_family(sphere)
        st, rep = extract_soliton(fam)
        assert rep is None
        assert st.lam == pytest.approx(1.0, abs=1e-9)


class TestBatchConsistency:
    def test_batch_matches_scalar_eval(self, sphere, sphere_samples):
        fam = sphere_family(sphere)
        sub = sphere_samples[:6]
        batch = evaluate_family_batch(fam, sub, 0.3)
        singles = [evaluate_family(fam, s, 0.3) for s in sub]
        assert_close(batch, singles, 1e-11)
