"""Numeric flow maps: integration accuracy, variational Jacobian, groups."""

import math

import numpy as np
import pytest

from finslerflow import NumericFlowMap, TimeScaledField, VectorField, flow_map
from finslerflow.errors import IntegrationBlowupError
from tests.conftest import assert_close


class TestLinearFlows:
    def test_radial_flow_is_exponential(self):
        X = VectorField(2, ("x1", "x2"))
        got, _ = flow_map(X, (1.0, -0.5), 0.3)
        factor = math.exp(0.3)
        assert_close(got, (factor, -0.5 * factor), 1e-10, "radial flow")

    def test_rotation_flow(self):
        X = VectorField(2, ("-x2", "x1"))
        t = 0.7
        got, _ = flow_map(X, (1.0, 0.0), t)
        assert_close(got, (math.cos(t), math.sin(t)), 1e-10, "rotation")

    def test_backwards_time(self):
        X = VectorField(2, ("x1", "x2"))
        got, _ = flow_map(X, (2.0, 1.0), -0.5)
        f = math.exp(-0.5)
        assert_close(got, (2 * f, f), 1e-10)

    def test_zero_time_is_identity(self):
        X = VectorField(2, ("x1^2", "x2"))
        pt, J = flow_map(X, (0.4, 0.7), 0.0)
        assert pt == (0.4, 0.7)
        assert_close(J, np.eye(2), 0.0, "identity Jacobian at t=0")


class TestJacobian:
    def test_variational_equation_matches_finite_difference(self):
        X = VectorField(2, ("x1*x2", "x2 - 0.3*x1^2"))
        fm = NumericFlowMap(X)
        x0 = np.array([[0.4, 0.8]])
        t = 0.6
        _, J = fm.map_batch(x0, t)
        h = 1e-6
        Jfd = np.zeros((2, 2))
        for j in range(2):
            dp = x0.copy()
            dm = x0.copy()
            dp[0, j] += h
            dm[0, j] -= h
            pp, _ = fm.map_batch(dp, t)
            pm, _ = fm.map_batch(dm, t)
            Jfd[:, j] = (pp[0] - pm[0]) / (2 * h)
        assert_close(J[0], Jfd, 1e-7, "variational vs FD")

    def test_linear_flow_jacobian_exact(self):
        X = VectorField(2, ("x1", "x2"))
        fm = NumericFlowMap(X)
        _, J = fm.map_batch(np.array([[1.0, 1.0]]), 0.3)
        assert_close(J[0], math.exp(0.3) * np.eye(2), 1e-10)


class TestGroupProperty:
    def test_compose_equals_sum_of_times(self):
        X = VectorField(2, ("x2", "-x1 + 0.1*x2"))
        fm = NumericFlowMap(X, steps_per_unit=400)
        p0 = np.array([[0.7, -0.2]])
        a, _ = fm.map_batch(p0, 0.25)
        b, _ = fm.map_batch(a, 0.35)
        c, _ = fm.map_batch(p0, 0.6)
        assert_close(b, c, 1e-10, "group property")


class TestTimeScaledField:
    def test_scale_applies_factor(self):
        base = VectorField(2, ("x1", "0"))
        sf = TimeScaledField(base, factor=lambda t: 1.0 / (1.0 + t))
        assert sf.scale(0.0) == 1.0
        assert sf.scale(1.0) == 0.5

    def test_default_factor_is_one(self):
        sf = TimeScaledField(VectorField(2, ("x1", "0")))
        assert sf.scale(3.7) == 1.0

    def test_scaled_flow_reaches_closed_form(self):
        # dx/dt = x/(1 - t) gives x(t) = x0/(1 - t)
        base = VectorField(2, ("x1", "x2"))
        sf = TimeScaledField(base, factor=lambda t: 1.0 / (1.0 - t))
        fm = NumericFlowMap(sf, steps_per_unit=400)
        got, _ = fm.map_batch(np.array([[1.0, 2.0]]), 0.5)
        assert_close(got[0], [2.0, 4.0], 1e-9, "scaled radial flow")


class TestFaults:
    def test_blowup_detected(self):
        X = VectorField(2, ("x1^2", "0"))
        fm = NumericFlowMap(X)
        with pytest.raises(IntegrationBlowupError):
            fm.map_batch(np.array([[5.0, 0.0]]), 2.0)

    def test_map_caches_point_results(self):
        X = VectorField(2, ("x1", "x2"))
        fm = NumericFlowMap(X)
        a = fm.map((1.0, 2.0), 0.2)
        b = fm.map((1.0, 2.0), 0.2)
        assert a[0] == b[0] and a[1] is b[1]
        assert all(isinstance(v, float) for v in a[0])
