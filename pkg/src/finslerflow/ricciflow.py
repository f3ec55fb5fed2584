"""Flow families built from solitons, and their verification.

From a triple (F0, V, lambda) the time-dependent structure

    F^2(t) = tau(t) * pullback of F0^2 under phi_t,    tau(t) = 1 - 2 lambda t,

is constructed, where phi_t is the flow of the rescaled field
X_t = V / tau(t).  Such a family satisfies the scalar flow equation

    d/dt log F(t) = -Ric_{F(t)}

on the interval where tau stays positive, and conversely lambda and V can
be read off a family at t = 0.  The residual of the flow equation is
measured by central differences in t; the curvature of F(t) comes either
from a symbolic pullback (available when the flow has closed form) or
from the scaling identity Ric_{F(t)}(s) = Ric_{F0}(flowed s) / tau(t).

For conformally deforming Einstein structures (F^2(t) = c(t) F0^2) the
flow collapses to one scalar ODE, c' = -2 Ric_{F0}, which is integrated
explicitly with a per-step constancy check on the curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DomainExceededError, NotEinsteinError, StepUnderflowError)
from .expr import Const, Mul, Neg, Var
from .flowmap import (NumericFlowMap, TimeScaledField, pullback_numeric_eval,
                      pullback_numeric_values)
from .geometry import FinslerStructure, Sample, ricci_scalar, ricci_scalars
from .lifts import SymbolicDiffeo, pullback_symbolic
from .soliton import SolitonTriple, residual_report

DEFAULT_DT = 1e-4


def _radial_coefficient(V):
    """c if V = c * (x1, .., xn) symbolically, else None."""
    c = None
    for i, comp in enumerate(V.components):
        xi = f"x{i + 1}"
        if isinstance(comp, Const):
            if comp.value == 0.0:
                continue
            return None
        coef, var = _split_linear(comp)
        if var != xi:
            return None
        if c is None:
            c = coef
        elif c != coef:
            return None
    if c is None:
        c = 0.0  # V = 0
    return c


def _split_linear(e):
    if isinstance(e, Var):
        return 1.0, e.name
    if isinstance(e, Neg):
        c, v = _split_linear(e.a)
        return -c, v
    if isinstance(e, Mul) and isinstance(e.a, Const) and isinstance(e.b, Var):
        return e.a.value, e.b.name
    if isinstance(e, Mul) and isinstance(e.b, Const) and isinstance(e.a, Var):
        return e.b.value, e.a.name
    return 0.0, None


class FlowFamily:
    """F^2(t) = tau(t) * phi_t-pullback of F0^2."""

    def __init__(self, F0, V, lam, steps_per_unit=None):
        self.F0 = F0
        self.V = V
        self.lam = float(lam)
        kwargs = {}
        if steps_per_unit is not None:
            kwargs["steps_per_unit"] = steps_per_unit
        self.flow = NumericFlowMap(
            TimeScaledField(V, self.tau_inverse_factor()), **kwargs
        )
        # closed-form diffeo family when V is (a multiple of) the radial field
        self._radial_c = _radial_coefficient(V)
        self._structures = {}

    def tau(self, t):
        return 1.0 - 2.0 * self.lam * t

    def tau_inverse_factor(self):
        lam = self.lam

        def factor(t):
            return 1.0 / (1.0 - 2.0 * lam * t)

        return factor

    @property
    def critical_time(self):
        return 1.0 / (2.0 * self.lam) if self.lam > 0 else math.inf

    def check_domain(self, t):
        if self.tau(t) <= 0.0:
            raise DomainExceededError(t, self.critical_time)

    @property
    def has_symbolic_diffeo(self):
        return self._radial_c is not None

    def _radial_scale(self, t):
        """Closed-form flow of X_t = c x / tau: x -> tau^(-c/(2 lambda)) x."""
        c = self._radial_c
        if c == 0.0:
            return 1.0
        if self.lam == 0.0:
            return math.exp(c * t)
        return self.tau(t) ** (-c / (2.0 * self.lam))

    def symbolic_diffeo(self, t):
        if not self.has_symbolic_diffeo:
            return None
        s = self._radial_scale(t)
        n = self.F0.dim
        comps = [Mul(Const(s), Var(f"x{i + 1}")) for i in range(n)]
        inv = [Mul(Const(1.0 / s), Var(f"x{i + 1}")) for i in range(n)]
        return SymbolicDiffeo(n, comps, inverse=inv,
                              name=f"{self.V.name}-flow[{t:g}]", check=False)

    def structure_at(self, t):
        """F(t) as a concrete structure (symbolic path), cached per time."""
        self.check_domain(t)
        key = round(float(t), 12)
        F_t = self._structures.get(key)
        if F_t is None:
            d = self.symbolic_diffeo(t)
            if d is None:
                return None
            pb = pullback_symbolic(self.F0, d)
            F_t = FinslerStructure(
                self.F0.dim,
                Mul(Const(self.tau(t)), pb.f2),
                name=f"{self.F0.name}[t={t:g}]",
            )
            self._structures[key] = F_t
        return F_t

    def __repr__(self):
        return (
            f"<FlowFamily {self.F0.name}, V={self.V.name}, "
            f"lambda={self.lam:g}>"
        )


def construct_flow(st, steps_per_unit=None):
    """The theorem's forward direction: a soliton generates a flow family."""
    return FlowFamily(st.F0, st.V, st.lam, steps_per_unit=steps_per_unit)


def evaluate_family(fam, s, t, params=None):
    """F^2(t) at one sample, through the numeric flow."""
    fam.check_domain(t)
    return fam.tau(t) * pullback_numeric_eval(fam.F0, fam.flow, s, t, params)


def evaluate_family_batch(fam, samples, t, params=None):
    fam.check_domain(t)
    return fam.tau(t) * pullback_numeric_values(
        fam.F0, fam.flow, samples, t, params
    )


def ricci_of_family(fam, s, t, path="auto", params=None):
    """Ric_{F(t)} at s.

    path "symbolic": curvature of the pulled-back structure; "scaling":
    Ric_{F0} at the flowed sample divided by tau; "auto" prefers symbolic
    when the flow has closed form.
    """
    fam.check_domain(t)
    if path == "auto":
        path = "symbolic" if fam.has_symbolic_diffeo else "scaling"
    if path == "symbolic":
        F_t = fam.structure_at(t)
        if F_t is None:
            raise ValueError("no closed-form diffeo family for symbolic path")
        return ricci_scalar(F_t, s, params)
    xt, J = fam.flow.map(s.x, t)
    flowed = Sample(xt, tuple(J @ np.asarray(s.y)))
    return ricci_scalar(fam.F0, flowed, params) / fam.tau(t)


def flow_residual(fam, s, t, dt=DEFAULT_DT, path="auto", params=None):
    """Residual of d/dt log F + Ric_{F(t)} at one (sample, time)."""
    fam.check_domain(t + dt)
    fam.check_domain(t - dt)
    vp = evaluate_family(fam, s, t + dt, params)
    vm = evaluate_family(fam, s, t - dt, params)
    dlog = (math.log(vp) - math.log(vm)) / (4.0 * dt)
    return dlog + ricci_of_family(fam, s, t, path, params)


@dataclass
class FlowResidualReport:
    """Residual grid of the flow equation over samples x times."""

    times: list
    residuals: np.ndarray            # (T, m), via the preferred path
    path_symbolic: np.ndarray = None  # (T, m) or None
    path_scaling: np.ndarray = None   # (T, m)
    max_abs: float = 0.0
    rms: float = 0.0
    path_gap: float = 0.0            # max |symbolic - scaling| when both ran

    def summary(self):
        lines = [f"flow residual over {self.residuals.shape[1]} samples:"]
        for i, t in enumerate(self.times):
            row = self.residuals[i]
            lines.append(
                f"  t={t:<8g} max={np.max(np.abs(row)):.3e} "
                f"rms={np.sqrt(np.mean(row ** 2)):.3e}"
            )
        lines.append(f"  overall max {self.max_abs:.3e}, path gap {self.path_gap:.3e}")
        return "\n".join(lines)


def flow_residual_grid(fam, samples, times, dt=DEFAULT_DT, params=None):
    """Batched residual over a (time x sample) grid, both paths where
    available."""
    m = len(samples)
    T = len(times)
    res = np.empty((T, m))
    sym = np.empty((T, m)) if fam.has_symbolic_diffeo else None
    sca = np.empty((T, m))
    X0 = np.array([s.x for s in samples], dtype=np.float64)
    Y0 = np.array([s.y for s in samples], dtype=np.float64)
    for i, t in enumerate(times):
        fam.check_domain(t + dt)
        fam.check_domain(t - dt)
        vp = evaluate_family_batch(fam, samples, t + dt, params)
        vm = evaluate_family_batch(fam, samples, t - dt, params)
        dlog = (np.log(vp) - np.log(vm)) / (4.0 * dt)
        Xt, J = fam.flow.map_batch(X0, t)
        Yt = np.einsum("mij,mj->mi", J, Y0)
        flowed = [Sample(tuple(Xt[k]), tuple(Yt[k])) for k in range(m)]
        sca[i] = ricci_scalars(fam.F0, flowed, params) / fam.tau(t)
        if sym is not None:
            F_t = fam.structure_at(t)
            sym[i] = ricci_scalars(F_t, samples, params)
            res[i] = dlog + sym[i]
        else:
            res[i] = dlog + sca[i]
    gap = float(np.max(np.abs(sym - sca))) if sym is not None else 0.0
    return FlowResidualReport(
        times=list(times),
        residuals=res,
        path_symbolic=sym,
        path_scaling=sca,
        max_abs=float(np.max(np.abs(res))),
        rms=float(np.sqrt(np.mean(res ** 2))),
        path_gap=gap,
    )


@dataclass
class ConformalTrajectory:
    """c(t) steps for a conformally shrinking Einstein structure."""

    times: np.ndarray
    values: np.ndarray
    ric_mean: float
    ric_spread: float

    def final(self):
        return float(self.values[-1])


def integrate_conformal_flow(F0, samples, dt, T, params=None,
                             spread_tol=1e-6):
    """Step c' = -2 Ric_{F0} for the ansatz F^2(t) = c(t) F0^2.

    The ansatz only closes when Ric_{F0} is constant over samples; the
    constancy (of Ric multiplied back by c, which stays equal to Ric_{F0})
    is re-checked at every step so a broken ansatz surfaces as
    NotEinsteinError at the first step it exceeds the spread tolerance.
    """
    ric0 = ricci_scalars(F0, samples, params)
    mean0 = float(np.mean(ric0))
    spread0 = float(np.max(ric0) - np.min(ric0))
    steps = int(round(T / dt))
    times = np.empty(steps + 1)
    values = np.empty(steps + 1)
    c = 1.0
    for k in range(steps + 1):
        t = k * dt
        # measured curvature of F(t) is ric0 / c; its spread must stay
        # negligible against its mean for the ansatz to remain valid
        mean_t = mean0 / c
        spread_t = spread0 / abs(c)
        if spread_t > spread_tol * max(1.0, abs(mean_t)):
            raise NotEinsteinError(t, spread_t, spread_tol * max(1.0, abs(mean_t)))
        times[k] = t
        values[k] = c
        if k < steps:
            c = c - 2.0 * mean0 * dt
            if c <= 0.0:
                raise StepUnderflowError((k + 1) * dt, c)
    return ConformalTrajectory(times, values, mean0, spread0)


def extract_soliton(fam, samples=None, params=None, h=1e-6):
    """The theorem's converse: read (lambda, V) off a family at t = 0.

    lambda = -tau'(0)/2, exact when the family carries lambda; V is the
    generating field at time zero (tau(0) = 1, so X_0 = V, the same
    object).  Returns (triple, report); the report is None without
    samples.
    """
    lam = getattr(fam, "lam", None)
    if lam is None:
        lam = -0.5 * (fam.tau(h) - fam.tau(-h)) / (2.0 * h)
    V = fam.V if getattr(fam, "V", None) is not None else fam.flow.field
    st = SolitonTriple(fam.F0, V, lam)
    report = residual_report(st, samples, params) if samples else None
    return st, report
