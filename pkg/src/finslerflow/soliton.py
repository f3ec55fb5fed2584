"""Ricci soliton residuals and least-squares recovery of the constant.

A triple (F0, V, lambda) is measured against the pointwise equations

    scalar:  2 F0^2 Ric + L_V^ F0^2  = 2 lambda F0^2
    tensor:  2 Ric_jk  + (L_V^ g)_jk = 2 lambda g_jk

as residuals over sample sets.  The scalar residual is linear in lambda
and in the components of V, so both can be recovered by least squares
from curvature data alone.  Reported residuals are normalized by 2 F0^2,
which makes thresholds scale-free; raw values ride along.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import akbar_zadeh_ricci, f2_values, fundamental_tensor, ricci_scalars
from .lifts import VectorField, lie_f2_values, lie_g_values


def zero_field(dim):
    return VectorField(dim, ["0"] * dim, name="zero")


class SolitonTriple:
    """Candidate (F0, V, lambda); whether it is a soliton is what the
    residuals measure."""

    def __init__(self, F0, V, lam):
        self.F0 = F0
        self.V = V if V is not None else zero_field(F0.dim)
        if self.V.dim != F0.dim:
            raise ValueError("field and structure dimensions differ")
        self.lam = float(lam)

    def __repr__(self):
        return (
            f"<SolitonTriple {self.F0.name}, {self.V.name}, "
            f"lambda={self.lam:g}>"
        )


@dataclass
class ResidualReport:
    """Per-sample residuals plus summary norms.

    scalar_rel is raw/(2 F0^2); tensor_norms holds per-sample max-abs
    entries of the tensor residual.  Optional least-squares diagnostics
    are attached by the estimators.
    """

    scalar_raw: np.ndarray
    scalar_rel: np.ndarray
    tensor_norms: np.ndarray
    rms: float
    max: float
    tensor_max: float
    singular_values: np.ndarray = None
    null_directions: list = field(default_factory=list)


def _scalar_parts(F0, V, samples, params=None):
    """(a, b) with a = 2 F^2 Ric + L F^2 and b = 2 F^2, both shape (m,)."""
    f2 = f2_values(F0, samples, params)
    ric = ricci_scalars(F0, samples, params)
    lf2 = lie_f2_values(F0, V, samples, params)
    return 2.0 * f2 * ric + lf2, 2.0 * f2


def scalar_residual(st, s, relative=False, params=None):
    """2 F0^2 Ric + L_V^ F0^2 - 2 lambda F0^2 at one sample."""
    a, b = _scalar_parts(st.F0, st.V, [s], params)
    raw = float(a[0] - st.lam * b[0])
    return raw / float(b[0]) if relative else raw


def tensor_residual(st, s, params=None):
    """2 Ric_jk + (L_V^ g)_jk - 2 lambda g_jk at one sample."""
    ric_jk = akbar_zadeh_ricci(st.F0, s, params)
    lg = lie_g_values(st.F0, st.V, [s], params)[0]
    g = fundamental_tensor(st.F0, s, params).g
    return 2.0 * ric_jk + lg - 2.0 * st.lam * g


def residual_report(st, samples, params=None, tensor=True):
    """Residuals of both equations over a sample list."""
    a, b = _scalar_parts(st.F0, st.V, samples, params)
    raw = a - st.lam * b
    rel = raw / b
    if tensor:
        norms = np.array(
            [float(np.max(np.abs(tensor_residual(st, s, params)))) for s in samples]
        )
    else:
        norms = np.zeros(len(samples))
    return ResidualReport(
        scalar_raw=raw,
        scalar_rel=rel,
        tensor_norms=norms,
        rms=float(np.sqrt(np.mean(rel * rel))),
        max=float(np.max(np.abs(rel))),
        tensor_max=float(np.max(norms)) if len(norms) else 0.0,
    )


def estimate_lambda(F0, V, samples, params=None, tensor=False):
    """Least-squares lambda for fixed V: minimizes the scalar residual.

    Closed form lambda* = sum(a b) / sum(b^2) with a, b as above.
    """
    if not samples:
        raise ValueError("estimate_lambda needs at least one sample")
    V = V if V is not None else zero_field(F0.dim)
    a, b = _scalar_parts(F0, V, samples, params)
    lam = float(np.dot(a, b) / np.dot(b, b))
    report = residual_report(SolitonTriple(F0, V, lam), samples, params,
                             tensor=tensor)
    return lam, report


_NULL_CUTOFF = 1e-10


def combine_fields(basis, coeffs, name=None):
    """The field sum_i c_i V_i as a single VectorField."""
    if not basis:
        raise ValueError("empty basis")
    dim = basis[0].dim
    from .expr import Add, Const, Mul

    comps = []
    for i in range(dim):
        acc = Const(0.0)
        for c, Vb in zip(coeffs, basis):
            acc = Add(acc, Mul(Const(float(c)), Vb.components[i]))
        comps.append(acc)
    return VectorField(dim, comps, name=name or "combined")


def estimate_vector_field(F0, basis, samples, params=None, tensor=False):
    """Joint least squares over (c_1..c_k, lambda) in the scalar equation.

    Each sample contributes one row of
        sum_i c_i L_{V_i} F^2 - 2 lambda F^2 = -2 F^2 Ric.
    Singular directions of the design matrix (Killing fields and other
    residual-invisible combinations) are reported, not errored; the
    returned coefficients are the minimum-norm solution.
    """
    if not basis:
        lam, report = estimate_lambda(F0, None, samples, params, tensor=tensor)
        return np.zeros(0), lam, report
    if len(samples) < len(basis) + 1:
        raise ValueError(
            f"need at least {len(basis) + 1} samples for {len(basis)} basis fields"
        )
    f2 = f2_values(F0, samples, params)
    ric = ricci_scalars(F0, samples, params)
    cols = [lie_f2_values(F0, Vb, samples, params) for Vb in basis]
    A = np.stack(cols + [-2.0 * f2], axis=1)
    rhs = -2.0 * f2 * ric
    sol, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=None)
    coeffs, lam = sol[:-1], float(sol[-1])

    null = []
    if sv[0] > 0:
        _, svals, vt = np.linalg.svd(A, full_matrices=False)
        for j, sigma in enumerate(svals):
            if sigma < _NULL_CUTOFF * svals[0]:
                null.append(vt[j])
    V = combine_fields(basis, coeffs)
    report = residual_report(SolitonTriple(F0, V, lam), samples, params,
                             tensor=tensor)
    report.singular_values = sv
    report.null_directions = null
    return coeffs, lam, report
