"""Finite-difference oracle for every derived quantity.

Independent cross-check of the symbolic pipeline: each quantity is rebuilt
from point evaluations of F^2 alone (plus vector-field component values for
Lie derivatives), using nested five-point stencils and pointwise linear
algebra.  Nothing here touches symbolic differentiation.

The full computation runs once at step h and once at h/2 and the two are
combined in a single Richardson pass, which cancels the leading h^4
truncation term of the composed stencils.  Each quantity has its own base
step: every stencil level multiplies roundoff by roughly 1/h^2, so the
deeper quantities need a larger step before amplified noise crosses the
comparison tolerance, while truncation pushes the other way.  The defaults
sit in the measured valley between the two regimes with two decades of
margin.
"""

from __future__ import annotations

import numpy as np

from .geometry import Sample

# offsets and weights: first derivative (4 points), second derivative (5 points)
_OFF1 = (-2.0, -1.0, 1.0, 2.0)
_W1 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_OFF2 = (-2.0, -1.0, 0.0, 1.0, 2.0)
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0

DEFAULT_STEP = 1e-2

# Per-quantity base steps, tuned on the conformal sphere (the corpus metric
# with the largest high-order derivatives).  Shallow quantities favor small
# steps; the curvature-level ones need larger steps to keep amplified
# roundoff below tolerance.
DEFAULT_STEPS = {
    "g": 1e-2,
    "gamma": 1e-2,
    "G": 1e-2,
    "R": 3e-2,
    "ric": 3e-2,
    "ric_jk": 6e-2,
    "lie_f2": 1e-2,
    "lie_g": 1e-2,
}

# Comparison tolerances for symbolic-vs-oracle equivalence, per quantity.
ORACLE_TOLERANCES = {
    "g": 1e-6,
    "gamma": 1e-6,
    "G": 1e-6,
    "R": 1e-6,
    "ric": 1e-6,
    "ric_jk": 1e-3,
    "lie_f2": 1e-6,
    "lie_g": 1e-6,
}

# samples processed per chunk, sized to keep the nested point batches small
_CHUNK = {"g": 1024, "gamma": 256, "G": 256, "R": 16, "ric": 16,
          "ric_jk": 4, "lie_f2": 1024, "lie_g": 256}


def _chunked_f2(F, X, Y, params, chunk=1 << 19):
    m = X.shape[0]
    tape = F.tape("f2")
    nv = len(F.var_order)
    out = np.empty(m)
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        rows = np.empty((hi - lo, nv))
        rows[:, : F.dim] = X[lo:hi]
        rows[:, F.dim : 2 * F.dim] = Y[lo:hi]
        for j, p in enumerate(F.params):
            rows[:, 2 * F.dim + j] = params[p]
        out[lo:hi] = tape.evaluate(rows)[:, 0]
    return out


class _ShiftPlan:
    """Collects shifted copies of (X, Y) point batches for one mega-call."""

    def __init__(self, X, Y):
        self.X = X
        self.Y = Y
        self.blocks = []  # (label, count)
        self.xs = []
        self.ys = []

    def add(self, label, x_shifts, y_shifts):
        """Each shift is a list of (axis, multiple-of-h) pairs."""
        Xs = self.X.copy()
        for j, o in x_shifts:
            Xs[:, j] += o
        Ys = self.Y.copy()
        for j, o in y_shifts:
            Ys[:, j] += o
        self.xs.append(Xs)
        self.ys.append(Ys)
        self.blocks.append(label)

    def run(self, fn):
        Xall = np.concatenate(self.xs, axis=0)
        Yall = np.concatenate(self.ys, axis=0)
        flat = fn(Xall, Yall)
        m = self.X.shape[0]
        out = {}
        for i, label in enumerate(self.blocks):
            out.setdefault(label, []).append(flat[i * m : (i + 1) * m])
        return {k: np.stack(v, axis=0) for k, v in out.items()}


def _hessian_blocks(plan, h, coord):
    """Register the 5/16-point sets for a Hessian in x (coord=0) or y (1)."""
    n = plan.X.shape[1]
    for j in range(n):
        for o in _OFF2:
            sh = [(j, o * h)]
            plan.add(("d", j), sh if coord == 0 else [], sh if coord == 1 else [])
    for j in range(n):
        for k in range(j + 1, n):
            for oa in _OFF1:
                for ob in _OFF1:
                    sh = [(j, oa * h), (k, ob * h)]
                    plan.add(("c", j, k), sh if coord == 0 else [],
                             sh if coord == 1 else [])


def _hessian_combine(parts, h, n):
    """Assemble the symmetric Hessian from registered blocks."""
    first = next(iter(parts.values()))
    tail = first.shape[2:] if first.ndim > 2 else ()
    m = first.shape[1]
    H = np.empty((m, n, n) + tail)
    for j in range(n):
        vals = parts[("d", j)]  # (5, m, ...)
        H[:, j, j] = np.tensordot(_W2, vals, axes=(0, 0)) / (h * h)
    for j in range(n):
        for k in range(j + 1, n):
            vals = parts[("c", j, k)].reshape((4, 4) + first.shape[1:])
            acc = np.einsum("a,b,ab...->...", _W1, _W1, vals) / (h * h)
            H[:, j, k] = H[:, k, j] = acc
    return H


def _grad_blocks(plan, h, coord, n):
    for j in range(n):
        for o in _OFF1:
            sh = [(j, o * h)]
            plan.add(("g", j), sh if coord == 0 else [], sh if coord == 1 else [])


def _grad_combine(parts, h, n):
    cols = []
    for j in range(n):
        vals = parts[("g", j)]  # (4, m, ...)
        cols.append(np.tensordot(_W1, vals, axes=(0, 0)) / h)
    return np.stack(cols, axis=-1)  # (m, ..., n) derivative axis last


def _g_batch(F, X, Y, h, params):
    n = X.shape[1]
    plan = _ShiftPlan(X, Y)
    _hessian_blocks(plan, h, coord=1)
    parts = plan.run(lambda Xa, Ya: _chunked_f2(F, Xa, Ya, params))
    return 0.5 * _hessian_combine(parts, h, n)


def _gamma_batch(F, X, Y, h, params):
    n = X.shape[1]
    m = X.shape[0]
    plan = _ShiftPlan(X, Y)
    _grad_blocks(plan, h, coord=0, n=n)
    plan.add(("center",), [], [])
    parts = plan.run(lambda Xa, Ya: _g_batch(F, Xa, Ya, h, params).reshape(-1, n * n))
    dg = _grad_combine({k: v for k, v in parts.items() if k[0] == "g"}, h, n)
    dg = dg.reshape(m, n, n, n)  # (m, s, j, k): d g_sj / d x_k
    g0 = parts[("center",)][0].reshape(m, n, n)
    ginv = np.linalg.inv(g0)
    # C_sjk = (dg_sj/dx_k - dg_jk/dx_s + dg_ks/dx_j) / 2 with dg axes (m, a, b, dir)
    C = 0.5 * (
        dg
        - np.einsum("mjks->msjk", dg)
        + np.einsum("mksj->msjk", dg)
    )
    return np.einsum("mis,msjk->mijk", ginv, C)


def _G_batch(F, X, Y, h, params):
    """Spray via the geodesic form G^i = g^is (y^k [F2]_xk_ys - [F2]_xs) / 4.

    Equivalent to contracting the Christoffel route with y twice, but two
    stencil levels shallower, which keeps roundoff far below tolerance when
    this feeds the curvature stencils.
    """
    n = X.shape[1]
    m = X.shape[0]
    plan = _ShiftPlan(X, Y)
    _hessian_blocks(plan, h, coord=1)  # for g
    for s in range(n):
        for o in _OFF1:
            plan.add(("fx", s), [(s, o * h)], [])
    for k in range(n):
        for s in range(n):
            for oa in _OFF1:
                for ob in _OFF1:
                    plan.add(("xy", k, s), [(k, oa * h)], [(s, ob * h)])
    parts = plan.run(lambda Xa, Ya: _chunked_f2(F, Xa, Ya, params))
    g = 0.5 * _hessian_combine(
        {k: v for k, v in parts.items() if k[0] in ("d", "c")}, h, n
    )
    ginv = np.linalg.inv(g)
    Lx = _grad_combine(
        {("g", k[1]): v for k, v in parts.items() if k[0] == "fx"}, h, n
    )
    Lxy = np.empty((m, n, n))
    for k in range(n):
        for s in range(n):
            vals = parts[("xy", k, s)].reshape(4, 4, m)
            Lxy[:, k, s] = np.einsum("a,b,abm->m", _W1, _W1, vals) / (h * h)
    rhs = np.einsum("mk,mks->ms", Y, Lxy) - Lx
    return 0.25 * np.einsum("mis,ms->mi", ginv, rhs)


def _R_batch(F, X, Y, h, params):
    n = X.shape[1]
    m = X.shape[0]
    plan = _ShiftPlan(X, Y)
    plan.add(("center",), [], [])
    # dG/dx_k and dG/dy_k
    for j in range(n):
        for o in _OFF1:
            plan.add(("gx", j), [(j, o * h)], [])
            plan.add(("gy", j), [], [(j, o * h)])
    # d2G/dx_j dy_k, full j x k
    for j in range(n):
        for k in range(n):
            for oa in _OFF1:
                for ob in _OFF1:
                    plan.add(("xy", j, k), [(j, oa * h)], [(k, ob * h)])
    # d2G/dy_j dy_k, symmetric
    for j in range(n):
        for o in _OFF2:
            plan.add(("yyd", j), [], [(j, o * h)])
    for j in range(n):
        for k in range(j + 1, n):
            for oa in _OFF1:
                for ob in _OFF1:
                    plan.add(("yyc", j, k), [], [(j, oa * h), (k, ob * h)])
    parts = plan.run(lambda Xa, Ya: _G_batch(F, Xa, Ya, h, params))

    G0 = parts[("center",)][0]
    dGdx = np.stack(
        [np.tensordot(_W1, parts[("gx", j)], axes=(0, 0)) / h for j in range(n)],
        axis=-1,
    )
    dGdy = np.stack(
        [np.tensordot(_W1, parts[("gy", j)], axes=(0, 0)) / h for j in range(n)],
        axis=-1,
    )
    d2xy = np.empty((m, n, n, n))  # (m, i, j, k): d2 G^i / dx_j dy_k
    for j in range(n):
        for k in range(n):
            vals = parts[("xy", j, k)].reshape(4, 4, m, n)
            d2xy[:, :, j, k] = np.einsum("a,b,abmi->mi", _W1, _W1, vals) / (h * h)
    d2yy = np.empty((m, n, n, n))
    for j in range(n):
        vals = parts[("yyd", j)]
        d2yy[:, :, j, j] = np.tensordot(_W2, vals, axes=(0, 0)) / (h * h)
    for j in range(n):
        for k in range(j + 1, n):
            vals = parts[("yyc", j, k)].reshape(4, 4, m, n)
            acc = np.einsum("a,b,abmi->mi", _W1, _W1, vals) / (h * h)
            d2yy[:, :, j, k] = d2yy[:, :, k, j] = acc
    f2 = _chunked_f2(F, X, Y, params)
    R = (
        2.0 * dGdx
        - np.einsum("mj,mijk->mik", Y, d2xy)
        + 2.0 * np.einsum("mj,mijk->mik", G0, d2yy)
        - np.einsum("mij,mjk->mik", dGdy, dGdy)
    ) / f2[:, None, None]
    return R


def _ric_batch(F, X, Y, h, params):
    return np.trace(_R_batch(F, X, Y, h, params), axis1=1, axis2=2)


def _half_f2_ric(F, X, Y, h, params):
    return 0.5 * _chunked_f2(F, X, Y, params) * _ric_batch(F, X, Y, h, params)


def _ricjk_batch(F, X, Y, h, params):
    n = X.shape[1]
    plan = _ShiftPlan(X, Y)
    _hessian_blocks(plan, h, coord=1)
    parts = plan.run(lambda Xa, Ya: _half_f2_ric(F, Xa, Ya, h, params))
    return _hessian_combine(parts, h, n)


def _field_values(field, X, chunk=1 << 19):
    return field.values(X)


def _lie_f2_batch(F, field, X, Y, h, params):
    n = X.shape[1]
    plan = _ShiftPlan(X, Y)
    for j in range(n):
        for o in _OFF1:
            plan.add(("fx", j), [(j, o * h)], [])
            plan.add(("fy", j), [], [(j, o * h)])
    parts = plan.run(lambda Xa, Ya: _chunked_f2(F, Xa, Ya, params))
    dF2dx = _grad_combine({("g", k[1]): v for k, v in parts.items() if k[0] == "fx"}, h, n)
    dF2dy = _grad_combine({("g", k[1]): v for k, v in parts.items() if k[0] == "fy"}, h, n)
    v0 = _field_values(field, X)
    # dv^i/dx_j by the same first-derivative stencil on field components
    dv = np.empty((X.shape[0], n, n))
    for j in range(n):
        vals = []
        for o in _OFF1:
            Xs = X.copy()
            Xs[:, j] += o * h
            vals.append(_field_values(field, Xs))
        dv[:, :, j] = np.tensordot(_W1, np.stack(vals, axis=0), axes=(0, 0)) / h
    w = np.einsum("mj,mij->mi", Y, dv)
    return np.einsum("mi,mi->m", v0, dF2dx) + np.einsum("mi,mi->m", w, dF2dy)


def _lie_g_batch(F, field, X, Y, h, params):
    n = X.shape[1]
    plan = _ShiftPlan(X, Y)
    _hessian_blocks(plan, h, coord=1)
    parts = plan.run(lambda Xa, Ya: _lie_f2_batch(F, field, Xa, Ya, h, params))
    return 0.5 * _hessian_combine(parts, h, n)


_BATCHES = {
    "g": _g_batch,
    "gamma": _gamma_batch,
    "G": _G_batch,
    "R": _R_batch,
    "ric": _ric_batch,
    "ric_jk": _ricjk_batch,
}


def finite_difference_oracle(F, samples, quantity, h=None,
                             richardson=True, field=None, params=None):
    """Oracle value of a quantity at each sample, shape (m, ...).

    quantity is one of g, gamma, G, R, ric, ric_jk, lie_f2, lie_g; the two
    Lie quantities need the vector field.  h defaults per quantity.
    """
    if h is None:
        h = DEFAULT_STEPS.get(quantity, DEFAULT_STEP)
    if isinstance(samples, Sample):
        samples = [samples]
    X = np.array([s.x for s in samples], dtype=np.float64)
    Y = np.array([s.y for s in samples], dtype=np.float64)

    if quantity in ("lie_f2", "lie_g"):
        if field is None:
            raise ValueError(f"{quantity} oracle needs a vector field")
        lie = _lie_f2_batch if quantity == "lie_f2" else _lie_g_batch

        def run(step, Xc, Yc):
            return lie(F, field, Xc, Yc, step, params)
    elif quantity in _BATCHES:
        def run(step, Xc, Yc, fn=_BATCHES[quantity]):
            return fn(F, Xc, Yc, step, params)
    else:
        raise ValueError(f"unknown oracle quantity {quantity!r}")

    chunk = _CHUNK.get(quantity, 64)
    m = X.shape[0]
    pieces = []
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        Xc, Yc = X[lo:hi], Y[lo:hi]
        if richardson:
            coarse = run(h, Xc, Yc)
            fine = run(h / 2, Xc, Yc)
            pieces.append((16.0 * fine - coarse) / 15.0)
        else:
            pieces.append(run(h, Xc, Yc))
    return np.concatenate(pieces, axis=0)
