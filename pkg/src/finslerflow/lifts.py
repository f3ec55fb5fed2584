"""Vector fields, complete lifts, Lie derivatives, and symbolic pullbacks.

A vector field V = v^i(x) d/dx_i on the base manifold lifts to the tangent
bundle as

    V^ = v^i d/dx_i + w^i d/dy_i,      w^i = y^j dv^i/dx_j,

and the Lie derivative of F^2 along the lift is the directional derivative

    L_V^ F^2 = v^i dF^2/dx_i + w^i dF^2/dy_i.

The Lie derivative of the fundamental tensor is taken as half the
y-Hessian of L_V^ F^2; the lift's fiber component is linear in y, so the
Lie derivative commutes past the vertical Hessian.  The contraction
identity (L g)_jk y^j y^k = L F^2 is checked in the tests rather than
assumed.

A diffeomorphism phi of the base acts on a structure through its tangent
map: (pullback F^2)(x, y) = F^2(phi(x), Dphi(x) y).
"""

from __future__ import annotations

import weakref

import numpy as np

from .errors import ConfigError
from .expr import (Add, Const, Mul, Var, differentiate, free_vars, simplify,
                   substitute)
from .geometry import _COORD_RE, FinslerStructure
from .tape import compile_tape

_ZERO = Const(0.0)


def _parse_components(dim, components, what):
    from .parser import parse

    comps = []
    allowed = {f"x{i + 1}" for i in range(dim)}
    for c in components:
        e = parse(c) if isinstance(c, str) else c
        e = simplify(e)
        extra = free_vars(e) - allowed
        if extra:
            bad = ", ".join(sorted(extra))
            raise ValueError(f"{what} components may only use x1..x{dim}, got {bad}")
        comps.append(e)
    if len(comps) != dim:
        raise ValueError(f"expected {dim} components, got {len(comps)}")
    return tuple(comps)


class VectorField:
    """v^i(x) d/dx_i with symbolic components."""

    def __init__(self, dim, components, name=None):
        self.dim = int(dim)
        self.components = _parse_components(self.dim, components, "vector field")
        self.name = name or "field"
        self.xvars = tuple(f"x{i + 1}" for i in range(self.dim))
        self._cache = {}

    def __repr__(self):
        return f"<VectorField {self.name} dim={self.dim}>"

    def jacobian_exprs(self):
        """dv^i/dx_j, row index i."""
        t = self._cache.get("jac")
        if t is None:
            t = tuple(
                tuple(differentiate(v, xj) for xj in self.xvars)
                for v in self.components
            )
            self._cache["jac"] = t
        return t

    def _tape(self, key, flat):
        t = self._cache.get(key)
        if t is None:
            t = compile_tape(flat, self.xvars)
            self._cache[key] = t
        return t

    def values(self, X):
        """Component values at each row of X, shape (m, n)."""
        t = self._tape("vals", list(self.components))
        return t.evaluate(np.asarray(X, dtype=np.float64))

    def jacobian_values(self, X):
        """dv^i/dx_j at each row of X, shape (m, n, n)."""
        flat = [d for row in self.jacobian_exprs() for d in row]
        t = self._tape("jacvals", flat)
        out = t.evaluate(np.asarray(X, dtype=np.float64))
        return out.reshape(-1, self.dim, self.dim)


class CompleteLift:
    """The lift V^ of a base field: components (v^i, w^i) on TM."""

    def __init__(self, base):
        self.base = base
        self.v = base.components
        yvars = tuple(Var(f"y{j + 1}") for j in range(base.dim))
        jac = base.jacobian_exprs()
        self.w = tuple(
            simplify(
                _sum(Mul(yvars[j], jac[i][j]) for j in range(base.dim))
            )
            for i in range(base.dim)
        )

    def __repr__(self):
        return f"<CompleteLift of {self.base.name}>"


def _sum(terms):
    acc = None
    for t in terms:
        acc = t if acc is None else Add(acc, t)
    return acc if acc is not None else _ZERO


def complete_lift(V):
    return CompleteLift(V)


# Lie-derivative expressions cached per (structure, field) pair by identity.
_LIE_CACHE = weakref.WeakKeyDictionary()


def _lie_entry(F, V):
    per_f = _LIE_CACHE.get(F)
    if per_f is None:
        per_f = weakref.WeakKeyDictionary()
        _LIE_CACHE[F] = per_f
    entry = per_f.get(V)
    if entry is None:
        entry = {}
        per_f[V] = entry
    return entry


def lie_f2_expr(F, V):
    """L_V^ F^2 as a simplified expression."""
    entry = _lie_entry(F, V)
    e = entry.get("f2")
    if e is None:
        if V.dim != F.dim:
            raise ValueError("field and structure dimensions differ")
        lift = complete_lift(V)
        acc = _ZERO
        for i in range(F.dim):
            acc = Add(acc, Mul(lift.v[i], differentiate(F.f2, F.xvars[i])))
            acc = Add(acc, Mul(lift.w[i], differentiate(F.f2, F.yvars[i])))
        e = simplify(acc)
        entry["f2"] = e
    return e


def lie_g_exprs(F, V):
    """Half the y-Hessian of L_V^ F^2, a symmetric n x n table."""
    entry = _lie_entry(F, V)
    t = entry.get("g")
    if t is None:
        lf2 = lie_f2_expr(F, V)
        n = F.dim
        half = Const(0.5)
        rows = [[None] * n for _ in range(n)]
        for j in range(n):
            dj = differentiate(lf2, F.yvars[j])
            for k in range(j, n):
                e = simplify(Mul(half, differentiate(dj, F.yvars[k])))
                rows[j][k] = rows[k][j] = e
        t = tuple(tuple(r) for r in rows)
        entry["g"] = t
    return t


def _lie_tape(F, V, which):
    entry = _lie_entry(F, V)
    key = ("tape", which)
    t = entry.get(key)
    if t is None:
        if which == "f2":
            flat = [lie_f2_expr(F, V)]
        else:
            flat = [e for row in lie_g_exprs(F, V) for e in row]
        t = compile_tape(flat, F.var_order)
        entry[key] = t
    return t


def lie_f2_values(F, V, samples, params=None):
    """L_V^ F^2 at each sample, shape (m,)."""
    rows = F.rows(samples, params)
    return _lie_tape(F, V, "f2").evaluate(rows)[:, 0]


def lie_g_values(F, V, samples, params=None):
    """L_V^ g at each sample, shape (m, n, n)."""
    rows = F.rows(samples, params)
    out = _lie_tape(F, V, "g").evaluate(rows)
    return out.reshape(-1, F.dim, F.dim)


def lie_derivative_F2(F, V, s, params=None):
    return float(lie_f2_values(F, V, [s], params)[0])


def lie_derivative_g(F, V, s, params=None):
    return lie_g_values(F, V, [s], params)[0]


class SymbolicDiffeo:
    """phi: M -> M given by closed-form components, with derived Jacobian."""

    def __init__(self, dim, components, inverse=None, name=None,
                 check=True, check_box=1.0, check_count=20, seed=0):
        self.dim = int(dim)
        self.components = _parse_components(self.dim, components, "diffeo")
        self.inverse = (
            _parse_components(self.dim, inverse, "inverse diffeo")
            if inverse is not None
            else None
        )
        self.name = name or "diffeo"
        self.xvars = tuple(f"x{i + 1}" for i in range(self.dim))
        self.jacobian = tuple(
            tuple(differentiate(c, xj) for xj in self.xvars)
            for c in self.components
        )
        self._cache = {}
        if check:
            self._check(check_box, check_count, seed)

    def __repr__(self):
        return f"<SymbolicDiffeo {self.name} dim={self.dim}>"

    def _tape(self, key, flat):
        t = self._cache.get(key)
        if t is None:
            t = compile_tape(flat, self.xvars)
            self._cache[key] = t
        return t

    def map_points(self, X):
        """phi applied to each row, shape (m, n)."""
        t = self._tape("phi", list(self.components))
        return t.evaluate(np.asarray(X, dtype=np.float64))

    def jacobian_values(self, X):
        """Dphi at each row, shape (m, n, n)."""
        flat = [d for row in self.jacobian for d in row]
        t = self._tape("jac", flat)
        return t.evaluate(np.asarray(X, dtype=np.float64)).reshape(
            -1, self.dim, self.dim
        )

    def inverse_points(self, X):
        if self.inverse is None:
            raise ConfigError(f"diffeo {self.name} has no inverse components")
        t = self._tape("psi", list(self.inverse))
        return t.evaluate(np.asarray(X, dtype=np.float64))

    def _check(self, box, count, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-box, box, size=(count, self.dim))
        det = np.linalg.det(self.jacobian_values(X))
        if np.any(np.abs(det) < 1e-12):
            i = int(np.argmin(np.abs(det)))
            raise ConfigError(
                f"diffeo {self.name}: Jacobian determinant vanishes near "
                f"x={tuple(round(v, 6) for v in X[i])}"
            )
        if self.inverse is not None:
            back = self.inverse_points(self.map_points(X))
            err = np.max(np.abs(back - X))
            if err > 1e-9:
                raise ConfigError(
                    f"diffeo {self.name}: inverse does not invert the map "
                    f"(max deviation {err:.3e})"
                )


def pullback_symbolic(F0, d, samples=None, params=None):
    """The structure F0 composed with the tangent map of phi.

    New F^2(x, y) = F0^2(phi(x), Dphi(x) y).  If samples are given the
    result is additionally run through the structure checks at them.
    """
    if d.dim != F0.dim:
        raise ValueError("diffeo and structure dimensions differ")
    subs = {}
    yvars = tuple(Var(f"y{j + 1}") for j in range(F0.dim))
    for m in range(F0.dim):
        subs[f"x{m + 1}"] = d.components[m]
        subs[f"y{m + 1}"] = simplify(
            _sum(Mul(d.jacobian[m][j], yvars[j]) for j in range(F0.dim))
        )
    f2 = substitute(F0.f2, subs)
    out = FinslerStructure(F0.dim, f2, name=f"{d.name}*{F0.name}")
    if samples is not None:
        from .geometry import check_finsler

        report = check_finsler(out, samples, params=params)
        if not report.passed:
            from .errors import NotPositiveDefiniteError

            idx, bad, msg = report.failures[0]
            raise NotPositiveDefiniteError(bad, msg)
    return out
