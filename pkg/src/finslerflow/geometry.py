"""Finsler structures and their curvature pipeline.

A structure is defined by the symbolic square F^2(x, y) of its norm on the
slit tangent bundle.  Everything downstream is derived from that one
expression:

    g_ij      = 1/2 d^2 F^2 / dy_i dy_j          (fundamental tensor)
    gamma^i_jk = g^is C_sjk,
    C_sjk     = 1/2 (dg_sj/dx_k - dg_jk/dx_s + dg_ks/dx_j)
    G^i       = 1/2 gamma^i_jk y^j y^k            (spray coefficients)
    R^i_k     = (1/F^2) (2 dG^i/dx_k - y^j d2G^i/dx_j dy_k
                 + 2 G^j d2G^i/dy_j dy_k - dG^i/dy_j dG^j/dy_k)
    Ric       = R^i_i
    Ric_jk    = 1/2 d^2 (F^2 Ric) / dy_j dy_k     (curvature tensor)

For dim <= 3 the whole chain is symbolic (the metric inverse enters through
the adjugate over the determinant, so every quantity is a closed-form
expression compiled to a tape).  For dim >= 4 the same formulas are
assembled numerically at each sample from symbolic derivatives of g, with
the inverse taken pointwise; a finite-difference Hessian in y supplies
Ric_jk there.  Both schemes are exposed so the boundary can be tested.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DegenerateSampleError, NotPositiveDefiniteError
from .expr import Const, Div, Mul, Pow, Var, differentiate, free_vars, simplify
from .tape import compile_tape

_COORD_RE = re.compile(r"^([xy])([1-9][0-9]*)$")
_Y_EPS = 1e-12


@dataclass(frozen=True)
class Sample:
    """A point (x, y) on the slit tangent bundle."""

    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        if math.sqrt(sum(v * v for v in self.y)) < _Y_EPS:
            raise DegenerateSampleError(f"|y| below {_Y_EPS:g} at x={self.x}")

    @property
    def dim(self):
        return len(self.x)


class FinslerStructure:
    """Holds F^2 and lazily derived symbolic tables and compiled tapes."""

    def __init__(self, dim, f2, name=None):
        if isinstance(f2, str):
            from .parser import parse

            f2 = parse(f2)
        self.dim = int(dim)
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        self.f2 = simplify(f2)
        self.name = name or "unnamed"
        params = []
        for v in sorted(free_vars(self.f2)):
            m = _COORD_RE.match(v)
            if m:
                if int(m.group(2)) > self.dim:
                    raise ValueError(f"variable {v} exceeds dimension {self.dim}")
                continue
            if v == "t":
                raise ValueError("'t' is reserved for flow time")
            params.append(v)
        self.params = tuple(params)
        self.xvars = tuple(f"x{i + 1}" for i in range(self.dim))
        self.yvars = tuple(f"y{i + 1}" for i in range(self.dim))
        self.var_order = self.xvars + self.yvars + self.params
        self._cache = {}
        # dim >= 4 switches to pointwise assembly of the same formulas
        self.numeric_mode = self.dim >= 4

    def __repr__(self):
        return f"<FinslerStructure {self.name} dim={self.dim}>"

    # -- symbolic tables ----------------------------------------------------

    def exprs(self, kind):
        t = self._cache.get(kind)
        if t is None:
            t = _BUILDERS[kind](self)
            self._cache[kind] = t
        return t

    def tape(self, kind):
        key = ("tape", kind)
        t = self._cache.get(key)
        if t is None:
            flat = _flatten(self.exprs(kind))
            t = compile_tape(flat, self.var_order)
            self._cache[key] = t
        return t

    def rows(self, samples, params=None):
        """Stack samples into the tape input layout."""
        m = len(samples)
        vals = np.empty((m, len(self.var_order)))
        for i, s in enumerate(samples):
            if s.dim != self.dim:
                raise ValueError("sample dimension mismatch")
            vals[i, : self.dim] = s.x
            vals[i, self.dim : 2 * self.dim] = s.y
        for j, p in enumerate(self.params):
            if not params or p not in params:
                from .errors import UnboundVariableError

                raise UnboundVariableError(p)
            vals[:, 2 * self.dim + j] = params[p]
        return vals


def _flatten(table):
    if isinstance(table, ex.Expr):
        return [table]
    out = []
    for item in table:
        out.extend(_flatten(item))
    return out


# -- symbolic builders ------------------------------------------------------


def _b_f2(F):
    return F.f2


def _b_dy(F):
    return [differentiate(F.f2, v) for v in F.yvars]


def _b_dx(F):
    return [differentiate(F.f2, v) for v in F.xvars]


def _b_g(F):
    n = F.dim
    dy = F.exprs("dy")
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            e = simplify(Mul(Const(0.5), differentiate(dy[i], F.yvars[j])))
            g[i][j] = g[j][i] = e
    return g


def _det_adj(g, n):
    """Determinant and adjugate of a small symmetric symbolic matrix."""
    if n == 2:
        det = simplify(g[0][0] * g[1][1] - g[0][1] * g[1][0])
        adj = [[g[1][1], ex.Neg(g[0][1])], [ex.Neg(g[1][0]), g[0][0]]]
    elif n == 3:
        def m2(a, b, c, d):
            return g[a][b] * g[c][d] - g[a][d] * g[c][b]

        det = simplify(
            g[0][0] * m2(1, 1, 2, 2) - g[0][1] * m2(1, 0, 2, 2) + g[0][2] * m2(1, 0, 2, 1)
        )
        adj = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                r = [a for a in range(3) if a != j]
                c = [b for b in range(3) if b != i]
                minor = g[r[0]][c[0]] * g[r[1]][c[1]] - g[r[0]][c[1]] * g[r[1]][c[0]]
                sign = 1 if (i + j) % 2 == 0 else -1
                adj[i][j] = minor if sign > 0 else ex.Neg(minor)
    else:
        raise ValueError("symbolic inverse only for dim <= 3")
    adj = [[simplify(a) for a in row] for row in adj]
    return det, adj


def _b_det_adj(F):
    return _det_adj(F.exprs("g"), F.dim)


def _b_dgdx(F):
    n = F.dim
    g = F.exprs("g")
    return [[[differentiate(g[i][j], F.xvars[k]) for k in range(n)] for j in range(n)]
            for i in range(n)]


def _c_lower(F):
    """C_sjk, symmetric in (j, k)."""
    n = F.dim
    dg = F.exprs("dgdx")
    C = [[[None] * n for _ in range(n)] for _ in range(n)]
    for s in range(n):
        for j in range(n):
            for k in range(j, n):
                e = simplify(
                    Mul(Const(0.5), dg[s][j][k] - dg[j][k][s] + dg[k][s][j])
                )
                C[s][j][k] = C[s][k][j] = e
    return C


def _b_gamma(F):
    n = F.dim
    det, adj = F.exprs("det_adj")
    C = F.exprs("C")
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                num = None
                for s in range(n):
                    t = Mul(adj[s][i], C[s][j][k])
                    num = t if num is None else num + t
                e = simplify(Div(num, det))
                gamma[i][j][k] = gamma[i][k][j] = e
    return gamma


def _b_spray(F):
    n = F.dim
    gamma = F.exprs("gamma")
    G = []
    for i in range(n):
        acc = None
        for j in range(n):
            for k in range(n):
                t = Mul(Mul(gamma[i][j][k], Var(F.yvars[j])), Var(F.yvars[k]))
                acc = t if acc is None else acc + t
        G.append(simplify(Mul(Const(0.5), acc)))
    return G


def _b_spray_grads(F):
    n = F.dim
    G = F.exprs("G")
    dGdx = [[differentiate(G[i], F.xvars[k]) for k in range(n)] for i in range(n)]
    dGdy = [[differentiate(G[i], F.yvars[k]) for k in range(n)] for i in range(n)]
    return dGdx, dGdy


def _b_R(F):
    n = F.dim
    G = F.exprs("G")
    dGdx, dGdy = F.exprs("spray_grads")
    R = [[None] * n for _ in range(n)]
    for i in range(n):
        d2xy = [[differentiate(dGdx[i][j], F.yvars[k]) for k in range(n)] for j in range(n)]
        d2yy = [[differentiate(dGdy[i][j], F.yvars[k]) for k in range(n)] for j in range(n)]
        for k in range(n):
            acc = 2 * dGdx[i][k]
            for j in range(n):
                acc = acc - Var(F.yvars[j]) * d2xy[j][k]
                acc = acc + 2 * Mul(G[j], d2yy[j][k])
                acc = acc - Mul(dGdy[i][j], dGdy[j][k])
            R[i][k] = simplify(Div(acc, F.f2))
    return R


def _b_ric(F):
    R = F.exprs("R")
    acc = None
    for i in range(F.dim):
        acc = R[i][i] if acc is None else acc + R[i][i]
    return simplify(acc)


def _b_ric_jk(F):
    n = F.dim
    half_f2_ric = simplify(Mul(Const(0.5), Mul(F.f2, F.exprs("ric"))))
    dy = [differentiate(half_f2_ric, v) for v in F.yvars]
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for k in range(j, n):
            e = differentiate(dy[j], F.yvars[k])
            out[j][k] = out[k][j] = e
    return out


_BUILDERS = {
    "f2": _b_f2,
    "dy": _b_dy,
    "dx": _b_dx,
    "g": _b_g,
    "det_adj": _b_det_adj,
    "dgdx": _b_dgdx,
    "C": _c_lower,
    "gamma": _b_gamma,
    "G": _b_spray,
    "spray_grads": _b_spray_grads,
    "R": _b_R,
    "ric": _b_ric,
    "ric_jk": _b_ric_jk,
}


# -- evaluation -------------------------------------------------------------


@dataclass
class MetricAtSample:
    sample: Sample
    g: np.ndarray
    g_inv: np.ndarray

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.g)[0])


@dataclass
class CurvatureAtSample:
    sample: Sample
    R: np.ndarray
    ric: float
    ric_tensor: np.ndarray


def _spd_inverse(g, sample):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(
            sample, f"min eigenvalue {np.linalg.eigvalsh(g)[0]:.3e}"
        ) from None
    return np.linalg.inv(g)


def f2_value(F, sample, params=None):
    return float(F.tape("f2").evaluate(F.rows([sample], params))[0, 0])


def f2_values(F, samples, params=None):
    return F.tape("f2").evaluate(F.rows(samples, params))[:, 0]


def fundamental_tensor(F, sample, params=None):
    """Fundamental tensor and its inverse at one sample."""
    g = _eval_square(F, "g", [sample], params)[0]
    return MetricAtSample(sample, g, _spd_inverse(g, sample))


def _eval_square(F, kind, samples, params=None):
    n = F.dim
    flat = F.tape(kind).evaluate(F.rows(samples, params))
    return flat.reshape(len(samples), n, n)


def christoffel(F, sample, params=None):
    """Formal Christoffel symbols gamma^i_jk at one sample, shape (n, n, n)."""
    n = F.dim
    if F.numeric_mode:
        return _assemble(F, [sample], params, upto="gamma")["gamma"][0]
    flat = F.tape("gamma").evaluate(F.rows([sample], params))
    return flat.reshape(n, n, n)


def spray(F, sample, params=None):
    """Spray coefficients G^i at one sample."""
    if F.numeric_mode:
        return _assemble(F, [sample], params, upto="G")["G"][0]
    return F.tape("G").evaluate(F.rows([sample], params))[0]


def reduced_curvature(F, sample, params=None):
    """Reduced curvature R^i_k at one sample, shape (n, n)."""
    if F.numeric_mode:
        return _assemble(F, [sample], params, upto="R")["R"][0]
    return _eval_square(F, "R", [sample], params)[0]


def ricci_scalar(F, sample, params=None):
    """Trace R^i_i of the reduced curvature."""
    if F.numeric_mode:
        return float(np.trace(_assemble(F, [sample], params, upto="R")["R"][0]))
    return float(F.tape("ric").evaluate(F.rows([sample], params))[0, 0])


def ricci_scalars(F, samples, params=None):
    if F.numeric_mode:
        return np.trace(_assemble(F, samples, params, upto="R")["R"], axis1=1, axis2=2)
    return F.tape("ric").evaluate(F.rows(samples, params))[:, 0]


def akbar_zadeh_ricci(F, sample, params=None):
    """Curvature tensor Ric_jk (the y-Hessian of F^2 Ric / 2) at one sample."""
    if F.numeric_mode:
        return _ric_jk_numeric(F, sample, params)
    return _eval_square(F, "ric_jk", [sample], params)[0]


def curvature_at(F, sample, params=None):
    return CurvatureAtSample(
        sample,
        reduced_curvature(F, sample, params),
        ricci_scalar(F, sample, params),
        akbar_zadeh_ricci(F, sample, params),
    )


def scale(F, mu, name=None):
    """The structure with norm mu*F, i.e. squared norm mu^2 F^2."""
    if mu <= 0:
        raise ValueError("scale factor must be positive")
    return FinslerStructure(
        F.dim, Mul(Const(mu * mu), F.f2), name or f"{F.name}*{mu:g}"
    )


# -- pointwise assembly (any dim; the only scheme for dim >= 4) -------------


def _b_assembly(F):
    """Symbolic ingredients for pointwise curvature assembly."""
    n = F.dim
    g = F.exprs("g")
    gx = F.exprs("dgdx")
    gy = [[[differentiate(g[i][j], F.yvars[k]) for k in range(n)] for j in range(n)]
          for i in range(n)]
    gxy = [[[[differentiate(gx[i][j][a], F.yvars[b]) for b in range(n)] for a in range(n)]
            for j in range(n)] for i in range(n)]
    gyy = [[[[differentiate(gy[i][j][a], F.yvars[b]) for b in range(n)] for a in range(n)]
            for j in range(n)] for i in range(n)]
    C = F.exprs("C")
    B = []
    for s in range(n):
        acc = None
        for j in range(n):
            for k in range(n):
                t = Mul(Mul(C[s][j][k], Var(F.yvars[j])), Var(F.yvars[k]))
                acc = t if acc is None else acc + t
        B.append(simplify(acc))
    Bx = [[differentiate(B[s], v) for v in F.xvars] for s in range(n)]
    By = [[differentiate(B[s], v) for v in F.yvars] for s in range(n)]
    Bxy = [[[differentiate(Bx[s][a], F.yvars[b]) for b in range(n)] for a in range(n)]
           for s in range(n)]
    Byy = [[[differentiate(By[s][a], F.yvars[b]) for b in range(n)] for a in range(n)]
           for s in range(n)]
    return {"g": g, "gx": gx, "gy": gy, "gxy": gxy, "gyy": gyy,
            "C": C, "B": B, "Bx": Bx, "By": By, "Bxy": Bxy, "Byy": Byy}


_BUILDERS["assembly"] = _b_assembly


def _assembly_tape(F):
    key = ("tape", "assembly")
    t = F._cache.get(key)
    if t is None:
        ing = F.exprs("assembly")
        order = ["g", "gx", "gy", "gxy", "gyy", "C", "B", "Bx", "By", "Bxy", "Byy"]
        flat = []
        shapes = {}
        for name in order:
            part = _flatten(ing[name])
            shapes[name] = (len(flat), len(part))
            flat.extend(part)
        t = (compile_tape(flat + [F.f2], F.var_order), shapes, order)
        F._cache[key] = t
    return t


def _assemble(F, samples, params=None, upto="R"):
    """Evaluate curvature quantities by pointwise linear algebra.

    Validates against the fully symbolic scheme at dim <= 3; it is the only
    scheme at dim >= 4 (the symbolic inverse stops at the 3x3 adjugate).
    """
    n = F.dim
    tape, shapes, order = _assembly_tape(F)
    raw = tape.evaluate(F.rows(samples, params))
    m = len(samples)

    def block(name, *dims):
        off, length = shapes[name]
        return raw[:, off : off + length].reshape((m,) + dims)

    g = block("g", n, n)
    gx = block("gx", n, n, n)
    gy = block("gy", n, n, n)
    gxy = block("gxy", n, n, n, n)
    gyy = block("gyy", n, n, n, n)
    C = block("C", n, n, n)
    B = block("B", n)
    Bx = block("Bx", n, n)
    By = block("By", n, n)
    Bxy = block("Bxy", n, n, n)
    Byy = block("Byy", n, n, n)
    f2 = raw[:, -1]

    V = np.empty_like(g)
    for i in range(m):
        V[i] = _spd_inverse(g[i], samples[i])

    out = {"g": g, "g_inv": V}
    out["gamma"] = np.einsum("mis,msjk->mijk", V, C)
    if upto == "gamma":
        return out
    G = 0.5 * np.einsum("mis,ms->mi", V, B)
    out["G"] = G
    if upto == "G":
        return out

    # dV/dz = -V dg/dz V
    Vx = -np.einsum("mia,mabk,mbs->misk", V, gx, V)
    Vy = -np.einsum("mia,mabk,mbs->misk", V, gy, V)
    dGdx = 0.5 * (np.einsum("misk,ms->mik", Vx, B) + np.einsum("mis,msk->mik", V, Bx))
    dGdy = 0.5 * (np.einsum("misk,ms->mik", Vy, B) + np.einsum("mis,msk->mik", V, By))

    # d2V/dz dw = V gz V gw V + V gw V gz V - V gzw V
    def d2V(gz, gw, gzw):
        t1 = np.einsum("mia,mabj,mbc,mcdk,mds->misjk", V, gz, V, gw, V)
        t2 = np.einsum("mia,mabk,mbc,mcdj,mds->misjk", V, gw, V, gz, V)
        t3 = np.einsum("mia,mabjk,mbs->misjk", V, gzw, V)
        return t1 + t2 - t3

    Vxy = d2V(gx, gy, gxy)
    Vyy = d2V(gy, gy, gyy)
    d2Gxy = 0.5 * (
        np.einsum("misjk,ms->mijk", Vxy, B)
        + np.einsum("misj,msk->mijk", Vx, By)
        + np.einsum("misk,msj->mijk", Vy, Bx)
        + np.einsum("mis,msjk->mijk", V, Bxy)
    )
    d2Gyy = 0.5 * (
        np.einsum("misjk,ms->mijk", Vyy, B)
        + np.einsum("misj,msk->mijk", Vy, By)
        + np.einsum("misk,msj->mijk", Vy, By)
        + np.einsum("mis,msjk->mijk", V, Byy)
    )

    yv = np.array([s.y for s in samples])
    R = (
        2.0 * dGdx
        - np.einsum("mj,mijk->mik", yv, d2Gxy)
        + 2.0 * np.einsum("mj,mijk->mik", G, d2Gyy)
        - np.einsum("mij,mjk->mik", dGdy, dGdy)
    ) / f2[:, None, None]
    out["R"] = R
    return out


def _ric_jk_numeric(F, sample, params=None, h=1e-2):
    """Ric_jk via a finite-difference y-Hessian of F^2 Ric / 2.

    Used only when the symbolic chain is unavailable (dim >= 4).  Five-point
    stencils plus one Richardson pass keep truncation near machine level.
    """
    n = F.dim

    def phi(y_rows):
        pts = [Sample(sample.x, tuple(y)) for y in y_rows]
        vals = _assemble(F, pts, params, upto="R")
        ric = np.trace(vals["R"], axis1=1, axis2=2)
        f2 = f2_values(F, pts, params)
        return 0.5 * f2 * ric

    def hessian(step):
        H = np.empty((n, n))
        y0 = np.array(sample.y)
        c5 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
        for j in range(n):
            rows = []
            for o in (-2, -1, 0, 1, 2):
                y = y0.copy()
                y[j] += o * step
                rows.append(y)
            H[j, j] = (phi(np.array(rows)) * c5).sum() / step**2
        w = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
        offs = (-2, -1, 1, 2)
        for j in range(n):
            for k in range(j + 1, n):
                rows = []
                for oj in offs:
                    for okk in offs:
                        y = y0.copy()
                        y[j] += oj * step
                        y[k] += okk * step
                        rows.append(y)
                vals = phi(np.array(rows)).reshape(4, 4)
                H[j, k] = H[k, j] = (w @ vals @ w) / step**2
        return H

    coarse, fine = hessian(h), hessian(h / 2)
    return (16.0 * fine - coarse) / 15.0


# -- structure checks -------------------------------------------------------


@dataclass
class FinslerCheckReport:
    name: str
    n_samples: int
    passed: bool
    min_eigenvalue: float
    homogeneity_max_rel: float
    euler_max_rel: float
    failures: list = field(default_factory=list)


def check_finsler(F, samples, params=None, homog_tol=1e-8, euler_tol=1e-9):
    """Positive 2-homogeneity, Euler identity, and positive-definiteness.

    Homogeneity is checked by rescaling y by 0.5, 2, and 3; the Euler
    identity y.dF2/dy = 2 F^2 is its differential counterpart.
    """
    failures = []
    min_eig = math.inf
    homog_max = 0.0
    euler_max = 0.0
    f2_tape = F.tape("f2")
    dy_tape = F.tape("dy")
    for idx, s in enumerate(samples):
        base = float(f2_tape.evaluate(F.rows([s], params))[0, 0])
        if base <= 0:
            failures.append((idx, s, f"F^2 = {base:.3e} not positive"))
            continue
        for lam in (0.5, 2.0, 3.0):
            sl = Sample(s.x, tuple(lam * v for v in s.y))
            val = float(f2_tape.evaluate(F.rows([sl], params))[0, 0])
            rel = abs(val - lam * lam * base) / (lam * lam * base)
            homog_max = max(homog_max, rel)
            if rel > homog_tol:
                failures.append((idx, s, f"homogeneity residual {rel:.3e} at lambda={lam}"))
        dy = dy_tape.evaluate(F.rows([s], params))[0]
        euler = abs(float(np.dot(s.y, dy)) - 2.0 * base) / (2.0 * base)
        euler_max = max(euler_max, euler)
        if euler > euler_tol:
            failures.append((idx, s, f"Euler identity residual {euler:.3e}"))
        g = _eval_square(F, "g", [s], params)[0]
        eig = float(np.linalg.eigvalsh(g)[0])
        min_eig = min(min_eig, eig)
        if eig <= 0:
            failures.append((idx, s, f"g not positive definite (min eig {eig:.3e})"))
    return FinslerCheckReport(
        F.name, len(samples), not failures, min_eig, homog_max, euler_max, failures
    )
