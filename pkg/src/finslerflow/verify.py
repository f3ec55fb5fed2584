"""Property suites: pullback invariances of the curvature pipeline.

Three families of identities are exercised over a corpus of structures
and diffeomorphisms:

1. A pullback of a Finsler structure is again one: evaluable, positively
   2-homogeneous, strongly convex, and its y-gradient is the transported
   y-gradient of the original (chain rule through the tangent map).

2. Christoffel and spray coefficients commute with pullback: computing
   gamma and G from the pulled-back F^2 agrees with applying their
   defining formulas to the transported fundamental tensor
   g_R(x, y) = Dphi(x)^T g0(phi(x), Dphi(x) y) Dphi(x),
   built by substitution from the original g table.  The two routes share
   no intermediate expressions, so agreement is an actual check.

3. The curvature scalar scales as mu^-2 under constant rescaling of the
   norm and is invariant under pullback: Ric of the pulled-back structure
   at s equals Ric of the original at the transported sample.

Each check reports max and RMS residuals against a tolerance from one
table; a report passes when all its checks do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Add, Const, Mul, Var, differentiate, simplify, substitute
from .geometry import (FinslerStructure, Sample, _det_adj, check_finsler,
                       ricci_scalars, scale)
from .lifts import SymbolicDiffeo, pullback_symbolic
from .tape import compile_tape

# Residual tolerances, per check.  Nested derivative order degrades the
# achievable agreement predictably, hence the spread.
VERIFY_TOLERANCES = {
    "evaluable": 0.0,          # hard: any domain error fails
    "homogeneity": 1e-8,
    "convexity": 0.0,          # min eigenvalue must exceed this
    "y_gradient_chain": 1e-8,
    "gamma_pullback": 1e-6,
    "spray_pullback": 1e-6,
    "ricci_scaling": 1e-8,
    "ricci_pullback": 1e-6,
}


@dataclass
class CheckResult:
    name: str
    max_residual: float
    rms: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, residuals, tolerance=None, detail=""):
        residuals = np.atleast_1d(np.asarray(residuals, dtype=np.float64))
        mx = float(np.max(np.abs(residuals)))
        rms = float(np.sqrt(np.mean(residuals ** 2)))
        tol = VERIFY_TOLERANCES[name] if tolerance is None else tolerance
        self.checks.append(CheckResult(name, mx, rms, tol, mx <= tol, detail))

    def summary(self):
        lines = [f"{self.name}: {'pass' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok " if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            lines.append(
                f"  {mark} {c.name:<18} max={c.max_residual:.3e} "
                f"tol={c.tolerance:g}{extra}"
            )
        return "\n".join(lines)


def _tangent_subs(F0, d):
    """x -> phi(x), y -> Dphi(x) y, as a substitution map."""
    subs = {}
    yv = [Var(f"y{j + 1}") for j in range(F0.dim)]
    for m in range(F0.dim):
        acc = None
        for j in range(F0.dim):
            t = Mul(d.jacobian[m][j], yv[j])
            acc = t if acc is None else Add(acc, t)
        subs[f"x{m + 1}"] = d.components[m]
        subs[f"y{m + 1}"] = simplify(acc)
    return subs


def _transformed_samples(F0, d, samples):
    X = np.array([s.x for s in samples])
    Y = np.array([s.y for s in samples])
    Xp = d.map_points(X)
    A = d.jacobian_values(X)
    Yp = np.einsum("mij,mj->mi", A, Y)
    return [Sample(tuple(Xp[i]), tuple(Yp[i])) for i in range(len(samples))]


def _rel(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.abs(b))


def verify_lemma1(F0, d, samples, params=None):
    """Pullback is again a Finsler structure."""
    rep = VerificationReport(f"pullback-structure[{F0.name}, {d.name}]")
    pb = pullback_symbolic(F0, d)

    try:
        vals = pb.tape("f2").evaluate(pb.rows(samples, params))[:, 0]
        bad = float(np.sum(vals <= 0.0))
        rep.add("evaluable", bad, detail=f"min F^2 = {np.min(vals):.3e}")
    except Exception as e:  # domain faults count as failure, not crash
        rep.add("evaluable", np.inf, detail=str(e))
        return rep

    chk = check_finsler(pb, samples, params=params)
    rep.add("homogeneity", chk.homogeneity_max_rel)
    # positive-definiteness: residual is -min eigenvalue (<= 0 passes)
    rep.add("convexity", max(0.0, -chk.min_eigenvalue),
            detail=f"min eigenvalue {chk.min_eigenvalue:.6g}")

    # d(pullback F^2)/dy_i vs transported dF0^2/dy evaluated at phi~(s)
    subs = _tangent_subs(F0, d)
    dy0 = F0.exprs("dy")
    n = F0.dim
    lhs_exprs = [differentiate(pb.f2, f"y{i + 1}") for i in range(n)]
    rhs_exprs = []
    for i in range(n):
        acc = None
        for a in range(n):
            t = Mul(substitute(dy0[a], subs), d.jacobian[a][i])
            acc = t if acc is None else Add(acc, t)
        rhs_exprs.append(simplify(acc))
    rows = pb.rows(samples, params)
    lhs = compile_tape(lhs_exprs, pb.var_order).evaluate(rows)
    rhs = compile_tape(rhs_exprs, pb.var_order).evaluate(rows)
    rep.add("y_gradient_chain", _rel(lhs, rhs))
    return rep


def _gamma_spray_from_table(g, n):
    """gamma and G exprs from an arbitrary symmetric g table (defining
    formulas; the same ones the structure pipeline uses on its own g)."""
    xvars = [f"x{i + 1}" for i in range(n)]
    yvars = [Var(f"y{i + 1}") for i in range(n)]
    dg = [[[differentiate(g[i][j], xvars[k]) for k in range(n)]
           for j in range(n)] for i in range(n)]
    det, adj = _det_adj(g, n)
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    from .expr import Div

    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                num = None
                for s in range(n):
                    c_sjk = Mul(
                        Const(0.5),
                        dg[s][j][k] - dg[j][k][s] + dg[k][s][j],
                    )
                    t = Mul(adj[s][i], c_sjk)
                    num = t if num is None else Add(num, t)
                e = simplify(Div(num, det))
                gamma[i][j][k] = gamma[i][k][j] = e
    G = []
    for i in range(n):
        acc = None
        for j in range(n):
            for k in range(n):
                t = Mul(Mul(gamma[i][j][k], yvars[j]), yvars[k])
                acc = t if acc is None else Add(acc, t)
        G.append(simplify(Mul(Const(0.5), acc)))
    return gamma, G


def verify_lemma2(F0, d, samples, params=None):
    """Christoffel/spray of the pullback vs formulas on the transported g."""
    rep = VerificationReport(f"coefficient-transport[{F0.name}, {d.name}]")
    n = F0.dim
    pb = pullback_symbolic(F0, d)

    subs = _tangent_subs(F0, d)
    g0 = F0.exprs("g")
    g0s = [[substitute(g0[a][b], subs) for b in range(n)] for a in range(n)]
    gR = [[None] * n for _ in range(n)]
    for s in range(n):
        for j in range(s, n):
            acc = None
            for a in range(n):
                for b in range(n):
                    t = Mul(Mul(d.jacobian[a][s], d.jacobian[b][j]), g0s[a][b])
                    acc = t if acc is None else Add(acc, t)
            gR[s][j] = gR[j][s] = simplify(acc)

    gammaR, GR = _gamma_spray_from_table(gR, n)
    rows = pb.rows(samples, params)

    lhs_gamma = pb.tape("gamma").evaluate(rows).reshape(-1, n, n, n)
    flatR = [gammaR[i][j][k] for i in range(n) for j in range(n) for k in range(n)]
    rhs_gamma = compile_tape(flatR, pb.var_order).evaluate(rows).reshape(-1, n, n, n)
    rep.add("gamma_pullback", _rel(lhs_gamma, rhs_gamma))

    lhs_G = pb.tape("G").evaluate(rows)
    rhs_G = compile_tape(GR, pb.var_order).evaluate(rows)
    rep.add("spray_pullback", _rel(lhs_G, rhs_G))
    return rep


def verify_lemma3(F0, mu, d, samples, params=None):
    """Ricci scalar: mu^-2 scaling and pullback invariance."""
    rep = VerificationReport(f"ricci-invariance[{F0.name}, mu={mu:g}, {d.name}]")
    ric0 = ricci_scalars(F0, samples, params)

    Fm = scale(F0, mu)
    ricm = ricci_scalars(Fm, samples, params)
    rep.add("ricci_scaling", _rel(ricm, ric0 / (mu * mu)))

    pb = pullback_symbolic(F0, d)
    lhs = ricci_scalars(F0, _transformed_samples(F0, d, samples), params)
    rhs = ricci_scalars(pb, samples, params)
    rep.add("ricci_pullback", _rel(rhs, lhs))
    return rep


# -- bundled corpus ---------------------------------------------------------


def corpus_structures():
    return {
        "euclidean": FinslerStructure(2, "y1^2+y2^2", name="euclidean"),
        "sphere": FinslerStructure(
            2, "4*(y1^2+y2^2)/(1+x1^2+x2^2)^2", name="sphere"
        ),
        "randers": FinslerStructure(
            2,
            "(sqrt(4*(y1^2+y2^2)/(1+x1^2+x2^2)^2) + 0.1*y1)^2",
            name="randers",
        ),
    }


def corpus_diffeos():
    c, s = "cos(0.3)", "sin(0.3)"
    return {
        "identity": SymbolicDiffeo(
            2, ["x1", "x2"], inverse=["x1", "x2"], name="identity"
        ),
        "rotation": SymbolicDiffeo(
            2,
            [f"{c}*x1 - {s}*x2", f"{s}*x1 + {c}*x2"],
            inverse=[f"{c}*x1 + {s}*x2", f"-{s}*x1 + {c}*x2"],
            name="rotation",
        ),
        "shear": SymbolicDiffeo(
            2,
            ["x1 + 0.3*x2", "x2"],
            inverse=["x1 - 0.3*x2", "x2"],
            name="shear",
        ),
        "scaling": SymbolicDiffeo(
            2,
            ["2*x1", "2*x2"],
            inverse=["0.5*x1", "0.5*x2"],
            name="scaling",
        ),
        "poly": SymbolicDiffeo(
            2,
            ["x1 + 0.1*x2^2", "x2"],
            inverse=["x1 - 0.1*x2^2", "x2"],
            name="poly",
        ),
    }


def verify_corpus(samples_per_case=20, seed=0, mu=3.0):
    """All three suites over every structure x diffeo pair."""
    from .sampling import random_samples

    reports = []
    for F0 in corpus_structures().values():
        samples = random_samples(
            F0.dim, samples_per_case, seed=seed, structure=F0
        )
        for d in corpus_diffeos().values():
            reports.append(verify_lemma1(F0, d, samples))
            reports.append(verify_lemma2(F0, d, samples))
            reports.append(verify_lemma3(F0, mu, d, samples))
    return reports
