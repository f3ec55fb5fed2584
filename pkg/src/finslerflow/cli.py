"""Command-line front end.

Exit codes: 0 success / checks passed, 1 a verification ran and failed,
2 usage or configuration problems, 3 numeric or domain faults during
evaluation.  All outputs are deterministic for fixed inputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as fio
from .errors import ConfigError, FinslerError
from .geometry import check_finsler, f2_values, fundamental_tensor, ricci_scalars
from .ricciflow import (construct_flow, evaluate_family_batch,
                        flow_residual_grid, integrate_conformal_flow)
from .soliton import SolitonTriple, estimate_lambda, residual_report
from .verify import verify_corpus


def _metric(args):
    return fio.read_metric(args.metric)


def _grid(args, F):
    return fio.grid_from_spec(args.grid, structure=F)


def _sample_cols(F):
    return [f"x{i + 1}" for i in range(F.dim)] + [f"y{i + 1}" for i in range(F.dim)]


def _emit(args, obj, columns, rows):
    if args.out:
        fio.emit_table(obj, columns, rows, args.out, args.format)


def cmd_curvature(args):
    F = _metric(args)
    samples = _grid(args, F)
    f2 = f2_values(F, samples)
    ric = ricci_scalars(F, samples)
    n = F.dim
    columns = _sample_cols(F) + ["F2"] + [
        f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)
    ] + ["ric"]
    rows = []
    for k, s in enumerate(samples):
        g = fundamental_tensor(F, s).g
        rows.append(
            list(s.x) + list(s.y) + [float(f2[k])]
            + [float(v) for v in g.reshape(-1)] + [float(ric[k])]
        )
    obj = {
        "metric": F.name,
        "dim": F.dim,
        "columns": columns,
        "rows": rows,
        "summary": {"samples": len(samples), "max_abs_ric": float(np.max(np.abs(ric)))},
    }
    print(f"{F.name}: {len(samples)} samples, max |Ric| = {np.max(np.abs(ric)):.6g}")
    _emit(args, obj, columns, rows)
    return 0


def cmd_check_finsler(args):
    F = _metric(args)
    samples = _grid(args, F)
    rep = check_finsler(F, samples)
    obj = {
        "metric": F.name,
        "passed": rep.passed,
        "samples": rep.n_samples,
        "min_eigenvalue": rep.min_eigenvalue,
        "homogeneity_max_rel": rep.homogeneity_max_rel,
        "euler_max_rel": rep.euler_max_rel,
        "failures": [
            {"sample": idx, "x": list(s.x), "y": list(s.y), "reason": msg}
            for idx, s, msg in rep.failures
        ],
    }
    columns = ["sample", "reason"]
    rows = [[idx, msg] for idx, _, msg in rep.failures]
    print(
        f"{F.name}: {'pass' if rep.passed else 'FAIL'} over {rep.n_samples} "
        f"samples (min eig {rep.min_eigenvalue:.6g})"
    )
    for idx, s, msg in rep.failures[:5]:
        print(f"  sample {idx} at x={s.x}: {msg}")
    _emit(args, obj, columns, rows)
    return 0 if rep.passed else 1


def _report_obj(rep):
    return {
        "rms": rep.rms,
        "max": rep.max,
        "tensor_max": rep.tensor_max,
        "scalar_rel": list(rep.scalar_rel),
        "scalar_raw": list(rep.scalar_raw),
        "tensor_norms": list(rep.tensor_norms),
    }


def cmd_soliton_check(args):
    F = _metric(args)
    V = fio.read_field(args.field) if args.field else None
    st = SolitonTriple(F, V, args.lam)
    samples = _grid(args, F)
    rep = residual_report(st, samples)
    obj = {
        "metric": F.name,
        "field": st.V.name,
        "lambda": st.lam,
        **_report_obj(rep),
    }
    columns = ["sample", "scalar_rel", "scalar_raw", "tensor_norm"]
    rows = [
        [k, float(rep.scalar_rel[k]), float(rep.scalar_raw[k]), float(rep.tensor_norms[k])]
        for k in range(len(samples))
    ]
    print(
        f"{F.name} + {st.V.name}, lambda={st.lam:g}: scalar max "
        f"{rep.max:.3e}, tensor max {rep.tensor_max:.3e}"
    )
    _emit(args, obj, columns, rows)
    if args.tol is not None and max(rep.max, rep.tensor_max) > args.tol:
        return 1
    return 0


def cmd_estimate(args):
    F = _metric(args)
    V = fio.read_field(args.field) if args.field else None
    samples = _grid(args, F)
    lam, rep = estimate_lambda(F, V, samples)
    obj = {
        "metric": F.name,
        "field": V.name if V else "zero",
        "lambda": lam,
        **_report_obj(rep),
    }
    columns = ["sample", "scalar_rel"]
    rows = [[k, float(rep.scalar_rel[k])] for k in range(len(samples))]
    print(f"{F.name}: lambda = {fio.fmt_float(lam)} (residual rms {rep.rms:.3e})")
    _emit(args, obj, columns, rows)
    return 0


def _family(args):
    case = fio.read_case(args.case)
    st = SolitonTriple(case["metric"], case["field"], case["lambda"])
    kwargs = {}
    if args.steps:
        kwargs["steps_per_unit"] = args.steps
    fam = construct_flow(st, **kwargs)
    samples = fio.grid_from_spec(case["grid"], structure=case["metric"])
    return fam, samples


def _horizon(fam, args):
    if args.tmax is not None:
        return args.tmax
    if fam.lam > 0:
        return 0.9 * fam.critical_time
    return 1.0


def cmd_flow_build(args):
    fam, samples = _family(args)
    tmax = _horizon(fam, args)
    times = [k * tmax / 4.0 for k in range(5)]
    columns = ["t", "tau"] + [f"F2_sample{k}" for k in range(min(3, len(samples)))]
    rows = []
    for t in times:
        vals = evaluate_family_batch(fam, samples[:3], t)
        rows.append([t, fam.tau(t)] + [float(v) for v in vals])
    obj = {
        "metric": fam.F0.name,
        "field": fam.V.name,
        "lambda": fam.lam,
        "critical_time": fam.critical_time,
        "closed_form_flow": fam.has_symbolic_diffeo,
        "columns": columns,
        "rows": rows,
    }
    print(
        f"family over {fam.F0.name}: lambda={fam.lam:g}, "
        f"critical time {fam.critical_time:g}, closed form: "
        f"{fam.has_symbolic_diffeo}"
    )
    _emit(args, obj, columns, rows)
    return 0


def cmd_flow_verify(args):
    fam, samples = _family(args)
    tmax = _horizon(fam, args)
    times = [k * tmax / 4.0 for k in range(5)]
    rep = flow_residual_grid(fam, samples, times, dt=args.dt)
    print(rep.summary())
    columns = ["t", "sample", "residual", "ric_scaling_path"]
    rows = []
    for i, t in enumerate(times):
        for k in range(len(samples)):
            rows.append(
                [t, k, float(rep.residuals[i, k]), float(rep.path_scaling[i, k])]
            )
    obj = {
        "metric": fam.F0.name,
        "lambda": fam.lam,
        "times": times,
        "max_abs": rep.max_abs,
        "rms": rep.rms,
        "path_gap": rep.path_gap,
        "columns": columns,
        "rows": rows,
    }
    _emit(args, obj, columns, rows)
    return 0 if rep.max_abs <= args.tol else 1


def cmd_flow_conformal(args):
    F = _metric(args)
    samples = _grid(args, F)
    tr = integrate_conformal_flow(F, samples, args.dt, args.tmax)
    columns = ["t", "c"]
    rows = [[float(t), float(c)] for t, c in zip(tr.times, tr.values)]
    obj = {
        "metric": F.name,
        "ric_mean": tr.ric_mean,
        "ric_spread": tr.ric_spread,
        "columns": columns,
        "rows": rows,
    }
    print(
        f"{F.name}: c({tr.times[-1]:g}) = {tr.final():.10g} "
        f"(Ric = {tr.ric_mean:.6g} +- {tr.ric_spread:.2e})"
    )
    _emit(args, obj, columns, rows)
    return 0


def cmd_verify_lemmas(args):
    reports = verify_corpus(samples_per_case=args.samples, mu=args.mu)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(r.summary())
    print(f"{len(reports) - len(failed)}/{len(reports)} suites passed")
    columns = ["suite", "check", "max_residual", "tolerance", "passed"]
    rows = []
    for r in reports:
        for c in r.checks:
            rows.append([r.name, c.name, float(c.max_residual), float(c.tolerance),
                         int(c.passed)])
    obj = {
        "suites": [
            {
                "name": r.name,
                "passed": r.passed,
                "checks": [
                    {
                        "name": c.name,
                        "max_residual": c.max_residual,
                        "rms": c.rms,
                        "tolerance": c.tolerance,
                        "passed": c.passed,
                    }
                    for c in r.checks
                ],
            }
            for r in reports
        ],
        "passed": not failed,
    }
    _emit(args, obj, columns, rows)
    return 0 if not failed else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="finslerflow",
        description="Curvature, soliton, and flow computations for "
        "symbolically defined Finsler structures.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **flags):
        sp = sub.add_parser(name)
        sp.set_defaults(func=func)
        if flags.get("metric"):
            sp.add_argument("--metric", required=True, help="metric TOML file")
        if flags.get("field"):
            sp.add_argument("--field", help="vector field TOML file")
        if flags.get("case"):
            sp.add_argument("--case", required=True, help="soliton case TOML file")
        if flags.get("lam"):
            sp.add_argument("--lambda", dest="lam", type=float, required=True)
        if flags.get("grid"):
            sp.add_argument("--grid", default="default",
                            help="grid spec: box=..,points=..,dirs=..")
        if flags.get("time"):
            sp.add_argument("--dt", type=float, default=1e-4)
            sp.add_argument("--tmax", type=float, default=None)
            sp.add_argument("--steps", type=int, default=None)
        if "tol" in flags:
            sp.add_argument("--tol", type=float, default=flags["tol"])
        sp.add_argument("--out", help="output file path")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        return sp

    add("curvature", cmd_curvature, metric=True, grid=True)
    add("check-finsler", cmd_check_finsler, metric=True, grid=True)
    add("soliton-check", cmd_soliton_check, metric=True, field=True, lam=True,
        grid=True, tol=None)
    add("estimate", cmd_estimate, metric=True, field=True, grid=True)
    add("flow-build", cmd_flow_build, case=True, time=True)
    add("flow-verify", cmd_flow_verify, case=True, time=True, tol=1e-4)
    sp = add("flow-conformal", cmd_flow_conformal, metric=True, grid=True)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--tmax", type=float, default=0.4)
    sp = add("verify-lemmas", cmd_verify_lemmas)
    sp.add_argument("--mu", type=float, default=3.0)
    sp.add_argument("--samples", type=int, default=20,
                    help="random samples per structure/diffeo pair")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2
    except FinslerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
