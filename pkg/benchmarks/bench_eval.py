"""Timing comparison of the compiled tape kernel against the pure-Python one.

Runs the same compiled tapes (fundamental tensor, spray, Ricci scalar) on
both backends over identical batches and reports per-sample cost and the
speedup ratio.  Results also double as a consistency check: the two kernels
must agree bitwise.

Usage: python benchmarks/bench_eval.py [--samples N] [--repeats R]
"""

import argparse
import time

import numpy as np

from finslerflow import FinslerStructure, set_backend, backend_name
from finslerflow.sampling import random_samples

CASES = [
    # exact=True: tape holds only +,-,*,/,int powers,sqrt,sin,cos, whose
    # kernels are bit-identical across backends.  exp/log may round one
    # ulp apart (numpy's vector exp vs libm), so those cases get a
    # tolerance check instead.
    ("euclid", 2, "y1^2 + y2^2", True),
    ("sphere", 2, "4*(y1^2 + y2^2) / (1 + x1^2 + x2^2)^2", True),
    ("randers", 2,
     "(sqrt(4*(y1^2 + y2^2) / (1 + x1^2 + x2^2)^2) + 0.1*y1)^2", True),
    ("sphere3", 3, "4*(y1^2 + y2^2 + y3^2) / (1 + x1^2 + x2^2 + x3^2)^2", True),
    ("gaussexp", 2, "exp(x1^2 + x2^2) * (y1^2 + y2^2)", False),
]

QUANTITIES = ["g", "G", "ric"]


def bench_tape(tape, rows, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = tape.evaluate(rows)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        set_backend("compiled")
        have_compiled = True
    except ImportError:
        have_compiled = False
        print("compiled extension not available; timing python backend only\n")

    header = f"{'case':10s} {'qty':5s} {'instr':>6s} "
    if have_compiled:
        header += f"{'compiled':>12s} {'python':>12s} {'speedup':>8s}"
    else:
        header += f"{'python':>12s}"
    print(header)
    print("-" * len(header))

    for name, dim, f2, exact in CASES:
        F = FinslerStructure(dim, f2, name=name)
        samples = random_samples(dim, args.samples, seed=7, structure=F)
        rows = np.array([list(s.x) + list(s.y) for s in samples])
        for qty in QUANTITIES:
            tape = F.tape(qty)
            line = f"{name:10s} {qty:5s} {tape.n_instructions:6d} "
            t_py = out_py = None
            if have_compiled:
                set_backend("compiled")
                t_c, out_c = bench_tape(tape, rows, args.repeats)
                set_backend("python")
                t_py, out_py = bench_tape(tape, rows, args.repeats)
                agree = (np.array_equal(out_c, out_py) if exact
                         else np.allclose(out_c, out_py, rtol=1e-14, atol=0))
                if not agree:
                    raise AssertionError(
                        f"backend mismatch on {name}/{qty}: "
                        f"max diff {np.max(np.abs(out_c - out_py)):.3e}"
                    )
                per_c = t_c / args.samples * 1e6
                per_py = t_py / args.samples * 1e6
                line += f"{per_c:10.3f}us {per_py:10.3f}us {t_py / t_c:7.1f}x"
            else:
                t_py, _ = bench_tape(tape, rows, args.repeats)
                line += f"{t_py / args.samples * 1e6:10.3f}us"
            print(line)

    if have_compiled:
        set_backend("compiled")
        print(f"\nactive backend restored: {backend_name()}")
        print("outputs agreed across backends on every case "
              "(bitwise on algebraic tapes, 1e-14 relative on exp/log)")


if __name__ == "__main__":
    main()
