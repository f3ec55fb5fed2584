"""Pure-Python (numpy) tape kernel.

Vectorizes each instruction across the sample axis.  Mirrors the semantics
of the compiled kernel: same opcodes, same domain checks, same status codes.
Error attribution picks one offending (instruction, sample) pair; which pair
is reported when several fault simultaneously is unspecified.
"""

import numpy as np

_MAX_EXP_ARG = 709.0  # exp overflows past this


def run_tape(code, arg1, arg2, aux, values, out, out_idx):
    m = values.shape[0]
    n = len(code)
    regs = np.empty((n, m), dtype=np.float64)
    with np.errstate(all="ignore"):
        for i in range(n):
            op = code[i]
            if op == 0:  # LOAD
                regs[i] = values[:, arg1[i]]
                continue
            if op == 1:  # CONST
                regs[i] = aux[i]
                continue
            if op == 2:
                regs[i] = regs[arg1[i]] + regs[arg2[i]]
            elif op == 3:
                regs[i] = regs[arg1[i]] - regs[arg2[i]]
            elif op == 4:
                regs[i] = regs[arg1[i]] * regs[arg2[i]]
            elif op == 5:
                b = regs[arg2[i]]
                bad = b == 0.0
                if bad.any():
                    return 1, i, int(np.argmax(bad))
                regs[i] = regs[arg1[i]] / b
            elif op == 6:
                regs[i] = -regs[arg1[i]]
            elif op == 7:  # POWI
                a = regs[arg1[i]]
                k = int(aux[i])
                if k < 0:
                    bad = a == 0.0
                    if bad.any():
                        return 5, i, int(np.argmax(bad))
                # square-and-multiply, mirroring the compiled kernel
                # multiply for multiply so both give identical bits
                n_ = abs(k)
                r = np.ones_like(a)
                b = a
                while n_:
                    if n_ & 1:
                        r = r * b
                    n_ >>= 1
                    if n_:
                        b = b * b
                regs[i] = 1.0 / r if k < 0 else r
            elif op == 8:  # POWF
                a = regs[arg1[i]]
                bad = a < 0.0
                if bad.any():
                    return 4, i, int(np.argmax(bad))
                if aux[i] < 0:
                    bad = a == 0.0
                    if bad.any():
                        return 5, i, int(np.argmax(bad))
                regs[i] = a ** aux[i]
            elif op == 9:
                a = regs[arg1[i]]
                bad = a < 0.0
                if bad.any():
                    return 2, i, int(np.argmax(bad))
                regs[i] = np.sqrt(a)
            elif op == 10:
                regs[i] = np.exp(regs[arg1[i]])
            elif op == 11:
                a = regs[arg1[i]]
                bad = a <= 0.0
                if bad.any():
                    return 3, i, int(np.argmax(bad))
                regs[i] = np.log(a)
            elif op == 12:
                regs[i] = np.sin(regs[arg1[i]])
            elif op == 13:
                regs[i] = np.cos(regs[arg1[i]])
            else:
                raise AssertionError(f"bad opcode {op}")
            fin = np.isfinite(regs[i])
            if not fin.all():
                return 6, i, int(np.argmax(~fin))
    for j, idx in enumerate(out_idx):
        out[:, j] = regs[idx]
    return 0, -1, -1
