# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape kernel.  Scalar instruction loop per sample, no Python
object traffic inside the hot loop.  Semantics mirror _evalcore_py."""

from libc.math cimport sqrt as c_sqrt, exp as c_exp, log as c_log
from libc.math cimport sin as c_sin, cos as c_cos, pow as c_pow, isfinite
from libc.stdlib cimport malloc, free


def run_tape(int[::1] code, int[::1] arg1, int[::1] arg2, double[::1] aux,
             double[:, ::1] values, double[:, ::1] out, int[::1] out_idx):
    cdef Py_ssize_t n = code.shape[0]
    cdef Py_ssize_t m = values.shape[0]
    cdef Py_ssize_t k = out_idx.shape[0]
    cdef Py_ssize_t s, i, j
    cdef int op
    cdef double a, b, e, v
    cdef long long p, npow
    cdef double* regs = <double*> malloc(n * sizeof(double))
    cdef int status = 0
    cdef Py_ssize_t err_instr = -1, err_sample = -1
    if regs == NULL:
        raise MemoryError()
    try:
        with nogil:
            for s in range(m):
                for i in range(n):
                    op = code[i]
                    if op == 0:
                        v = values[s, arg1[i]]
                    elif op == 1:
                        v = aux[i]
                    else:
                        a = regs[arg1[i]]
                        if op == 2:
                            v = a + regs[arg2[i]]
                        elif op == 3:
                            v = a - regs[arg2[i]]
                        elif op == 4:
                            v = a * regs[arg2[i]]
                        elif op == 5:
                            b = regs[arg2[i]]
                            if b == 0.0:
                                status = 1
                                break
                            v = a / b
                        elif op == 6:
                            v = -a
                        elif op == 7:
                            # integer power by squaring; keeps the result
                            # bit-identical to the numpy fallback, which
                            # runs the same multiply sequence
                            e = aux[i]
                            if e < 0.0 and a == 0.0:
                                status = 5
                                break
                            p = <long long> e
                            npow = -p if p < 0 else p
                            v = 1.0
                            b = a
                            while npow:
                                if npow & 1:
                                    v = v * b
                                npow >>= 1
                                if npow:
                                    b = b * b
                            if p < 0:
                                v = 1.0 / v
                        elif op == 8:
                            e = aux[i]
                            if a < 0.0:
                                status = 4
                                break
                            if e < 0.0 and a == 0.0:
                                status = 5
                                break
                            v = c_pow(a, e)
                        elif op == 9:
                            if a < 0.0:
                                status = 2
                                break
                            v = c_sqrt(a)
                        elif op == 10:
                            v = c_exp(a)
                        elif op == 11:
                            if a <= 0.0:
                                status = 3
                                break
                            v = c_log(a)
                        elif op == 12:
                            v = c_sin(a)
                        else:
                            v = c_cos(a)
                        if not isfinite(v):
                            if status == 0:
                                status = 6
                            break
                    regs[i] = v
                if status != 0:
                    err_instr = i
                    err_sample = s
                    break
                for j in range(k):
                    out[s, j] = regs[out_idx[j]]
        return status, err_instr, err_sample
    finally:
        free(regs)
