"""Compilation of expression trees to flat instruction tapes.

A tape is a postorder instruction list over a register file, one register
per instruction.  Because nodes are interned, common subexpressions across
all requested outputs dedupe automatically.  Tapes evaluate many sample
points in one call; the kernel is either the compiled extension or a numpy
fallback, chosen at import time (override with FINSLERFLOW_BACKEND=python
or =compiled, or set_backend()).
"""

from __future__ import annotations

import os

import numpy as np

from . import expr as ex
from .errors import EvaluationDomainError, UnboundVariableError

OP_LOAD = 0
OP_CONST = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POWI = 7   # integer exponent in aux
OP_POWF = 8   # fractional exponent in aux
OP_SQRT = 9
OP_EXP = 10
OP_LOG = 11
OP_SIN = 12
OP_COS = 13

ERR_MESSAGES = {
    1: "division by zero",
    2: "square root of a negative value",
    3: "logarithm of a non-positive value",
    4: "negative base with fractional exponent",
    5: "zero raised to a negative power",
    6: "non-finite result",
}

_BINOP = {ex.Add: OP_ADD, ex.Sub: OP_SUB, ex.Mul: OP_MUL, ex.Div: OP_DIV}
_UNOP = {ex.Neg: OP_NEG, ex.Sqrt: OP_SQRT, ex.Exp: OP_EXP, ex.Log: OP_LOG,
         ex.Sin: OP_SIN, ex.Cos: OP_COS}


class Tape:
    """Flat program computing k outputs from a vector of variable values."""

    def __init__(self, code, arg1, arg2, aux, out_idx, var_order, nodes):
        self.code = code
        self.arg1 = arg1
        self.arg2 = arg2
        self.aux = aux
        self.out_idx = out_idx
        self.var_order = tuple(var_order)
        self.nodes = nodes  # instruction index -> source node, for errors
        self.n_outputs = len(out_idx)

    @property
    def n_instructions(self):
        return len(self.code)

    def evaluate(self, values):
        """Evaluate at many points.

        values has shape (m, n_vars) in var_order; returns (m, k).
        """
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[None, :]
        if values.shape[1] != len(self.var_order):
            raise ValueError(
                f"expected {len(self.var_order)} variables, got {values.shape[1]}"
            )
        out = np.empty((values.shape[0], self.n_outputs), dtype=np.float64)
        status, instr, sample = _KERNEL.run_tape(
            self.code, self.arg1, self.arg2, self.aux, values, out, self.out_idx
        )
        if status != 0:
            node = self.nodes[instr]
            raise EvaluationDomainError(
                ERR_MESSAGES.get(status, "numeric fault"), ex._short(node), sample
            )
        return out

    def evaluate_single(self, bindings):
        """Evaluate once from a name->value mapping; returns a 1d array."""
        row = np.empty(len(self.var_order))
        for j, name in enumerate(self.var_order):
            try:
                row[j] = bindings[name]
            except KeyError:
                raise UnboundVariableError(name) from None
        return self.evaluate(row[None, :])[0]


def compile_tape(exprs, var_order):
    """Compile expressions to one shared tape over the given variable order."""
    var_slot = {name: i for i, name in enumerate(var_order)}
    index = {}
    code, arg1, arg2, aux, nodes = [], [], [], [], []

    def emit(op, a, b, x, node):
        code.append(op)
        arg1.append(a)
        arg2.append(b)
        aux.append(x)
        nodes.append(node)
        idx = len(code) - 1
        index[node] = idx
        return idx

    def visit(root):
        if root in index:
            return index[root]
        stack = [(root, False)]
        while stack:
            node, ready = stack.pop()
            if node in index:
                continue
            if not ready:
                stack.append((node, True))
                for c in ex.children(node):
                    if c not in index:
                        stack.append((c, False))
                continue
            if isinstance(node, ex.Const):
                emit(OP_CONST, 0, 0, node.value, node)
            elif isinstance(node, ex.Var):
                slot = var_slot.get(node.name)
                if slot is None:
                    raise UnboundVariableError(node.name)
                emit(OP_LOAD, slot, 0, 0.0, node)
            elif isinstance(node, ex.Pow):
                a = index[node.a]
                op = OP_POWI if node.exponent.denominator == 1 else OP_POWF
                emit(op, a, 0, float(node.exponent), node)
            elif type(node) in _BINOP:
                emit(_BINOP[type(node)], index[node.a], index[node.b], 0.0, node)
            else:
                emit(_UNOP[type(node)], index[node.a], 0, 0.0, node)
        return index[root]

    out_idx = [visit(e) for e in exprs]
    return Tape(
        np.asarray(code, dtype=np.int32),
        np.asarray(arg1, dtype=np.int32),
        np.asarray(arg2, dtype=np.int32),
        np.asarray(aux, dtype=np.float64),
        np.asarray(out_idx, dtype=np.int32),
        var_order,
        nodes,
    )


# -- backend selection ------------------------------------------------------

from . import _evalcore_py as _py_kernel

_compiled_kernel = None
try:
    from . import _evalcore as _compiled_kernel  # type: ignore
except ImportError:
    _compiled_kernel = None


def _pick_default():
    pref = os.environ.get("FINSLERFLOW_BACKEND", "")
    if pref == "python":
        return _py_kernel
    if pref == "compiled":
        if _compiled_kernel is None:
            raise ImportError("compiled backend requested but extension is missing")
        return _compiled_kernel
    return _compiled_kernel if _compiled_kernel is not None else _py_kernel


_KERNEL = _pick_default()


def backend_name():
    return "compiled" if _KERNEL is _compiled_kernel and _compiled_kernel is not None else "python"


def set_backend(name):
    """Switch the tape kernel ('compiled' or 'python').  Returns prior name."""
    global _KERNEL
    prior = backend_name()
    if name == "python":
        _KERNEL = _py_kernel
    elif name == "compiled":
        if _compiled_kernel is None:
            raise ImportError("compiled extension not available")
        _KERNEL = _compiled_kernel
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prior
