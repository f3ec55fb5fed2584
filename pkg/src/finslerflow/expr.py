"""Immutable symbolic expression trees.

Nodes are hash-consed: structurally identical subtrees are the same Python
object, so equality is identity, memo tables can key on nodes directly, and
common subexpressions are shared for free.  All constants are doubles except
exponents of ``Pow``, which are exact rationals.
"""

from __future__ import annotations

import math
import sys
import weakref
from fractions import Fraction

from .errors import EvaluationDomainError, UnboundVariableError

# Deep parsed chains (a + b + ... thousands of terms) recurse per node.
if sys.getrecursionlimit() < 50_000:
    sys.setrecursionlimit(50_000)

_TABLE: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

# Creation order of interned nodes.  Used as a total order when sorting the
# factors of a product or the terms of a sum into canonical form; a live
# node's serial never changes, so the order is stable for as long as any
# expression referencing the node exists.
_SERIAL = iter(range(1, 1 << 62)).__next__

_FV_INTERN: dict = {}


def _fv(s):
    s = frozenset(s)
    return _FV_INTERN.setdefault(s, s)


_EMPTY_FV = _fv(())


class Expr:
    """Base node.  Use operators (+, -, *, /, **) or the helpers below to build."""

    __slots__ = ("_fv_cache", "_serial", "__weakref__")

    def __str__(self):
        return to_str(self)

    def __repr__(self):
        return f"<{type(self).__name__} {to_str(self)}>"

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, exponent)


def _coerce(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return Const(v)
    if isinstance(v, Fraction):
        return Const(float(v))
    raise TypeError(f"cannot use {type(v).__name__} as an expression")


class Const(Expr):
    __slots__ = ("value",)

    def __new__(cls, value):
        value = float(value)
        if value != value:
            raise ValueError("NaN constant")
        key = ("c", value)
        self = _TABLE.get(key)
        if self is None:
            self = object.__new__(cls)
            self.value = value
            self._serial = _SERIAL()
            _TABLE[key] = self
        return self


class Var(Expr):
    __slots__ = ("name",)

    def __new__(cls, name):
        key = ("v", name)
        self = _TABLE.get(key)
        if self is None:
            if not name or not name[0].isalpha():
                raise ValueError(f"bad variable name {name!r}")
            self = object.__new__(cls)
            self.name = name
            self._serial = _SERIAL()
            _TABLE[key] = self
        return self


def _unary(tag):
    class _U(Expr):
        __slots__ = ("a",)

        def __new__(cls, a):
            a = _coerce(a)
            key = (tag, a)
            self = _TABLE.get(key)
            if self is None:
                self = object.__new__(cls)
                self.a = a
                self._serial = _SERIAL()
                _TABLE[key] = self
            return self

    return _U


def _binary(tag):
    class _B(Expr):
        __slots__ = ("a", "b")

        def __new__(cls, a, b):
            a = _coerce(a)
            b = _coerce(b)
            key = (tag, a, b)
            self = _TABLE.get(key)
            if self is None:
                self = object.__new__(cls)
                self.a = a
                self.b = b
                self._serial = _SERIAL()
                _TABLE[key] = self
            return self

    return _B


class Neg(_unary("neg")):
    __slots__ = ()


class Sqrt(_unary("sqrt")):
    __slots__ = ()


class Exp(_unary("exp")):
    __slots__ = ()


class Log(_unary("log")):
    __slots__ = ()


class Sin(_unary("sin")):
    __slots__ = ()


class Cos(_unary("cos")):
    __slots__ = ()


class Add(_binary("+")):
    __slots__ = ()


class Sub(_binary("-")):
    __slots__ = ()


class Mul(_binary("*")):
    __slots__ = ()


class Div(_binary("/")):
    __slots__ = ()


class Pow(Expr):
    """Power with a constant rational exponent.  General f^g is not a node."""

    __slots__ = ("a", "exponent")

    def __new__(cls, a, exponent):
        a = _coerce(a)
        if isinstance(exponent, int):
            exponent = Fraction(exponent)
        if not isinstance(exponent, Fraction):
            raise TypeError("exponent must be an int or Fraction")
        key = ("^", a, exponent)
        self = _TABLE.get(key)
        if self is None:
            self = object.__new__(cls)
            self.a = a
            self.exponent = exponent
            self._serial = _SERIAL()
            _TABLE[key] = self
        return self


ZERO = Const(0.0)
ONE = Const(1.0)

_FUNC_CLASSES = {"sqrt": Sqrt, "exp": Exp, "log": Log, "sin": Sin, "cos": Cos}
_FUNC_NAMES = {Sqrt: "sqrt", Exp: "exp", Log: "log", Sin: "sin", Cos: "cos"}
_UNARY_TYPES = (Neg, Sqrt, Exp, Log, Sin, Cos)
_BINARY_TYPES = (Add, Sub, Mul, Div)


def children(e):
    if isinstance(e, _BINARY_TYPES):
        return (e.a, e.b)
    if isinstance(e, _UNARY_TYPES) or isinstance(e, Pow):
        return (e.a,)
    return ()


def free_vars(e):
    """Set of variable names appearing in the expression."""
    try:
        return e._fv_cache
    except AttributeError:
        pass
    if isinstance(e, Var):
        fv = _fv((e.name,))
    elif isinstance(e, Const):
        fv = _EMPTY_FV
    else:
        acc = frozenset()
        for c in children(e):
            acc = acc | free_vars(c)
        fv = _fv(acc)
    e._fv_cache = fv
    return fv


def count_nodes(e, _seen=None):
    """Number of distinct nodes in the DAG rooted at e."""
    if _seen is None:
        _seen = set()
    if id(e) in _seen:
        return 0
    _seen.add(id(e))
    return 1 + sum(count_nodes(c, _seen) for c in children(e))


# -- printing ---------------------------------------------------------------

# Precedence levels: + - are 1, * / are 2, ^ is 3, atoms and calls are 4.


def _prec(e):
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Pow):
        return 3
    if isinstance(e, Neg):
        return 2  # prints like a factor prefix
    return 4


def _fmt_exponent(r: Fraction):
    if r.denominator == 1:
        return str(r.numerator)
    return f"({r.numerator}/{r.denominator})"


def to_str(e):
    """Render to the surface syntax; parsing the result restores the tree."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        a = e.a
        # A bare "-" must re-parse as this Neg: parenthesize anything the
        # unary minus would not bind to whole, plus literals (which would
        # fold into a negative constant) and nested negations.
        if isinstance(a, (Add, Sub, Mul, Div, Const, Neg)):
            return f"-({to_str(a)})"
        return f"-{to_str(a)}"
    if isinstance(e, Add):
        left = to_str(e.a)
        right = f"({to_str(e.b)})" if _prec(e.b) <= 1 else to_str(e.b)
        return f"{left} + {right}"
    if isinstance(e, Sub):
        left = to_str(e.a)
        right = f"({to_str(e.b)})" if _prec(e.b) <= 1 else to_str(e.b)
        return f"{left} - {right}"
    if isinstance(e, Mul):
        left = f"({to_str(e.a)})" if _prec(e.a) < 2 else to_str(e.a)
        right = f"({to_str(e.b)})" if _prec(e.b) <= 2 and not isinstance(e.b, Neg) else to_str(e.b)
        return f"{left}*{right}"
    if isinstance(e, Div):
        left = f"({to_str(e.a)})" if _prec(e.a) < 2 else to_str(e.a)
        right = f"({to_str(e.b)})" if _prec(e.b) <= 2 and not isinstance(e.b, Neg) else to_str(e.b)
        return f"{left}/{right}"
    if isinstance(e, Pow):
        base = to_str(e.a)
        if not (isinstance(e.a, Var) or type(e.a) in _FUNC_NAMES
                or (isinstance(e.a, Const) and e.a.value >= 0)):
            base = f"({base})"
        return f"{base}^{_fmt_exponent(e.exponent)}"
    name = _FUNC_NAMES.get(type(e))
    if name is not None:
        return f"{name}({to_str(e.a)})"
    raise TypeError(f"unprintable node {type(e).__name__}")


def _short(e, limit=60):
    s = to_str(e)
    return s if len(s) <= limit else s[: limit - 3] + "..."


# -- evaluation (reference tree walker) -------------------------------------


def evaluate(e, bindings):
    """Evaluate at a point.  Raises on unbound variables and domain faults.

    This is the reference evaluator; hot paths compile to tapes instead.
    """
    v = _eval(e, bindings)
    return v


def _eval(e, b):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return b[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Add):
        return _eval(e.a, b) + _eval(e.b, b)
    if isinstance(e, Sub):
        return _eval(e.a, b) - _eval(e.b, b)
    if isinstance(e, Mul):
        return _check(_eval(e.a, b) * _eval(e.b, b), e)
    if isinstance(e, Div):
        den = _eval(e.b, b)
        if den == 0.0:
            raise EvaluationDomainError("division by zero", _short(e))
        return _check(_eval(e.a, b) / den, e)
    if isinstance(e, Neg):
        return -_eval(e.a, b)
    if isinstance(e, Pow):
        base = _eval(e.a, b)
        r = e.exponent
        if base == 0.0 and r < 0:
            raise EvaluationDomainError("zero raised to a negative power", _short(e))
        if base < 0.0 and r.denominator != 1:
            raise EvaluationDomainError("negative base with fractional exponent", _short(e))
        return _check(base ** float(r), e)
    if isinstance(e, Sqrt):
        v = _eval(e.a, b)
        if v < 0.0:
            raise EvaluationDomainError("square root of a negative value", _short(e))
        return math.sqrt(v)
    if isinstance(e, Exp):
        return _exp(_eval(e.a, b), e)
    if isinstance(e, Log):
        v = _eval(e.a, b)
        if v <= 0.0:
            raise EvaluationDomainError("logarithm of a non-positive value", _short(e))
        return math.log(v)
    if isinstance(e, Sin):
        return math.sin(_eval(e.a, b))
    if isinstance(e, Cos):
        return math.cos(_eval(e.a, b))
    raise TypeError(f"cannot evaluate node {type(e).__name__}")


def _exp(v, e):
    try:
        return math.exp(v)
    except OverflowError:
        raise EvaluationDomainError("overflow", _short(e)) from None


def _check(v, e):
    if math.isinf(v):
        raise EvaluationDomainError("overflow", _short(e))
    return v


# -- substitution -----------------------------------------------------------


def substitute(e, mapping):
    """Replace variables simultaneously.  Replacements are not re-substituted."""
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    keys = _fv(mapping.keys())
    memo = {}

    def walk(n):
        if not (free_vars(n) & keys):
            return n
        r = memo.get(n)
        if r is not None:
            return r
        if isinstance(n, Var):
            r = mapping.get(n.name, n)
        elif isinstance(n, Pow):
            r = Pow(walk(n.a), n.exponent)
        elif isinstance(n, _BINARY_TYPES):
            r = type(n)(walk(n.a), walk(n.b))
        else:
            r = type(n)(walk(n.a))
        memo[n] = r
        return r

    return walk(e)


# -- differentiation --------------------------------------------------------


def _s_add(a, b):
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def _s_sub(a, b):
    if b is ZERO:
        return a
    if a is ZERO:
        return Neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def _s_mul(a, b):
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def _s_div(a, b):
    if a is ZERO:
        return ZERO
    if b is ONE:
        return a
    return Div(a, b)


def _s_neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def _pow_or_trivial(u, r: Fraction):
    if r == 0:
        return ONE
    if r == 1:
        return u
    return Pow(u, r)


def differentiate(e, var):
    """Exact partial derivative with respect to a variable name, simplified."""
    return simplify(_diff(e, var, {}))


def _diff(e, var, memo):
    if var not in free_vars(e):
        return ZERO
    r = memo.get(e)
    if r is not None:
        return r
    if isinstance(e, Var):
        r = ONE  # only reached when names match
    elif isinstance(e, Add):
        r = _s_add(_diff(e.a, var, memo), _diff(e.b, var, memo))
    elif isinstance(e, Sub):
        r = _s_sub(_diff(e.a, var, memo), _diff(e.b, var, memo))
    elif isinstance(e, Mul):
        r = _s_add(_s_mul(_diff(e.a, var, memo), e.b),
                   _s_mul(e.a, _diff(e.b, var, memo)))
    elif isinstance(e, Div):
        da, db = _diff(e.a, var, memo), _diff(e.b, var, memo)
        if db is ZERO:
            r = _s_div(da, e.b)
        else:
            num = _s_sub(_s_mul(da, e.b), _s_mul(e.a, db))
            r = _s_div(num, Pow(e.b, Fraction(2)))
    elif isinstance(e, Neg):
        r = _s_neg(_diff(e.a, var, memo))
    elif isinstance(e, Pow):
        rexp = e.exponent
        inner = _pow_or_trivial(e.a, rexp - 1)
        r = _s_mul(_s_mul(Const(float(rexp)), inner), _diff(e.a, var, memo))
    elif isinstance(e, Sqrt):
        r = _s_div(_diff(e.a, var, memo), _s_mul(Const(2.0), e))
    elif isinstance(e, Exp):
        r = _s_mul(e, _diff(e.a, var, memo))
    elif isinstance(e, Log):
        r = _s_div(_diff(e.a, var, memo), e.a)
    elif isinstance(e, Sin):
        r = _s_mul(Cos(e.a), _diff(e.a, var, memo))
    elif isinstance(e, Cos):
        r = _s_neg(_s_mul(Sin(e.a), _diff(e.a, var, memo)))
    else:
        raise TypeError(f"cannot differentiate node {type(e).__name__}")
    memo[e] = r
    return r


# -- simplification ---------------------------------------------------------
#
# One bottom-up pass.  Sums are collected into coefficient*core terms so that
# duplicate and cancelling terms merge exactly (cores are interned, so the
# dictionary key is the subtree itself).  Products are collected into
# base^exponent factors with a floating coefficient; sqrt counts as exponent
# 1/2, so sqrt(u)*sqrt(u) collapses to u and determinant powers cancel.


def simplify(e):
    """Best-effort normalization preserving values on the evaluation domain."""
    return _simp(e, {})


def _simp(e, memo):
    r = memo.get(e)
    if r is not None:
        return r
    if isinstance(e, (Const, Var)):
        r = e
    elif isinstance(e, (Add, Sub)):
        r = _collect_sum(type(e)(_simp(e.a, memo), _simp(e.b, memo)))
    elif isinstance(e, (Mul, Div, Neg)):
        inner = type(e)(*[_simp(c, memo) for c in children(e)])
        r = _collect_product(inner)
    elif isinstance(e, Pow):
        base = _simp(e.a, memo)
        if e.exponent == 0:
            r = ONE
        elif e.exponent == 1:
            r = base
        else:
            r = _collect_product(Pow(base, e.exponent))
    elif isinstance(e, Sqrt):
        r = _collect_product(Sqrt(_simp(e.a, memo)))
    else:
        a = _simp(e.a, memo)
        r = _fold_func(type(e), a)
    memo[e] = r
    return r


def _fold_func(cls, a):
    if isinstance(a, Const):
        v = a.value
        try:
            if cls is Exp:
                return Const(math.exp(v))
            if cls is Log and v > 0:
                return Const(math.log(v))
            if cls is Sin:
                return Const(math.sin(v))
            if cls is Cos:
                return Const(math.cos(v))
        except OverflowError:
            pass
    return cls(a)


def _split_coeff(node):
    # Normal-form terms keep their constant as the leftmost Mul leaf.
    if isinstance(node, Mul) and isinstance(node.a, Const):
        return node.a.value, node.b
    if isinstance(node, Div):
        c, core = _split_coeff(node.a)
        if core is None:
            return c, Div(ONE, node.b)
        if c != 1.0:
            return c, Div(core, node.b)
        return 1.0, node
    if isinstance(node, Const):
        return node.value, None
    if isinstance(node, Neg):
        c, core = _split_coeff(node.a)
        return -c, core
    return 1.0, node


def _collect_sum(e):
    const = 0.0
    coeffs = {}
    order = []
    stack = [(e, 1.0)]
    while stack:
        node, mult = stack.pop()
        if isinstance(node, Add):
            stack.append((node.b, mult))
            stack.append((node.a, mult))
        elif isinstance(node, Sub):
            stack.append((node.b, -mult))
            stack.append((node.a, mult))
        elif isinstance(node, Neg):
            stack.append((node.a, -mult))
        elif isinstance(node, Const):
            const += mult * node.value
        else:
            c, core = _split_coeff(node)
            c *= mult
            if core is None:
                const += c
                continue
            if core not in coeffs:
                coeffs[core] = 0.0
                order.append(core)
            coeffs[core] += c
    order.sort(key=lambda core: core._serial)
    terms = [(coeffs[core], core) for core in order if coeffs[core] != 0.0]
    return _rebuild_sum(const, terms)


def _term_expr(c, core):
    if c == 1.0:
        return core
    if isinstance(core, Div) and core.a is ONE:
        return Div(Const(c), core.b)
    return Mul(Const(c), core)


def _rebuild_sum(const, terms):
    if not terms:
        return Const(const)
    first_c, first_core = terms[0]
    if first_c < 0:
        acc = Neg(_term_expr(-first_c, first_core)) if first_c != -1.0 else Neg(first_core)
    else:
        acc = _term_expr(first_c, first_core)
    for c, core in terms[1:]:
        if c < 0:
            acc = Sub(acc, _term_expr(-c, core))
        else:
            acc = Add(acc, _term_expr(c, core))
    if const != 0.0:
        acc = Sub(acc, Const(-const)) if const < 0 else Add(acc, Const(const))
    return acc


def _collect_product(e):
    coeff = 1.0
    expo = {}
    order = []

    def bump(base, p):
        if base not in expo:
            expo[base] = Fraction(0)
            order.append(base)
        expo[base] += p

    stack = [(e, Fraction(1))]
    while stack:
        node, p = stack.pop()
        if isinstance(node, Mul):
            stack.append((node.b, p))
            stack.append((node.a, p))
        elif isinstance(node, Div):
            stack.append((node.b, -p))
            stack.append((node.a, p))
        elif isinstance(node, Neg) and p.denominator == 1:
            if p.numerator % 2:
                coeff = -coeff
            stack.append((node.a, p))
        elif isinstance(node, Pow):
            q = p * node.exponent
            if q.denominator == 1:
                stack.append((node.a, q))
            else:
                bump(node.a, q)
        elif isinstance(node, Sqrt):
            q = p / 2
            if q.denominator == 1:
                stack.append((node.a, q))
            else:
                bump(node.a, q)
        elif isinstance(node, Const):
            bump(node, p)
        else:
            bump(node, p)
    if coeff == 0.0:
        return ZERO

    order.sort(key=lambda base: base._serial)
    items = []
    for base in order:
        p = expo[base]
        if p == 0:
            continue
        if isinstance(base, Const):
            v = base.value
            if v == 0.0:
                if p > 0:
                    return ZERO
                items.append((base, p))  # 0^negative: keep, evaluation will fault
                continue
            if v > 0.0 or p.denominator == 1:
                coeff *= v ** float(p)
                continue
        items.append((base, p))
    return _rebuild_product(coeff, items)


def _factor_expr(base, q: Fraction):
    if q == 1:
        return base
    if q == Fraction(1, 2):
        return Sqrt(base)
    return Pow(base, q)


def _rebuild_product(coeff, items):
    num = [(b, p) for b, p in items if p > 0]
    den = [(b, -p) for b, p in items if p < 0]

    def chain(parts):
        acc = None
        for b, q in parts:
            f = _factor_expr(b, q)
            acc = f if acc is None else Mul(acc, f)
        return acc

    num_expr = chain(num)
    den_expr = chain(den)
    if num_expr is None:
        num_part = Const(coeff)
    elif coeff == 1.0:
        num_part = num_expr
    elif coeff == -1.0:
        num_part = Neg(num_expr)
    else:
        num_part = Mul(Const(coeff), num_expr)
    if den_expr is None:
        return num_part
    return Div(num_part, den_expr)


# convenience builders matching the surface-language function names
sqrt = Sqrt
exp = Exp
log = Log
sin = Sin
cos = Cos
