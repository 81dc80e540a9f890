"""Closed-form expression language for profile functions.

A small recursive-descent parser (precedence: ``^`` right-associative, then
unary minus, then ``* /``, then ``+ -``) over one variable ``r``, the
constants ``pi`` and ``e``, and the functions sin, cos, tan, exp, log, sqrt,
pow, abs.  Evaluation returns truncated Taylor expansions ("jets"), so
derivatives up to any fixed order come out exact to machine precision with no
symbolic differentiation and no expression swell.

Series values are stored as Taylor coefficients c_k = f^(k)/k!; the public
:class:`Jet3` converts to plain derivatives (value, f', f'', f''').
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import EvalDomainError, ParseError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "pow", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # always "r"


@dataclass(frozen=True)
class Const:
    name: str  # "pi" | "e"


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expression", ...]


Expression = Union[Num, Var, Const, Neg, Bin, Call]


def to_string(e: Expression) -> str:
    """Stable, fully parenthesized rendering; parse(to_string(e)) == e."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, Bin):
        return f"({to_string(e.left)}{e.op}{to_string(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({','.join(to_string(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_OPS = set("+-*/^(),")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            toks.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            try:
                float(src[i:j])
            except ValueError:
                raise ParseError(f"bad number {src[i:j]!r}", i)
            toks.append(("num", src[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(("name", src[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if kind != "op" or val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def parse(self) -> Expression:
        e = self.sum()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {val!r}", off)
        return e

    def sum(self) -> Expression:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                e = Bin(val, e, self.term())
            else:
                return e

    def term(self) -> Expression:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                e = Bin(val, e, self.unary())
            else:
                return e

    def unary(self) -> Expression:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Bin("^", base, self.unary())  # right-assoc, exponent may be signed
        return base

    def atom(self) -> Expression:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in FUNCTIONS:
                    raise ParseError(f"unknown function {val!r}", off)
                self.take()
                args = [self.sum()]
                while True:
                    k2, v2, o2 = self.peek()
                    if k2 == "op" and v2 == ",":
                        self.take()
                        args.append(self.sum())
                    else:
                        break
                self.expect(")")
                want = 2 if val == "pow" else 1
                if len(args) != want:
                    raise ParseError(f"{val} takes {want} argument(s)", off)
                return Call(val, tuple(args))
            if val == "r":
                return Var("r")
            if val in CONSTANTS:
                return Const(val)
            raise ParseError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            e = self.sum()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", off)


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression tree.

    Raises ParseError (with a 0-based byte offset) on syntax errors and
    unknown identifiers.
    """
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Truncated Taylor series arithmetic (coefficients c_k = f^(k)(r0)/k!)
# ---------------------------------------------------------------------------

Coeffs = list[float]


def _s_const(v: float, order: int) -> Coeffs:
    return [v] + [0.0] * order


def s_add(a: Coeffs, b: Coeffs) -> Coeffs:
    return [x + y for x, y in zip(a, b)]

def s_sub(a: Coeffs, b: Coeffs) -> Coeffs:
    return [x - y for x, y in zip(a, b)]

def s_neg(a: Coeffs) -> Coeffs:
    return [-x for x in a]


def s_mul(a: Coeffs, b: Coeffs) -> Coeffs:
    n = len(a)
    out = [0.0] * n
    for i in range(n):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(n - i):
            out[i + j] += ai * b[j]
    return out


def s_div(a: Coeffs, b: Coeffs, r: float) -> Coeffs:
    if b[0] == 0.0:
        raise EvalDomainError("division by zero", r)
    n = len(a)
    out = [0.0] * n
    inv = 1.0 / b[0]
    for k in range(n):
        s = a[k] - math.fsum(b[j] * out[k - j] for j in range(1, k + 1))
        out[k] = s * inv
    return out


def s_exp(a: Coeffs) -> Coeffs:
    n = len(a)
    out = [0.0] * n
    out[0] = math.exp(a[0])
    for k in range(1, n):
        out[k] = math.fsum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


def s_log(a: Coeffs, r: float) -> Coeffs:
    if a[0] <= 0.0:
        raise EvalDomainError("log of non-positive value", r)
    n = len(a)
    out = [0.0] * n
    out[0] = math.log(a[0])
    for k in range(1, n):
        s = a[k] - math.fsum(j * out[j] * a[k - j] for j in range(1, k)) / k
        out[k] = s / a[0]
    return out


def s_sqrt(a: Coeffs, r: float) -> Coeffs:
    if a[0] < 0.0:
        raise EvalDomainError("sqrt of negative value", r)
    if a[0] == 0.0:
        raise EvalDomainError("sqrt jet at a root (derivative singular)", r)
    n = len(a)
    out = [0.0] * n
    out[0] = math.sqrt(a[0])
    inv = 0.5 / out[0]
    for k in range(1, n):
        s = a[k] - math.fsum(out[j] * out[k - j] for j in range(1, k))
        out[k] = s * inv
    return out


def s_sin_cos(a: Coeffs) -> tuple[Coeffs, Coeffs]:
    n = len(a)
    sn = [0.0] * n
    cs = [0.0] * n
    sn[0], cs[0] = math.sin(a[0]), math.cos(a[0])
    for k in range(1, n):
        sn[k] = math.fsum(j * a[j] * cs[k - j] for j in range(1, k + 1)) / k
        cs[k] = -math.fsum(j * a[j] * sn[k - j] for j in range(1, k + 1)) / k
    return sn, cs


def s_pow(a: Coeffs, alpha: float, r: float) -> Coeffs:
    if alpha == float(int(alpha)) and alpha >= 0:
        # integer powers work at any base point, including a == 0
        m = int(alpha)
        out = _s_const(1.0, len(a) - 1)
        base = list(a)
        while m:
            if m & 1:
                out = s_mul(out, base)
            m >>= 1
            if m:
                base = s_mul(base, base)
        return out
    if a[0] == 0.0:
        raise EvalDomainError("non-integer power of zero", r)
    if a[0] < 0.0 and alpha != float(int(alpha)):
        raise EvalDomainError("non-integer power of negative value", r)
    if alpha == float(int(alpha)):  # negative integer
        return s_div(_s_const(1.0, len(a) - 1), s_pow(a, -alpha, r), r)
    n = len(a)
    out = [0.0] * n
    out[0] = a[0] ** alpha
    for k in range(1, n):
        s = math.fsum(((alpha + 1) * j - k) * a[j] * out[k - j] for j in range(1, k + 1))
        out[k] = s / (k * a[0])
    return out


def eval_series(e: Expression, r: float, order: int) -> Coeffs:
    """Taylor coefficients [c0..c_order] of ``e`` about the point r."""

    def ev(node: Expression) -> Coeffs:
        if isinstance(node, Num):
            return _s_const(node.value, order)
        if isinstance(node, Const):
            return _s_const(CONSTANTS[node.name], order)
        if isinstance(node, Var):
            s = _s_const(r, order)
            if order >= 1:
                s[1] = 1.0
            return s
        if isinstance(node, Neg):
            return s_neg(ev(node.arg))
        if isinstance(node, Bin):
            if node.op == "^":
                # constant exponents use the power recurrence, otherwise exp/log
                right = node.right
                if isinstance(right, Neg) and isinstance(right.arg, Num):
                    return s_pow(ev(node.left), -right.arg.value, r)
                if isinstance(right, Num):
                    return s_pow(ev(node.left), right.value, r)
                if isinstance(right, Const):
                    return s_pow(ev(node.left), CONSTANTS[right.name], r)
                base = ev(node.left)
                if base[0] <= 0.0:
                    raise EvalDomainError("power of non-positive base", r)
                return s_exp(s_mul(ev(right), s_log(base, r)))
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return s_add(a, b)
            if node.op == "-":
                return s_sub(a, b)
            if node.op == "*":
                return s_mul(a, b)
            if node.op == "/":
                return s_div(a, b, r)
            raise TypeError(f"bad operator {node.op!r}")
        if isinstance(node, Call):
            if node.name == "pow":
                right = node.args[1]
                if isinstance(right, Neg) and isinstance(right.arg, Num):
                    return s_pow(ev(node.args[0]), -right.arg.value, r)
                if isinstance(right, Num):
                    return s_pow(ev(node.args[0]), right.value, r)
                base = ev(node.args[0])
                if base[0] <= 0.0:
                    raise EvalDomainError("power of non-positive base", r)
                return s_exp(s_mul(ev(right), s_log(base, r)))
            a = ev(node.args[0])
            if node.name == "sin":
                return s_sin_cos(a)[0]
            if node.name == "cos":
                return s_sin_cos(a)[1]
            if node.name == "tan":
                sn, cs = s_sin_cos(a)
                if cs[0] == 0.0:
                    raise EvalDomainError("tan at a pole", r)
                return s_div(sn, cs, r)
            if node.name == "exp":
                return s_exp(a)
            if node.name == "log":
                return s_log(a, r)
            if node.name == "sqrt":
                return s_sqrt(a, r)
            if node.name == "abs":
                if a[0] > 0.0:
                    return a
                if a[0] < 0.0:
                    return s_neg(a)
                raise EvalDomainError("abs jet at a sign change", r)
            raise TypeError(f"bad function {node.name!r}")
        raise TypeError(f"not an expression: {node!r}")

    return ev(e)


# ---------------------------------------------------------------------------
# Order-3 jets (derivative convention)
# ---------------------------------------------------------------------------

_FACT = (1.0, 1.0, 2.0, 6.0)


@dataclass(frozen=True)
class Jet3:
    """Value and first three derivatives of a function at a point."""

    v0: float
    v1: float
    v2: float
    v3: float

    @staticmethod
    def constant(v: float) -> "Jet3":
        return Jet3(v, 0.0, 0.0, 0.0)

    @staticmethod
    def variable(r: float) -> "Jet3":
        return Jet3(r, 1.0, 0.0, 0.0)

    @staticmethod
    def from_series(c: Coeffs) -> "Jet3":
        return Jet3(c[0], c[1], 2.0 * c[2], 6.0 * c[3])

    def series(self) -> Coeffs:
        return [self.v0, self.v1, self.v2 / 2.0, self.v3 / 6.0]

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v0, self.v1, self.v2, self.v3)

    def __add__(self, other):
        o = other if isinstance(other, Jet3) else Jet3.constant(float(other))
        return Jet3(self.v0 + o.v0, self.v1 + o.v1, self.v2 + o.v2, self.v3 + o.v3)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.v0, -self.v1, -self.v2, -self.v3)

    def __sub__(self, other):
        o = other if isinstance(other, Jet3) else Jet3.constant(float(other))
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = other if isinstance(other, Jet3) else Jet3.constant(float(other))
        return Jet3.from_series(s_mul(self.series(), o.series()))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = other if isinstance(other, Jet3) else Jet3.constant(float(other))
        return Jet3.from_series(s_div(self.series(), o.series(), math.nan))

    def __rtruediv__(self, other):
        return Jet3.constant(float(other)) / self


def jet_sqrt(j: Jet3, r: float = math.nan) -> Jet3:
    return Jet3.from_series(s_sqrt(j.series(), r))


def jet_sin(j: Jet3) -> Jet3:
    return Jet3.from_series(s_sin_cos(j.series())[0])


def jet_cos(j: Jet3) -> Jet3:
    return Jet3.from_series(s_sin_cos(j.series())[1])


def jet_exp(j: Jet3) -> Jet3:
    return Jet3.from_series(s_exp(j.series()))


def jet_log(j: Jet3, r: float = math.nan) -> Jet3:
    return Jet3.from_series(s_log(j.series(), r))


def jet_compose(outer: Jet3, inner: Jet3) -> Jet3:
    """Jet of g(s(r)) from the jet of g at s0 = inner.v0 and the jet of s at r."""
    g1, g2, g3 = outer.v1, outer.v2, outer.v3
    s1, s2, s3 = inner.v1, inner.v2, inner.v3
    return Jet3(
        outer.v0,
        g1 * s1,
        g1 * s2 + g2 * s1 * s1,
        g1 * s3 + 3.0 * g2 * s1 * s2 + g3 * s1**3,
    )


def jet_inverse(xi: Jet3, s0: float) -> Jet3:
    """Jet of the inverse function at the point xi.v0 = xi(s0).

    ``xi`` is the jet of a map at s0; the result is the jet of its local
    inverse, whose value is s0.  Requires xi.v1 != 0.
    """
    if xi.v1 == 0.0:
        raise EvalDomainError("inverse jet at a critical point", xi.v0)
    d1 = 1.0 / xi.v1
    d2 = -xi.v2 * d1**3
    d3 = (3.0 * xi.v2**2 - xi.v1 * xi.v3) * d1**5
    return Jet3(s0, d1, d2, d3)


def eval_jet3(e: Expression, r: float) -> Jet3:
    """Value and derivatives of orders 1..3 of ``e`` at the point r."""
    return Jet3.from_series(eval_series(e, r, 3))


def eval_value(e: Expression, r: float) -> float:
    return eval_series(e, r, 0)[0]


def ensure_expression(e: "Expression | str") -> Expression:
    return parse(e) if isinstance(e, str) else e
