"""Small symbolic expression engine for analytic metric entries.

Supports real literals, coordinate variables x1..xn, the arithmetic
operators + - * / ^ (integer exponents only), unary minus, and the
functions sin, cos, exp, log, sqrt.  Expressions are immutable trees,
closed under exact symbolic differentiation.  The simplifier is
deliberately minimal: constant folding and 0/1 identities only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Call",
    "ParseError",
    "EvaluationDomainError",
    "parse_expr",
    "differentiate",
    "substitute",
    "evaluate",
    "const",
    "var",
]

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


class ParseError(ValueError):
    """Syntax or identifier error, carrying the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationDomainError(ArithmeticError):
    """Evaluation left the domain of an operation (log, sqrt, division)."""


@dataclass(frozen=True)
class Expr:
    """Base class; concrete nodes subclass this."""

    def diff(self, index: int) -> "Expr":
        raise NotImplementedError

    def source(self) -> str:
        """Python source fragment; variables read from a sequence `x`."""
        raise NotImplementedError

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent: int):
        return pow_(self, exponent)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def diff(self, index):
        return Const(0.0)

    def source(self):
        return repr(self.value)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    """Coordinate variable; `index` is 0-based, rendered as x{index+1}."""

    index: int

    def diff(self, index):
        return Const(1.0 if index == self.index else 0.0)

    def source(self):
        return f"x[{self.index}]"

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def diff(self, index):
        return add(self.a.diff(index), self.b.diff(index))

    def source(self):
        return f"({self.a.source()} + {self.b.source()})"

    def __str__(self):
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def diff(self, index):
        return sub(self.a.diff(index), self.b.diff(index))

    def source(self):
        return f"({self.a.source()} - {self.b.source()})"

    def __str__(self):
        return f"({self.a} - {self.b})"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def diff(self, index):
        return add(mul(self.a.diff(index), self.b), mul(self.a, self.b.diff(index)))

    def source(self):
        return f"({self.a.source()} * {self.b.source()})"

    def __str__(self):
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def diff(self, index):
        num = sub(mul(self.a.diff(index), self.b), mul(self.a, self.b.diff(index)))
        return div(num, mul(self.b, self.b))

    def source(self):
        return f"({self.a.source()} / {self.b.source()})"

    def __str__(self):
        return f"({self.a} / {self.b})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def diff(self, index):
        if self.exponent == 0:
            return Const(0.0)
        return mul(
            mul(Const(float(self.exponent)), pow_(self.base, self.exponent - 1)),
            self.base.diff(index),
        )

    def source(self):
        return f"({self.base.source()} ** {self.exponent})"

    def __str__(self):
        return f"({self.base} ^ {self.exponent})"


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr

    def diff(self, index):
        return neg(self.a.diff(index))

    def source(self):
        return f"(-{self.a.source()})"

    def __str__(self):
        return f"(-{self.a})"


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr

    def diff(self, index):
        inner = self.arg.diff(index)
        if self.name == "sin":
            outer = Call("cos", self.arg)
        elif self.name == "cos":
            outer = neg(Call("sin", self.arg))
        elif self.name == "exp":
            outer = self
        elif self.name == "log":
            outer = div(Const(1.0), self.arg)
        elif self.name == "sqrt":
            outer = div(Const(0.5), self)
        else:  # pragma: no cover - constructor restricts names
            raise ValueError(f"unknown function {self.name!r}")
        return mul(outer, inner)

    def source(self):
        return f"math.{self.name}({self.arg.source()})"

    def __str__(self):
        return f"{self.name}({self.arg})"


# -- smart constructors: constant folding and 0/1 identities -----------------


def const(value: float) -> Expr:
    return Const(float(value))


def var(index: int) -> Expr:
    return Var(index)


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def pow_(base: Expr, exponent: int) -> Expr:
    if not isinstance(exponent, int):
        raise TypeError("exponent must be an integer")
    if exponent == 0:
        return Const(1.0)
    if exponent == 1:
        return base
    if _is_const(base):
        return Const(base.value**exponent)
    return Pow(base, exponent)


def call(name: str, arg: Expr) -> Expr:
    if name not in _FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if _is_const(arg):
        return Const(getattr(math, name)(arg.value))
    return Call(name, arg)


# -- evaluation ---------------------------------------------------------------


def evaluate(e: Expr, x) -> float:
    """Evaluate at point `x` (sequence of coordinates), guarding domains."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index])
    if isinstance(e, Add):
        return evaluate(e.a, x) + evaluate(e.b, x)
    if isinstance(e, Sub):
        return evaluate(e.a, x) - evaluate(e.b, x)
    if isinstance(e, Mul):
        return evaluate(e.a, x) * evaluate(e.b, x)
    if isinstance(e, Div):
        den = evaluate(e.b, x)
        if den == 0.0:
            raise EvaluationDomainError(f"division by zero in {e}")
        return evaluate(e.a, x) / den
    if isinstance(e, Pow):
        base = evaluate(e.base, x)
        if base == 0.0 and e.exponent < 0:
            raise EvaluationDomainError(f"zero raised to negative power in {e}")
        return base**e.exponent
    if isinstance(e, Neg):
        return -evaluate(e.a, x)
    if isinstance(e, Call):
        arg = evaluate(e.arg, x)
        if e.name == "log" and arg <= 0.0:
            raise EvaluationDomainError(f"log of non-positive value in {e}")
        if e.name == "sqrt" and arg < 0.0:
            raise EvaluationDomainError(f"sqrt of negative value in {e}")
        return getattr(math, e.name)(arg)
    raise TypeError(f"not an Expr: {e!r}")


def differentiate(e: Expr, k: int) -> Expr:
    """Exact partial derivative with respect to x_k (k is 1-based)."""
    if k < 1:
        raise ValueError("coordinate index must be >= 1")
    return e.diff(k - 1)


def substitute(e: Expr, index: int, replacement: Expr) -> Expr:
    """Replace every occurrence of Var(index) by `replacement` (0-based)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return replacement if e.index == index else e
    if isinstance(e, Add):
        return add(substitute(e.a, index, replacement), substitute(e.b, index, replacement))
    if isinstance(e, Sub):
        return sub(substitute(e.a, index, replacement), substitute(e.b, index, replacement))
    if isinstance(e, Mul):
        return mul(substitute(e.a, index, replacement), substitute(e.b, index, replacement))
    if isinstance(e, Div):
        return div(substitute(e.a, index, replacement), substitute(e.b, index, replacement))
    if isinstance(e, Pow):
        return pow_(substitute(e.base, index, replacement), e.exponent)
    if isinstance(e, Neg):
        return neg(substitute(e.a, index, replacement))
    if isinstance(e, Call):
        return call(e.name, substitute(e.arg, index, replacement))
    raise TypeError(f"not an Expr: {e!r}")


# -- parser -------------------------------------------------------------------

_TOKEN_OPS = "+-*/^()"


def _tokenize(text: str):
    tokens = []  # (kind, value, position)
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _TOKEN_OPS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            seen_exp = False
            while j < len(text):
                cj = text[j]
                if cj.isdigit():
                    j += 1
                elif cj == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif cj in "eE" and not seen_exp and j > i:
                    # exponent part must be followed by digits or sign
                    if j + 1 < len(text) and (text[j + 1].isdigit() or text[j + 1] in "+-"):
                        seen_exp = True
                        j += 2 if text[j + 1] in "+-" else 1
                    else:
                        break
                else:
                    break
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ParseError(f"bad numeric literal {lit!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    """Recursive descent over: ^  >  unary -  >  * /  >  + -, left-assoc."""

    def __init__(self, tokens, n: int):
        self.tokens = tokens
        self.pos = 0
        self.n = n

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, position = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", position)
        return self.advance()

    def parse(self) -> Expr:
        e = self.sum_expr()
        kind, value, position = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", position)
        return e

    def sum_expr(self) -> Expr:
        e = self.product()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.product()
                e = add(e, rhs) if value == "+" else sub(e, rhs)
            else:
                return e

    def product(self) -> Expr:
        e = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.unary()
                e = mul(e, rhs) if value == "*" else div(e, rhs)
            else:
                return e

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "^":
                self.advance()
                e = pow_(e, self.int_exponent())
            else:
                return e

    def int_exponent(self) -> int:
        sign = 1
        kind, value, position = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
            kind, value, position = self.peek()
        if kind != "num" or value != int(value):
            raise ParseError("exponent must be an integer literal", position)
        self.advance()
        return sign * int(value)

    def atom(self) -> Expr:
        kind, value, position = self.advance()
        if kind == "num":
            return Const(value)
        if kind == "op" and value == "(":
            e = self.sum_expr()
            self.expect_op(")")
            return e
        if kind == "ident":
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.sum_expr()
                self.expect_op(")")
                return Call(value, arg)
            if value[0] == "x" and value[1:].isdigit():
                index = int(value[1:])
                if not 1 <= index <= self.n:
                    raise ParseError(f"unknown identifier {value}", position)
                return Var(index - 1)
            raise ParseError(f"unknown identifier {value}", position)
        raise ParseError("expected a value", position)


def parse_expr(text: str, n: int) -> Expr:
    """Parse `text` over variables x1..xn into an expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(_tokenize(text), n).parse()


def compile_exprs(exprs, arity_hint: str = "x"):
    """Compile a list of expressions into one function x -> tuple of floats.

    One generated function per table keeps per-point evaluation cheap; the
    symbolic trees stay authoritative for differentiation.
    """
    exprs = list(exprs)
    body = ", ".join(e.source() for e in exprs)
    src = f"def _table({arity_hint}, math=math):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    namespace = {"math": math}
    exec(compile(src, "<expr-table>", "exec"), namespace)
    return namespace["_table"]
