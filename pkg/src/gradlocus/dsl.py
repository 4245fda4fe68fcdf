"""Expression DSL with exact forward-mode derivatives.

Grammar (standard precedence, highest first: ``^``, unary ``-``,
``* /``, ``+ -``)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | var | func '(' expr ')' | '(' expr ')' | '-' factor
    var    := 'x' digits          (1-based: x1 .. xN)
    func   := 'sin' | 'cos' | 'exp' | 'log'

Unary minus is parsed as ``'-' factor`` so that the exponent binds
tighter (``-x1^2`` means ``-(x1^2)``).  Derivatives are propagated
through the tree with truncated Taylor values (first order for
gradients and Jacobians, second order for Hessians), so they are exact
up to rounding, and evaluation is vectorized over batches of points.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, ParseError

logger = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos", "exp", "log")


# ---------------------------------------------------------------------------
# AST


class Expr:
    """Base expression node; operators build trees programmatically."""

    def __add__(self, other):
        return Add(self, _as_expr(other))

    def __radd__(self, other):
        return Add(_as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, _as_expr(other))

    def __rsub__(self, other):
        return Sub(_as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, _as_expr(other))

    def __rmul__(self, other):
        return Mul(_as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return Div(_as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("exponents must be Python ints")
        return Pow(self, k)

    def __str__(self):
        return _fmt(self)[0]


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(float(v))


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based, prints as x{index}


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def max_var_index(expr: Expr) -> int:
    """Largest variable index appearing in the tree (0 if none)."""
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, (Const,)):
        return 0
    if isinstance(expr, Neg):
        return max_var_index(expr.arg)
    if isinstance(expr, Pow):
        return max_var_index(expr.base)
    if isinstance(expr, Call):
        return max_var_index(expr.arg)
    return max(max_var_index(expr.lhs), max_var_index(expr.rhs))


# ---------------------------------------------------------------------------
# Printing (round-trips through the parser)

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return repr(e.value), _PREC_ATOM if e.value >= 0 else _PREC_NEG
    if isinstance(e, Var):
        return f"x{e.index}", _PREC_ATOM
    if isinstance(e, Call):
        return f"{e.func}({_fmt(e.arg)[0]})", _PREC_ATOM
    if isinstance(e, Neg):
        t, p = _fmt(e.arg)
        if p < _PREC_NEG:
            t = f"({t})"
        return f"-{t}", _PREC_NEG
    if isinstance(e, Pow):
        t, p = _fmt(e.base)
        if p < _PREC_ATOM:
            t = f"({t})"
        return f"{t}^{e.exponent}", _PREC_POW
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        my = _PREC_ADD
    elif isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        my = _PREC_MUL
    else:  # pragma: no cover
        raise TypeError(f"unknown node {e!r}")
    lt, lp = _fmt(e.lhs)
    rt, rp = _fmt(e.rhs)
    if lp < my:
        lt = f"({lt})"
    if rp <= my:  # left-associative grammar
        rt = f"({rt})"
    return f"{lt} {op} {rt}", my


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR_RE = re.compile(r"^x([1-9][0-9]*)$")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}",
                             len(text) - len(stripped))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, n):
        self.tokens = tokens
        self.n = n
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}, found {text or 'end of input'!r}",
                             pos)
        return self.advance()

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                node = Add(node, rhs) if text == "+" else Sub(node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.factor()
                node = Mul(node, rhs) if text == "*" else Div(node, rhs)
            else:
                return node

    def factor(self) -> Expr:
        node = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            node = Pow(node, self.integer())
        return node

    def integer(self) -> int:
        sign = 1
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            sign = -1
            self.advance()
            kind, text, pos = self.peek()
        if kind != "number" or not text.isdigit():
            raise ParseError(f"integer exponent required, found {text!r}", pos)
        self.advance()
        return sign * int(text)

    def base(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "number":
            return Const(float(text))
        if kind == "op" and text == "-":
            return Neg(self.factor())
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            m = _VAR_RE.match(text)
            if m:
                index = int(m.group(1))
                if index > self.n:
                    raise ParseError(
                        f"variable index {index} > dimension {self.n}", pos)
                return Var(index)
            raise ParseError(f"unknown identifier {text!r}", pos)
        raise ParseError(f"unexpected token {text or 'end of input'!r}", pos)


def parse_expression(text: str, n: int) -> Expr:
    """Parse an expression over variables x1..xn."""
    if n < 1:
        raise DimensionMismatch("n must be >= 1")
    parser = _Parser(_tokenize(text), n)
    node = parser.expr()
    kind, text_, pos = parser.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing token {text_!r}", pos)
    return node


# ---------------------------------------------------------------------------
# Forward-mode values (vectorized over a batch axis)


def _outer(g1, g2):
    return g1[:, :, None] * g2[:, None, :]


class Jet1:
    """Value and gradient, shapes (B,) and (B, n)."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad

    def __add__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.val + o.val, self.grad + o.grad)
        return Jet1(self.val + o, self.grad)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.val - o.val, self.grad - o.grad)
        return Jet1(self.val - o, self.grad)

    def __rsub__(self, o):
        return Jet1(o - self.val, -self.grad)

    def __mul__(self, o):
        if isinstance(o, Jet1):
            return Jet1(self.val * o.val,
                        self.val[:, None] * o.grad + o.val[:, None] * self.grad)
        return Jet1(self.val * o, self.grad * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet1):
            v = self.val / o.val
            return Jet1(v, (self.grad - v[:, None] * o.grad) / o.val[:, None])
        return Jet1(self.val / o, self.grad / o)

    def __rtruediv__(self, o):
        v = o / self.val
        return Jet1(v, -(v / self.val)[:, None] * self.grad)

    def __neg__(self):
        return Jet1(-self.val, -self.grad)

    def __pow__(self, k: int):
        if k == 0:
            return Jet1(np.ones_like(self.val), np.zeros_like(self.grad))
        if k == 1:
            return self
        return Jet1(self.val ** k,
                    (k * self.val ** (k - 1))[:, None] * self.grad)

    def sin(self):
        return Jet1(np.sin(self.val), np.cos(self.val)[:, None] * self.grad)

    def cos(self):
        return Jet1(np.cos(self.val), -np.sin(self.val)[:, None] * self.grad)

    def exp(self):
        e = np.exp(self.val)
        return Jet1(e, e[:, None] * self.grad)

    def log(self):
        return Jet1(np.log(self.val), self.grad / self.val[:, None])


class Jet2:
    """Value, gradient and Hessian, shapes (B,), (B, n), (B, n, n).

    All rules build the Hessian from symmetric outer-product pairs, so
    the skew part is zero up to the exact commutativity of IEEE
    addition and multiplication.
    """

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    def __add__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.val + o.val, self.grad + o.grad, self.hess + o.hess)
        return Jet2(self.val + o, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.val - o.val, self.grad - o.grad, self.hess - o.hess)
        return Jet2(self.val - o, self.grad, self.hess)

    def __rsub__(self, o):
        return Jet2(o - self.val, -self.grad, -self.hess)

    def __mul__(self, o):
        if isinstance(o, Jet2):
            v1, v2 = self.val, o.val
            return Jet2(
                v1 * v2,
                v1[:, None] * o.grad + v2[:, None] * self.grad,
                v1[:, None, None] * o.hess + v2[:, None, None] * self.hess
                + _outer(self.grad, o.grad) + _outer(o.grad, self.grad),
            )
        return Jet2(self.val * o, self.grad * o, self.hess * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet2):
            w = o.val
            v = self.val / w
            g = (self.grad - v[:, None] * o.grad) / w[:, None]
            h = (self.hess - v[:, None, None] * o.hess
                 - _outer(g, o.grad) - _outer(o.grad, g)) / w[:, None, None]
            return Jet2(v, g, h)
        return Jet2(self.val / o, self.grad / o, self.hess / o)

    def __rtruediv__(self, o):
        w = self.val
        v = o / w
        g = -(v / w)[:, None] * self.grad
        h = (-_outer(g, self.grad) - _outer(self.grad, g)
             - v[:, None, None] * self.hess) / w[:, None, None]
        return Jet2(v, g, h)

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __pow__(self, k: int):
        if k == 0:
            return Jet2(np.ones_like(self.val), np.zeros_like(self.grad),
                        np.zeros_like(self.hess))
        if k == 1:
            return self
        d1 = k * self.val ** (k - 1)
        d2 = k * (k - 1) * self.val ** (k - 2)
        return self._chain(self.val ** k, d1, d2)

    def _chain(self, v, d1, d2):
        return Jet2(
            v,
            d1[:, None] * self.grad,
            d1[:, None, None] * self.hess
            + d2[:, None, None] * _outer(self.grad, self.grad),
        )

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def log(self):
        inv = 1.0 / self.val
        return self._chain(np.log(self.val), inv, -inv * inv)


# ---------------------------------------------------------------------------
# Evaluation


def _raw(v):
    return v.val if isinstance(v, (Jet1, Jet2)) else v


def _eval(expr, seeds):
    t = type(expr)
    if t is Const:
        return expr.value
    if t is Var:
        if expr.index > len(seeds):
            raise DimensionMismatch(
                f"variable x{expr.index} exceeds dimension {len(seeds)}")
        return seeds[expr.index - 1]
    if t is Add:
        return _eval(expr.lhs, seeds) + _eval(expr.rhs, seeds)
    if t is Sub:
        return _eval(expr.lhs, seeds) - _eval(expr.rhs, seeds)
    if t is Mul:
        return _eval(expr.lhs, seeds) * _eval(expr.rhs, seeds)
    if t is Neg:
        return -_eval(expr.arg, seeds)
    if t is Div:
        num = _eval(expr.lhs, seeds)
        den = _eval(expr.rhs, seeds)
        if np.any(np.asarray(_raw(den)) == 0.0):
            raise DomainError("division by zero", str(expr))
        return num / den
    if t is Pow:
        base = _eval(expr.base, seeds)
        if expr.exponent < 0 and np.any(np.asarray(_raw(base)) == 0.0):
            raise DomainError("zero base with negative exponent", str(expr))
        return base ** expr.exponent
    if t is Call:
        arg = _eval(expr.arg, seeds)
        if expr.func == "log" and np.any(np.asarray(_raw(arg)) <= 0.0):
            raise DomainError("log of non-positive value", str(expr))
        if isinstance(arg, (Jet1, Jet2)):
            return getattr(arg, expr.func)()
        return getattr(np, expr.func)(arg)
    raise TypeError(f"unknown node {expr!r}")  # pragma: no cover


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise DimensionMismatch(f"expected a point or batch of points, got {x.shape}")


def _check_finite(expr, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("evaluation produced a non-finite value", str(expr))


def evaluate(expr: Expr, x):
    """Value of the expression at x, shape (n,) -> float or (B, n) -> (B,)."""
    X, single = _as_batch(x)
    with np.errstate(all="ignore"):
        out = _eval(expr, [X[:, i] for i in range(X.shape[1])])
    out = np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],))
    _check_finite(expr, out)
    return float(out[0]) if single else np.array(out)


def gradient(expr: Expr, x):
    """Exact gradient at x: (n,) -> (n,) or (B, n) -> (B, n)."""
    X, single = _as_batch(x)
    B, n = X.shape
    seeds = []
    for i in range(n):
        g = np.zeros((B, n))
        g[:, i] = 1.0
        seeds.append(Jet1(X[:, i], g))
    with np.errstate(all="ignore"):
        out = _eval(expr, seeds)
    if not isinstance(out, Jet1):  # constant expression
        out = Jet1(np.broadcast_to(np.asarray(out, float), (B,)),
                   np.zeros((B, n)))
    grad = np.broadcast_to(out.grad, (B, n))
    _check_finite(expr, _raw(out), grad)
    return np.array(grad[0]) if single else np.array(grad)


def hessian(expr: Expr, x):
    """Exact symmetric Hessian at x: (n,) -> (n, n) or (B, n) -> (B, n, n)."""
    X, single = _as_batch(x)
    B, n = X.shape
    seeds = []
    for i in range(n):
        g = np.zeros((B, n))
        g[:, i] = 1.0
        seeds.append(Jet2(X[:, i], g, np.zeros((B, n, n))))
    with np.errstate(all="ignore"):
        out = _eval(expr, seeds)
    if not isinstance(out, Jet2):
        out = Jet2(np.broadcast_to(np.asarray(out, float), (B,)),
                   np.zeros((B, n)), np.zeros((B, n, n)))
    hess = np.array(np.broadcast_to(out.hess, (B, n, n)))
    _check_finite(expr, _raw(out), hess)
    skew = float(np.abs(hess - hess.transpose(0, 2, 1)).max())
    if skew > 0.0:
        logger.debug("symmetrizing Hessian of %s: skew part %.3e", expr, skew)
    hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    return hess[0] if single else hess


# ---------------------------------------------------------------------------
# Symbolic differentiation (used to emit gradient-like fields)


def _const(v: float) -> Expr:
    return Neg(Const(-float(v))) if v < 0 else Const(float(v))


def _is_const(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


def _is_neg_one(e: Expr) -> bool:
    return _is_const(e, -1.0) or (isinstance(e, Neg) and _is_const(e.arg, 1.0))


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(b, Neg):
        return Sub(a, b.arg)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if _is_const(a, 0.0):
        return a
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_neg_one(a):
        return _neg(b)
    if _is_neg_one(b):
        return _neg(a)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return a
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def _pow(a: Expr, k: int) -> Expr:
    if k == 0:
        return Const(1.0)
    if k == 1:
        return a
    return Pow(a, k)


def linear_combination(coeffs, exprs) -> Expr:
    """Sum of coeff * expr over the pair lists, folding 0/±1 coefficients."""
    acc: Expr = Const(0.0)
    for c, e in zip(coeffs, exprs, strict=True):
        acc = _add(acc, _mul(_const(float(c)), e))
    return acc


def differentiate(expr: Expr, var_index: int) -> Expr:
    """Symbolic partial derivative with respect to x{var_index}."""
    if var_index < 1:
        raise ValueError("variable indices are 1-based")
    d = lambda e: differentiate(e, var_index)  # noqa: E731
    if isinstance(expr, Const):
        return Const(0.0)
    if isinstance(expr, Var):
        return Const(1.0 if expr.index == var_index else 0.0)
    if isinstance(expr, Neg):
        return _neg(d(expr.arg))
    if isinstance(expr, Add):
        return _add(d(expr.lhs), d(expr.rhs))
    if isinstance(expr, Sub):
        return _sub(d(expr.lhs), d(expr.rhs))
    if isinstance(expr, Mul):
        return _add(_mul(d(expr.lhs), expr.rhs), _mul(expr.lhs, d(expr.rhs)))
    if isinstance(expr, Div):
        return _div(
            _sub(_mul(d(expr.lhs), expr.rhs), _mul(expr.lhs, d(expr.rhs))),
            _pow(expr.rhs, 2),
        )
    if isinstance(expr, Pow):
        if expr.exponent == 0:
            return Const(0.0)
        return _mul(
            _mul(_const(expr.exponent), _pow(expr.base, expr.exponent - 1)),
            d(expr.base),
        )
    if isinstance(expr, Call):
        u, du = expr.arg, d(expr.arg)
        if expr.func == "sin":
            return _mul(Call("cos", u), du)
        if expr.func == "cos":
            return _neg(_mul(Call("sin", u), du))
        if expr.func == "exp":
            return _mul(Call("exp", u), du)
        if expr.func == "log":
            return _div(du, u)
    raise TypeError(f"unknown node {expr!r}")  # pragma: no cover
