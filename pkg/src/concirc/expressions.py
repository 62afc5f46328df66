"""Symbolic scalar expressions over chart coordinates.

Expression trees are immutable and interned (hash-consed): structurally equal
trees are the same Python object, so `is` comparison, dict lookups and
per-node caches are all O(1), and shared subtrees are stored once no matter
how often they recur in a tensor component. Construction goes through the
factory helpers (`add`, `mul`, ..., or operator overloading), which fold
constant-only subtrees exactly; constants are `fractions.Fraction` throughout,
so no precision is lost at parse time or during folding.

Grammar accepted by `parse`:

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := base ('^' exponent)?      # exponent := factor, right associative
    base     := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base

Simplification is conservative: constant folding, 0/1 identities, flattening
of sum/product chains with like-term and like-factor collection. Rewrites only
ever produce trees pointwise equal to the input on the input's domain.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "Expr",
    "DualValue",
    "ExpressionError",
    "ParseError",
    "UnknownIdentifierError",
    "DomainError",
    "FUNCTIONS",
    "const",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "pow_",
    "neg",
    "func",
    "sin",
    "cos",
    "tan",
    "cot",
    "exp",
    "ln",
    "sinh",
    "cosh",
    "sqrt",
    "abs_",
    "esum",
    "parse",
    "to_string",
    "variables",
    "differentiate",
    "simplify",
    "evaluate",
    "evaluate_block",
    "evaluate_dual",
    "node_count",
]

FUNCTIONS = ("sin", "cos", "tan", "cot", "exp", "ln", "sinh", "cosh", "sqrt", "abs")

_CONST = "const"
_VAR = "var"
_ADD = "+"
_SUB = "-"
_MUL = "*"
_DIV = "/"
_POW = "^"
_NEG = "neg"


class ExpressionError(Exception):
    """Base class for expression engine errors."""


class ParseError(ExpressionError):
    """Syntax error; carries the 0-based position in the source text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    """Identifier that is neither a declared coordinate nor a known function."""

    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier '{name}'", position)
        self.name = name


class DomainError(ExpressionError):
    """Evaluation left the domain (division by zero, ln of non-positive, ...)."""

    def __init__(self, message: str, subexpression: "Expr | None" = None):
        if subexpression is not None:
            message = f"{message} in subexpression '{to_string(subexpression)}'"
        super().__init__(message)
        self.subexpression = subexpression


class Expr:
    """One interned node of an expression tree. Build via the factories."""

    __slots__ = ("kind", "payload", "args")

    kind: str
    payload: object  # Fraction for constants, str for variables, else None
    args: tuple

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return pow_(self, other)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return to_string(self)

    def __str__(self):
        return to_string(self)


# Interning table. Keys identify nodes structurally: children are already
# interned, so their ids pin them down. Structural equality == identity.
_INTERN: dict[tuple, Expr] = {}


def _node(kind: str, payload, args: tuple) -> Expr:
    key = (kind, payload, tuple(id(a) for a in args))
    hit = _INTERN.get(key)
    if hit is None:
        hit = object.__new__(Expr)
        hit.kind = kind
        hit.payload = payload
        hit.args = args
        _INTERN[key] = hit
    return hit


# ---------------------------------------------------------------------------
# construction factories (exact constant folding + 0/1 identities)
# ---------------------------------------------------------------------------


def const(value) -> Expr:
    """Exact rational constant. Floats are converted exactly (dyadic rationals)."""
    if isinstance(value, Expr):
        if value.kind != _CONST:
            raise ExpressionError(f"not a constant: {value}")
        return value
    q = value if isinstance(value, Fraction) else Fraction(value)
    return _node(_CONST, q, ())


ZERO = const(0)
ONE = const(1)


def var(name: str) -> Expr:
    if not name or not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
        raise ExpressionError(f"invalid variable name {name!r}")
    return _node(_VAR, name, ())


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, Fraction)):
        return const(x)
    raise ExpressionError(f"cannot use {type(x).__name__} as an expression")


def _is_const(e: Expr) -> bool:
    return e.kind == _CONST


def add(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if _is_const(a) and _is_const(b):
        return const(a.payload + b.payload)
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    return _node(_ADD, None, (a, b))


def sub(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if _is_const(a) and _is_const(b):
        return const(a.payload - b.payload)
    if a is b:
        return ZERO
    if b is ZERO:
        return a
    if a is ZERO:
        return neg(b)
    return _node(_SUB, None, (a, b))


def mul(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if _is_const(a) and _is_const(b):
        return const(a.payload * b.payload)
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    return _node(_MUL, None, (a, b))


def div(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if _is_const(b) and b.payload != 0:
        if _is_const(a):
            return const(a.payload / b.payload)
        if b is ONE:
            return a
    if a is ZERO and not (_is_const(b) and b.payload == 0):
        return ZERO
    return _node(_DIV, None, (a, b))


def pow_(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if _is_const(b):
        q = b.payload
        if q == 1:
            return a
        if q == 0:
            return ONE  # 0^0 == 1 by the evaluation convention below
        if _is_const(a) and q.denominator == 1:
            base = a.payload
            if base != 0 or q > 0:
                return const(base ** q.numerator)
    if _is_const(a) and a.payload == 1:
        return ONE
    return _node(_POW, None, (a, b))


def neg(a) -> Expr:
    a = _coerce(a)
    if _is_const(a):
        return const(-a.payload)
    if a.kind == _NEG:
        return a.args[0]
    return _node(_NEG, None, (a,))


def func(name: str, a) -> Expr:
    if name not in FUNCTIONS:
        raise ExpressionError(f"unknown function '{name}'")
    return _node(name, None, (_coerce(a),))


def sin(a):
    return func("sin", a)


def cos(a):
    return func("cos", a)


def tan(a):
    return func("tan", a)


def cot(a):
    return func("cot", a)


def exp(a):
    return func("exp", a)


def ln(a):
    return func("ln", a)


def sinh(a):
    return func("sinh", a)


def cosh(a):
    return func("cosh", a)


def sqrt(a):
    return func("sqrt", a)


def abs_(a):
    return func("abs", a)


def esum(terms) -> Expr:
    """Sum of an iterable of expressions (empty sum is 0)."""
    acc = ZERO
    for t in terms:
        acc = add(acc, t)
    return acc


def variables(e: Expr) -> frozenset[str]:
    """Set of variable names appearing in the tree."""
    hit = _VARS_CACHE.get(e)
    if hit is not None:
        return hit
    if e.kind == _VAR:
        out = frozenset((e.payload,))
    elif e.kind == _CONST:
        out = frozenset()
    else:
        out = frozenset().union(*(variables(a) for a in e.args))
    _VARS_CACHE[e] = out
    return out


_VARS_CACHE: dict[Expr, frozenset] = {}


def node_count(e: Expr, limit: int | None = None) -> int:
    """Number of distinct nodes in the DAG rooted at e (early exit past limit)."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if limit is not None and len(seen) > limit:
            return len(seen)
        stack.extend(n.args)
    return len(seen)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", len(text) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(_Token("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(_Token("op", m.group("op"), m.start("op")))
        i = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], coordinates):
        self.tokens = tokens
        self.i = 0
        self.coordinates = frozenset(coordinates)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, text: str):
        t = self.next()
        if t.kind != "op" or t.text != text:
            raise ParseError(f"expected '{text}', found {t.text!r}", t.pos)

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        b = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            return pow_(b, self.factor())
        return b

    def base(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return const(Fraction(t.text))
        if t.kind == "ident":
            if self.peek().kind == "op" and self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownIdentifierError(t.text, t.pos)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return func(t.text, arg)
            if t.text in self.coordinates:
                return var(t.text)
            if t.text in FUNCTIONS:
                raise ParseError(f"function '{t.text}' needs an argument list", t.pos)
            raise UnknownIdentifierError(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if t.kind == "op" and t.text == "-":
            return neg(self.base())
        raise ParseError(f"unexpected {t.text!r}" if t.text else "unexpected end of input", t.pos)


def parse(text: str, coordinates) -> Expr:
    """Parse an expression over the given coordinate names."""
    p = _Parser(_tokenize(text), coordinates)
    e = p.expr()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"trailing input {t.text!r}", t.pos)
    return e


# ---------------------------------------------------------------------------
# printing (inverse of parse: print-then-parse reproduces the tree)
# ---------------------------------------------------------------------------

_ATOM = "atom"
_CAT_FRAC = "frac"
_CAT_POW = "pow"
_CAT_NEG = "neg"
_CAT_PROD = "prod"
_CAT_SUM = "sum"


def _category(e: Expr) -> str:
    if e.kind == _CONST:
        q: Fraction = e.payload
        if q.denominator != 1:
            return _CAT_FRAC
        return _ATOM if q >= 0 else _CAT_NEG
    if e.kind in (_VAR,) or e.kind in FUNCTIONS:
        return _ATOM
    if e.kind == _POW:
        return _CAT_POW
    if e.kind == _NEG:
        return _CAT_NEG
    if e.kind in (_MUL, _DIV):
        return _CAT_PROD
    return _CAT_SUM


def _wrap(e: Expr, cats) -> str:
    s = to_string(e)
    return f"({s})" if _category(e) in cats else s


_STR_CACHE: dict[int, str] = {}


def to_string(e: Expr) -> str:
    """Render with exactly the parentheses the grammar needs to round-trip."""
    hit = _STR_CACHE.get(id(e))
    if hit is not None:
        return hit
    out = _to_string(e)
    _STR_CACHE[id(e)] = out
    return out


def _to_string(e: Expr) -> str:
    k = e.kind
    if k == _CONST:
        q: Fraction = e.payload
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    if k == _VAR:
        return e.payload
    if k in FUNCTIONS:
        return f"{k}({to_string(e.args[0])})"
    if k == _NEG:
        return "-" + _wrap(e.args[0], (_CAT_SUM, _CAT_PROD, _CAT_FRAC, _CAT_POW))
    if k in (_ADD, _SUB):
        left = to_string(e.args[0])
        right = _wrap(e.args[1], (_CAT_SUM,))
        return f"{left} {k} {right}"
    if k in (_MUL, _DIV):
        left = _wrap(e.args[0], (_CAT_SUM,))
        right = _wrap(e.args[1], (_CAT_SUM, _CAT_PROD, _CAT_FRAC))
        return f"{left}{k}{right}"
    if k == _POW:
        left = _wrap(e.args[0], (_CAT_SUM, _CAT_PROD, _CAT_FRAC, _CAT_POW, _CAT_NEG))
        ex = e.args[1]
        bare = (
            _category(ex) == _ATOM
            or ex.kind == _NEG
            or ex.kind == _POW
            or (ex.kind == _CONST and ex.payload.denominator == 1)
        )
        right = to_string(ex) if bare else f"({to_string(ex)})"
        return f"{left}^{right}"
    raise ExpressionError(f"unprintable node kind {k!r}")


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

_DIFF_CACHE: dict[tuple[int, str], Expr] = {}


def differentiate(e: Expr, name: str) -> Expr:
    """Partial derivative with respect to the named variable."""
    key = (id(e), name)
    hit = _DIFF_CACHE.get(key)
    if hit is not None:
        return hit
    k = e.kind
    if k == _CONST:
        out = ZERO
    elif k == _VAR:
        out = ONE if e.payload == name else ZERO
    elif k == _ADD:
        out = add(differentiate(e.args[0], name), differentiate(e.args[1], name))
    elif k == _SUB:
        out = sub(differentiate(e.args[0], name), differentiate(e.args[1], name))
    elif k == _NEG:
        out = neg(differentiate(e.args[0], name))
    elif k == _MUL:
        a, b = e.args
        out = add(mul(differentiate(a, name), b), mul(a, differentiate(b, name)))
    elif k == _DIV:
        a, b = e.args
        num = sub(mul(differentiate(a, name), b), mul(a, differentiate(b, name)))
        out = div(num, pow_(b, 2))
    elif k == _POW:
        a, b = e.args
        if _is_const(b):
            p = b.payload
            out = mul(mul(const(p), pow_(a, const(p - 1))), differentiate(a, name))
        else:
            da, db = differentiate(a, name), differentiate(b, name)
            out = mul(e, add(mul(db, ln(a)), div(mul(b, da), a)))
    elif k == "sin":
        out = mul(cos(e.args[0]), differentiate(e.args[0], name))
    elif k == "cos":
        out = mul(neg(sin(e.args[0])), differentiate(e.args[0], name))
    elif k == "tan":
        out = mul(add(ONE, pow_(tan(e.args[0]), 2)), differentiate(e.args[0], name))
    elif k == "cot":
        out = mul(neg(add(ONE, pow_(cot(e.args[0]), 2))), differentiate(e.args[0], name))
    elif k == "exp":
        out = mul(e, differentiate(e.args[0], name))
    elif k == "ln":
        out = div(differentiate(e.args[0], name), e.args[0])
    elif k == "sinh":
        out = mul(cosh(e.args[0]), differentiate(e.args[0], name))
    elif k == "cosh":
        out = mul(sinh(e.args[0]), differentiate(e.args[0], name))
    elif k == "sqrt":
        out = div(differentiate(e.args[0], name), mul(const(2), e))
    elif k == "abs":
        # sign(u) * u' away from u = 0, written abs-free of new primitives
        out = mul(div(e.args[0], e), differentiate(e.args[0], name))
    else:
        raise ExpressionError(f"cannot differentiate node kind {k!r}")
    _DIFF_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# conservative simplification
# ---------------------------------------------------------------------------

_SIMPLIFY_CACHE: dict[int, Expr] = {}


def _sort_key(e: Expr) -> str:
    """Deterministic total order on interned nodes (canonical output order)."""
    return to_string(e)


def simplify(e: Expr) -> Expr:
    """Constant folding, 0/1 identities, like-term/like-factor collection.

    Sums and products are flattened with factors and terms put in a canonical
    order, repeated factors merge into powers, terms sharing an identical
    denominator combine over it. Every rewrite is pointwise equal to the
    input on the input's domain; nothing depends on sign assumptions.
    """
    hit = _SIMPLIFY_CACHE.get(id(e))
    if hit is not None:
        return hit
    k = e.kind
    if k in (_CONST, _VAR):
        out = e
    elif k in FUNCTIONS:
        out = func(k, simplify(e.args[0]))
    elif k in (_ADD, _SUB, _NEG):
        out = _simplify_sum(e)
    elif k in (_MUL, _DIV):
        out = _simplify_product(e)
    elif k == _POW:
        base = simplify(e.args[0])
        expo = simplify(e.args[1])
        if (
            expo.kind == _CONST
            and expo.payload.denominator == 1
            and base.kind == _POW
            and base.args[1].kind == _CONST
        ):
            # (x^p)^m -> x^(p*m) for integer m: valid wherever x^p is defined
            out = pow_(base.args[0], const(base.args[1].payload * expo.payload))
        else:
            out = pow_(base, expo)
    else:
        raise ExpressionError(f"cannot simplify node kind {k!r}")
    _SIMPLIFY_CACHE[id(e)] = out
    _SIMPLIFY_CACHE[id(out)] = out
    return out


def _decompose_term(t: Expr) -> tuple[Fraction, dict[Expr, Fraction]]:
    """Write an already-simplified non-sum term as coeff * prod(base^expo)."""
    coeff = Fraction(1)
    factors: dict[Expr, Fraction] = {}
    stack = [(t, False)]
    while stack:
        node, invert = stack.pop()
        k = node.kind
        if k == _MUL:
            stack.append((node.args[1], invert))
            stack.append((node.args[0], invert))
        elif k == _DIV:
            stack.append((node.args[1], not invert))
            stack.append((node.args[0], invert))
        elif k == _NEG:
            coeff = -coeff
            stack.append((node.args[0], invert))
        elif k == _CONST:
            q = node.payload
            if invert:
                if q == 0:
                    factors[node] = factors.get(node, Fraction(0)) - 1
                else:
                    coeff /= q
            else:
                coeff *= q
        elif k == _POW and node.args[1].kind == _CONST:
            expo = node.args[1].payload
            base = node.args[0]
            factors[base] = factors.get(base, Fraction(0)) + (-expo if invert else expo)
        else:
            factors[node] = factors.get(node, Fraction(0)) + (-1 if invert else 1)
    return coeff, factors


def _rebuild_product(coeff: Fraction, factors: dict[Expr, Fraction]) -> Expr:
    """Canonical product: sign(coeff) * [coeff] * sorted factors / sorted den."""
    if coeff == 0:
        return ZERO
    num_parts = []
    den_parts = []
    for base in sorted(factors, key=_sort_key):
        expo = factors[base]
        if expo == 0:
            continue
        if base is ZERO and expo < 0:
            den_parts.append(ZERO)  # preserve x/0 as a domain error
            continue
        (num_parts if expo > 0 else den_parts).append(pow_(base, const(abs(expo))))
    sign = coeff < 0
    coeff = abs(coeff)
    num: Expr | None = None
    if coeff != 1 or not num_parts:
        num = const(coeff)
    for p in num_parts:
        num = p if num is None else mul(num, p)
    out = num
    if den_parts:
        den = den_parts[0]
        for p in den_parts[1:]:
            den = mul(den, p)
        out = _node(_DIV, None, (out, den)) if den is ZERO else div(out, den)
    return neg(out) if sign else out


def _split_num_den(factors: dict[Expr, Fraction]):
    num = {b: q for b, q in factors.items() if q > 0}
    den = {b: -q for b, q in factors.items() if q < 0}
    return num, den


def _simplify_product(e: Expr) -> Expr:
    """Flatten a */ chain, collecting exponents per base and folding constants."""
    stack = [(e, False)]
    coeff = Fraction(1)
    factors: dict[Expr, Fraction] = {}
    while stack:
        node, invert = stack.pop()
        k = node.kind
        if k == _MUL:
            stack.append((node.args[1], invert))
            stack.append((node.args[0], invert))
            continue
        if k == _DIV:
            stack.append((node.args[1], not invert))
            stack.append((node.args[0], invert))
            continue
        if k == _NEG:
            coeff = -coeff
            stack.append((node.args[0], invert))
            continue
        f = simplify(node)
        if f.kind in (_MUL, _DIV, _NEG):
            stack.append((f, invert))
            continue
        c, fs = _decompose_term(f)
        if invert:
            if c == 0:
                factors[ZERO] = factors.get(ZERO, Fraction(0)) - 1
            else:
                coeff /= c
            for b, q in fs.items():
                factors[b] = factors.get(b, Fraction(0)) - q
        else:
            coeff *= c
            for b, q in fs.items():
                factors[b] = factors.get(b, Fraction(0)) + q
    return _rebuild_product(coeff, factors)


def _simplify_sum(e: Expr) -> Expr:
    """Flatten a +- chain; collect like terms; combine equal denominators."""
    raw: list[tuple[int, Expr]] = []
    stack = [(e, 1)]
    while stack:
        node, sign = stack.pop()
        k = node.kind
        if k == _ADD:
            stack.append((node.args[1], sign))
            stack.append((node.args[0], sign))
            continue
        if k == _SUB:
            stack.append((node.args[1], -sign))
            stack.append((node.args[0], sign))
            continue
        if k == _NEG:
            stack.append((node.args[0], -sign))
            continue
        t = simplify(node)
        if t.kind in (_ADD, _SUB, _NEG):
            stack.append((t, sign))
            continue
        raw.append((sign, t))
    # preserve left-to-right discovery order (stack pops reversed the pushes,
    # so raw is already in source order)

    # group terms by their (canonical) denominator part
    groups: dict[Expr, list[tuple[Fraction, dict]]] = {}
    for sign, t in raw:
        c, fs = _decompose_term(t)
        num, den = _split_num_den(fs)
        den_key = _rebuild_product(Fraction(1), {b: q for b, q in den.items()})
        groups.setdefault(den_key, []).append((sign * c, num))

    const_acc = Fraction(0)
    collected: dict[Expr, Fraction] = {}

    def take(coeff: Fraction, factors: dict[Expr, Fraction]):
        nonlocal const_acc
        if coeff == 0:
            return
        key = _rebuild_product(Fraction(1), factors)
        if key.kind == _CONST:
            const_acc += coeff * key.payload
        else:
            collected[key] = collected.get(key, Fraction(0)) + coeff

    for den_key, entries in groups.items():
        if den_key is ONE or len(entries) == 1:
            for c, num in entries:
                if den_key is not ONE:
                    merged = dict(num)
                    dc, dfs = _decompose_term(den_key)
                    c /= dc
                    for b, q in dfs.items():
                        merged[b] = merged.get(b, Fraction(0)) - q
                    take(c, merged)
                else:
                    take(c, num)
            continue
        # several terms over one identical denominator: combine numerators
        num_sum = ZERO
        for c, num in entries:
            num_sum = add(num_sum, _rebuild_product(c, num))
        num_sum = simplify(num_sum)
        combined = simplify(div(num_sum, den_key))
        if combined.kind in (_ADD, _SUB):
            # numerator stayed a sum; keep the fraction as one opaque term
            collected[combined] = collected.get(combined, Fraction(0)) + 1
        else:
            c, fs = _decompose_term(combined)
            take(c, fs)

    pieces = []
    for key in sorted(collected, key=_sort_key):
        coeff = collected[key]
        if coeff == 0:
            continue
        if coeff == 1:
            pieces.append(key)
        elif coeff == -1:
            pieces.append(neg(key))
        else:
            c, fs = _decompose_term(key)
            pieces.append(_rebuild_product(coeff * c, fs))
    acc: Expr | None = None
    for piece in pieces:
        if acc is None:
            acc = piece
        elif piece.kind == _NEG:
            acc = sub(acc, piece.args[0])
        else:
            acc = add(acc, piece)
    if acc is None:
        return const(const_acc)
    if const_acc > 0:
        return add(acc, const(const_acc))
    if const_acc < 0:
        return sub(acc, const(-const_acc))
    return acc


# ---------------------------------------------------------------------------
# evaluation: scalar (strict domain errors), block (vectorized), dual numbers
# ---------------------------------------------------------------------------


def evaluate(e: Expr, point: dict) -> float:
    """Evaluate at a point, raising DomainError with the offending subexpression."""
    cache: dict[int, float] = {}

    def ev(n: Expr) -> float:
        got = cache.get(id(n))
        if got is not None:
            return got
        k = n.kind
        if k == _CONST:
            v = float(n.payload)
        elif k == _VAR:
            try:
                v = float(point[n.payload])
            except KeyError:
                raise DomainError(f"coordinate '{n.payload}' not assigned", n) from None
        elif k == _ADD:
            v = ev(n.args[0]) + ev(n.args[1])
        elif k == _SUB:
            v = ev(n.args[0]) - ev(n.args[1])
        elif k == _NEG:
            v = -ev(n.args[0])
        elif k == _MUL:
            v = ev(n.args[0]) * ev(n.args[1])
        elif k == _DIV:
            b = ev(n.args[1])
            if b == 0.0:
                raise DomainError("division by zero", n)
            v = ev(n.args[0]) / b
        elif k == _POW:
            a, b = ev(n.args[0]), ev(n.args[1])
            if a == 0.0 and b < 0:
                raise DomainError("zero base with negative exponent", n)
            if a < 0 and b != int(b):
                raise DomainError("negative base with non-integer exponent", n)
            try:
                v = a ** b
            except OverflowError:
                raise DomainError("overflow", n) from None
        elif k == "ln":
            a = ev(n.args[0])
            if a <= 0.0:
                raise DomainError("ln of non-positive value", n)
            v = math.log(a)
        elif k == "sqrt":
            a = ev(n.args[0])
            if a < 0.0:
                raise DomainError("sqrt of negative value", n)
            v = math.sqrt(a)
        elif k == "cot":
            a = ev(n.args[0])
            s = math.sin(a)
            if s == 0.0:
                raise DomainError("cot at a zero of sin", n)
            v = math.cos(a) / s
        elif k == "abs":
            v = abs(ev(n.args[0]))
        else:
            try:
                fn = {
                    "sin": math.sin,
                    "cos": math.cos,
                    "tan": math.tan,
                    "exp": math.exp,
                    "sinh": math.sinh,
                    "cosh": math.cosh,
                }[k]
            except KeyError:
                raise ExpressionError(f"cannot evaluate node kind {k!r}") from None
            try:
                v = fn(ev(n.args[0]))
            except OverflowError:
                raise DomainError("overflow", n) from None
        cache[id(n)] = v
        return v

    return ev(e)


def evaluate_block(exprs, columns: dict) -> list[np.ndarray]:
    """Evaluate many expressions at many points in one shared-DAG pass.

    columns maps coordinate name -> 1-d float array (all the same length).
    Returns one array per expression. Non-finite results raise DomainError
    without pinpointing the subexpression; use `evaluate` for diagnosis.
    """
    exprs = list(exprs)
    npts = len(next(iter(columns.values()))) if columns else 1
    cache: dict[int, object] = {}

    _UNARY_NP = {
        "sin": np.sin,
        "cos": np.cos,
        "tan": np.tan,
        "exp": np.exp,
        "sinh": np.sinh,
        "cosh": np.cosh,
        "abs": np.abs,
    }

    def ev(root: Expr):
        stack = [(root, False)]
        while stack:
            n, expanded = stack.pop()
            if id(n) in cache:
                continue
            if not expanded:
                stack.append((n, True))
                for a in n.args:
                    if id(a) not in cache:
                        stack.append((a, False))
                continue
            k = n.kind
            if k == _CONST:
                v = float(n.payload)
            elif k == _VAR:
                v = columns[n.payload]
            elif k == _ADD:
                v = cache[id(n.args[0])] + cache[id(n.args[1])]
            elif k == _SUB:
                v = cache[id(n.args[0])] - cache[id(n.args[1])]
            elif k == _NEG:
                v = -cache[id(n.args[0])]
            elif k == _MUL:
                v = cache[id(n.args[0])] * cache[id(n.args[1])]
            elif k == _DIV:
                v = cache[id(n.args[0])] / cache[id(n.args[1])]
            elif k == _POW:
                v = cache[id(n.args[0])] ** cache[id(n.args[1])]
            elif k == "ln":
                v = np.log(cache[id(n.args[0])])
            elif k == "sqrt":
                v = np.sqrt(cache[id(n.args[0])])
            elif k == "cot":
                a = cache[id(n.args[0])]
                v = np.cos(a) / np.sin(a)
            else:
                fn = _UNARY_NP.get(k)
                if fn is None:
                    raise ExpressionError(f"cannot evaluate node kind {k!r}")
                v = fn(cache[id(n.args[0])])
            cache[id(n)] = v

    out = []
    with np.errstate(all="ignore"):
        for e in exprs:
            ev(e)
        for e in exprs:
            v = cache[id(e)]
            arr = np.broadcast_to(np.asarray(v, dtype=float), (npts,)).copy() \
                if np.ndim(v) == 0 else np.asarray(v, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DomainError("non-finite value in block evaluation", e)
            out.append(arr)
    return out


@dataclass(frozen=True)
class DualValue:
    """First-order dual number: value + derivative along a fixed direction."""

    value: float
    deriv: float


def evaluate_dual(e: Expr, point: dict, direction: dict) -> DualValue:
    """Forward-mode directional derivative; independent of `differentiate`.

    direction maps coordinate names to the components of the tangent vector
    along which the derivative is taken (missing names mean 0).
    """
    cache: dict[int, DualValue] = {}

    def ev(n: Expr) -> DualValue:
        got = cache.get(id(n))
        if got is not None:
            return got
        k = n.kind
        if k == _CONST:
            out = DualValue(float(n.payload), 0.0)
        elif k == _VAR:
            try:
                v = float(point[n.payload])
            except KeyError:
                raise DomainError(f"coordinate '{n.payload}' not assigned", n) from None
            out = DualValue(v, float(direction.get(n.payload, 0.0)))
        elif k == _ADD:
            x, y = ev(n.args[0]), ev(n.args[1])
            out = DualValue(x.value + y.value, x.deriv + y.deriv)
        elif k == _SUB:
            x, y = ev(n.args[0]), ev(n.args[1])
            out = DualValue(x.value - y.value, x.deriv - y.deriv)
        elif k == _NEG:
            x = ev(n.args[0])
            out = DualValue(-x.value, -x.deriv)
        elif k == _MUL:
            x, y = ev(n.args[0]), ev(n.args[1])
            out = DualValue(x.value * y.value, x.deriv * y.value + x.value * y.deriv)
        elif k == _DIV:
            x, y = ev(n.args[0]), ev(n.args[1])
            if y.value == 0.0:
                raise DomainError("division by zero", n)
            out = DualValue(
                x.value / y.value,
                (x.deriv * y.value - x.value * y.deriv) / (y.value * y.value),
            )
        elif k == _POW:
            x, y = ev(n.args[0]), ev(n.args[1])
            ise = n.args[1].kind == _CONST
            if x.value == 0.0 and y.value < 0:
                raise DomainError("zero base with negative exponent", n)
            if x.value < 0 and y.value != int(y.value):
                raise DomainError("negative base with non-integer exponent", n)
            v = x.value ** y.value
            if ise:
                dv = y.value * (x.value ** (y.value - 1.0)) * x.deriv if y.value != 0 else 0.0
            else:
                if x.value <= 0:
                    raise DomainError("non-constant exponent needs positive base", n)
                dv = v * (y.deriv * math.log(x.value) + y.value * x.deriv / x.value)
            out = DualValue(v, dv)
        elif k == "sin":
            x = ev(n.args[0])
            out = DualValue(math.sin(x.value), math.cos(x.value) * x.deriv)
        elif k == "cos":
            x = ev(n.args[0])
            out = DualValue(math.cos(x.value), -math.sin(x.value) * x.deriv)
        elif k == "tan":
            x = ev(n.args[0])
            t = math.tan(x.value)
            out = DualValue(t, (1.0 + t * t) * x.deriv)
        elif k == "cot":
            x = ev(n.args[0])
            s = math.sin(x.value)
            if s == 0.0:
                raise DomainError("cot at a zero of sin", n)
            c = math.cos(x.value) / s
            out = DualValue(c, -(1.0 + c * c) * x.deriv)
        elif k == "exp":
            x = ev(n.args[0])
            v = math.exp(x.value)
            out = DualValue(v, v * x.deriv)
        elif k == "ln":
            x = ev(n.args[0])
            if x.value <= 0.0:
                raise DomainError("ln of non-positive value", n)
            out = DualValue(math.log(x.value), x.deriv / x.value)
        elif k == "sinh":
            x = ev(n.args[0])
            out = DualValue(math.sinh(x.value), math.cosh(x.value) * x.deriv)
        elif k == "cosh":
            x = ev(n.args[0])
            out = DualValue(math.cosh(x.value), math.sinh(x.value) * x.deriv)
        elif k == "sqrt":
            x = ev(n.args[0])
            if x.value < 0.0:
                raise DomainError("sqrt of negative value", n)
            v = math.sqrt(x.value)
            if v == 0.0 and x.deriv != 0.0:
                raise DomainError("sqrt derivative at zero", n)
            out = DualValue(v, x.deriv / (2.0 * v) if x.deriv != 0.0 else 0.0)
        elif k == "abs":
            x = ev(n.args[0])
            s = -1.0 if x.value < 0 else 1.0
            out = DualValue(abs(x.value), s * x.deriv)
        else:
            raise ExpressionError(f"cannot evaluate node kind {k!r}")
        cache[id(n)] = out
        return out

    return ev(e)
