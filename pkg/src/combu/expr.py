"""Symbolic expression trees, their textual form, and interval bounds.

The node set covers variables, constants, linear combinations, exp, log,
power products (real exponents, so negative powers encode quotients), and
sums of coefficient-weighted power products.

Textual form is a prefix s-expression:

    (sum (term 2.0 (pow x1 2) (pow x2 -1)))
    (exp (lin 2.0 (log x1)))

``xN`` is the N-th input variable (1-based in text, 0-based in the tree).
``lin`` takes coefficient/term pairs and an optional trailing number as the
bias.  ``term`` takes a coefficient followed by factors; a bare factor means
exponent 1.

:func:`evaluate` is a direct recursive interpreter over 64-bit floats and
serves as the ground truth the compiled networks are checked against.
"""

import math
from dataclasses import dataclass

from .errors import BoundError, DomainError, ParameterError, SchemaError


@dataclass(frozen=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ParameterError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class LinComb:
    coeffs: tuple
    terms: tuple
    bias: float = 0.0

    def __post_init__(self):
        if len(self.coeffs) != len(self.terms):
            raise ParameterError("one coefficient per term required")


@dataclass(frozen=True)
class Exp:
    child: object


@dataclass(frozen=True)
class Log:
    child: object


@dataclass(frozen=True)
class PowerProduct:
    exponents: tuple
    children: tuple

    def __post_init__(self):
        if len(self.exponents) != len(self.children):
            raise ParameterError("one exponent per factor required")


@dataclass(frozen=True)
class SumOfProducts:
    coeffs: tuple
    products: tuple

    def __post_init__(self):
        if len(self.coeffs) != len(self.products):
            raise ParameterError("one coefficient per product required")
        for p in self.products:
            if not isinstance(p, PowerProduct):
                raise ParameterError("sum terms must be power products")


def num_vars(node) -> int:
    if isinstance(node, Var):
        return node.index + 1
    if isinstance(node, Const):
        return 0
    if isinstance(node, (Exp, Log)):
        return num_vars(node.child)
    if isinstance(node, LinComb):
        return max((num_vars(t) for t in node.terms), default=0)
    if isinstance(node, PowerProduct):
        return max((num_vars(c) for c in node.children), default=0)
    if isinstance(node, SumOfProducts):
        return max((num_vars(p) for p in node.products), default=0)
    raise ParameterError(f"unknown node {node!r}")


def evaluate(node, x) -> float:
    """Direct recursive evaluation at a point; the compiler's oracle."""
    if isinstance(node, Var):
        return float(x[node.index])
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, LinComb):
        total = node.bias
        for c, t in zip(node.coeffs, node.terms):
            total += c * evaluate(t, x)
        return total
    if isinstance(node, Exp):
        return math.exp(evaluate(node.child, x))
    if isinstance(node, Log):
        v = evaluate(node.child, x)
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v!r}")
        return math.log(v)
    if isinstance(node, PowerProduct):
        total = 1.0
        for p, c in zip(node.exponents, node.children):
            base = evaluate(c, x)
            if base <= 0.0 and p != round(p):
                raise DomainError(f"non-integer power of non-positive value {base!r}")
            total *= base**p
        return total
    if isinstance(node, SumOfProducts):
        total = 0.0
        for a, prod in zip(node.coeffs, node.products):
            total += a * evaluate(prod, x)
        return total
    raise ParameterError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# textual form

def _tokenize(text: str) -> list:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise SchemaError("empty expression")
    return tokens


def _read(tokens, pos):
    if pos >= len(tokens):
        raise SchemaError("unexpected end of expression")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise SchemaError("missing closing parenthesis")
        return items, pos + 1
    if tok == ")":
        raise SchemaError("unexpected ')'")
    return tok, pos + 1


def _number(atom) -> float:
    try:
        return float(atom)
    except (TypeError, ValueError):
        raise SchemaError(f"expected a number, got {atom!r}") from None


def _build(form):
    if isinstance(form, str):
        if form.startswith("x") and form[1:].isdigit():
            idx = int(form[1:])
            if idx < 1:
                raise SchemaError(f"variables are numbered from x1, got {form!r}")
            return Var(idx - 1)
        return Const(_number(form))
    if not form:
        raise SchemaError("empty form '()'")
    op, args = form[0], form[1:]
    if not isinstance(op, str):
        raise SchemaError(f"operator expected, got {op!r}")
    if op == "const":
        if len(args) != 1:
            raise SchemaError("(const c) takes one number")
        return Const(_number(args[0]))
    if op == "exp":
        if len(args) != 1:
            raise SchemaError("(exp t) takes one term")
        return Exp(_build(args[0]))
    if op == "log":
        if len(args) != 1:
            raise SchemaError("(log t) takes one term")
        return Log(_build(args[0]))
    if op == "pow":
        if len(args) != 2:
            raise SchemaError("(pow t p) takes a term and an exponent")
        return PowerProduct((_number(args[1]),), (_build(args[0]),))
    if op == "lin":
        coeffs, terms = [], []
        bias = 0.0
        i = 0
        while i < len(args):
            if i == len(args) - 1:
                bias = _number(args[i])  # odd trailing number is the bias
                i += 1
            else:
                coeffs.append(_number(args[i]))
                terms.append(_build(args[i + 1]))
                i += 2
        if not terms and bias == 0.0:
            raise SchemaError("(lin ...) needs at least one coefficient/term pair")
        return LinComb(tuple(coeffs), tuple(terms), bias)
    if op == "term":
        if not args:
            raise SchemaError("(term a factors...) needs a coefficient")
        coeff = _number(args[0])
        exponents, children = [], []
        for factor in args[1:]:
            node = _build(factor)
            if isinstance(node, PowerProduct) and len(node.children) == 1:
                exponents.append(node.exponents[0])
                children.append(node.children[0])
            else:
                exponents.append(1.0)
                children.append(node)
        return coeff, PowerProduct(tuple(exponents), tuple(children))
    if op == "sum":
        if not args:
            raise SchemaError("(sum terms...) needs at least one term")
        coeffs, products = [], []
        for arg in args:
            built = _build(arg)
            if isinstance(built, tuple):  # a (term ...) form
                coeff, prod = built
            elif isinstance(built, PowerProduct):
                coeff, prod = 1.0, built
            else:
                coeff, prod = 1.0, PowerProduct((1.0,), (built,))
            coeffs.append(coeff)
            products.append(prod)
        return SumOfProducts(tuple(coeffs), tuple(products))
    raise SchemaError(f"unknown operator {op!r}")


def parse_sexpr(text: str):
    form, pos = _read(_tokenize(text), 0)
    if pos != len(_tokenize(text)):
        raise SchemaError("trailing input after expression")
    node = _build(form)
    if isinstance(node, tuple):
        raise SchemaError("(term ...) is only valid inside (sum ...)")
    return node


def format_sexpr(node) -> str:
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Const):
        return f"(const {node.value!r})"
    if isinstance(node, Exp):
        return f"(exp {format_sexpr(node.child)})"
    if isinstance(node, Log):
        return f"(log {format_sexpr(node.child)})"
    if isinstance(node, PowerProduct):
        if len(node.children) == 1:
            return f"(pow {format_sexpr(node.children[0])} {node.exponents[0]!r})"
        inner = " ".join(
            f"(pow {format_sexpr(c)} {p!r})" for p, c in zip(node.exponents, node.children)
        )
        return f"(sum (term 1.0 {inner}))"
    if isinstance(node, LinComb):
        parts = [f"{c!r} {format_sexpr(t)}" for c, t in zip(node.coeffs, node.terms)]
        if node.bias != 0.0:
            parts.append(repr(node.bias))
        return f"(lin {' '.join(parts)})"
    if isinstance(node, SumOfProducts):
        parts = []
        for a, prod in zip(node.coeffs, node.products):
            inner = " ".join(
                f"(pow {format_sexpr(c)} {p!r})" for p, c in zip(prod.exponents, prod.children)
            )
            parts.append(f"(term {a!r} {inner})" if inner else f"(term {a!r})")
        return f"(sum {' '.join(parts)})"
    raise ParameterError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# interval bounds

@dataclass(frozen=True)
class Bounds:
    """Interval [lo, hi] plus the minimum non-zero magnitude (delta).

    ``min_abs`` matters only for inputs that cross zero but are known to stay
    out of (-delta, delta) except for exact zero; positive intervals carry
    their own delta in ``lo``.
    """

    lo: float
    hi: float
    min_abs: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise BoundError(f"bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise BoundError(f"lower bound {self.lo} exceeds upper bound {self.hi}")
        if self.min_abs < 0.0:
            raise BoundError(f"min_abs must be >= 0, got {self.min_abs}")

    @property
    def mag(self) -> float:
        """Largest magnitude the value can take (the node-local M)."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def delta(self) -> float:
        """Smallest non-zero magnitude (the node-local delta); 0 if unknown."""
        if self.lo > 0.0:
            return self.lo
        if self.hi < 0.0:
            return -self.hi
        return self.min_abs


def _derived(lo: float, hi: float) -> Bounds:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise BoundError(f"interval arithmetic produced an unbounded node: [{lo}, {hi}]")
    return Bounds(lo, hi)


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        raise BoundError(f"exp({v}) exceeds the 64-bit float range") from None


def _require_positive(child_bounds: Bounds, what: str) -> float:
    delta = child_bounds.delta
    if delta <= 0.0 or child_bounds.lo < delta:
        raise DomainError(
            f"{what} needs a strictly positive child; got bounds "
            f"[{child_bounds.lo}, {child_bounds.hi}] with delta {delta}"
        )
    return delta


def infer_bounds(node, input_bounds) -> dict:
    """Interval arithmetic over the tree; returns bounds per node.

    Monotone rules for exp/log, endpoint rules for linear combinations,
    log-space rules for power products.  Structurally equal subtrees share
    an entry (their bounds coincide).
    """
    input_bounds = list(input_bounds)
    table: dict = {}

    def go(n) -> Bounds:
        if n in table:
            return table[n]
        if isinstance(n, Var):
            if n.index >= len(input_bounds):
                raise ParameterError(f"no bounds given for variable x{n.index + 1}")
            b = input_bounds[n.index]
        elif isinstance(n, Const):
            b = Bounds(n.value, n.value)
        elif isinstance(n, LinComb):
            lo = hi = n.bias
            for c, t in zip(n.coeffs, n.terms):
                tb = go(t)
                lo += min(c * tb.lo, c * tb.hi)
                hi += max(c * tb.lo, c * tb.hi)
            b = _derived(lo, hi)
        elif isinstance(n, Exp):
            cb = go(n.child)
            b = _derived(_exp(cb.lo), _exp(cb.hi))
        elif isinstance(n, Log):
            cb = go(n.child)
            _require_positive(cb, "log")
            b = _derived(math.log(cb.lo), math.log(cb.hi))
        elif isinstance(n, PowerProduct):
            lo = hi = 0.0
            for p, c in zip(n.exponents, n.children):
                cb = go(c)
                _require_positive(cb, "power product")
                llo, lhi = math.log(cb.lo), math.log(cb.hi)
                lo += min(p * llo, p * lhi)
                hi += max(p * llo, p * lhi)
            b = _derived(_exp(lo), _exp(hi))
        elif isinstance(n, SumOfProducts):
            lo = hi = 0.0
            for a, prod in zip(n.coeffs, n.products):
                pb = go(prod)
                lo += min(a * pb.lo, a * pb.hi)
                hi += max(a * pb.lo, a * pb.hi)
            b = _derived(lo, hi)
        else:
            raise ParameterError(f"unknown node {n!r}")
        table[n] = b
        return b

    go(node)
    return table
