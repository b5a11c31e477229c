"""Immutable expression trees over the chart variables of a control system.

Expressions are built from rational constants, named parameters, chart
variables (``t``, ``q<i>``, ``w<a>``), sums, products, non-negative integer
powers and the functions ``sin``, ``cos`` and ``exp``.  Division is not part
of the language.

``simplify`` maps an expression to a canonical sum-of-monomials form:
products are expanded, like terms are merged and exponentials are combined.
It is deliberately blind to trigonometric identities, so semantic zero
testing goes through :func:`is_zero`, which evaluates at random points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Param", "Add", "Mul", "Pow", "Func",
    "ExprSyntaxError", "UnknownIdentifierError", "UnassignedSymbolError",
    "Domain", "ZeroTest",
    "parse", "to_text", "simplify", "diff", "evaluate", "is_zero",
    "zero_test", "compile_numeric", "free_symbols", "const", "ZERO", "ONE",
]

FUNCTIONS = ("sin", "cos", "exp")
_VAR_RE = re.compile(r"^(t|q[1-9][0-9]*|w[1-9][0-9]*)$")


class ExprSyntaxError(ValueError):
    def __init__(self, message, text, pos):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class UnknownIdentifierError(ValueError):
    pass


class UnassignedSymbolError(KeyError):
    pass


class Expr:
    """Base class of all expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ("_hash",)
    kind = "expr"

    def _fields(self):
        raise NotImplementedError

    def _init_hash(self):
        object.__setattr__(self, "_hash", hash((self.kind, self._fields())))

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self._fields()))})"

    def __str__(self):
        return to_text(self)

    # Operators build raw (unsimplified) trees.
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Add(self, Mul(Const(-1), _coerce(other)))

    def __rsub__(self, other):
        return Add(_coerce(other), Mul(Const(-1), self))

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __neg__(self):
        return Mul(Const(-1), self)

    def __pow__(self, k):
        return Pow(self, k)

    @property
    def children(self) -> tuple:
        return ()


class Const(Expr):
    __slots__ = ("value",)
    kind = "const"

    def __init__(self, value):
        if isinstance(value, float):
            value = Fraction(value)
        object.__setattr__(self, "value", Fraction(value))
        self._init_hash()

    def _fields(self):
        return (self.value,)


class Var(Expr):
    __slots__ = ("name",)
    kind = "var"

    def __init__(self, name: str):
        if not _VAR_RE.match(name):
            raise UnknownIdentifierError(f"not a chart variable: {name!r}")
        object.__setattr__(self, "name", name)
        self._init_hash()

    def _fields(self):
        return (self.name,)


class Param(Expr):
    __slots__ = ("name",)
    kind = "param"

    def __init__(self, name: str):
        if _VAR_RE.match(name) or name in FUNCTIONS:
            raise ValueError(f"reserved name cannot be a parameter: {name!r}")
        object.__setattr__(self, "name", name)
        self._init_hash()

    def _fields(self):
        return (self.name,)


class Add(Expr):
    __slots__ = ("terms",)
    kind = "add"

    def __init__(self, *terms: Expr):
        if len(terms) < 2:
            raise ValueError("Add needs at least two terms")
        object.__setattr__(self, "terms", tuple(terms))
        self._init_hash()

    def _fields(self):
        return self.terms

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)
    kind = "mul"

    def __init__(self, *factors: Expr):
        if len(factors) < 2:
            raise ValueError("Mul needs at least two factors")
        object.__setattr__(self, "factors", tuple(factors))
        self._init_hash()

    def _fields(self):
        return self.factors

    @property
    def children(self):
        return self.factors


class Pow(Expr):
    __slots__ = ("base", "exponent")
    kind = "pow"

    def __init__(self, base: Expr, exponent: int):
        if int(exponent) != exponent or exponent < 0:
            raise ValueError("only non-negative integer exponents are supported")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", int(exponent))
        self._init_hash()

    def _fields(self):
        return (self.base, self.exponent)

    @property
    def children(self):
        return (self.base,)


class Func(Expr):
    __slots__ = ("name", "arg")
    kind = "func"

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unsupported function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)
        self._init_hash()

    def _fields(self):
        return (self.name, self.arg)

    @property
    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)


def const(value) -> Const:
    return Const(value)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction, float)):
        return Const(value)
    raise TypeError(f"cannot use {value!r} in an expression")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _negate(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        return Mul(Const(-e.factors[0].value), *e.factors[1:])
    return Mul(Const(-1), e)


class _Parser:
    def __init__(self, text: str, params: Iterable[str]):
        self.text = text
        self.params = set(params)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self.text, pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", self.text, pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else _negate(t))
        return terms[0] if len(terms) == 1 else Add(*terms)

    def term(self) -> Expr:
        factors = [self.factor()]
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            kind, val, pos = self.take()
            if val == "/":
                raise ExprSyntaxError("division is not supported", self.text, pos)
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Mul(*factors)

    def factor(self) -> Expr:
        base = self.base()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be a non-negative integer literal", self.text, pos)
            return Pow(base, int(val))
        return base

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and val == "-":
            return _negate(self.factor())
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if _VAR_RE.match(val):
                return Var(val)
            if val in self.params:
                return Param(val)
            raise UnknownIdentifierError(
                f"unknown identifier {val!r} at position {pos} in {self.text!r}")
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", self.text, pos)


def parse(text: str, params: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into a raw expression tree (no simplification applied)."""
    return _Parser(text, params).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _const_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        raise ValueError(f"constant {v} has no finite decimal representation")
    with localcontext() as ctx:
        ctx.prec = 4 * (len(str(v.numerator)) + len(str(v.denominator))) + 10
        s = format(Decimal(v.numerator) / Decimal(v.denominator), "f")
    return s


def _factor_text(e: Expr) -> str:
    if isinstance(e, (Add, Mul)):
        return f"({to_text(e)})"
    return to_text(e)


def _term_text(e: Expr) -> str:
    return f"({to_text(e)})" if isinstance(e, Add) else to_text(e)


def _minus_form(e: Expr):
    """Text for ``e`` after a binary minus, or None when that would not re-parse to ``e``."""
    if isinstance(e, Const) and e.value < 0:
        return _const_text(-e.value)
    if isinstance(e, Mul) and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        c = e.factors[0].value
        rest = e.factors[1:]
        if c == -1 and len(rest) == 1:
            f = rest[0]
            if isinstance(f, Const) or (isinstance(f, Mul) and isinstance(f.factors[0], Const)):
                return None
            return _factor_text(f)
        return to_text(Mul(Const(-c), *rest))
    return None


def to_text(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse(to_text(e)) == e`` for every tree."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Pow):
        b = e.base
        if isinstance(b, (Add, Mul, Pow)) or (isinstance(b, Const) and (b.value < 0 or b.value.denominator != 1)):
            bt = f"({to_text(b)})"
        else:
            bt = to_text(b)
        return f"{bt}^{e.exponent}"
    if isinstance(e, Mul):
        return "*".join(_factor_text(f) for f in e.factors)
    if isinstance(e, Add):
        parts = [_term_text(e.terms[0])]
        for t in e.terms[1:]:
            m = _minus_form(t)
            parts.append(f" - {m}" if m is not None else f" + {_term_text(t)}")
        return "".join(parts)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------
# A polynomial is a dict  monomial -> Fraction  where a monomial is a sorted
# tuple of (atom, power).  Atoms are Var, Param, Func(sin|cos, canonical arg)
# and Func(exp, canonical arg); at most one exp atom per monomial, power 1.

_KIND_ORDER = {"const": 0, "param": 1, "var": 2, "func": 3, "pow": 4, "mul": 5, "add": 6}


@lru_cache(maxsize=None)
def sort_key(e: Expr):
    """Total order on expressions used for canonical ordering."""
    k = _KIND_ORDER[e.kind]
    if isinstance(e, Const):
        return (k, e.value)
    if isinstance(e, Var):
        m = re.match(r"([a-z])(\d*)", e.name)
        return (k, "tqw".index(m.group(1)), int(m.group(2) or 0))
    if isinstance(e, Param):
        return (k, e.name)
    if isinstance(e, Func):
        return (k, FUNCTIONS.index(e.name), sort_key(e.arg))
    if isinstance(e, Pow):
        return (k, sort_key(e.base), e.exponent)
    return (k, len(e.children), tuple(sort_key(c) for c in e.children))


def _mono_key(mono):
    return (sum(p for _, p in mono), tuple((sort_key(a), p) for a, p in mono))


def _mono_mul(a, b):
    if not a:
        return 1, b
    if not b:
        return 1, a
    powers = dict(a)
    exp_args = []
    for atom, p in list(powers.items()):
        if isinstance(atom, Func) and atom.name == "exp":
            exp_args.append(atom.arg)
            del powers[atom]
    for atom, p in b:
        if isinstance(atom, Func) and atom.name == "exp":
            exp_args.append(atom.arg)
        else:
            powers[atom] = powers.get(atom, 0) + p
    coeff = Fraction(1)
    if exp_args:
        arg = simplify(exp_args[0] if len(exp_args) == 1 else Add(*exp_args))
        e = _make_func("exp", arg)
        if isinstance(e, Const):
            coeff = e.value
        else:
            powers[e] = 1
    return coeff, tuple(sorted(powers.items(), key=lambda ap: sort_key(ap[0])))


def _poly_mul(p1, p2):
    out = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            k, m = _mono_mul(m1, m2)
            c = c1 * c2 * k
            out[m] = out.get(m, 0) + c
    return {m: c for m, c in out.items() if c != 0}


def _poly_add(polys):
    out = {}
    for p in polys:
        for m, c in p.items():
            out[m] = out.get(m, 0) + c
    return {m: c for m, c in out.items() if c != 0}


def _make_func(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value == 0:
        return ZERO if name == "sin" else ONE
    return Func(name, arg)


def _atom_poly(atom: Expr):
    if isinstance(atom, Const):
        return {(): atom.value} if atom.value != 0 else {}
    if isinstance(atom, Func) and atom.name == "exp":
        return {((atom, 1),): Fraction(1)}
    return {((atom, 1),): Fraction(1)}


@lru_cache(maxsize=200_000)
def _poly(e: Expr):
    if isinstance(e, Const):
        return {(): e.value} if e.value != 0 else {}
    if isinstance(e, (Var, Param)):
        return {((e, 1),): Fraction(1)}
    if isinstance(e, Func):
        return _atom_poly(_make_func(e.name, simplify(e.arg)))
    if isinstance(e, Add):
        return _poly_add(_poly(t) for t in e.terms)
    if isinstance(e, Mul):
        acc = {(): Fraction(1)}
        for f in e.factors:
            acc = _poly_mul(acc, _poly(f))
            if not acc:
                break
        return acc
    if isinstance(e, Pow):
        base = _poly(e.base)
        acc = {(): Fraction(1)}
        for _ in range(e.exponent):
            acc = _poly_mul(acc, base)
        return acc
    raise TypeError(f"unknown node {e!r}")


def _from_poly(poly) -> Expr:
    if not poly:
        return ZERO
    terms = []
    for mono in sorted(poly, key=_mono_key):
        c = poly[mono]
        factors = [] if c == 1 else [Const(c)]
        for atom, p in mono:
            factors.append(atom if p == 1 else Pow(atom, p))
        if not factors:
            terms.append(Const(c))
        elif len(factors) == 1:
            terms.append(factors[0])
        else:
            terms.append(Mul(*factors))
    return terms[0] if len(terms) == 1 else Add(*terms)


@lru_cache(maxsize=200_000)
def simplify(e: Expr) -> Expr:
    """Canonical, value-equivalent form: expanded, like terms merged, constants folded."""
    return _from_poly(_poly(e))


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def _diff_raw(e: Expr, v: str) -> Expr:
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return Add(*[_diff_raw(t, v) for t in e.terms])
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + e.factors[i + 1:]
            terms.append(Mul(_diff_raw(f, v), *rest))
        return terms[0] if len(terms) == 1 else Add(*terms)
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        return Mul(Const(e.exponent), Pow(e.base, e.exponent - 1), _diff_raw(e.base, v))
    if isinstance(e, Func):
        da = _diff_raw(e.arg, v)
        if e.name == "sin":
            return Mul(Func("cos", e.arg), da)
        if e.name == "cos":
            return Mul(Const(-1), Func("sin", e.arg), da)
        return Mul(e, da)
    raise TypeError(f"unknown node {e!r}")


@lru_cache(maxsize=200_000)
def diff(e: Expr, v: str) -> Expr:
    """Partial derivative of ``e`` with respect to chart variable ``v``, simplified."""
    if v not in free_symbols(e):
        return ZERO
    return simplify(_diff_raw(simplify(e), v))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=200_000)
def free_symbols(e: Expr) -> frozenset:
    """Names of all variables and parameters occurring in ``e``."""
    if isinstance(e, (Var, Param)):
        return frozenset((e.name,))
    out = frozenset()
    for c in e.children:
        out |= free_symbols(c)
    return out


def evaluate(e: Expr, point: Mapping, params: Mapping | None = None):
    """Evaluate ``e``.  Rational inputs stay exact until a transcendental node."""
    params = params or {}

    def ev(x):
        if isinstance(x, Const):
            return x.value
        if isinstance(x, Var):
            if x.name not in point:
                raise UnassignedSymbolError(x.name)
            return _num(point[x.name])
        if isinstance(x, Param):
            if x.name not in params:
                raise UnassignedSymbolError(x.name)
            return _num(params[x.name])
        if isinstance(x, Add):
            return sum((ev(t) for t in x.terms), Fraction(0))
        if isinstance(x, Mul):
            acc = Fraction(1)
            for f in x.factors:
                acc = acc * ev(f)
            return acc
        if isinstance(x, Pow):
            return ev(x.base) ** x.exponent
        if isinstance(x, Func):
            a = ev(x.arg)
            if a == 0:
                return Fraction(0) if x.name == "sin" else Fraction(1)
            return getattr(math, x.name)(float(a))
        raise TypeError(f"unknown node {x!r}")

    return ev(e)


def _num(value):
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return float(value)


def _np_code(e: Expr, index: Mapping[str, int]) -> str:
    if isinstance(e, Const):
        return f"({float(e.value)!r})"
    if isinstance(e, Var):
        if e.name not in index:
            raise UnassignedSymbolError(e.name)
        return f"X[{index[e.name]}]"
    if isinstance(e, Param):
        return f"P[{e.name!r}]"
    if isinstance(e, Add):
        return "(" + " + ".join(_np_code(t, index) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_np_code(f, index) for f in e.factors) + ")"
    if isinstance(e, Pow):
        return f"({_np_code(e.base, index)} ** {e.exponent})"
    if isinstance(e, Func):
        return f"np.{e.name}({_np_code(e.arg, index)})"
    raise TypeError(f"unknown node {e!r}")


@lru_cache(maxsize=50_000)
def _compile(e: Expr, chart: tuple):
    index = {name: i for i, name in enumerate(chart)}
    src = f"lambda X, P: {_np_code(e, index)}"
    return eval(src, {"np": np})  # noqa: S307 - source generated from a trusted tree


def compile_numeric(e: Expr, chart: tuple):
    """Vectorised evaluator ``f(X, params)``; ``X`` has shape (len(chart), N).

    Returns an array of shape (N,) (constants are broadcast).
    """
    fn = _compile(e, tuple(chart))

    def f(X, params=None):
        X = np.asarray(X, dtype=float)
        out = fn(X, params or {})
        return np.broadcast_to(np.asarray(out, dtype=float), X.shape[1:]).copy()

    return f


# ---------------------------------------------------------------------------
# Sampling domains and probabilistic zero test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Closed sampling box, optionally pinned on some coordinates.

    ``pins`` fixes coordinates to constants (coordinate-subspace strata);
    ``nonzero`` lists coordinates whose zero set is excluded, which only
    matters for locus searches since random samples avoid it anyway.
    """

    box: tuple  # ((name, lo, hi), ...)
    pins: tuple = ()  # ((name, value), ...)
    nonzero: tuple = ()

    def __post_init__(self):
        for name, lo, hi in self.box:
            if not lo < hi:
                raise ValueError(f"empty sampling interval for {name}: ({lo}, {hi})")

    @classmethod
    def from_dict(cls, box: Mapping, pins: Mapping | None = None, nonzero=()):
        return cls(tuple((k, float(lo), float(hi)) for k, (lo, hi) in box.items()),
                   tuple(sorted((k, float(v)) for k, v in (pins or {}).items())),
                   tuple(nonzero))

    @property
    def names(self) -> tuple:
        return tuple(name for name, _, _ in self.box)

    def bounds(self, name):
        for n, lo, hi in self.box:
            if n == name:
                return lo, hi
        raise KeyError(name)

    def pinned(self, **pins) -> "Domain":
        merged = dict(self.pins)
        merged.update({k: float(v) for k, v in pins.items()})
        return Domain(self.box, tuple(sorted(merged.items())), self.nonzero)

    def with_nonzero(self, *names) -> "Domain":
        return Domain(self.box, self.pins, tuple(sorted(set(self.nonzero) | set(names))))

    def around(self, point: Mapping, radius: float) -> "Domain":
        """Sub-box of half-width ``radius`` centred at ``point``, clipped to this box."""
        box = []
        for name, lo, hi in self.box:
            c = float(point[name])
            a, b = max(lo, c - radius), min(hi, c + radius)
            if not a < b:
                a, b = c - radius, c + radius
            box.append((name, a, b))
        return Domain(tuple(box), self.pins, self.nonzero)

    def sample(self, rng: np.random.Generator, n: int, chart=None) -> np.ndarray:
        """Uniform samples, shape (len(chart), n), honouring the pins."""
        chart = tuple(chart) if chart is not None else self.names
        pins = dict(self.pins)
        out = np.empty((len(chart), n))
        for i, name in enumerate(chart):
            if name in pins:
                out[i] = pins[name]
            else:
                lo, hi = self.bounds(name)
                out[i] = rng.uniform(lo, hi, n)
        return out

    def contains(self, point: Mapping, atol=1e-12) -> bool:
        for name, lo, hi in self.box:
            if name in point and not (lo - atol <= point[name] <= hi + atol):
                return False
        return all(abs(point.get(k, v) - v) <= 1e-9 for k, v in self.pins)


@dataclass
class ZeroTest:
    """Outcome of a probabilistic identity test."""

    zero: bool
    trials: int
    seed: int
    tol: float
    witness: dict | None = None
    value: float | None = None
    max_abs: float = 0.0

    def __bool__(self):
        return self.zero


def zero_test(e: Expr, d: Domain, trials: int = 12, tol: float = 1e-9, seed: int = 0,
              params: Mapping | None = None) -> ZeroTest:
    """Evaluate ``simplify(e)`` at ``trials`` uniform points of ``d``.

    On failure the first offending point is recorded as a witness.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    s = simplify(e)
    if isinstance(s, Const):
        z = s.value == 0 or abs(float(s.value)) < tol
        return ZeroTest(z, trials, seed, tol, None if z else {}, None if z else float(s.value),
                        abs(float(s.value)))
    chart = d.names
    missing = {n for n in free_symbols(s) if n[0] in "tqw" and _VAR_RE.match(n)} - set(chart)
    if missing:
        raise UnassignedSymbolError(", ".join(sorted(missing)))
    rng = np.random.default_rng(seed)
    X = d.sample(rng, trials, chart)
    vals = compile_numeric(s, chart)(X, params)
    bad = np.flatnonzero(~(np.abs(vals) < tol))
    max_abs = float(np.max(np.abs(vals)))
    if bad.size:
        i = int(bad[0])
        return ZeroTest(False, trials, seed, tol,
                        {name: float(X[k, i]) for k, name in enumerate(chart)},
                        float(vals[i]), max_abs)
    return ZeroTest(True, trials, seed, tol, None, None, max_abs)


def is_zero(e: Expr, d: Domain, trials: int = 12, tol: float = 1e-9, seed: int = 0,
            params: Mapping | None = None) -> bool:
    return zero_test(e, d, trials, tol, seed, params).zero
