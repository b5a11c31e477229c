"""Control systems, vector fields on extended space-time and the Lie bracket."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exprcore import (ONE, ZERO, Add, Const, Mul, Domain, Expr, Var, compile_numeric, diff,
                       free_symbols, parse, simplify, to_text)

__all__ = ["ControlSystem", "VectorField", "ChartMismatchError", "make_chart",
           "canonical_fields", "lie_bracket", "eval_field", "eval_fields",
           "linear_system", "point_dict"]


class ChartMismatchError(ValueError):
    pass


def make_chart(n: int, m: int) -> tuple:
    return ("t",) + tuple(f"q{i}" for i in range(1, n + 1)) + tuple(f"w{a}" for a in range(1, m + 1))


@dataclass(frozen=True)
class ControlSystem:
    """q' = f(t, q, w) with controls in the open box ``K``.

    ``K`` entries may be infinite; ``sample_box`` gives the finite box used
    for sampling and must lie inside ``K``.
    """

    n: int
    m: int
    f: tuple
    K: tuple
    params: tuple = ()
    name: str = "system"
    sample_box: tuple | None = None

    def __post_init__(self):
        if len(self.f) != self.n:
            raise ValueError(f"expected {self.n} state equations, got {len(self.f)}")
        if len(self.K) != self.m:
            raise ValueError(f"expected {self.m} control intervals, got {len(self.K)}")
        object.__setattr__(self, "f", tuple(simplify(e) for e in self.f))
        for a, (lo, hi) in enumerate(self.K, 1):
            if not lo < hi:
                raise ValueError(f"control interval K{a} is empty")
        allowed = set(self.chart) | set(dict(self.params))
        for i, e in enumerate(self.f, 1):
            unknown = free_symbols(e) - allowed
            if unknown:
                raise ValueError(f"f{i} = {to_text(e)!r} uses undeclared symbols {sorted(unknown)}")
        box = self.sample_box
        if box is None:
            box = tuple((max(lo, -1.0), min(hi, 1.0)) if not (math.isfinite(lo) and math.isfinite(hi))
                        else (lo, hi) for lo, hi in self.K)
            object.__setattr__(self, "sample_box", box)
        for (lo, hi), (klo, khi) in zip(box, self.K):
            if not (klo <= lo < hi <= khi):
                raise ValueError("control sampling box must lie inside K")

    @classmethod
    def from_strings(cls, f: Sequence[str], K, params: Mapping | None = None, name="system",
                     sample_box=None):
        params = dict(params or {})
        exprs = tuple(parse(s, params) for s in f)
        m = len(K)
        return cls(len(exprs), m, exprs, tuple(tuple(map(float, k)) for k in K),
                   tuple(sorted(params.items())), name,
                   None if sample_box is None else tuple(tuple(map(float, b)) for b in sample_box))

    @property
    def chart(self) -> tuple:
        return make_chart(self.n, self.m)

    @property
    def dim(self) -> int:
        return 1 + self.n + self.m

    @property
    def param_values(self) -> dict:
        return dict(self.params)

    def with_params(self, **values) -> "ControlSystem":
        p = dict(self.params)
        unknown = set(values) - set(p)
        if unknown:
            raise KeyError(f"unknown parameter(s) {sorted(unknown)}; system has {sorted(p)}")
        p.update({k: float(v) for k, v in values.items()})
        return ControlSystem(self.n, self.m, self.f, self.K, tuple(sorted(p.items())), self.name,
                             self.sample_box)

    def domain(self, t=(0.0, 1.0), q=None, w=None) -> Domain:
        """Sampling domain; ``q`` defaults to [-1, 1]^n and ``w`` to the sampling box of K."""
        box = {"t": t}
        for i in range(1, self.n + 1):
            box[f"q{i}"] = (q[i - 1] if q is not None and isinstance(q[0], (tuple, list)) else
                            (q if q is not None else (-1.0, 1.0)))
        wb = w if w is not None else self.sample_box
        for a in range(1, self.m + 1):
            box[f"w{a}"] = wb[a - 1]
        for a, (lo, hi) in enumerate(wb, 1):
            klo, khi = self.K[a - 1]
            if not (klo <= lo and hi <= khi):
                raise ValueError("w-box must lie inside K")
        return Domain.from_dict(box)

    def rhs(self):
        """Vectorised right-hand side ``F(t, Q, W) -> (n, N)``."""
        fns = [compile_numeric(e, self.chart) for e in self.f]
        params = self.param_values

        def F(t, Q, W):
            N = Q.shape[1]
            X = np.empty((self.dim, N))
            X[0] = t
            X[1:1 + self.n] = Q
            X[1 + self.n:] = W
            return np.stack([fn(X, params) for fn in fns])

        return F


@dataclass(frozen=True)
class VectorField:
    """Components ordered (d/dt, d/dq1.., d/dw1..).  The label is cosmetic."""

    components: tuple
    chart: tuple
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.components) != len(self.chart):
            raise ChartMismatchError(
                f"{len(self.components)} components for a chart of dimension {len(self.chart)}")

    def relabel(self, label: str) -> "VectorField":
        return VectorField(self.components, self.chart, label)

    def is_structurally_zero(self) -> bool:
        return all(c == ZERO for c in self.components)

    def __add__(self, other):
        _check_chart(self, other)
        return VectorField(tuple(simplify(a + b) for a, b in zip(self.components, other.components)),
                           self.chart)

    def scale(self, e: Expr) -> "VectorField":
        return VectorField(tuple(simplify(e * c) for c in self.components), self.chart, self.label)

    def text(self) -> dict:
        return {name: to_text(c) for name, c in zip(self.chart, self.components) if c != ZERO}

    def __str__(self):
        body = " + ".join(f"({e})*d/d{n}" for n, e in self.text().items()) or "0"
        return f"{self.label}: {body}" if self.label else body


def _check_chart(X: VectorField, Y: VectorField):
    if X.chart != Y.chart:
        raise ChartMismatchError(f"charts differ: {X.chart} vs {Y.chart}")


def canonical_fields(sys: ControlSystem):
    """The drift field d/dt + f^i d/dq^i and the control fields d/dw^a."""
    chart = sys.chart
    drift = VectorField((ONE,) + sys.f + (ZERO,) * sys.m, chart, "T")
    controls = []
    for a in range(sys.m):
        comps = [ZERO] * sys.dim
        comps[1 + sys.n + a] = ONE
        controls.append(VectorField(tuple(comps), chart, f"W{a + 1}^(0)"))
    return drift, controls


def _apply(X: VectorField, e: Expr) -> Expr:
    """Directional derivative X(e)."""
    terms = []
    for name, xc in zip(X.chart, X.components):
        if xc == ZERO:
            continue
        de = diff(e, name)
        if de != ZERO:
            terms.append(xc * de)
    if not terms:
        return ZERO
    return simplify(_sum(terms))


def _sum(terms):
    return terms[0] if len(terms) == 1 else Add(*terms)


def lie_bracket(X: VectorField, Y: VectorField, label: str = "") -> VectorField:
    """[X, Y]^k = X(Y^k) - Y(X^k)."""
    _check_chart(X, Y)
    comps = []
    for xk, yk in zip(X.components, Y.components):
        comps.append(simplify(_sum([_apply(X, yk), Const(-1) * _apply(Y, xk)])))
    if not label and X.label and Y.label:
        label = f"[{X.label},{Y.label}]"
    return VectorField(tuple(comps), X.chart, label)


def point_dict(chart, p) -> dict:
    if isinstance(p, Mapping):
        return {k: float(v) for k, v in p.items()}
    return {name: float(v) for name, v in zip(chart, p)}


def _as_array(chart, points) -> np.ndarray:
    """Points as an array of shape (dim, N)."""
    if isinstance(points, Mapping):
        return np.array([[float(points[name])] for name in chart])
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def eval_fields(fields: Sequence[VectorField], points, params: Mapping | None = None) -> np.ndarray:
    """Evaluation matrices, shape (N, dim, k) for k fields at N points."""
    if not fields:
        raise ValueError("empty field list")
    chart = fields[0].chart
    for X in fields:
        _check_chart(fields[0], X)
    X = _as_array(chart, points)
    N = X.shape[1]
    out = np.zeros((N, len(chart), len(fields)))
    for j, fld in enumerate(fields):
        for i, c in enumerate(fld.components):
            if c == ZERO:
                continue
            if isinstance(c, Const):
                out[:, i, j] = float(c.value)
            else:
                out[:, i, j] = compile_numeric(c, chart)(X, params)
    return out


def eval_field(X: VectorField, p, params: Mapping | None = None) -> np.ndarray:
    """Numeric value of X at one point (mapping or sequence in chart order)."""
    return eval_fields([X], p, params)[0, :, 0]


def linear_system(A, B, name="linear") -> ControlSystem:
    """q' = A q + B w with K = R^m, encoded with exact rational coefficients."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    f = []
    for i in range(n):
        terms = []
        for j in range(n):
            if A[i, j] != 0:
                terms.append(Mul(Const(Fraction(A[i, j])), Var(f"q{j + 1}")))
        for a in range(m):
            if B[i, a] != 0:
                terms.append(Mul(Const(Fraction(B[i, a])), Var(f"w{a + 1}")))
        f.append(ZERO if not terms else _sum(terms))
    inf = float("inf")
    return ControlSystem(n, m, tuple(f), tuple((-inf, inf) for _ in range(m)), (), name)
