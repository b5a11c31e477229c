"""Secondary distribution, per-control sub-distributions and adapted generator tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .exprcore import Domain
from .fields import ControlSystem, VectorField, canonical_fields, lie_bracket
from .funlinalg import DEFAULT_TOL, generic_rank, in_module_span

__all__ = ["Generator", "GeneratorSet", "AdaptedTable", "CertificationError",
           "bracket_of_depth", "iterated_brackets", "secondary_distribution",
           "sub_distribution", "adapted_generators", "default_max_depth", "label"]


def label(beta: int, k: int) -> str:
    return f"W{beta}^({k})"


def default_max_depth(sys: ControlSystem) -> int:
    return 2 * (sys.n + sys.m) + 2


@lru_cache(maxsize=None)
def bracket_of_depth(sys: ControlSystem, beta: int, k: int) -> VectorField:
    """k-fold bracket [T, [T, ..., W_beta]] (unreduced, simplified)."""
    if not 1 <= beta <= sys.m:
        raise ValueError(f"control index {beta} outside 1..{sys.m}")
    drift, controls = canonical_fields(sys)
    if k == 0:
        return controls[beta - 1]
    return lie_bracket(drift, bracket_of_depth(sys, beta, k - 1), label(beta, k))


@dataclass(frozen=True)
class Generator:
    field: VectorField
    beta: int
    depth: int

    @property
    def label(self) -> str:
        return label(self.beta, self.depth)


@dataclass
class GeneratorSet:
    """Labelled generators of a (sub-)distribution together with their bookkeeping."""

    items: list
    system: ControlSystem
    domain: Domain
    dropped: list = field(default_factory=list)  # (label, reason)
    capped: list = field(default_factory=list)  # control indices that hit max_depth
    seed: int = 0
    tol: float = DEFAULT_TOL
    samples: int = 24

    @property
    def fields(self) -> list:
        return [g.field for g in self.items]

    @property
    def labels(self) -> list:
        return [g.label for g in self.items]

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def rank_profile(self, d: Domain | None = None, trials: int | None = None):
        d = self.domain if d is None else d
        return generic_rank(self.fields, d, trials or self.samples, self.seed, self.tol,
                            self.system.param_values)

    def restrict(self, d: Domain) -> "GeneratorSet":
        return GeneratorSet(self.items, self.system, d, self.dropped, self.capped, self.seed,
                            self.tol, self.samples)


def _domain(sys, d):
    return sys.domain() if d is None else d


def _chain(sys, beta, d, max_depth, samples, seed, tol):
    kept = []
    stop = None
    for k in range(max_depth + 1):
        X = bracket_of_depth(sys, beta, k)
        if k and in_module_span(X, [Y for _, Y in kept], d, samples, seed, tol, sys.param_values):
            stop = k
            break
        kept.append((k, X))
    return kept, stop


def iterated_brackets(sys: ControlSystem, beta: int, max_depth: int | None = None,
                      d: Domain | None = None, samples: int = 24, seed: int = 0,
                      tol: float = DEFAULT_TOL) -> list:
    """W_beta^(0), W_beta^(1), ... until a bracket falls in the span of the earlier ones.

    The bracket that falls in the span is not included.
    """
    max_depth = default_max_depth(sys) if max_depth is None else max_depth
    return _chain(sys, beta, _domain(sys, d), max_depth, samples, seed, tol)[0]


def _reduce(sys, chains, d, samples, seed, tol):
    """Merge chains in (depth, beta) order, dropping fields already in the span."""
    ordered = sorted((k, beta, X) for beta, kept in chains.items() for k, X in kept)
    items, dropped = [], []
    for k, beta, X in ordered:
        if items and in_module_span(X, [g.field for g in items], d, samples, seed, tol,
                                    sys.param_values):
            dropped.append((label(beta, k), "in span of earlier generators"))
            continue
        items.append(Generator(X, beta, k))
    return items, dropped


def _generator_set(sys, betas, d, max_depth, samples, seed, tol):
    d = _domain(sys, d)
    max_depth = default_max_depth(sys) if max_depth is None else max_depth
    chains, capped = {}, []
    for beta in betas:
        kept, stop = _chain(sys, beta, d, max_depth, samples, seed, tol)
        chains[beta] = kept
        if stop is None:
            capped.append(beta)
    items, dropped = _reduce(sys, chains, d, samples, seed, tol)
    for beta in betas:
        if beta not in capped:
            k = len(chains[beta])
            dropped.append((label(beta, k), f"in span of {label(beta, 0)}..{label(beta, k - 1)}"))
    return GeneratorSet(items, sys, d, dropped, capped, seed, tol, samples)


def secondary_distribution(sys: ControlSystem, d: Domain | None = None,
                           max_depth: int | None = None, samples: int = 24, seed: int = 0,
                           tol: float = DEFAULT_TOL) -> GeneratorSet:
    return _generator_set(sys, range(1, sys.m + 1), d, max_depth, samples, seed, tol)


def sub_distribution(sys: ControlSystem, beta: int, d: Domain | None = None,
                     max_depth: int | None = None, samples: int = 24, seed: int = 0,
                     tol: float = DEFAULT_TOL) -> GeneratorSet:
    if not 1 <= beta <= sys.m:
        raise ValueError(f"control index {beta} outside 1..{sys.m}")
    return _generator_set(sys, [beta], d, max_depth, samples, seed, tol)


class CertificationError(RuntimeError):
    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


@dataclass
class AdaptedTable:
    """Triangular table W_{l(a)j}; ``columns[(a, j)]`` is the control index of column (a, j)."""

    nu: int
    R: list
    entries: dict  # (l, a, j) -> VectorField
    columns: dict  # (a, j) -> beta
    domain: Domain
    terminal: dict  # beta -> a_beta
    checks: dict = field(default_factory=dict)

    @property
    def fields(self) -> list:
        return [self.entries[key] for key in sorted(self.entries, key=lambda t: (t[1], t[2], t[0]))]

    def row0(self) -> list:
        return [self.entries[(0, a, j)] for (a, j) in sorted(self.columns)]

    def column(self, a: int, j: int) -> list:
        return [self.entries[(l, a, j)] for l in range(a + 1)]

    def certified(self) -> bool:
        return all(self.checks.get(k, False) for k in ("row0_independent", "closure_condition",
                                                        "generates"))

    def as_dict(self) -> dict:
        return {"nu": self.nu, "R": list(self.R),
                "columns": {f"{a},{j}": f"W{b}" for (a, j), b in sorted(self.columns.items())},
                "terminal_depth": {f"W{b}": a for b, a in sorted(self.terminal.items())},
                "checks": dict(self.checks)}


def adapted_generators(sys: ControlSystem, d: Domain | None = None,
                       max_depth: int | None = None, samples: int = 24, seed: int = 0,
                       tol: float = DEFAULT_TOL, betas=None) -> AdaptedTable:
    """Greedy table: extend every control's bracket chain depth by depth while it adds rank.

    A control's chain ends at the last depth whose bracket is not in the span
    of everything accepted so far (all controls, lower depths first).  The
    resulting table is then checked: row 0 pointwise independent, the next
    bracket of each column in the span of the table, and the table spanning
    the whole secondary distribution on ``d``.  ``betas`` restricts the
    construction to a sub-distribution.
    """
    d = _domain(sys, d)
    max_depth = default_max_depth(sys) if max_depth is None else max_depth
    prm = sys.param_values
    betas = list(range(1, sys.m + 1)) if betas is None else sorted(betas)
    accepted = [bracket_of_depth(sys, b, 0) for b in betas]
    terminal = {}
    active = list(betas)
    k = 0
    while active:
        k += 1
        if k > max_depth:
            raise CertificationError(f"bracket chains of {active} still growing at depth {max_depth}")
        still = []
        for beta in active:
            X = bracket_of_depth(sys, beta, k)
            if in_module_span(X, accepted, d, samples, seed, tol, prm):
                terminal[beta] = k - 1
            else:
                accepted.append(X)
                still.append(beta)
        active = still

    nu = max(terminal.values())
    R = [sum(1 for a in terminal.values() if a == lev) for lev in range(nu + 1)]
    columns, entries = {}, {}
    for lev in range(nu + 1):
        for j, beta in enumerate(sorted(b for b, a in terminal.items() if a == lev), 1):
            columns[(lev, j)] = beta
            for l in range(lev + 1):
                entries[(l, lev, j)] = bracket_of_depth(sys, beta, l).relabel(
                    f"W_{l}({lev}){j}={label(beta, l)}")
    table = AdaptedTable(nu, R, entries, columns, d, terminal)
    table.checks = _check_table(sys, table, d, samples, seed, tol, betas)
    if not table.certified():
        failed = [k for k, v in table.checks.items() if v is False]
        raise CertificationError(f"adapted table failed checks {failed}", table)
    return table


def _check_table(sys, table, d, samples, seed, tol, betas):
    prm = sys.param_values
    all_fields = table.fields
    prof = generic_rank(table.row0(), d, samples, seed, tol, prm)
    checks = {"row0_independent": prof.minimum == len(betas)}
    closure, lower, upper = True, True, True
    for (a, j), beta in table.columns.items():
        nxt = bracket_of_depth(sys, beta, a + 1)
        closure &= bool(in_module_span(nxt, all_fields, d, samples, seed, tol, prm))
        below = [table.entries[(l, b, i)] for (b, i) in table.columns if b <= a for l in range(b + 1)]
        above = [table.entries[(l, b, i)] for (b, i) in table.columns if b >= a for l in range(b + 1)]
        lower &= bool(in_module_span(nxt, below, d, samples, seed, tol, prm))
        upper &= bool(in_module_span(nxt, above, d, samples, seed, tol, prm))
    checks["closure_condition"] = closure
    checks["closure_within_columns_b_le_a"] = lower
    checks["closure_within_columns_b_ge_a"] = upper
    full = _generator_set(sys, betas, d, None, samples, seed, tol)
    checks["generates"] = all(bool(in_module_span(X, all_fields, d, samples, seed, tol, prm))
                              for X in full.fields)
    return checks
