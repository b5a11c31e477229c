"""Lie closure of a generator family and its decomposition into strata of constant closure rank."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exprcore import Domain
from .fields import VectorField, eval_fields, lie_bracket
from .funlinalg import (DEFAULT_TOL, generic_rank, in_module_span, locus_points, rank_drop_loci,
                        ranks_of)
from .secondary import GeneratorSet, secondary_distribution

__all__ = ["ClosureMember", "LieClosure", "StratumReport", "lie_closure", "drop_locus",
           "stratify", "stratum_depth", "stratum_points", "find_stratum"]


@dataclass(frozen=True)
class ClosureMember:
    field: VectorField
    depth: int
    label: str
    parents: tuple = ()


@dataclass
class LieClosure:
    members: list
    domain: Domain
    params: dict
    rank: int
    min_rank: int
    closed: bool
    seed: int = 0
    tol: float = DEFAULT_TOL
    samples: int = 24
    base: GeneratorSet | None = None
    unclosed_pair: tuple | None = None

    @property
    def fields(self) -> list:
        return [c.field for c in self.members]

    def upto(self, depth: int) -> list:
        return [c.field for c in self.members if c.depth <= depth]

    def added(self) -> list:
        return [c for c in self.members if c.depth > 1]

    @property
    def max_depth(self) -> int:
        return max(c.depth for c in self.members)


def _unpack(gens, params):
    if isinstance(gens, GeneratorSet):
        return gens.fields, gens.labels, gens.system.param_values, gens
    fields = list(gens)
    return fields, [X.label or f"X{i + 1}" for i, X in enumerate(fields)], dict(params or {}), None


def lie_closure(gens, d: Domain | None = None, max_bracket_depth: int = 4, samples: int = 24,
                seed: int = 0, tol: float = DEFAULT_TOL, params: Mapping | None = None) -> LieClosure:
    """Append brackets of members that are not already in the span, until a fixpoint.

    A bracket of members of depths r and s has depth r + s.  Brackets are
    formed in increasing depth; within a depth, a pair is visited as soon as
    its later member exists (outer loop over the later member).  Pairs whose
    depth exceeds ``max_bracket_depth`` are only tested, never appended;
    ``closed`` reports whether any of them escapes the span.
    """
    fields, labels, prm, base = _unpack(gens, params)
    if d is None:
        if base is None:
            raise ValueError("a domain is required for a plain list of fields")
        d = base.domain
    members = [ClosureMember(X, 1, lab) for X, lab in zip(fields, labels)]
    done = set()

    def visit(i, j):
        done.add((i, j))
        a, b = members[i], members[j]
        Y = lie_bracket(a.field, b.field)
        if Y.is_structurally_zero():
            return None
        res = in_module_span(Y, [c.field for c in members], d, samples, seed, tol, prm)
        return None if res else Y

    for depth in range(2, max_bracket_depth + 1):
        for j in range(len(members)):
            for i in range(j):
                if (i, j) in done or members[i].depth + members[j].depth != depth:
                    continue
                Y = visit(i, j)
                if Y is not None:
                    lab = f"[{members[i].label},{members[j].label}]"
                    members.append(ClosureMember(Y.relabel(lab), depth, lab, (i, j)))
    closed, escaped = True, None
    for j in range(len(members)):
        for i in range(j):
            if (i, j) not in done and visit(i, j) is not None:
                closed, escaped = False, (members[i].label, members[j].label)
                break
        if not closed:
            break
    prof = generic_rank([c.field for c in members], d, samples, seed, tol, prm)
    return LieClosure(members, d, prm, prof.generic, prof.minimum, closed, seed, tol, samples,
                      base, escaped)


def _pred(pins) -> str:
    return " and ".join(f"{p} = 0" for p in pins)


def drop_locus(gens, d: Domain | None = None, seed: int = 0, tol: float = DEFAULT_TOL,
               params: Mapping | None = None) -> list:
    """Maximal coordinate subspaces of ``d`` where the family's pointwise rank drops."""
    fields, _, prm, base = _unpack(gens, params)
    d = base.domain if d is None else d
    _, loci = rank_drop_loci(fields, d, seed, tol, prm, minimal=True)
    return [_pred(L.pins) for L in loci]


@dataclass
class StratumReport:
    """A stratum {pins = 0} minus the deeper strata listed in ``excluded``.

    The top stratum has no pins.  Ranks are maxima/minima over the stratum's
    sample points, which include points on rank-drop loci of the base
    family that lie in the stratum.
    """

    index: int
    pins: tuple
    excluded: list
    domain: Domain
    base_rank: int
    base_min_rank: int
    closure_rank: int
    closure_min_rank: int
    depth: int
    leaf_invariant: bool
    witnesses: list = field(default_factory=list)

    @property
    def predicate(self) -> str:
        parts = [_pred(self.pins)] if self.pins else []
        parts += [f"not ({_pred(e)})" for e in self.excluded]
        return " and ".join(parts) if parts else "everywhere"

    def contains(self, point: Mapping, atol: float = 1e-12) -> bool:
        if not all(abs(point[p]) <= atol for p in self.pins):
            return False
        return not any(all(abs(point[p]) <= atol for p in e) for e in self.excluded)

    def as_dict(self) -> dict:
        return {"index": self.index, "predicate": self.predicate,
                "base_rank": self.base_rank, "base_min_rank": self.base_min_rank,
                "closure_rank": self.closure_rank, "closure_min_rank": self.closure_min_rank,
                "depth": self.depth, "leaf_invariant": self.leaf_invariant,
                "witnesses": self.witnesses}


def stratum_points(base_fields: Sequence[VectorField], d: Domain, excluded: list, n: int,
                   seed: int, tol: float, params) -> np.ndarray:
    """Uniform samples of the (already pinned) stratum domain ``d`` plus samples on the
    base family's rank-drop loci inside it, skipping the ``excluded`` deeper strata."""
    chart = base_fields[0].chart
    pins = set(dict(d.pins))
    blocks = [d.sample(np.random.default_rng(seed), n, chart)]
    _, loci = rank_drop_loci(base_fields, d, seed, tol, params)
    for i, L in enumerate(loci):
        if any(set(e) <= pins | set(L.pins) for e in excluded):
            continue
        blocks.append(locus_points(d, L.pins, chart, 3, seed + 31 * (i + 1)))
    X = np.concatenate(blocks, axis=1)
    keep = [j for j in range(X.shape[1])
            if not any(all(abs(X[chart.index(p), j]) <= 1e-12 for p in e) for e in excluded)]
    return X[:, keep]


def _ranks(fields, X, tol, params):
    return ranks_of(eval_fields(fields, X, params), tol)


def _depth_on(closure: LieClosure, X: np.ndarray, target: int) -> int:
    for r in range(1, closure.max_depth + 1):
        if _ranks(closure.upto(r), X, closure.tol, closure.params).min() >= target:
            return r
    return closure.max_depth


def stratum_depth(closure: LieClosure, stratum: StratumReport, n: int | None = None) -> int:
    """Smallest r such that members of depth <= r reach the stratum's closure rank at its samples."""
    base = [c.field for c in closure.members if c.depth == 1]
    X = stratum_points(base, stratum.domain, stratum.excluded, n or closure.samples,
                       closure.seed, closure.tol, closure.params)
    return _depth_on(closure, X, stratum.closure_rank)


def _leaf_invariant(closure: LieClosure, pins, X: np.ndarray) -> bool:
    if not pins:
        return True
    chart = closure.fields[0].chart
    idx = [chart.index(p) for p in pins]
    M = eval_fields(closure.fields, X, closure.params)
    return bool(np.all(np.abs(M[:, idx, :]) <= closure.tol * max(1.0, np.abs(M).max())))


def stratify(target, d: Domain | None = None, max_bracket_depth: int = 4, samples: int = 24,
             seed: int = 0, tol: float = DEFAULT_TOL) -> tuple:
    """Strata of constant Lie-closure rank.

    ``target`` is a ControlSystem (its secondary distribution is used) or a
    GeneratorSet.  Returns ``(closure, strata)`` with strata ordered by
    decreasing closure rank.
    """
    gens = target if isinstance(target, GeneratorSet) else secondary_distribution(
        target, d, samples=samples, seed=seed, tol=tol)
    d = gens.domain if d is None else d
    prm = gens.system.param_values
    closure = lie_closure(gens, d, max_bracket_depth, samples, seed, tol)
    _, loci = rank_drop_loci(closure.fields, d, seed, tol, prm)
    # a locus is its own stratum unless a larger locus has the same rank
    heads = [L for L in loci
             if not any(set(M.pins) < set(L.pins) and M.rank == L.rank for M in loci)]
    heads.sort(key=lambda L: (-L.rank, len(L.pins), L.pins))
    specs = [((), [L.pins for L in heads if not any(set(M.pins) < set(L.pins) for M in heads)])]
    for L in heads:
        inner = [M.pins for M in heads if set(L.pins) < set(M.pins)
                 and not any(set(L.pins) < set(K.pins) < set(M.pins) for K in heads)]
        specs.append((L.pins, inner))
    strata = []
    for idx, (pins, excluded) in enumerate(specs):
        sd = d.pinned(**{p: 0.0 for p in pins})
        X = stratum_points(gens.fields, sd, excluded, samples, seed + idx, tol, prm)
        rb = _ranks(gens.fields, X, tol, prm)
        rc = _ranks(closure.fields, X, tol, prm)
        chart = gens.fields[0].chart
        wit = [{name: float(X[k, j]) for k, name in enumerate(chart)}
               for j in (0, int(np.argmin(rb)))]
        rep = StratumReport(idx, tuple(pins), list(excluded), sd,
                            int(rb.max()), int(rb.min()), int(rc.max()), int(rc.min()),
                            _depth_on(closure, X, int(rc.max())),
                            _leaf_invariant(closure, pins, X), wit)
        strata.append(rep)
    return closure, strata


def find_stratum(strata: Sequence[StratumReport], point: Mapping) -> StratumReport:
    hits = [s for s in strata if s.contains(point)]
    if len(hits) != 1:
        raise ValueError(f"point lies in {len(hits)} strata")
    return hits[0]
