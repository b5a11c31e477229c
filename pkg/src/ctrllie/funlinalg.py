"""Pointwise and generic ranks of finite families of vector fields.

Everything here is numeric: ranks come from singular values of evaluation
matrices at sample points.  Besides uniform samples, every test also visits
the coordinate subspaces ``{x_i = 0, ...}`` on which the family loses rank,
because that is where pointwise membership and involutivity can fail while
looking fine at generic points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .exprcore import Domain, free_symbols
from .fields import VectorField, eval_fields, lie_bracket

__all__ = ["RankProfile", "Locus", "SpanTest", "InvolutivityTest", "DEFAULT_TOL",
           "ranks_of", "pointwise_rank", "generic_rank", "rank_drop_loci",
           "in_module_span", "is_involutive", "locus_points"]

DEFAULT_TOL = 1e-8
MAX_PINS = 4
LOCUS_SAMPLES = 3


def ranks_of(M: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Numeric ranks of a stack of matrices (N, rows, cols)."""
    if M.shape[-1] == 0:
        return np.zeros(M.shape[0], dtype=int)
    s = np.linalg.svd(M, compute_uv=False)
    cutoff = tol * np.maximum(1.0, s[:, :1])
    return np.sum(s > cutoff, axis=1)


def _params(params):
    return dict(params) if params else {}


def pointwise_rank(fields: Sequence[VectorField], p, tol: float = DEFAULT_TOL, params=None) -> int:
    if not fields:
        return 0
    return int(ranks_of(eval_fields(fields, p, _params(params)), tol)[0])


@dataclass
class RankProfile:
    generic: int
    minimum: int
    ranks: list
    points: np.ndarray = field(repr=False)
    witness: dict | None
    drops: list
    trials: int
    seed: int

    def as_dict(self):
        return {"generic": self.generic, "minimum": self.minimum, "trials": self.trials,
                "seed": self.seed, "witness": self.witness, "drops": self.drops}


def _chart(fields):
    return fields[0].chart


def _point(chart, X, j):
    return {name: float(X[k, j]) for k, name in enumerate(chart)}


def _uniform(fields, d, trials, seed, tol, params):
    X = d.sample(np.random.default_rng(seed), trials, _chart(fields))
    return X, ranks_of(eval_fields(list(fields), X, _params(params)), tol)


def generic_rank(fields: Sequence[VectorField], d: Domain, trials: int = 24, seed: int = 0,
                 tol: float = DEFAULT_TOL, params=None, loci: bool = True) -> RankProfile:
    """Ranks at ``trials`` uniform points of ``d``.

    With ``loci`` the coordinate subspaces where the rank drops are probed
    too, so ``minimum`` and ``drops`` see the non-generic points that
    uniform sampling misses almost surely.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not fields:
        return RankProfile(0, 0, [0] * trials, np.zeros((0, trials)), None, [], trials, seed)
    chart = _chart(fields)
    X, r = _uniform(fields, d, trials, seed, tol, params)
    g = int(r.max())
    witness = _point(chart, X, int(np.argmax(r)))
    drops = [{"point": _point(chart, X, j), "rank": int(r[j])} for j in np.flatnonzero(r < g)]
    low = int(r.min())
    if loci:
        for L in rank_drop_loci(fields, d, seed, tol, params)[1]:
            P = locus_points(d, L.pins, chart, 1, seed)
            drops.append({"point": _point(chart, P, 0), "rank": L.rank, "locus": L.predicate()})
            low = min(low, L.rank)
    return RankProfile(g, low, [int(v) for v in r], X, witness, drops, trials, seed)


@dataclass(frozen=True)
class Locus:
    """Coordinate subspace ``{x = 0 for x in pins}`` and the family's rank on it."""

    pins: tuple
    rank: int

    def predicate(self) -> str:
        return " & ".join(f"{p} = 0" for p in self.pins)

    def contains(self, point: Mapping, atol: float = 1e-12) -> bool:
        return all(abs(point[p]) <= atol for p in self.pins)


def _pinnable(fields, d: Domain):
    used = set()
    for X in fields:
        for c in X.components:
            used |= free_symbols(c)
    pinned = dict(d.pins)
    out = []
    for name in _chart(fields):
        if name not in used or name in pinned or name in d.nonzero:
            continue
        lo, hi = d.bounds(name)
        if lo <= 0.0 <= hi:
            out.append(name)
    return out


def locus_points(d: Domain, pins: Sequence[str], chart, n: int, seed: int) -> np.ndarray:
    sub = d.pinned(**{p: 0.0 for p in pins})
    return sub.sample(np.random.default_rng(seed), n, chart)


@lru_cache(maxsize=4096)
def _loci(fields: tuple, d: Domain, params: tuple, tol: float, seed: int, max_pins: int):
    chart = _chart(fields)
    cand = _pinnable(fields, d)
    prm = dict(params)
    gen = int(_uniform(fields, d, 24, seed, tol, prm)[1].max())
    subsets = [s for k in range(1, min(max_pins, len(cand)) + 1)
               for s in itertools.combinations(cand, k)]
    if not subsets:
        return gen, ()
    blocks = [locus_points(d, s, chart, LOCUS_SAMPLES, seed + 7919 * (i + 1))
              for i, s in enumerate(subsets)]
    X = np.concatenate(blocks, axis=1)
    r = ranks_of(eval_fields(list(fields), X, prm), tol).reshape(len(subsets), LOCUS_SAMPLES)
    loci = [Locus(s, int(rr.max())) for s, rr in zip(subsets, r) if rr.max() < gen]
    return gen, tuple(loci)


def rank_drop_loci(fields: Sequence[VectorField], d: Domain, seed: int = 0,
                   tol: float = DEFAULT_TOL, params=None, max_pins: int = MAX_PINS,
                   minimal: bool = False):
    """Coordinate subspaces of ``d`` on which the family's rank is below its generic rank.

    Returns ``(generic_rank, loci)``.  With ``minimal=True`` only loci not
    contained in a larger dropping locus are returned.
    """
    if not fields:
        return 0, []
    gen, loci = _loci(tuple(fields), d, tuple(sorted(_params(params).items())), tol, seed, max_pins)
    loci = list(loci)
    if minimal:
        loci = [L for L in loci if not any(set(M.pins) < set(L.pins) for M in loci)]
    return gen, loci


@dataclass
class SpanTest:
    """Result of a pointwise membership test; truthy when ``X`` is in the span."""

    inside: bool
    samples: int
    seed: int
    witness: dict | None = None
    loci_checked: list = field(default_factory=list)

    def __bool__(self):
        return self.inside


def _sample_set(gens, d, samples, seed, tol, params, max_pins):
    chart = _chart(gens)
    pts = [d.sample(np.random.default_rng(seed), samples, chart)]
    _, loci = rank_drop_loci(gens, d, seed, tol, params, max_pins)
    for i, L in enumerate(loci):
        pts.append(locus_points(d, L.pins, chart, LOCUS_SAMPLES, seed + 104729 * (i + 1)))
    return np.concatenate(pts, axis=1), [L.predicate() for L in loci]


def in_module_span(X: VectorField, gens: Sequence[VectorField], d: Domain, samples: int = 24,
                   seed: int = 0, tol: float = DEFAULT_TOL, params=None,
                   max_pins: int = MAX_PINS) -> SpanTest:
    """True iff appending ``X`` to ``gens`` never raises the pointwise rank on the samples.

    Samples are ``samples`` uniform points of ``d`` plus points on every
    rank-drop locus of ``gens``.
    """
    prm = _params(params)
    if not gens:
        pts = d.sample(np.random.default_rng(seed), samples, X.chart)
        vals = eval_fields([X], pts, prm)[:, :, 0]
        bad = np.flatnonzero(np.abs(vals).max(axis=1) > tol)
        wit = None if not bad.size else {n: float(pts[k, bad[0]]) for k, n in enumerate(X.chart)}
        return SpanTest(not bad.size, samples, seed, wit)
    pts, loci = _sample_set(list(gens), d, samples, seed, tol, prm, max_pins)
    M = eval_fields(list(gens) + [X], pts, prm)
    r0 = ranks_of(M[:, :, :-1], tol)
    r1 = ranks_of(M, tol)
    bad = np.flatnonzero(r1 > r0)
    if bad.size:
        j = bad[0]
        return SpanTest(False, pts.shape[1], seed,
                        {n: float(pts[k, j]) for k, n in enumerate(X.chart)}, loci)
    return SpanTest(True, pts.shape[1], seed, None, loci)


@dataclass
class InvolutivityTest:
    involutive: bool
    pair: tuple | None = None
    witness: dict | None = None
    checked: int = 0

    def __bool__(self):
        return self.involutive


def is_involutive(gens: Sequence[VectorField], d: Domain, samples: int = 24, seed: int = 0,
                  tol: float = DEFAULT_TOL, params=None) -> InvolutivityTest:
    """Check that every pairwise bracket lies pointwise in the span of ``gens``."""
    gens = list(gens)
    checked = 0
    for i, j in itertools.combinations(range(len(gens)), 2):
        Y = lie_bracket(gens[i], gens[j])
        checked += 1
        if Y.is_structurally_zero():
            continue
        res = in_module_span(Y, gens, d, samples, seed, tol, params)
        if not res:
            return InvolutivityTest(False, (gens[i].label, gens[j].label), res.witness, checked)
    return InvolutivityTest(True, None, None, checked)
