"""Goodness criteria, the Kalman test, equilibria, hyper-accessibility and STLC verdicts.

The criteria are sufficient conditions, so a failed check yields "not
established", never a refutation.  All region-wide claims are sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .exprcore import Domain, Var, compile_numeric, diff, zero_test
from .fields import ControlSystem, eval_fields, lie_bracket, linear_system, point_dict
from .funlinalg import (DEFAULT_TOL, generic_rank, is_involutive, pointwise_rank, rank_drop_loci,
                        ranks_of)
from .secondary import CertificationError, adapted_generators, secondary_distribution, sub_distribution
from .strata import StratumReport, find_stratum, stratify, stratum_points

__all__ = ["GoodnessVerdict", "SystemVerdict", "Kalman", "Equilibrium", "StlcVerdict",
           "good_first_kind", "good_second_kind", "goodness", "kalman", "kalman_ranks",
           "equilibria", "hyper_accessibility", "stlc_at", "projection_rank"]

ESTABLISHED = "established"
NOT_ESTABLISHED = "not established"


@dataclass
class GoodnessVerdict:
    kind: str  # "first", "second" or "inconclusive"
    point: dict
    evidence: dict = field(default_factory=dict)

    def __bool__(self):
        return self.kind != "inconclusive"

    def as_dict(self) -> dict:
        return {"kind": self.kind, "point": self.point, "evidence": self.evidence}


def _radius_away_from_loci(p: Mapping, loci, radius: float) -> float:
    for L in loci:
        dist = math.sqrt(sum(p[x] ** 2 for x in L.pins))
        if dist > 0:
            radius = min(radius, 0.5 * dist)
    return radius


def _first_kind(fields, prm, d: Domain, p: Mapping, radius, samples, seed, tol) -> tuple:
    """Regularity and involutivity of ``fields`` on a box of ``d`` around ``p``."""
    _, loci = rank_drop_loci(fields, d, seed, tol, prm)
    r = _radius_away_from_loci(p, loci, radius)
    nd = d.around(p, r)
    prof = generic_rank(fields, nd, samples, seed, tol, prm)
    rank_p = pointwise_rank(fields, p, tol, prm)
    regular = prof.minimum == prof.generic == rank_p
    inv = is_involutive(fields, nd, samples, seed, tol, prm) if regular else None
    ok = regular and bool(inv)
    ev = {"radius": r, "rank_at_point": rank_p, "generic_rank": prof.generic,
          "min_rank": prof.minimum, "regular": regular,
          "involutive": None if inv is None else bool(inv), "samples": samples, "seed": seed}
    if inv is not None and not inv:
        ev["non_involutive_pair"] = list(inv.pair)
    return ok, ev


def _context(sys, d, gens, strata, samples, seed, tol):
    d = sys.domain() if d is None else d
    if gens is None:
        gens = secondary_distribution(sys, d, samples=24, seed=seed, tol=tol)
    if strata is None:
        strata = stratify(gens, d, samples=24, seed=seed, tol=tol)[1]
    return d, gens, strata


def good_first_kind(sys: ControlSystem, p: Mapping, stratum: StratumReport | None = None,
                    d: Domain | None = None, radius: float = 0.2, samples: int = 16,
                    seed: int = 0, tol: float = DEFAULT_TOL, gens=None, strata=None) -> GoodnessVerdict:
    """``first`` iff the secondary distribution restricted to the stratum is regular and
    involutive on a box around ``p``."""
    p = point_dict(sys.chart, p)
    d, gens, strata = _context(sys, d, gens, strata, samples, seed, tol)
    stratum = find_stratum(strata, p) if stratum is None else stratum
    ok, ev = _first_kind(gens.fields, sys.param_values, stratum.domain, p, radius, samples,
                         seed, tol)
    ev["stratum"] = stratum.predicate
    return GoodnessVerdict("first" if ok else "inconclusive", p, ev)


def _rank_at(fields, p, prm, tol):
    return pointwise_rank(fields, p, tol, prm) if fields else 0


def good_second_kind(sys: ControlSystem, p: Mapping, stratum: StratumReport | None = None,
                     d: Domain | None = None, radius: float = 0.2, samples: int = 16,
                     seed: int = 0, tol: float = DEFAULT_TOL, gens=None, strata=None) -> GoodnessVerdict:
    """Search for a spanning set of adapted generators and sub-distribution brackets at ``p``.

    Type (b) candidates are brackets [B, B'] with B an adapted generator of a
    sub-distribution for which ``p`` is a good point of the first kind (on
    its own stratum) and B' an adapted generator of the full secondary
    distribution.  Candidates are tried by increasing total bracket depth,
    then deeper B first.
    """
    p = point_dict(sys.chart, p)
    prm = sys.param_values
    d, gens, strata = _context(sys, d, gens, strata, samples, seed, tol)
    stratum = find_stratum(strata, p) if stratum is None else stratum
    ev = {"stratum": stratum.predicate, "stratum_depth": stratum.depth,
          "closure_rank": stratum.closure_rank}
    if stratum.depth != 2:
        ev["failed"] = f"stratum depth is {stratum.depth}, not 2"
        return GoodnessVerdict("inconclusive", p, ev)
    target = stratum.closure_rank
    nd = stratum.domain.around(p, radius)
    try:
        table = adapted_generators(sys, nd, samples=samples, seed=seed, tol=tol)
    except CertificationError as exc:
        ev["failed"] = f"no adapted generators near the point: {exc}"
        return GoodnessVerdict("inconclusive", p, ev)
    ev["adapted"] = table.as_dict()
    chosen, tags = [], []
    for (l, a, j), X in sorted(table.entries.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])):
        if _rank_at(chosen + [X], p, prm, tol) > _rank_at(chosen, p, prm, tol):
            chosen.append(X)
            tags.append(("a", X.label))
    witnesses, subs = [], {}
    if len(chosen) < target:
        candidates = []
        for beta in range(1, sys.m + 1):
            sub = sub_distribution(sys, beta, d, samples=24, seed=seed, tol=tol)
            _, sub_strata = stratify(sub, d, samples=24, seed=seed, tol=tol)
            try:
                sub_stratum = find_stratum(sub_strata, p)
            except ValueError:
                continue
            ok, sev = _first_kind(sub.fields, prm, sub_stratum.domain, p, radius, samples, seed, tol)
            sev["stratum"] = sub_stratum.predicate
            subs[f"W{beta}"] = sev
            if not ok:
                continue
            try:
                sub_table = adapted_generators(sys, sub_stratum.domain.around(p, sev["radius"]),
                                               samples=samples, seed=seed, tol=tol, betas=[beta])
            except CertificationError:
                sev["adapted"] = "not certified"
                continue
            sev["adapted"] = sub_table.as_dict()
            for (l, a, j), Bf in sub_table.entries.items():
                for (l2, a2, j2), Bp in table.entries.items():
                    candidates.append((l + l2, -l, l2, beta, Bf, Bp))
        candidates.sort(key=lambda c: c[:4])
        for _, _, _, beta, Bf, Bp in candidates:
            if len(chosen) >= target:
                break
            Y = lie_bracket(Bf, Bp)
            if Y.is_structurally_zero():
                continue
            if _rank_at(chosen + [Y], p, prm, tol) > _rank_at(chosen, p, prm, tol):
                name = f"[{_short(Bf.label)},{_short(Bp.label)}]"
                chosen.append(Y.relabel(name))
                tags.append(("b", name))
                witnesses.append({"bracket": name, "sub_distribution": f"W{beta}",
                                  "field": Y.text()})
    ev["sub_distributions"] = subs
    ev["spanning_set"] = [{"type": t, "field": lab} for t, lab in tags]
    ev["witnesses"] = witnesses
    if len(chosen) < target:
        ev["failed"] = f"spanning set reaches rank {len(chosen)} of {target}"
        return GoodnessVerdict("inconclusive", p, ev)
    if not witnesses:
        ev["failed"] = "adapted generators alone span; no bracket of the required form needed"
        return GoodnessVerdict("inconclusive", p, ev)
    near = generic_rank(chosen, nd.around(p, 0.5 * radius), samples, seed, tol, prm, loci=False)
    if near.minimum < target:
        ev["failed"] = "spanning set loses rank near the point"
        return GoodnessVerdict("inconclusive", p, ev)
    return GoodnessVerdict("second", p, ev)


def _short(label: str) -> str:
    return label.split("=")[-1]


def goodness(sys: ControlSystem, p: Mapping, **kw) -> GoodnessVerdict:
    """First criterion, then (only if it fails) the second."""
    v = good_first_kind(sys, p, **kw)
    if v.kind == "first":
        return v
    w = good_second_kind(sys, p, **kw)
    if w.kind == "inconclusive":
        w.evidence["first_kind"] = v.evidence
    return w


class Kalman(NamedTuple):
    n_max: int
    controllable: bool


def _new_directions(W, Q, cutoff):
    """Orthonormal basis of the part of span(W) not already in span(Q)."""
    for _ in range(2):  # re-orthogonalise once for stability
        W = W - Q @ (Q.T @ W)
    if W.size == 0:
        return W
    U, sv, _ = np.linalg.svd(W, full_matrices=False)
    return U[:, sv > cutoff]


def kalman_ranks(A, B, tol: float | None = None) -> list:
    """Ranks of [B], [B, AB], ..., [B, ..., A^(n-1) B].

    The nested spans are built by orthogonal staircase steps (only the
    directions added last are multiplied by A), so rounding in A or B does
    not inflate the ranks the way explicit matrix powers do.  A direction
    counts when its residual exceeds ``tol * max(1, |A|, |B|)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValueError(f"inconsistent shapes A{A.shape}, B{B.shape}")
    tol = 1e-9 if tol is None else tol
    cutoff = tol * max(1.0, np.linalg.norm(A, 2), np.linalg.norm(B, 2) if B.size else 0.0)
    Q = np.zeros((n, 0))
    V = _new_directions(B, Q, cutoff)
    Q = V
    ranks = [Q.shape[1]]
    for _ in range(n - 1):
        V = _new_directions(A @ V, Q, cutoff)
        Q = np.hstack([Q, V])
        ranks.append(Q.shape[1])
    return ranks


def kalman(A, B, tol: float | None = None) -> Kalman:
    ranks = kalman_ranks(A, B, tol)
    n = len(ranks)
    return Kalman(ranks[-1], ranks[-1] == n)


@dataclass
class Equilibrium:
    w: tuple
    residual: float
    start: tuple


def _t_independent(sys, q0, seed):
    d = sys.domain().pinned(**{f"q{i + 1}": v for i, v in enumerate(q0)})
    for i, e in enumerate(sys.f, 1):
        z = zero_test(diff(e, "t"), d, seed=seed, params=sys.param_values)
        if not z:
            return f"f{i} depends on t at q0 (witness {z.witness})"
    return None


def _starts(sys, count):
    box = sys.sample_box
    k = max(2, math.ceil(count ** (1.0 / sys.m)))
    axes = [np.linspace(lo, hi, k + 2)[1:-1] for lo, hi in box]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(sys.m, -1).T
    if len(grid) > count:
        grid = grid[np.round(np.linspace(0, len(grid) - 1, count)).astype(int)]
    zero = np.zeros(sys.m)
    if all(lo < 0 < hi for lo, hi in sys.K):
        grid = np.vstack([zero, grid])
    return grid


def equilibria(sys: ControlSystem, q0: Sequence[float], starts: int = 32, damping: float = 0.5,
               iters: int = 100, tol: float = 1e-10, seed: int = 0) -> list:
    """Control values w* in K with f(q0, w*) = 0, found by damped Gauss-Newton from a grid.

    The zero control (when inside K) is tried first.  Roots are sorted by
    norm and de-duplicated.
    """
    q0 = [float(v) for v in q0]
    if len(q0) != sys.n:
        raise ValueError(f"q0 needs {sys.n} entries")
    why = _t_independent(sys, q0, seed)
    if why:
        raise ValueError(f"refusing to look for equilibria: {why}")
    chart = sys.chart
    prm = sys.param_values
    fs = [compile_numeric(e, chart) for e in sys.f]
    jac = [[compile_numeric(diff(e, f"w{a + 1}"), chart) for a in range(sys.m)] for e in sys.f]

    def point(w):
        return np.concatenate([[0.0], q0, w])[:, None]

    def F(w):
        X = point(w)
        return np.array([float(f(X, prm)[0]) for f in fs])

    def J(w):
        X = point(w)
        return np.array([[float(g(X, prm)[0]) for g in row] for row in jac])

    found = []
    for w0 in _starts(sys, starts):
        w = np.array(w0, dtype=float)
        r = F(w)
        for _ in range(iters):
            nr = np.linalg.norm(r)
            if nr < tol:
                break
            step = np.linalg.lstsq(J(w), r, rcond=None)[0]
            lam = 1.0
            while lam > 1e-6:
                w_new = w - lam * step
                r_new = F(w_new)
                if np.linalg.norm(r_new) < nr:
                    break
                lam *= damping
            w, r = w_new, r_new
        res = float(np.linalg.norm(r))
        inside = all(lo < x < hi for x, (lo, hi) in zip(w, sys.K))
        if res < tol and inside and all(np.linalg.norm(w - np.array(e.w)) > 1e-6 for e in found):
            found.append(Equilibrium(tuple(float(x) for x in w), res, tuple(map(float, w0))))
    found.sort(key=lambda e: (float(np.linalg.norm(e.w)), e.w))
    return found


def projection_rank(closure_fields, X: np.ndarray, n: int, tol: float, prm) -> np.ndarray:
    """Rank of the state rows of the closure evaluation matrix at each point."""
    M = eval_fields(closure_fields, X, prm)[:, 1:1 + n, :]
    return ranks_of(M, tol)


@dataclass
class SystemVerdict:
    status: str
    hyper_accessible: bool
    strata: list
    samples: int
    seed: int
    tol: float

    def as_dict(self) -> dict:
        return {"status": self.status, "hyper_accessible": self.hyper_accessible,
                "strata": self.strata, "samples_per_stratum": self.samples,
                "seed": self.seed, "tol": self.tol}


def hyper_accessibility(sys: ControlSystem, d: Domain | None = None, samples: int = 16,
                        seed: int = 0, tol: float = DEFAULT_TOL, probes: Sequence = (),
                        radius: float = 0.2) -> SystemVerdict:
    """Goodness at sampled points of every stratum plus the state-projection rank of the closure."""
    d = sys.domain() if d is None else d
    prm = sys.param_values
    gens = secondary_distribution(sys, d, seed=seed, tol=tol)
    closure, strata = stratify(gens, d, seed=seed, tol=tol)
    probes = [point_dict(sys.chart, q) for q in probes]
    report, all_good, full_proj = [], True, True
    for st in strata:
        X = stratum_points(gens.fields, st.domain, st.excluded, samples, seed + 101 * st.index,
                           tol, prm)
        pts = [{n: float(X[k, j]) for k, n in enumerate(sys.chart)} for j in range(X.shape[1])]
        pts += [q for q in probes if st.contains(q) and d.contains(q)]
        verdicts = [goodness(sys, p, stratum=st, d=d, radius=radius, samples=samples, seed=seed,
                             tol=tol, gens=gens, strata=strata) for p in pts]
        P = np.array([[p[n] for p in pts] for n in sys.chart])
        proj = projection_rank(closure.fields, P, sys.n, tol, prm)
        good = all(v.kind != "inconclusive" for v in verdicts)
        all_good &= good
        full_proj &= bool(proj.min() == sys.n)
        counts = {k: sum(v.kind == k for v in verdicts) for k in ("first", "second", "inconclusive")}
        entry = {"stratum": st.as_dict(), "points": len(pts), "verdicts": counts,
                 "projection_rank": int(proj.min()), "all_good": good}
        second = [v for v in verdicts if v.kind == "second"]
        if second:
            entry["second_kind_example"] = second[0].as_dict()
        bad = [v for v in verdicts if v.kind == "inconclusive"]
        if bad:
            entry["inconclusive_example"] = bad[0].as_dict()
        report.append(entry)
    hyper = all_good and full_proj
    return SystemVerdict(ESTABLISHED if hyper else NOT_ESTABLISHED, hyper, report, samples, seed, tol)


@dataclass
class StlcVerdict:
    status: str
    q0: tuple
    equilibria: list
    hyper: SystemVerdict | None
    reason: str = ""

    def __bool__(self):
        return self.status == ESTABLISHED

    def as_dict(self) -> dict:
        return {"status": self.status, "q0": list(self.q0), "reason": self.reason,
                "equilibria": [list(e.w) for e in self.equilibria],
                "hyper_accessibility": None if self.hyper is None else self.hyper.as_dict()}


def stlc_at(sys: ControlSystem, q0: Sequence[float], radius: float = 0.5, samples: int = 16,
            seed: int = 0, tol: float = DEFAULT_TOL) -> StlcVerdict:
    """STLC at q0: an equilibrium control exists and hyper-accessibility holds on a box around q0."""
    q0 = tuple(float(v) for v in q0)
    eq = equilibria(sys, q0, seed=seed)
    if not eq:
        return StlcVerdict(NOT_ESTABLISHED, q0, [], None, "no equilibrium control at q0")
    d = sys.domain(q=[(v - radius, v + radius) for v in q0])
    hv = hyper_accessibility(sys, d, samples, seed, tol)
    if not hv.hyper_accessible:
        return StlcVerdict(NOT_ESTABLISHED, q0, eq, hv, "hyper-accessibility not established")
    return StlcVerdict(ESTABLISHED, q0, eq, hv, "equilibrium and hyper-accessibility")
