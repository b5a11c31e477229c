"""Command-line front end: ``ctrl-lie <command> <system file or fixture> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import goodness, hyper_accessibility, kalman, kalman_ranks, stlc_at
from .exprcore import Const, diff, to_text
from .fields import linear_system, point_dict
from .fixtures import SystemFile, SystemFileError, load_system_file, random_linear
from .funlinalg import DEFAULT_TOL
from .reach import covers_ball, reach_cloud, write_cloud
from .secondary import (CertificationError, adapted_generators, iterated_brackets,
                        secondary_distribution, sub_distribution)
from .strata import stratify

__all__ = ["main", "build_report", "cmd_analyze", "cmd_brackets", "cmd_strata", "cmd_goodness",
           "cmd_kalman", "cmd_simulate", "render"]

SECTIONS = ("system", "generators", "strata", "adapted", "verdicts", "simulation", "provenance")


def _clean(x):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


def render(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def _system(sf: SystemFile) -> dict:
    s = sf.system
    return {"name": s.name, "n": s.n, "m": s.m, "f": [to_text(e) for e in s.f],
            "K": [list(k) for k in s.K], "params": dict(s.params),
            "sampling_box": {n: [lo, hi] for n, lo, hi in sf.domain().box},
            "probes": [list(p) for p in sf.probes]}


def _gens(gs) -> dict:
    prof = gs.rank_profile()
    return {"labels": gs.labels,
            "fields": {g.label: g.field.text() for g in gs},
            "dropped": [list(d) for d in gs.dropped],
            "capped": gs.capped,
            "rank": prof.as_dict()}


def _closure(cl) -> dict:
    return {"rank": cl.rank, "min_rank": cl.min_rank, "closed": cl.closed,
            "added": [{"label": c.label, "depth": c.depth, "field": c.field.text()}
                      for c in cl.added()]}


def _prov(calls: list, name: str, **kw):
    calls.append({"call": name, **kw})


def _base(sf: SystemFile, command: str, seed: int, tol: float) -> dict:
    rep = {k: None for k in SECTIONS}
    rep["system"] = _system(sf)
    rep["provenance"] = {"command": command, "version": __version__, "seed": seed, "tol": tol,
                         "calls": [],
                         "notes": ["ranks, spans and goodness are evaluated at seeded sample "
                                   "points; 'true' answers are probabilistic",
                                   "strata predicates come from a search over coordinate "
                                   "subspaces {x = 0}"]}
    return rep


def cmd_brackets(sf: SystemFile, beta: int | None = None, seed: int = 0,
                 tol: float = DEFAULT_TOL) -> dict:
    rep = _base(sf, "brackets", seed, tol)
    s, d = sf.system, sf.domain()
    calls = rep["provenance"]["calls"]
    if beta is None:
        gs = secondary_distribution(s, d, seed=seed, tol=tol)
        _prov(calls, "secondary.secondary_distribution", seed=seed, tol=tol, samples=gs.samples)
        rep["generators"] = {"secondary": _gens(gs)}
    else:
        chain = iterated_brackets(s, beta, d=d, seed=seed, tol=tol)
        _prov(calls, "secondary.iterated_brackets", beta=beta, seed=seed, tol=tol)
        rep["generators"] = {f"W{beta}": {"labels": [f"W{beta}^({k})" for k, _ in chain],
                                          "fields": {f"W{beta}^({k})": X.text() for k, X in chain},
                                          "last_depth": chain[-1][0]}}
    return rep


def _strata_part(sf, seed, tol, calls):
    s, d = sf.system, sf.domain()
    gs = secondary_distribution(s, d, seed=seed, tol=tol)
    cl, st = stratify(gs, d, seed=seed, tol=tol)
    _prov(calls, "strata.stratify", target="secondary", seed=seed, tol=tol)
    out = {"secondary": {"closure": _closure(cl), "strata": [x.as_dict() for x in st]}}
    subs = {}
    for beta in range(1, s.m + 1):
        sub = sub_distribution(s, beta, d, seed=seed, tol=tol)
        scl, sst = stratify(sub, d, seed=seed, tol=tol)
        _prov(calls, "strata.stratify", target=f"sub-distribution W{beta}", seed=seed, tol=tol)
        subs[f"W{beta}"] = {"generators": _gens(sub), "closure": _closure(scl),
                            "strata": [x.as_dict() for x in sst]}
    out["sub_distributions"] = subs
    return gs, out


def cmd_strata(sf: SystemFile, seed: int = 0, tol: float = DEFAULT_TOL) -> dict:
    rep = _base(sf, "strata", seed, tol)
    gs, rep["strata"] = _strata_part(sf, seed, tol, rep["provenance"]["calls"])
    rep["generators"] = {"secondary": _gens(gs)}
    return rep


def _points(sf: SystemFile, points):
    pts = points if points else sf.probes
    return [point_dict(sf.system.chart, p) for p in pts]


def cmd_goodness(sf: SystemFile, points=None, seed: int = 0, tol: float = DEFAULT_TOL,
                 samples: int = 16) -> dict:
    rep = _base(sf, "goodness", seed, tol)
    s, d = sf.system, sf.domain()
    out = []
    for p in _points(sf, points):
        v = goodness(s, p, d=d, samples=samples, seed=seed, tol=tol)
        _prov(rep["provenance"]["calls"], "criteria.goodness", point=p, seed=seed, tol=tol,
              samples=samples)
        out.append(v.as_dict())
    rep["verdicts"] = {"goodness": out}
    return rep


def _adapted(sf, seed, tol, calls):
    try:
        t = adapted_generators(sf.system, sf.domain(), seed=seed, tol=tol)
        res = t.as_dict()
    except CertificationError as exc:
        res = {"error": str(exc)}
        if exc.table is not None:
            res["partial"] = exc.table.as_dict()
    _prov(calls, "secondary.adapted_generators", seed=seed, tol=tol)
    return res


def cmd_analyze(sf: SystemFile, seed: int = 0, tol: float = DEFAULT_TOL, samples: int = 16) -> dict:
    rep = _base(sf, "analyze", seed, tol)
    calls = rep["provenance"]["calls"]
    s, d = sf.system, sf.domain()
    gs, rep["strata"] = _strata_part(sf, seed, tol, calls)
    rep["generators"] = {"secondary": _gens(gs)}
    rep["adapted"] = _adapted(sf, seed, tol, calls)
    hv = hyper_accessibility(s, d, samples, seed, tol, probes=sf.probes)
    _prov(calls, "criteria.hyper_accessibility", seed=seed, tol=tol, samples=samples)
    probes = []
    for p in _points(sf, None):
        v = goodness(s, p, d=d, samples=samples, seed=seed, tol=tol)
        probes.append(v.as_dict())
    _prov(calls, "criteria.goodness", points=len(probes), seed=seed, tol=tol, samples=samples)
    stlc, seen = [], set()
    for p in sf.probes:
        q0 = tuple(p[1:1 + s.n])
        if q0 in seen:
            continue
        seen.add(q0)
        try:
            v = stlc_at(s, q0, samples=samples, seed=seed, tol=tol)
            stlc.append(v.as_dict())
        except ValueError as exc:
            stlc.append({"q0": list(q0), "status": "not established", "reason": str(exc)})
    _prov(calls, "criteria.stlc_at", points=len(stlc), seed=seed, tol=tol, samples=samples)
    rep["verdicts"] = {
        "hyper_accessibility": hv.as_dict(),
        "goodness_at_probes": probes,
        "stlc": stlc,
        "summary": {"hyper_accessible": hv.hyper_accessible,
                    "stlc_points": [v["q0"] for v in stlc if v["status"] == "established"]},
    }
    return rep


def linear_part(sf: SystemFile):
    """(A, B) when every right-hand side is linear in (q, w) with constant coefficients."""
    s = sf.system
    qs = [f"q{i}" for i in range(1, s.n + 1)]
    ws = [f"w{a}" for a in range(1, s.m + 1)]
    A = np.zeros((s.n, s.n))
    B = np.zeros((s.n, s.m))
    for i, e in enumerate(s.f):
        for M, names in ((A, qs), (B, ws)):
            for j, v in enumerate(names):
                c = diff(e, v)
                if not isinstance(c, Const):
                    raise ValueError(f"f{i + 1} = {to_text(e)} is not linear in {v}")
                M[i, j] = float(c.value)
        if diff(e, "t") != Const(0):
            raise ValueError(f"f{i + 1} depends on t")
    return A, B


def cmd_kalman(sf: SystemFile | None = None, A=None, B=None, seed: int = 0,
               tol: float = DEFAULT_TOL) -> dict:
    if A is None:
        if sf is None or sf.name == "kalman-random":
            A, B = random_linear(seed)
            source = f"random_linear(seed={seed})"
        else:
            A, B = linear_part(sf)
            source = "system file"
    else:
        source = "inline"
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    lsf = SystemFile(linear_system(A, B, name=sf.name if sf is not None and source == "system file"
                                   else "linear"))
    rep = _base(lsf, "kalman", seed, tol)
    k = kalman(A, B)
    _prov(rep["provenance"]["calls"], "criteria.kalman", source=source)
    rep["verdicts"] = {"kalman": {"A": A, "B": B, "n_max": k.n_max, "controllable": k.controllable,
                                  "rank_sequence": kalman_ranks(A, B)}}
    return rep


def cmd_simulate(sf: SystemFile, T: float = 1.0, samples: int = 1000, seed: int = 0,
                 segments: int = 6, q0=None, r: float | None = None, delta: float | None = None,
                 cloud_path=None, dt: float | None = None) -> dict:
    rep = _base(sf, "simulate", seed, DEFAULT_TOL)
    s = sf.system
    q0 = [0.0] * s.n if q0 is None else [float(x) for x in q0]
    cloud = reach_cloud(s, q0, T, samples, segments, seed, dt)
    _prov(rep["provenance"]["calls"], "reach.reach_cloud", T=T, samples=samples, seed=seed,
          segments=segments, dt=cloud.dt)
    E = cloud.endpoints
    centered = E - E.mean(axis=0)
    sim = {"T": T, "q0": q0, "samples": samples, "segments": segments, "seed": seed, "dt": cloud.dt,
           "min": E.min(axis=0), "max": E.max(axis=0),
           "spread_rank": int(np.linalg.matrix_rank(centered)) if samples > 1 else 0}
    if r is not None:
        delta = r / 2 if delta is None else delta
        res = covers_ball(cloud, q0, r, delta)
        _prov(rep["provenance"]["calls"], "reach.covers_ball", r=r, delta=delta)
        sim["covers_ball"] = {"r": r, "delta": delta, "covered": res.covered, "nodes": res.nodes,
                              "uncovered": res.uncovered, "worst_distance": res.worst}
    if cloud_path is not None:
        write_cloud(cloud, cloud_path)
        sim["cloud_file"] = str(cloud_path)
    rep["simulation"] = sim
    return rep


def build_report(command: str, target, **opts) -> dict:
    """Programmatic entry point used by the CLI and the tests."""
    params = opts.pop("params", None) or {}
    sf = None
    if target is not None:
        sf = load_system_file(target)
        if params:
            sf = sf.with_params(**params)
    if command == "analyze":
        return cmd_analyze(sf, **opts)
    if command == "brackets":
        return cmd_brackets(sf, **opts)
    if command == "strata":
        return cmd_strata(sf, **opts)
    if command == "goodness":
        return cmd_goodness(sf, **opts)
    if command == "kalman":
        return cmd_kalman(sf, **opts)
    if command == "simulate":
        return cmd_simulate(sf, **opts)
    raise ValueError(f"unknown command {command!r}")


def _floats(text: str) -> list:
    return [float(x) for x in text.replace("(", "").replace(")", "").split(",") if x.strip()]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctrl-lie", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, target_required=True, samples=True):
        sp.add_argument("target", nargs=None if target_required else "?",
                        help="fixture name or path to a system file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", dest="json_out", help="write the report here instead of stdout")
        sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
        return sp

    for name in ("analyze", "strata", "goodness"):
        sp = common(sub.add_parser(name))
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        if name != "strata":
            sp.add_argument("--samples", type=int, default=16)
        if name == "goodness":
            sp.add_argument("--point", action="append", default=[],
                            help="comma-separated point (t, q..., w...); repeatable")
    sp = common(sub.add_parser("brackets"))
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--beta", type=int)
    sp = common(sub.add_parser("kalman"), target_required=False)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--A", help="JSON matrix, e.g. [[0,1],[0,0]]")
    sp.add_argument("--B", help="JSON matrix")
    sp = common(sub.add_parser("simulate"))
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--segments", type=int, default=6)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--q0", help="comma-separated initial state (default 0)")
    sp.add_argument("--r", type=float, help="ball radius for the coverage test")
    sp.add_argument("--delta", type=float, help="coverage distance (default r/2)")
    sp.add_argument("--cloud", help="write cloud records to this file")
    return p


def _params(items) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise SystemFileError(f"--param expects NAME=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = float(v)
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    opts = {"seed": args.seed, "params": _params(args.param)}
    if args.command != "simulate":
        opts["tol"] = args.tol
    if args.command in ("analyze", "goodness"):
        opts["samples"] = args.samples
    if args.command == "goodness" and args.point:
        opts["points"] = [_floats(p) for p in args.point]
    if args.command == "brackets":
        opts["beta"] = args.beta
    if args.command == "kalman" and (args.A or args.B):
        if not (args.A and args.B):
            print("ctrl-lie: --A and --B go together", file=_sys.stderr)
            return 1
        opts["A"], opts["B"] = json.loads(args.A), json.loads(args.B)
    if args.command == "simulate":
        opts.update(T=args.T, samples=args.samples, segments=args.segments, dt=args.dt,
                    r=args.r, delta=args.delta, cloud_path=args.cloud,
                    q0=_floats(args.q0) if args.q0 else None)
    try:
        report = build_report(args.command, args.target, **opts)
    except (SystemFileError, KeyError, FileNotFoundError, ValueError) as exc:
        print(f"ctrl-lie: {exc}", file=_sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"ctrl-lie: internal error: {exc!r}", file=_sys.stderr)
        return 2
    text = render(report)
    if args.json_out:
        Path(args.json_out).write_text(text, encoding="utf-8")
    else:
        _sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
