"""System-definition files and the built-in example systems.

File format (UTF-8, one ``key = value`` per line or several separated by ``;``,
``#`` starts a comment)::

    name = sleigh ; n = 5 ; m = 2
    f1 = "q4*cos(q3)"
    ...
    K1 = (-1, 1)
    param.A = 0
    domain.t = (0, 1)
    domain.q3 = (-3, 3)
    probe = (0, 0, 0, 0, 0, 0, 0, 0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exprcore import Domain, ExprSyntaxError, UnknownIdentifierError, parse, to_text
from .fields import ControlSystem, linear_system

__all__ = ["SystemFile", "SystemFileError", "parse_system_text", "read_system_file", "load",
           "load_system_file", "fixture", "FIXTURES", "random_linear", "dump_system_text"]


class SystemFileError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass
class SystemFile:
    system: ControlSystem
    probes: list = field(default_factory=list)  # points in chart order
    box: dict = field(default_factory=dict)  # sampling intervals by coordinate name

    @property
    def name(self) -> str:
        return self.system.name

    def domain(self) -> Domain:
        sys = self.system
        q = [self.box.get(f"q{i}", (-1.0, 1.0)) for i in range(1, sys.n + 1)]
        w = [self.box.get(f"w{a}", sys.sample_box[a - 1]) for a in range(1, sys.m + 1)]
        return sys.domain(t=self.box.get("t", (0.0, 1.0)), q=q, w=w)

    def with_params(self, **values) -> "SystemFile":
        return SystemFile(self.system.with_params(**values), self.probes, self.box)


def _number(text: str, line) -> float:
    t = text.strip().lower()
    sign = -1.0 if t.startswith("-") else 1.0
    core = t.lstrip("+-").strip()
    if core in ("inf", "infinity"):
        return sign * math.inf
    try:
        return float(t)
    except ValueError:
        raise SystemFileError(f"not a number: {text.strip()!r}", line) from None


def _tuple(text: str, line) -> tuple:
    t = text.strip()
    if not (t.startswith("(") and t.endswith(")")):
        raise SystemFileError(f"expected a parenthesised tuple, got {t!r}", line)
    return tuple(_number(x, line) for x in t[1:-1].split(",") if x.strip())


def _split(line: str) -> list:
    """Split on ';' outside double quotes and drop a trailing comment."""
    out, cur, quoted = [], [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        if ch == ";" and not quoted:
            out.append("".join(cur))
            cur = []
            continue
        cur.append(ch)
    out.append("".join(cur))
    return [s for s in out if s.strip()]


def parse_system_text(text: str) -> SystemFile:
    entries = {}
    probes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        for part in _split(raw):
            if "=" not in part:
                raise SystemFileError(f"expected 'key = value', got {part.strip()!r}", lineno)
            key, value = (s.strip() for s in part.split("=", 1))
            if key == "probe":
                probes.append((_tuple(value, lineno), lineno))
            elif key in entries:
                raise SystemFileError(f"duplicate key {key!r}", lineno)
            else:
                entries[key] = (value, lineno)

    def get(key):
        if key not in entries:
            raise SystemFileError(f"missing key {key!r}")
        return entries[key]

    name = get("name")[0].strip('"')
    try:
        n, m = int(get("n")[0]), int(get("m")[0])
    except ValueError as exc:
        raise SystemFileError(f"n and m must be integers ({exc})") from None
    params = {k[len("param."):]: _number(v, ln) for k, (v, ln) in entries.items()
              if k.startswith("param.")}
    f = []
    for i in range(1, n + 1):
        value, ln = get(f"f{i}")
        src = value.strip()
        if len(src) < 2 or src[0] != '"' or src[-1] != '"':
            raise SystemFileError(f"f{i} must be a double-quoted expression, got {src!r}", ln)
        try:
            f.append(parse(src[1:-1], params))
        except (ExprSyntaxError, UnknownIdentifierError) as exc:
            raise SystemFileError(f"bad expression f{i} = {src}: {exc}", ln) from None
    K = []
    for a in range(1, m + 1):
        value, ln = get(f"K{a}")
        k = _tuple(value, ln)
        if len(k) != 2:
            raise SystemFileError(f"K{a} needs (lo, hi)", ln)
        K.append(k)
    box = {}
    for key, (value, ln) in entries.items():
        if key.startswith("domain."):
            iv = _tuple(value, ln)
            if len(iv) != 2:
                raise SystemFileError(f"{key} needs (lo, hi)", ln)
            box[key[len("domain."):]] = iv
    known = {"name", "n", "m"} | {f"f{i}" for i in range(1, n + 1)} | {f"K{a}" for a in range(1, m + 1)}
    for key, (_, ln) in entries.items():
        if key not in known and not key.startswith(("param.", "domain.")):
            raise SystemFileError(f"unknown key {key!r}", ln)
    wbox = tuple(box.get(f"w{a}", k if all(map(math.isfinite, k)) else (max(k[0], -1.0), min(k[1], 1.0)))
                 for a, k in enumerate(K, 1))
    try:
        sys = ControlSystem(n, m, tuple(f), tuple(K), tuple(sorted(params.items())), name, wbox)
    except ValueError as exc:
        raise SystemFileError(str(exc)) from None
    pts = []
    for p, ln in probes:
        if len(p) != sys.dim:
            raise SystemFileError(f"probe needs {sys.dim} coordinates, got {len(p)}", ln)
        for a, (lo, hi) in enumerate(K):
            if not lo < p[1 + n + a] < hi:
                raise SystemFileError(f"probe control w{a + 1} = {p[1 + n + a]} is outside K", ln)
        pts.append(p)
    return SystemFile(sys, pts, box)


def read_system_file(path) -> SystemFile:
    return parse_system_text(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    return "inf" if x == math.inf else "-inf" if x == -math.inf else repr(float(x))


def dump_system_text(sf: SystemFile) -> str:
    s = sf.system
    lines = [f"name = {s.name} ; n = {s.n} ; m = {s.m}"]
    lines += [f'f{i} = "{to_text(e)}"' for i, e in enumerate(s.f, 1)]
    lines += [f"K{a} = ({_fmt(lo)}, {_fmt(hi)})" for a, (lo, hi) in enumerate(s.K, 1)]
    lines += [f"param.{k} = {_fmt(v)}" for k, v in s.params]
    lines += [f"domain.{k} = ({_fmt(lo)}, {_fmt(hi)})" for k, (lo, hi) in sf.box.items()]
    lines += [f"probe = ({', '.join(_fmt(x) for x in p)})" for p in sf.probes]
    return "\n".join(lines) + "\n"


def _example_a():
    s = ControlSystem.from_strings(["w1^2"], [(-1, 1)], name="exampleA")
    return SystemFile(s, [(0.0, 0.0, 0.0), (0.5, 0.3, 0.4)])


def _example_b():
    s = ControlSystem.from_strings(["w1*w2"], [(-1, 1), (-1, 1)], name="exampleB")
    return SystemFile(s, [(0.0, 0.0, 0.0, 0.0), (0.5, 0.3, 0.4, -0.2)])


def _example_c():
    s = ControlSystem.from_strings(["exp(w1)"], [(-1, 1)], name="exampleC")
    return SystemFile(s, [(0.0, 0.0, 0.0), (0.5, 0.3, 0.4)])


def _marta():
    half = math.pi / 2 - 0.1
    s = ControlSystem.from_strings(["cos(q3)*sin(w1)", "sin(q3)*sin(w1)", "w2"],
                                   [(-half, half), (-1, 1)], name="marta")
    return SystemFile(s, [(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), (0.5, 0.2, -0.3, 0.7, 0.0, 0.0),
                          (0.5, 0.2, -0.3, 0.7, 0.3, -0.4)])


def _sleigh(A=0.0):
    s = ControlSystem.from_strings(
        ["q4*cos(q3)", "q4*sin(q3)", "q5", "w1 + A*q4*q5", "w2"],
        [(-1, 1), (-1, 1)], {"A": A}, name="sleigh")
    return SystemFile(s, [(0.0,) * 8, (0.5, 0.2, -0.3, 0.7, 0.0, 0.0, 0.0, 0.0),
                          (0.5, 0.2, -0.3, 0.7, 0.4, 0.3, -0.2, 0.1)])


def random_linear(seed: int = 0, n: int | None = None, m: int | None = None,
                  uncontrollable: bool = False):
    """Random integer pair (A, B) with entries in -3..3; optionally with a planted
    invariant subspace so that it is not controllable."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m
    A = rng.integers(-3, 4, (n, n)).astype(float)
    B = rng.integers(-3, 4, (n, m)).astype(float)
    if uncontrollable and n > 1:
        k = int(rng.integers(1, n))
        A[k:, :k] = 0.0
        B[k:, :] = 0.0
    return A, B


def _kalman_random(seed=0):
    A, B = random_linear(seed)
    s = linear_system(A, B, name="kalman-random")
    return SystemFile(s, [(0.0,) * s.dim])


FIXTURES = {
    "exampleA": _example_a,
    "exampleB": _example_b,
    "exampleC": _example_c,
    "marta": _marta,
    "sleigh": _sleigh,
    "kalman-random": _kalman_random,
}


def fixture(name: str, **params) -> SystemFile:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    sf = FIXTURES[name]()
    return sf.with_params(**params) if params else sf


def load_system_file(ref) -> SystemFile:
    """A built-in fixture name or a path to a system file."""
    if str(ref) in FIXTURES:
        return fixture(str(ref))
    return read_system_file(ref)


def load(ref) -> ControlSystem:
    return load_system_file(ref).system
