"""Trajectories, Monte-Carlo reachable clouds, ball coverage and linear steering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.spatial import cKDTree

from .criteria import kalman
from .fields import ControlSystem, linear_system

__all__ = ["ControlSignal", "Trajectory", "ReachCloud", "CoverResult", "SteerResult",
           "IntegrationError", "integrate", "reach_cloud", "covers_ball", "ball_grid",
           "steer_linear", "cloud_lines", "write_cloud"]


class IntegrationError(RuntimeError):
    pass


@dataclass
class ControlSignal:
    """Piecewise-constant control: ``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``."""

    breakpoints: np.ndarray
    values: np.ndarray  # (pieces, m)

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.breakpoints[0] != 0.0:
            raise ValueError("signals start at t = 0")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.values) != len(self.breakpoints) - 1:
            raise ValueError("need one control value per interval")

    @property
    def T(self) -> float:
        return float(self.breakpoints[-1])

    def check(self, K):
        for k, v in enumerate(self.values):
            for a, (lo, hi) in enumerate(K):
                if not lo < v[a] < hi:
                    raise ValueError(f"control w{a + 1} = {v[a]} on piece {k} is outside K")

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[min(max(k, 0), len(self.values) - 1)]

    def as_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


def _rk4_step(F, t, Q, W, h):
    k1 = F(t, Q, W)
    k2 = F(t + h / 2, Q + h / 2 * k1, W)
    k3 = F(t + h / 2, Q + h / 2 * k2, W)
    k4 = F(t + h, Q + h * k3, W)
    return Q + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(sys: ControlSystem, q0: Sequence[float], u: ControlSignal,
              dt: float | None = None) -> Trajectory:
    """Classical RK4 on every constant-control piece, recording every step."""
    dt = 1e-3 * u.T if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    u.check(sys.K)
    F = sys.rhs()
    Q = np.asarray(q0, dtype=float).reshape(sys.n, 1)
    times, states = [0.0], [Q[:, 0].copy()]
    for k in range(len(u.values)):
        a, b = u.breakpoints[k], u.breakpoints[k + 1]
        steps = max(1, math.ceil((b - a) / dt - 1e-9))
        h = (b - a) / steps
        W = u.values[k].reshape(sys.m, 1)
        for s in range(steps):
            t = a + s * h
            with np.errstate(over="ignore", invalid="ignore"):
                Q = _rk4_step(F, t, Q, W, h)
            if not np.all(np.isfinite(Q)):
                raise IntegrationError(f"state became non-finite on [{t}, {t + h}] "
                                       f"(control piece {k}: [{a}, {b}])")
            times.append(a + (s + 1) * h)
            states.append(Q[:, 0].copy())
    return Trajectory(np.array(times), np.array(states))


@dataclass
class ReachCloud:
    T: float
    q0: np.ndarray
    endpoints: np.ndarray  # (samples, n)
    seed: int
    dt: float
    signals: list = field(repr=False, default_factory=list)


def _random_signal(rng, T, steps, dt, segments, box):
    pieces = int(rng.integers(1, segments + 1))
    pieces = min(pieces, steps)
    cuts = np.sort(rng.choice(np.arange(1, steps), size=pieces - 1, replace=False)) if pieces > 1 else []
    idx = np.concatenate([[0], cuts, [steps]]).astype(int)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    vals = lo + (hi - lo) * rng.random((pieces, len(box)))
    bps = idx * dt
    bps[-1] = T
    return idx, ControlSignal(bps, vals)


def reach_cloud(sys: ControlSystem, q0: Sequence[float], T: float, n_samples: int,
                segments: int = 6, seed: int = 0, dt: float | None = None) -> ReachCloud:
    """Endpoints of ``n_samples`` random piecewise-constant controls.

    Each sample draws a number of pieces uniformly in 1..segments, cut
    points uniformly on the integration grid and values uniformly in the
    sampling box of K.  Sample i uses its own stream spawned from ``seed``,
    and all samples are integrated together on the common grid.
    """
    if n_samples < 1 or segments < 1:
        raise ValueError("n_samples and segments must be >= 1")
    dt = 1e-3 * T if dt is None else dt
    steps = max(1, round(T / dt))
    dt = T / steps
    streams = np.random.SeedSequence(seed).spawn(n_samples)
    idxs, signals = [], []
    for ss in streams:
        idx, sig = _random_signal(np.random.default_rng(ss), T, steps, dt, segments, sys.sample_box)
        idxs.append(idx)
        signals.append(sig)
    # per-step control values for every sample
    W_steps = np.empty((steps, sys.m, n_samples))
    for i, (idx, sig) in enumerate(zip(idxs, signals)):
        W_steps[:, :, i] = np.repeat(sig.values, np.diff(idx), axis=0)
    F = sys.rhs()
    Q = np.repeat(np.asarray(q0, dtype=float).reshape(sys.n, 1), n_samples, axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(steps):
            Q = _rk4_step(F, s * dt, Q, W_steps[s], dt)
    bad = ~np.all(np.isfinite(Q), axis=0)
    if bad.any():
        raise IntegrationError(f"sample {int(np.argmax(bad))} became non-finite")
    return ReachCloud(T, np.asarray(q0, dtype=float), Q.T.copy(), seed, dt, signals)


def ball_grid(q0: Sequence[float], r: float, per_axis: int = 5) -> np.ndarray:
    """Nodes of the per-axis grid on [q0 - r, q0 + r]^n that lie in the closed ball."""
    q0 = np.asarray(q0, dtype=float)
    axis = np.linspace(-r, r, per_axis)
    G = np.array(np.meshgrid(*([axis] * len(q0)), indexing="ij")).reshape(len(q0), -1).T
    G = G[np.linalg.norm(G, axis=1) <= r * (1 + 1e-12)]
    return q0 + G


@dataclass
class CoverResult:
    covered: bool
    nodes: int
    uncovered: int
    worst: float  # largest node-to-cloud distance

    def __bool__(self):
        return self.covered


def covers_ball(cloud, q0: Sequence[float], r: float, delta: float) -> CoverResult:
    """Every node of the 5-point-per-axis grid of the closed ball B(q0, r) has a cloud
    point within distance ``delta``."""
    if r <= 0 or delta < 0:
        raise ValueError("need r > 0 and delta >= 0")
    pts = cloud.endpoints if isinstance(cloud, ReachCloud) else np.asarray(cloud, dtype=float)
    grid = ball_grid(q0, r)
    dist, _ = cKDTree(pts).query(grid)
    miss = int(np.sum(dist > delta))
    return CoverResult(miss == 0, len(grid), miss, float(dist.max()))


@dataclass
class SteerResult:
    signal: ControlSignal
    endpoint: np.ndarray
    error: float
    gramian_cond: float


def _segment_inputs(A, B, T, segments):
    """Gamma_k with q(T) = e^{AT} q0 + sum_k Gamma_k u_k for piecewise-constant u."""
    n, m = B.shape
    h = T / segments
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    E = expm(aug * h)
    Phi_h, Int_h = E[:n, :n], E[:n, n:]
    blocks, P = [], np.eye(n)
    for _ in range(segments):
        blocks.append(P @ Int_h)
        P = P @ Phi_h
    return np.hstack(blocks[::-1]), P  # P = e^{AT}


def steer_linear(A, B, q0, q1, T: float, segments: int = 64, dt: float | None = None,
                 cond_limit: float = 1e12) -> SteerResult:
    """Minimum-energy piecewise-constant control from q0 to q1 in time T.

    The energy is minimised exactly over controls constant on ``segments``
    equal pieces; the matrix inverted is the controllability Gramian of that
    control class.  The endpoint is checked by integrating the result.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if T <= 0:
        raise ValueError("T must be positive")
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    n, m = B.shape
    Gam, eAT = _segment_inputs(A, B, T, segments)
    G = Gam @ Gam.T * (segments / T)
    cond = float(np.linalg.cond(G))
    if not kalman(A, B).controllable or cond > cond_limit:
        raise np.linalg.LinAlgError(f"Gramian is numerically singular (cond {cond:.3g})")
    target = q1 - eAT @ q0
    u = (segments / T) * Gam.T @ np.linalg.solve(G, target)
    values = u.reshape(segments, m)
    sig = ControlSignal(np.linspace(0.0, T, segments + 1), values)
    sys = linear_system(A, B)
    traj = integrate(sys, q0, sig, dt if dt is not None else T / (segments * 16))
    err = float(np.linalg.norm(traj.end - q1))
    return SteerResult(sig, traj.end, err, cond)


def cloud_lines(cloud: ReachCloud) -> list:
    """Records ``seed,sample_index,t=T,q1,...,qn``."""
    return [",".join([str(cloud.seed), str(i), f"t={cloud.T!r}"] + [repr(float(x)) for x in q])
            for i, q in enumerate(cloud.endpoints)]


def write_cloud(cloud: ReachCloud, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(cloud_lines(cloud)) + "\n")
