import numpy as np
import pytest
from scipy.linalg import expm

from ctrllie.fields import ControlSystem, linear_system
from ctrllie.fixtures import fixture, random_linear
from ctrllie.reach import (ControlSignal, IntegrationError, ball_grid, cloud_lines, covers_ball,
                           integrate, reach_cloud, steer_linear, write_cloud)


def test_signal_validation():
    with pytest.raises(ValueError):
        ControlSignal([0.0, 0.5, 0.5], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        ControlSignal([0.1, 1.0], [[0.0]])
    with pytest.raises(ValueError):
        ControlSignal([0.0, 1.0], [[0.0], [1.0]])
    u = ControlSignal([0.0, 0.5, 1.0], [[0.2], [0.7]])
    assert u(0.25)[0] == 0.2 and u(0.5)[0] == 0.7 and u(1.0)[0] == 0.7
    with pytest.raises(ValueError, match="outside K"):
        u.check([(-0.5, 0.5)])


def test_integrate_linear_against_matrix_exponential():
    A, B = np.array([[0.0, 1.0], [-2.0, -0.3]]), np.array([[0.0], [1.0]])
    s = linear_system(A, B)
    u = ControlSignal([0.0, 2.0], [[0.0]])
    q0 = np.array([1.0, 0.0])
    end = integrate(s, q0, u).end
    assert np.allclose(end, expm(2.0 * A) @ q0, atol=1e-10)


def test_rk4_order_on_sleigh():
    s = fixture("sleigh", A=1.0).system
    u = ControlSignal([0.0, 1.0], [[0.6, -0.4]])
    q0 = [0.1, -0.2, 0.3, 0.5, 0.2]
    ref = integrate(s, q0, u, 1 / 1024).end
    e1 = np.linalg.norm(integrate(s, q0, u, 0.1).end - ref)
    e2 = np.linalg.norm(integrate(s, q0, u, 0.05).end - ref)
    assert e1 / e2 >= 8


def test_integration_blowup_names_interval():
    s = ControlSystem.from_strings(["q1^2 + w1"], [(-1, 1)])
    u = ControlSignal([0.0, 1.0], [[0.0]])
    with pytest.raises(IntegrationError, match="control piece 0"):
        integrate(s, [2.0], u, 0.01)


def test_cloud_determinism_and_reproduction():
    s = fixture("exampleB").system
    a = reach_cloud(s, [0.0], 0.5, 50, seed=3)
    b = reach_cloud(s, [0.0], 0.5, 50, seed=3)
    assert cloud_lines(a) == cloud_lines(b)
    assert not np.array_equal(a.endpoints, reach_cloud(s, [0.0], 0.5, 50, seed=4).endpoints)
    # each endpoint is the trajectory of its recorded signal
    for i in (0, 17, 49):
        assert np.allclose(integrate(s, [0.0], a.signals[i], a.dt).end, a.endpoints[i], atol=1e-12)


def test_cloud_signals_respect_segments():
    s = fixture("marta").system
    c = reach_cloud(s, [0, 0, 0], 1.0, 40, segments=3, seed=1)
    assert all(1 <= len(sig.values) <= 3 for sig in c.signals)
    for sig in c.signals:
        sig.check(s.K)


def test_example_a_half_space():
    c = reach_cloud(fixture("exampleA").system, [0.0], 0.5, 300, seed=0)
    assert c.endpoints.min() >= -1e-9
    assert not covers_ball(c, [0.0], 0.05, 0.02)


def test_ball_grid_and_self_cover():
    g = ball_grid([0.0, 0.0], 1.0)
    axis = np.linspace(-1, 1, 5)
    brute = [(x, y) for x in axis for y in axis if x * x + y * y <= 1]
    assert sorted(map(tuple, g)) == sorted(brute)
    res = covers_ball(g, [0.0, 0.0], 1.0, 0.0)
    assert res.covered and res.nodes == len(brute) == 13
    assert not covers_ball(g[1:], [0.0, 0.0], 1.0, 0.1)
    with pytest.raises(ValueError):
        covers_ball(g, [0.0, 0.0], 0.0, 0.1)


def test_steer_integrator_is_constant():
    r = steer_linear(np.zeros((2, 2)), np.eye(2), [0, 0], [0.3, -0.6], 2.0)
    assert np.allclose(r.signal.values, [[0.15, -0.3]], atol=1e-12)
    assert r.error <= 1e-9


def test_steer_random_controllable():
    rng = np.random.default_rng(2)
    for seed in range(5):
        A, B = random_linear(seed, n=3, m=1)
        if not np.linalg.matrix_rank(np.hstack([B, A @ B, A @ A @ B])) == 3:
            continue
        r = steer_linear(A, B, rng.normal(size=3), rng.normal(size=3), 1.0)
        assert r.error <= 1e-6


def test_steer_uncontrollable_raises():
    with pytest.raises(np.linalg.LinAlgError):
        steer_linear(np.eye(2), np.array([[1.0], [0.0]]), [0, 0], [1, 1], 1.0)


def test_cloud_file_format(tmp_path):
    c = reach_cloud(fixture("exampleC").system, [0.0], 0.5, 3, seed=9)
    path = tmp_path / "cloud.txt"
    write_cloud(c, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    seed, idx, t, q = lines[1].split(",")
    assert (seed, idx, t) == ("9", "1", "t=0.5") and float(q) == c.endpoints[1, 0]
