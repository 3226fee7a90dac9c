import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from layersolve.mesh import (
    LStrategy,
    MeshKind,
    Region,
    TimeMesh,
    bisect,
    compute_L,
    generalized_shishkin,
    standard_shishkin,
    uniform_mesh,
)
from layersolve.problem import builtin_problem_1, builtin_problem_2

from oracles import lambert_root

P1 = builtin_problem_1()
P2 = builtin_problem_2(1)


def test_compute_L_examples():
    L = compute_L(32, "logN")
    assert L == pytest.approx(3.4657359, abs=1e-7)
    assert math.exp(-L) <= L / 32
    W = compute_L(32, "lambertW")
    assert W == pytest.approx(2.535, abs=5e-4)
    assert W * math.exp(W) == pytest.approx(32, rel=1e-12)


@pytest.mark.parametrize("k", range(3, 17))
def test_compute_L_side_conditions(k):
    N = 2**k
    for strategy in LStrategy:
        L = compute_L(N, strategy)
        assert math.exp(-L) <= L / N * (1 + 1e-12)
        assert L <= math.log(N)
    assert compute_L(N, "lambertw") == pytest.approx(lambert_root(N), rel=1e-12)


@pytest.mark.parametrize("N", [0, 1, 2, 2.5])
def test_compute_L_rejects_small_N(N):
    with pytest.raises(ValueError):
        compute_L(N)


def test_compute_L_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        compute_L(32, "sqrtN")


def test_generalized_shishkin_step_sizes():
    m = generalized_shishkin(32, 2.0**-10, 2.0, P2, "logN")
    assert m.tau == pytest.approx(6.76901e-3, rel=1e-5)
    h = np.diff(m.nodes)
    assert h[0] == pytest.approx(8.46126e-4, rel=1e-5)
    assert h[12] == pytest.approx(1.24154e-1, rel=1e-5)
    assert m.kind is MeshKind.GENERALIZED_SHISHKIN
    assert m.L_value == math.log(32)


def test_generalized_shishkin_cap():
    assert generalized_shishkin(32, 1.0, 2.0, P2).tau == 0.25
    assert generalized_shishkin(32, 1.0, 2.0, P1, "logN").tau == 0.125


def test_generalized_shishkin_problem_1_midpoint():
    m = generalized_shishkin(32, 2.0**-10, 2.0, builtin_problem_1(), "logN")
    assert m.tau == pytest.approx(6.76901e-3, rel=1e-5)
    assert m.nodes[16] == 0.5


def test_generalized_shishkin_rejects():
    with pytest.raises(ValueError):
        generalized_shishkin(30, 1e-3, 2.0, P2)
    with pytest.raises(ValueError):
        generalized_shishkin(32, 1e-3, 0.1, P2)  # tau0 < 1/alpha
    with pytest.raises(ValueError):
        generalized_shishkin(32, 0.0, 2.0, P2)


def test_standard_shishkin_example():
    m = standard_shishkin(64, 2.0**-10, 2.0, P2)
    assert m.tau == 2 * 2.0**-10 * math.log(64)
    assert m.tau == pytest.approx(8.1228e-3, rel=1e-4)
    assert standard_shishkin(64, 0.5, 2.0, P2).tau == 0.25
    g = generalized_shishkin(64, 2.0**-10, 2.0, P2, "logN")
    np.testing.assert_array_equal(m.nodes, g.nodes)


def test_uniform_mesh():
    np.testing.assert_array_equal(uniform_mesh(4, P2).nodes, [-1, -0.5, 0, 0.5, 1])
    m = uniform_mesh(2048, P1)
    assert m.nodes.size == 2049
    np.testing.assert_allclose(np.diff(m.nodes), 1 / 2048, rtol=1e-12)
    assert m.tau == 0 and m.L_value == 1
    assert all(m.region_of(i) is Region.INTERIOR for i in (1, 1024, 2048))


def test_bisect_uniform():
    b = bisect(uniform_mesh(4, P1))
    np.testing.assert_array_equal(b.nodes, np.arange(9) / 8)


def test_bisect_keeps_tau_and_regions():
    m = generalized_shishkin(32, 2.0**-12, 2.5, P2)
    b = bisect(m)
    assert b.tau == m.tau and b.N == 64 and b.kind is m.kind
    assert b.region_of(1) is Region.LEFT_LAYER
    assert b.region_of(16) is Region.LEFT_LAYER
    assert b.region_of(17) is Region.INTERIOR
    assert b.region_of(49) is Region.RIGHT_LAYER
    bb = bisect(b)
    np.testing.assert_array_equal(bb.nodes[::4], m.nodes)


def test_region_of_bounds():
    m = generalized_shishkin(8, 1e-3, 2.0, P2)
    with pytest.raises(IndexError):
        m.region_of(0)
    with pytest.raises(IndexError):
        m.region_of(9)


def test_mesh_csv(tmp_path):
    m = generalized_shishkin(8, 1e-3, 2.0, P2)
    path = tmp_path / "mesh.csv"
    m.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,x,region"
    assert len(lines) == 10
    assert lines[1].startswith("0,-1.0,LEFT_LAYER")
    assert float(lines[5].split(",")[1]) == 0.0


def test_time_mesh():
    tm = TimeMesh(1024, 1.0)
    assert tm.dt == 1 / 1024
    assert tm.time(0) == 0.0 and tm.time(1024) == 1.0
    fine = TimeMesh(2048, 1.0)
    np.testing.assert_array_equal(fine.times[::2], tm.times)
    for bad in (0, -1, 2.5):
        with pytest.raises(ValueError):
            TimeMesh(bad, 1.0)


shishkin_args = dict(
    k=st.integers(1, 10),
    log_eps=st.integers(-30, 0),
    tau0=st.floats(2.0, 6.0),
    problem=st.sampled_from([P1, P2, builtin_problem_2(7)]),
    strategy=st.sampled_from(["logN", "lambertW"]),
)


@given(**shishkin_args)
def test_shishkin_structure(k, log_eps, tau0, problem, strategy):
    N = 4 * k
    m = generalized_shishkin(N, 2.0**log_eps, tau0, problem, strategy)
    x = m.nodes
    W = problem.width
    q = N // 4
    assert x[0] == problem.x_lo and x[N] == problem.x_hi
    assert np.all(np.diff(x) > 0)
    assert x[N // 2] == problem.x_c
    np.testing.assert_allclose(x + x[::-1], problem.x_lo + problem.x_hi, atol=4 * N * np.finfo(float).eps * W)
    h = np.diff(x)
    small, big = m.tau / q, (W - 2 * m.tau) / (N / 2)
    tol = 8 * np.finfo(float).eps * max(abs(problem.x_lo), abs(problem.x_hi), 1.0)
    np.testing.assert_allclose(h[:q], small, rtol=1e-12, atol=tol)
    np.testing.assert_allclose(h[3 * q:], small, rtol=1e-12, atol=tol)
    np.testing.assert_allclose(h[q:3 * q], big, rtol=1e-12, atol=tol)
    assert small <= big * (1 + 1e-12)
    assert abs(h.sum() - W) <= 4 * (N + 1) * np.finfo(float).eps * W
    assert [m.region_of(i) for i in (1, q, q + 1, 3 * q, 3 * q + 1, N)] == [
        Region.LEFT_LAYER, Region.LEFT_LAYER, Region.INTERIOR, Region.INTERIOR,
        Region.RIGHT_LAYER, Region.RIGHT_LAYER]


@given(**shishkin_args)
def test_bisect_nesting(k, log_eps, tau0, problem, strategy):
    m = generalized_shishkin(4 * k, 2.0**log_eps, tau0, problem, strategy)
    b = bisect(bisect(m))
    assert b.N == 4 * m.N
    np.testing.assert_array_equal(b.nodes[::4], m.nodes)
    np.testing.assert_array_equal(bisect(m).nodes[1::2], 0.5 * (m.nodes[:-1] + m.nodes[1:]))
