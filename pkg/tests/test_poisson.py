import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qddlab.grid import Grid
from qddlab.poisson import poisson_energy, poisson_matrix, poisson_residual, solve_poisson

EPS = np.finfo(float).eps


def roundoff(N, V):
    # forward error of the tridiagonal elimination grows linearly in N
    return 10 * N * EPS * np.max(np.abs(V))

sizes = st.sampled_from([8, 16, 32, 64])
entries = st.floats(-10, 10, allow_nan=False)


def test_zero_density():
    assert np.all(solve_poisson(np.zeros(16)) == 0.0)


def test_unit_density_is_exact_quadratic():
    for N in (8, 64, 256):
        x = Grid(N).nodes
        V = solve_poisson(np.ones(N))
        assert np.max(np.abs(V - x * (1 - x) / 2)) <= roundoff(N, V)
    V = solve_poisson(np.ones(64))
    assert V.max() == pytest.approx(0.125, abs=roundoff(64, V))
    assert np.argmax(V) == 32


def test_discrete_sine_eigenvector():
    N = 64
    h = 1.0 / N
    x = Grid(N).nodes
    n = np.sin(np.pi * x)
    mu = 2 * (1 - np.cos(np.pi * h)) / h**2
    assert np.max(np.abs(solve_poisson(n) - n / mu)) <= roundoff(N, n / mu)


def test_residual_small():
    rng = np.random.default_rng(1)
    for N in (8, 32, 64):
        n = rng.uniform(-1, 3, size=N)
        r = poisson_residual(solve_poisson(n), n)
        assert np.max(np.abs(r)) <= 1e-12 * np.max(np.abs(n))


def test_matrix_matches_solver():
    rng = np.random.default_rng(2)
    n = rng.normal(size=32)
    P = poisson_matrix(32)
    assert np.allclose(P @ n, solve_poisson(n), atol=1e-15)
    assert not P.flags.writeable


def test_energy_examples():
    assert poisson_energy(np.zeros(32)) == 0.0
    N = 256
    assert poisson_energy(solve_poisson(np.ones(N))) == pytest.approx(1 / 24, abs=1e-4)
    V = solve_poisson(np.cos(2 * np.pi * Grid(N).nodes) + 1)
    assert poisson_energy(3.0 * V) == pytest.approx(9.0 * poisson_energy(V), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_linearity(data):
    N = data.draw(sizes)
    n1 = data.draw(arrays(float, N, elements=entries))
    n2 = data.draw(arrays(float, N, elements=entries))
    a, b = data.draw(entries), data.draw(entries)
    lhs = solve_poisson(a * n1 + b * n2)
    rhs = a * solve_poisson(n1) + b * solve_poisson(n2)
    scale = 1 + (abs(a) + abs(b)) * 10
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * scale


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_energy_identity(data):
    N = data.draw(sizes)
    n = data.draw(arrays(float, N, elements=entries))
    V = solve_poisson(n)
    assert poisson_energy(V) == pytest.approx(0.5 * np.sum(n * V) / N, abs=1e-13 * (1 + np.sum(np.abs(n))))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_maximum_principle(data):
    N = data.draw(sizes)
    n = data.draw(arrays(float, N, elements=st.floats(0, 10)))
    assert np.all(solve_poisson(n) >= 0.0)
