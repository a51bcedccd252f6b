import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nelson_lab.fields import (Grid, gradient, integrate, interpolate, laplacian, l1_distance,
                               normalize, read_csv, resample, second_derivative, write_csv)

sizes = st.integers(min_value=8, max_value=200)
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_grid_needs_enough_nodes():
    with pytest.raises(ValueError):
        Grid.circle(4)
    with pytest.raises(ValueError):
        Grid(16, 0.0)


def test_line_endpoints_and_weights():
    g = Grid.line(-2.0, 3.0, 11)
    assert g.x[0] == -2.0 and g.x[-1] == pytest.approx(3.0)
    assert g.weights.sum() == pytest.approx(5.0)
    assert Grid.circle(64).weights.sum() == pytest.approx(2 * np.pi)


@given(sizes, finite)
def test_gradient_of_constant_is_exactly_zero(n, c):
    for g in (Grid.circle(n), Grid.line(-1, 1, n)):
        assert np.all(gradient(np.full(n, c), g) == 0.0)


def test_gradient_of_sine_on_circle():
    g = Grid.circle(256)
    assert np.max(np.abs(gradient(np.sin(g.x), g) - np.cos(g.x))) <= 1e-3


def test_gradient_of_square_on_line_is_exact_inside():
    g = Grid.line(-1, 1, 41)
    d = gradient(g.x**2, g)
    assert np.allclose(d, 2 * g.x, atol=1e-12)


@given(arrays(float, st.integers(8, 120), elements=finite))
def test_periodic_divergence_theorem(f):
    g = Grid.circle(f.size)
    assert abs(integrate(gradient(f, g), g)) <= 1e-10 * max(1.0, np.max(np.abs(f)))


@given(arrays(float, st.integers(8, 120), elements=finite))
def test_laplacian_is_div_grad(f):
    for g in (Grid.circle(f.size), Grid.line(0, 1, f.size)):
        assert np.array_equal(laplacian(f, g), gradient(gradient(f, g), g))


def test_second_derivative_periodic_converges():
    g = Grid.circle(512)
    assert np.max(np.abs(second_derivative(np.sin(g.x), g) + np.sin(g.x))) < 1e-4


def test_integrate_examples():
    c = Grid.circle(100)
    assert abs(integrate(np.full(100, 1 / (2 * np.pi)), c) - 1.0) <= 1e-12
    line = Grid.line(-8, 8, 801)
    gauss = np.exp(-line.x**2 / 2) / np.sqrt(2 * np.pi)
    assert abs(integrate(gauss, line) - 1.0) <= 1e-6
    assert integrate(np.zeros(100), c) == 0.0


def test_normalize_examples():
    c = Grid.circle(64)
    assert np.allclose(normalize(np.full(64, 2.0), c), 1 / (2 * np.pi), rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        normalize(np.linspace(-1, 1, 64), c)
    with pytest.raises(ValueError):
        normalize(np.zeros(64), c)


@given(arrays(float, st.integers(8, 100), elements=st.floats(0, 1e3)).filter(lambda a: a.sum() > 1e-3))
def test_normalize_idempotent(rho):
    g = Grid.line(0, 1, rho.size)
    once = normalize(rho, g)
    assert np.allclose(normalize(once, g), once, rtol=1e-12, atol=0)


@given(st.floats(-50, 50))
def test_interpolation_hits_nodes_and_wraps(x):
    g = Grid.circle(32)
    f = np.sin(g.x)
    assert np.allclose(interpolate(f, g, g.x), f)
    assert interpolate(f, g, np.array([x]))[0] == pytest.approx(
        interpolate(f, g, np.array([x + g.length]))[0], abs=1e-9)


def test_interpolation_clamps_on_lines():
    g = Grid.line(0, 1, 11)
    f = g.x**2
    assert interpolate(f, g, np.array([-5.0, 5.0])).tolist() == [0.0, 1.0]


def test_resample_linear_is_exact():
    fine, coarse = Grid.line(-1, 1, 201), Grid.line(-1, 1, 21)
    assert np.allclose(resample(3 * fine.x + 1, fine, coarse), 3 * coarse.x + 1)
    assert l1_distance(fine.x, fine.x, fine) == 0


def test_csv_roundtrip(tmp_path):
    g = Grid.line(-1, 1, 9)
    write_csv(tmp_path / "f.csv", g, g.x**3)
    x, v = read_csv(tmp_path / "f.csv")
    assert np.array_equal(x, g.x) and np.array_equal(v, g.x**3)
