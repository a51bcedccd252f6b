import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nelson_lab.fields import Grid
from nelson_lab.hidden import (JointDensity, VelocityMap, bivariate_gaussian, conditional_drift,
                               conditional_variance, drift_decomposition_report,
                               energy_decomposition, marginal, nelson_realizing, product_density,
                               standardized_y, subsystem_energy)
from nelson_lab.madelung import decompose
from nelson_lab.schrodinger import eigenstate, gaussian_packet

XG = Grid.line(-8, 8, 201)
YG = Grid.line(-8, 8, 161)


def test_marginal_of_bivariate_gaussian():
    j = bivariate_gaussian(XG, YG, 1.3, 0.8, 0.6)
    exact = np.exp(-XG.x**2 / (2 * 1.3**2)) / math.sqrt(2 * math.pi * 1.3**2)
    assert np.max(np.abs(marginal(j) - exact)) <= 1e-6


def test_conditional_drift_of_correlated_gaussian():
    sx, sy, r, a = 1.0, 2.0, 0.5, 1.7
    j = bivariate_gaussian(XG, Grid.line(-16, 16, 321), sx, sy, r)
    vel = VelocityMap(a * np.broadcast_to(j.ygrid.x, j.values.shape))
    b = conditional_drift(j, vel)
    core = np.abs(XG.x) <= 3 * sx
    assert np.max(np.abs(b[core] - a * r * sy / sx * XG.x[core])) <= 1e-6
    var = conditional_variance(j, vel)
    assert np.allclose(var[core], a**2 * sy**2 * (1 - r**2), rtol=1e-6)


@given(st.floats(-10, 10), st.floats(0.1, 5))
def test_constant_velocity_energy(c, m):
    j = bivariate_gaussian(XG, YG, 1.0, 1.0, 0.3)
    vel = VelocityMap(np.full(j.values.shape, c), m)
    assert subsystem_energy(j, vel) == pytest.approx(0.5 * m * c * c, rel=1e-12, abs=1e-300)
    live = ~np.isnan(conditional_variance(j, vel))
    assert np.all(conditional_variance(j, vel)[live] == 0)


@given(st.floats(0.1, 10))
def test_additive_noise_adds_its_energy(s):
    rho = np.exp(-XG.x**2)
    sigma = np.exp(-0.5 * YG.x**2)
    j = product_density(rho, sigma, XG, YG)
    base = np.sin(XG.x)[:, None] * np.ones(YG.n_nodes)
    noisy = base + s * standardized_y(YG, sigma)[None, :]
    e0 = subsystem_energy(j, VelocityMap(base))
    e1 = subsystem_energy(j, VelocityMap(noisy))
    assert e1 - e0 == pytest.approx(0.5 * s * s, rel=1e-9)
    assert energy_decomposition(j, VelocityMap(noisy))["fluctuation_part"] == pytest.approx(0.5 * s * s, rel=1e-9)


small = st.integers(8, 14)


@st.composite
def lattices(draw):
    nx, ny = draw(small), draw(small)
    vals = draw(arrays(float, (nx, ny), elements=st.floats(0, 10)))
    vals[0, 0] += 1.0
    xdot = draw(arrays(float, (nx, ny), elements=st.floats(-100, 100)))
    return nx, ny, vals, xdot


@given(lattices(), st.floats(0.1, 10))
def test_energy_identity(lat, m):
    nx, ny, vals, xdot = lat
    j = JointDensity.normalized(vals, Grid.line(0, 1, nx), Grid.line(-1, 1, ny))
    U = np.linspace(-1, 2, nx)
    d = energy_decomposition(j, VelocityMap(xdot, m), U)
    scale = max(1.0, 0.5 * m * float(np.max(xdot**2)) + 2)
    assert abs(d["gap"]) <= 1e-10 * scale


@given(lattices(), st.randoms(use_true_random=False))
def test_y_permutation_is_bit_invariant(lat, rnd):
    nx, ny, vals, xdot = lat
    j = JointDensity.normalized(vals, Grid.line(0, 1, nx), Grid.line(-1, 1, ny))
    vel = VelocityMap(xdot)
    perm = np.array(rnd.sample(range(ny), ny))
    jp, vp = j.permute_y(perm), vel.permute_y(perm)
    assert np.array_equal(marginal(jp), marginal(j))
    assert np.array_equal(conditional_drift(jp, vp), conditional_drift(j, vel), equal_nan=True)
    assert np.array_equal(conditional_variance(jp, vp), conditional_variance(j, vel), equal_nan=True)
    assert subsystem_energy(jp, vp) == subsystem_energy(j, vel)
    assert energy_decomposition(jp, vp) == energy_decomposition(j, vel)


def test_nelson_realizing_construction(natural):
    g = Grid.line(-10, 10, 128)
    s = decompose(gaussian_packet(g, natural, 0.5, 1.0, 1.0), natural)
    j, vel = nelson_realizing(s, natural.nu, 1e-3, Grid.line(-8, 8, 101))
    rep = drift_decomposition_report(j, vel, s, natural.nu, 1e-3)
    assert rep["realizes_nelson"] and not rep["classical"]
    assert rep["nu_implied"] == pytest.approx(natural.nu, rel=1e-8)
    e = energy_decomposition(j, vel)
    assert e["fluctuation_part"] == pytest.approx(0.5 * 2 * natural.nu / 1e-3, rel=1e-8)


def test_classical_and_mismatched_cases(harmonic):
    grid, p = harmonic
    wave, _ = eigenstate(grid, p, 0)
    s = decompose(wave, p)
    yg = Grid.line(-8, 8, 81)
    j, vel = nelson_realizing(s, p.nu, 1e-3, yg)
    classical = VelocityMap(np.broadcast_to(s.b_fwd[:, None], j.values.shape))
    rep = drift_decomposition_report(j, classical, s, p.nu, 1e-3)
    assert rep["classical"] and rep["nu_implied"] == 0.0 and not rep["realizes_nelson"]
    too_noisy = VelocityMap(s.b_fwd[:, None] + 1.1 * (vel.xdot - s.b_fwd[:, None]))
    rep = drift_decomposition_report(j, too_noisy, s, p.nu, 1e-3)
    assert not rep["realizes_nelson"]
    assert rep["nu_implied"] == pytest.approx(1.21 * p.nu, rel=1e-6)


def test_validation():
    g = Grid.line(0, 1, 8)
    with pytest.raises(ValueError):
        JointDensity(np.ones((8, 3)), g, g)
    with pytest.raises(ValueError):
        JointDensity(np.full((8, 8), 5.0), g, g)
    neg = np.ones((8, 8))
    neg[1, 1] = -1
    with pytest.raises(ValueError):
        JointDensity.normalized(neg, g, g)
    with pytest.raises(ValueError):
        VelocityMap(np.array([[np.nan]]))
    j = JointDensity.normalized(np.ones((8, 8)), g, g)
    with pytest.raises(ValueError):
        subsystem_energy(j, VelocityMap(np.zeros((8, 3))))
    with pytest.raises(ValueError):
        drift_decomposition_report(j, VelocityMap(np.zeros((8, 8))), None, 0.5, 0.0)


def test_lattice_csv(tmp_path):
    g = Grid.line(0, 1, 8)
    j = JointDensity.normalized(np.ones((8, 8)), g, g)
    j.write_csv(tmp_path / "j.csv")
    lines = (tmp_path / "j.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 65
