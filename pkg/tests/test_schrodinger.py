import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelson_lab.fields import Grid, integrate
from nelson_lab.params import PhysParams
from nelson_lab.schrodinger import (CrankNicolson, WaveField, eigenstate, energy_expectation, evolve,
                                    free_gaussian_variance, gaussian_packet, init_packet,
                                    iter_states, moments, plane_wave, step, write_snapshots_csv)


def test_plane_wave_density_is_uniform(natural, circle_grid):
    w = plane_wave(circle_grid, natural, 1.0)
    assert np.allclose(w.density, 1 / (2 * np.pi), rtol=0, atol=1e-14)


def test_plane_wave_needs_circle(natural):
    with pytest.raises(ValueError):
        plane_wave(Grid.line(0, 1, 32), natural, 1.0)


@given(st.floats(-3, 3), st.floats(0.5, 2.0))
def test_gaussian_packet_moments(center, width):
    p = PhysParams.natural()
    w = gaussian_packet(Grid.line(-20, 20, 1024), p, center, width)
    mean, var = moments(w)
    assert mean == pytest.approx(center, abs=1e-9)
    assert var == pytest.approx(width**2, rel=1e-4)


def test_ground_state_variance_and_energy(harmonic):
    grid, p = harmonic
    wave, E = eigenstate(grid, p, 0)
    assert moments(wave)[1] == pytest.approx(0.5, rel=1e-3)  # hbar / (2 m omega)
    assert E == pytest.approx(0.5, rel=1e-2)
    assert energy_expectation(wave, p) == pytest.approx(0.5, rel=1e-2)


def test_plane_wave_phase_advances_at_omega(natural, circle_grid):
    w = 2.0
    wave = plane_wave(circle_grid, natural, w)
    out = step(wave, 1e-3, natural)
    assert np.allclose(np.abs(out.psi), np.abs(wave.psi), atol=1e-13)
    # the discrete dispersion relation; continuum value m w^2 / 2
    h = circle_grid.spacing
    omega = (1 - np.cos(w * h)) / h**2
    phase = np.angle(out.psi[0] / wave.psi[0])
    expected = -2 * np.arctan(0.5 * omega * 1e-3)
    assert phase == pytest.approx(expected, rel=1e-10)
    assert omega == pytest.approx(0.5 * w * w, rel=1e-3)


def test_single_step_unitary(natural):
    g = Grid.line(-20, 20, 512)
    wave = gaussian_packet(g, natural, 1.0, 0.8, 1.3)
    assert abs(step(wave, 1e-3, natural).norm - wave.norm) <= 1e-12


def test_unitarity_over_many_steps(natural):
    g = Grid.circle(128)
    wave = gaussian_packet(g, natural, np.pi, 0.5, 2.0)
    *_, last = iter_states(wave, 10_000, 1e-3, natural)
    assert abs(last.norm - 1.0) <= 1e-8


def test_free_spreading_matches_analytic(natural):
    g = Grid.line(-20, 20, 512)
    wave = gaussian_packet(g, natural, 0.0, 1.0)
    for w in evolve(wave, 2.0, 1e-3, natural, stride=500)[1:]:
        assert moments(w)[1] == pytest.approx(free_gaussian_variance(1.0, w.t, 1.0, 1.0), rel=5e-3)


def test_coherent_state_returns(harmonic):
    grid, p = harmonic
    wave = gaussian_packet(grid, p, 2.0, np.sqrt(0.5))
    dt = 2 * np.pi / 6000
    *_, last = iter_states(wave, 6000, dt, p)
    assert abs(moments(last)[0] - 2.0) <= 0.01 * 2.0


def test_evolve_zero_time_returns_input(natural):
    wave = gaussian_packet(Grid.line(-5, 5, 64), natural)
    out = evolve(wave, 0.0, 1e-3, natural)
    assert len(out) == 1 and out[0] is wave


def test_energy_constant_over_run(harmonic):
    grid, p = harmonic
    wave = gaussian_packet(grid, p, 1.5, 0.6, 0.4)
    energies = [energy_expectation(w, p) for w in evolve(wave, 3.0, 1e-3, p, stride=100)]
    assert np.max(np.abs(np.array(energies) - energies[0])) / energies[0] <= 1e-3


def test_energy_examples(natural, circle_grid):
    assert energy_expectation(plane_wave(circle_grid, natural, 2.0), natural) == pytest.approx(
        0.5 * 2.0**2, abs=1e-6)
    # unquantized w: the seam jump costs energy far above m w^2 / 2
    assert energy_expectation(plane_wave(circle_grid, natural, 1.5), natural) > 10 * 0.5 * 1.5**2
    const = WaveField(np.full(256, 1 / np.sqrt(2 * np.pi), dtype=complex), circle_grid)
    assert abs(energy_expectation(const, natural)) < 1e-14


@given(st.floats(-2, 2), st.floats(0.4, 1.5), st.floats(-2, 2))
def test_step_forward_then_backward_is_identity(center, width, velocity):
    p = PhysParams.natural()
    g = Grid.line(-10, 10, 256)
    wave = gaussian_packet(g, p, center, width, velocity)
    back = step(step(wave, 1e-3, p), -1e-3, p)
    assert np.max(np.abs(back.psi - wave.psi)) <= 1e-10


def test_zero_dt_rejected(natural):
    with pytest.raises(ValueError):
        CrankNicolson(Grid.line(0, 1, 16), natural, 0.0)


def test_large_dt_warns(natural):
    with pytest.warns(UserWarning):
        CrankNicolson(Grid.line(0, 1, 256), natural, 1.0)


def test_init_packet_dispatch(harmonic):
    grid, p = harmonic
    assert np.allclose(init_packet("eigenstate", grid, p, level=0).density,
                       eigenstate(grid, p, 0)[0].density)
    with pytest.raises(ValueError):
        init_packet("soliton", grid, p)


def test_snapshot_csv(tmp_path, natural):
    g = Grid.line(-1, 1, 8)
    wave = gaussian_packet(g, natural, 0.0, 0.5)
    write_snapshots_csv(tmp_path / "s.csv", [wave, wave.at(0.1)])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,x,re,im" and len(lines) == 17
