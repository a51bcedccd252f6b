import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelson_lab.circle import (CIRCUMFERENCE, check_circle_dynamics, circle_ensemble_check,
                               momentum_eigen_check, wallstrom_state)
from nelson_lab.fields import Grid
from nelson_lab.params import PhysParams


@pytest.mark.parametrize("w, m, omega", [(1.0, 1.0, 0.5), (0.0, 1.0, 0.0), (2.0, 3.0, 6.0)])
def test_frequency_examples(circle_grid, w, m, omega):
    state, _ = wallstrom_state(w, m, 1.0, circle_grid)
    assert state.omega == pytest.approx(omega)


@given(st.floats(-4, 4))
def test_uniform_state_solves_the_hydrodynamics(w):
    g = Grid.circle(128)
    state, wave = wallstrom_state(w, 1.0, 1.0, g)
    r = check_circle_dynamics(state, PhysParams.natural())
    assert r["continuity_residual_max"] <= 1e-10 and r["hj_residual_max"] <= 1e-10
    assert abs(wave.norm - 1) <= 1e-10
    assert np.allclose(state.rho, 1 / CIRCUMFERENCE)


def test_wrong_frequency_leaves_hj_residual(natural, circle_grid):
    state, _ = wallstrom_state(1.5, 1.0, 1.0, circle_grid)
    r = check_circle_dynamics(state, natural, omega=1.0)
    assert r["hj_residual_max"] == pytest.approx(0.125, rel=1e-9)
    assert r["continuity_residual_max"] <= 1e-10


def test_ripple_breaks_the_uniform_ansatz(natural, circle_grid):
    state, _ = wallstrom_state(1.0, 1.0, 1.0, circle_grid)
    r = check_circle_dynamics(state, natural, ripple=0.1)
    assert r["continuity_residual_max"] > 1e-3 and r["hj_residual_max"] > 1e-3
    assert r["oracle_applies"]
    assert r["oracle_continuity_residual_max"] <= 1e-4 and r["oracle_hj_residual_max"] <= 1e-3
    unq, _ = wallstrom_state(1.5, 1.0, 1.0, circle_grid)
    assert not check_circle_dynamics(unq, natural, ripple=0.1)["oracle_applies"]


@pytest.mark.parametrize("w, quantized", [(1.0, True), (2.0, True), (1.5, False), (0.3, False)])
def test_momentum_failure_sits_at_the_seam(circle_grid, w, quantized):
    _, wave = wallstrom_state(w, 1.0, 1.0, circle_grid)
    r = momentum_eigen_check(wave, w, 1.0, 1.0)
    assert r["quantized"] == quantized
    assert r["seam_discontinuous"] == (not quantized)
    assert r["localized_iff_unquantized"]
    assert r["interior_residual_max"] <= 1e-3
    assert abs(r["norm"] - 1) <= 1e-10


def test_seam_phase_jump(circle_grid):
    assert wallstrom_state(1.0, 1.0, 1.0, circle_grid)[0].seam_phase_jump == pytest.approx(0.0)
    assert wallstrom_state(1.5, 1.0, 1.0, circle_grid)[0].seam_phase_jump == pytest.approx(np.pi)


def test_non_circle_grids_rejected():
    with pytest.raises(ValueError):
        wallstrom_state(1.0, 1.0, 1.0, Grid.line(0, 2 * np.pi, 64))
    with pytest.raises(ValueError):
        wallstrom_state(1.0, 1.0, 1.0, Grid.circle(64, 3.0))
    with pytest.raises(ValueError):
        wallstrom_state(1.0, 0.0, 1.0, Grid.circle(64))


def test_ensemble_flows_uniformly_and_winds(natural, circle_grid):
    runs = {}
    for w in (0.5, 1.5):
        state, _ = wallstrom_state(w, 1.0, 1.0, circle_grid)
        r = circle_ensemble_check(state, natural, N=20_000, T=2.0, seed=3)
        assert r["density_l1_max"] <= 3 * r["density_l1_mc_scale"]
        assert abs(r["winding_rate"] - r["winding_rate_expected"]) <= 3 * r["winding_rate_se"]
        runs[w] = (state.rho, r)
    (rho_a, ra), (rho_b, rb) = runs[0.5], runs[1.5]
    assert np.array_equal(rho_a, rho_b)
    gap = rb["winding_rate"] - ra["winding_rate"]
    assert gap > 10 * np.hypot(ra["winding_rate_se"], rb["winding_rate_se"])


def test_ensemble_size_floor(natural, circle_grid):
    state, _ = wallstrom_state(1.0, 1.0, 1.0, circle_grid)
    with pytest.raises(ValueError):
        circle_ensemble_check(state, natural, N=100)
