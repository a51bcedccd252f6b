"""Hydrodynamic (Madelung) view of a wavefunction.

Psi = sqrt(rho) exp(i S / hbar) is split into density and phase; from these
the current velocity v = S'/m, the osmotic velocity u = nu (ln rho)' and the
forward/backward drifts b = v + u, b* = v - u follow.  The module also holds
the averaged energy functional and the node-wise residuals of the continuity
and Hamilton-Jacobi equations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .fields import Grid, gradient, integrate
from .params import HbarConvention, PhysParams, hbar_from, nu_from
from .schrodinger import WaveField, gaussian_packet, iter_states, n_steps_for

__all__ = [
    "HydroState", "hbar_from", "decompose", "compose", "osmotic_velocity",
    "averaged_energy", "quantum_energy", "classical_energy", "hj_residual",
    "continuity_residual", "hbar_consistency", "weighted_rms",
]

DENSITY_FLOOR = 1e-12


class PhaseUnwrapError(ValueError):
    """The density vanishes on an extended stretch inside the support."""


@dataclass(frozen=True)
class HydroState:
    grid: Grid
    rho: np.ndarray
    S: np.ndarray
    v: np.ndarray
    u: np.ndarray
    b_fwd: np.ndarray
    b_bwd: np.ndarray
    floored: np.ndarray  # nodes where rho hit the density floor
    hbar: float
    winding: int = 0
    t: float = 0.0

    @classmethod
    def from_fields(cls, grid: Grid, rho: np.ndarray, S: np.ndarray, v: np.ndarray,
                    u: np.ndarray, hbar: float, floored: np.ndarray | None = None,
                    winding: int = 0, t: float = 0.0) -> HydroState:
        if floored is None:
            floored = np.zeros(grid.n_nodes, dtype=bool)
        return cls(grid, rho, S, v, u, v + u, v - u, floored, hbar, winding, t)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "rho", "S", "v", "u", "b_fwd", "b_bwd"])
            cols = (self.grid.x, self.rho, self.S, self.v, self.u, self.b_fwd, self.b_bwd)
            for row in zip(*cols):
                w.writerow([repr(float(c)) for c in row])


def _floor(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eps = DENSITY_FLOOR * float(np.max(rho))
    mask = rho <= eps
    return np.maximum(rho, eps), mask


def osmotic_velocity(rho: np.ndarray, nu: float, grid: Grid) -> np.ndarray:
    """nu * d(ln rho)/dx with rho clamped at the density floor."""
    floored, _ = _floor(np.asarray(rho, dtype=float))
    return nu * gradient(np.log(floored), grid)


def _check_gaps(mask: np.ndarray, periodic: bool) -> None:
    """Raise when floored nodes (two or more in a row) split the support."""
    if mask.all():
        raise PhaseUnwrapError("density is zero everywhere")
    live = np.flatnonzero(~mask)
    if periodic:
        gaps = np.diff(np.append(live, live[0] + mask.size)) - 1
    else:
        gaps = np.diff(live) - 1
    if np.any(gaps >= 2):
        raise PhaseUnwrapError("density vanishes on an extended region inside its support; "
                               "phase cannot be continued across it")


def decompose(wave: WaveField, params: PhysParams) -> HydroState:
    """Split Psi into (rho, S, v, u, b, b*).

    S is accumulated from wrapped phase increments between neighbouring nodes,
    anchored at the node of largest |Psi| where it takes hbar*arg(Psi).  On a
    circle the increments around the loop sum to 2*pi*winding; that jump is
    kept in S at the seam (between the last node and node 0) while v, which
    only needs local phase differences, stays single valued.
    """
    grid, psi, hbar = wave.grid, wave.psi, params.hbar
    norm = wave.norm
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"wavefunction norm {norm} is not 1")
    rho_raw = np.abs(psi) ** 2
    rho, mask = _floor(rho_raw)
    _check_gaps(mask, grid.periodic)

    if grid.periodic:
        dphi = np.angle(np.roll(psi, -1) * np.conj(psi))  # cell i -> i+1, last cell is the seam
        winding = int(round(float(np.sum(dphi)) / (2 * np.pi)))
    else:
        dphi = np.angle(psi[1:] * np.conj(psi[:-1]))
        winding = 0
    # zero-amplitude nodes carry no phase information
    cell_dead = mask[:-1] | mask[1:] if not grid.periodic else mask | np.roll(mask, -1)
    dphi = np.where(cell_dead, 0.0, dphi)

    k = int(np.argmax(rho_raw))
    phase = np.empty(grid.n_nodes)
    phase[k] = np.angle(psi[k])
    inc = dphi[: grid.n_nodes - 1]
    phase[k + 1:] = phase[k] + np.cumsum(inc[k:])
    phase[:k] = phase[k] - np.cumsum(inc[:k][::-1])[::-1]
    S = hbar * phase

    h = grid.spacing
    if grid.periodic:
        dS = hbar * dphi / h
        v = 0.5 * (dS + np.roll(dS, 1)) / params.m
    else:
        v = gradient(S, grid) / params.m
    v = np.where(mask, 0.0, v)
    u = params.nu * gradient(np.log(rho), grid)
    return HydroState.from_fields(grid, rho_raw, S, v, u, hbar, mask, winding, wave.t)


def compose(rho: np.ndarray, S: np.ndarray, hbar: float, grid: Grid, t: float = 0.0) -> WaveField:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density has negative values")
    return WaveField(np.sqrt(rho) * np.exp(1j * np.asarray(S) / hbar), grid, t)


def averaged_energy(state: HydroState, params: PhysParams) -> float:
    """Integral of rho [ (m/2) v^2 + (b/2) u^2 + U ]."""
    dens = 0.5 * params.m * state.v**2 + 0.5 * params.osmotic_coupling * state.u**2
    return integrate(state.rho * (dens + params.U(state.grid)), state.grid)


def quantum_energy(state: HydroState, params: PhysParams) -> float:
    return 0.5 * params.osmotic_coupling * integrate(state.rho * state.u**2, state.grid)


def classical_energy(state: HydroState, params: PhysParams) -> float:
    dens = 0.5 * params.m * state.v**2 + params.U(state.grid)
    return integrate(state.rho * dens, state.grid)


def _wrap(x: np.ndarray, period: float) -> np.ndarray:
    return (x + 0.5 * period) % period - 0.5 * period


def _hj_spatial(state: HydroState, params: PhysParams) -> np.ndarray:
    grid = state.grid
    rho, _ = _floor(state.rho)
    dlog = gradient(np.log(rho), grid)
    bracket = dlog**2 + 2 * gradient(dlog, grid)
    coeff = 0.5 * params.osmotic_coupling * params.nu**2
    return 0.5 * params.m * state.v**2 + params.U(grid) - coeff * bracket


def hj_residual(s0: HydroState, s1: HydroState, params: PhysParams) -> np.ndarray:
    """Node-wise S_dot + (S')^2/2m + U - (b nu^2/2)[(ln rho)'^2 + 2 (ln rho)''].

    The time derivative is the one-sided difference of S (taken modulo
    2 pi hbar); the spatial terms are averaged over the two states, so the
    residual is centred at t + dt/2.  Floored nodes come back as NaN.
    """
    dt = s1.t - s0.t
    if dt == 0:
        raise ValueError("states are not separated in time")
    S_dot = _wrap(s1.S - s0.S, 2 * np.pi * s0.hbar) / dt
    r = S_dot + 0.5 * (_hj_spatial(s0, params) + _hj_spatial(s1, params))
    return np.where(s0.floored | s1.floored, np.nan, r)


def continuity_residual(s0: HydroState, s1: HydroState) -> np.ndarray:
    """Node-wise rho_dot + (rho v)', time-centred like :func:`hj_residual`."""
    dt = s1.t - s0.t
    if dt == 0:
        raise ValueError("states are not separated in time")
    grid = s0.grid
    flux = 0.5 * (gradient(s0.rho * s0.v, grid) + gradient(s1.rho * s1.v, grid))
    r = (s1.rho - s0.rho) / dt + flux
    return np.where(s0.floored | s1.floored, np.nan, r)


def weighted_rms(residual: np.ndarray, rho: np.ndarray, grid: Grid) -> float:
    """sqrt( int rho r^2 / int rho ) over nodes where the residual is defined."""
    ok = np.isfinite(residual)
    w = np.where(ok, rho, 0.0)
    r = np.where(ok, residual, 0.0)
    return math.sqrt(integrate(w * r**2, grid) / integrate(w, grid))


# ---------------------------------------------------------------- hbar adjudication

def _params_for(hbar: float, base: PhysParams, convention: HbarConvention,
                potential: np.ndarray | None) -> PhysParams:
    nu = nu_from(hbar, base.m, base.osmotic_coupling, convention)
    return PhysParams(base.m, nu, base.osmotic_coupling, convention, potential)


@dataclass(frozen=True)
class PacketFactory:
    """Picklable initial-state recipe usable on any grid of a fixed domain."""

    lower: float
    upper: float
    center: float = 0.0
    width: float = 1.0
    velocity: float = 0.0

    def grid_for(self, n: int) -> Grid:
        return Grid.line(self.lower, self.upper, n)

    def __call__(self, grid: Grid, params: PhysParams) -> WaveField:
        return gaussian_packet(grid, params, self.center, self.width, self.velocity)


def hbar_consistency(params: PhysParams, packet: PacketFactory, n_values=(512, 1024),
                     t_eval: float = 1.0, dt: float = 1e-3, potential=None) -> dict:
    """Decide which hbar relation makes the Hamilton-Jacobi equation match the oracle.

    ``packet`` builds the initial wavefunction on each refinement of its
    domain; ``potential(grid)`` (optional) builds U.  The oracle runs at the
    action scale of ``params``; at ``t_eval`` the residual is evaluated with
    the quantum-term coefficient b nu^2 / 2 implied by each convention.  The
    winner is the convention whose residual converges (order > 1.5) under
    refinement while the other does not.
    """
    hbar = params.hbar
    rows = []
    for n in n_values:
        grid = packet.grid_for(n)
        U = None if potential is None else potential(grid)
        oracle = _params_for(hbar, params, "implemented", U)
        wave = packet(grid, oracle)
        steps = list(iter_states(wave, n_steps_for(t_eval, dt) + 1, dt, oracle))
        w0, w1 = steps[-2], steps[-1]
        rho0 = steps[0].density
        if np.max(np.abs(w1.density - rho0)) < 1e-3 * np.max(rho0):
            raise ValueError("hbar_consistency needs a non-stationary state")
        row = {"n": n, "spacing": grid.spacing}
        for conv in ("implemented", "half"):
            p = _params_for(hbar, params, conv, U)
            s0, s1 = decompose(w0, p), decompose(w1, p)
            r = hj_residual(s0, s1, p)
            row[conv] = weighted_rms(r, 0.5 * (s0.rho + s1.rho), grid)
        rows.append(row)

    def order(conv: str) -> float:
        a, b = rows[0], rows[-1]
        return math.log(a[conv] / b[conv]) / math.log(a["spacing"] / b["spacing"])

    orders = {c: order(c) for c in ("implemented", "half")}
    finest = rows[-1]
    converging = {c: orders[c] > 1.5 for c in orders}
    if converging["implemented"] == converging["half"]:
        raise RuntimeError(f"inconclusive hbar adjudication: orders {orders}, rows {rows}")
    winner = "implemented" if converging["implemented"] else "half"
    loser = "half" if winner == "implemented" else "implemented"
    return {
        "hbar": hbar,
        "rows": rows,
        "order": orders,
        "winner": winner,
        "ratio_loser_to_winner": finest[loser] / finest[winner],
    }


def with_time(state: HydroState, t: float) -> HydroState:
    return replace(state, t=t)
