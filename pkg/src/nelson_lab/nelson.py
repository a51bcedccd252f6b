"""Ensembles of Brownian walkers driven by the Nelson drifts, and their densities.

Walkers follow dx = b dt + dw with <dw dw> = 2 nu dt (Euler-Maruyama).  The
backward process is realised on the reversed clock: walkers step towards
earlier times with drift -b* and fresh forward noise from a separate stream.
Densities are propagated independently by a conservative finite-volume
Fokker-Planck scheme on the node dual cells.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from . import rng
from .fields import Grid, integrate, interpolate
from .madelung import HydroState, decompose
from .params import PhysParams
from .schrodinger import WaveField

log = logging.getLogger(__name__)

Direction = Literal["forward", "backward"]
_STREAM = {"forward": 0, "backward": 1}

# clipped mass per Fokker-Planck step above which a run is invalid
CLIP_LIMIT = 1e-6


@dataclass(frozen=True)
class Ensemble:
    positions: np.ndarray
    grid: Grid
    seed: int
    step: int = 0
    t: float = 0.0
    # cumulative unwrapped displacement per walker (winding on circles)
    displacement: np.ndarray | None = None

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("ensemble needs at least one walker")
        object.__setattr__(self, "positions", pos)
        if self.displacement is None:
            object.__setattr__(self, "displacement", np.zeros_like(pos))

    @property
    def N(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class NoiseSpec:
    nu: float
    dt: float
    direction: Direction = "forward"

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        if self.direction not in _STREAM:
            raise ValueError(f"unknown direction {self.direction!r}")


def sample_ensemble(rho: np.ndarray, grid: Grid, N: int, seed: int, t: float = 0.0) -> Ensemble:
    """Draw N walkers from a node density (uniform within each cell, cell mass by trapezoid)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rho = np.asarray(rho, dtype=float)
    xp = grid.x
    if grid.periodic:
        rho = np.append(rho, rho[0])
        xp = np.append(xp, grid.origin + grid.length)
    cell = 0.5 * (rho[1:] + rho[:-1]) * grid.spacing
    cdf = np.concatenate(([0.0], np.cumsum(cell)))
    cdf /= cdf[-1]
    u = rng.uniform(seed, N, stream=_STREAM["forward"])
    pos = np.interp(u, cdf, xp)
    if grid.periodic:
        pos = np.mod(pos - grid.origin, grid.length) + grid.origin
    return Ensemble(pos, grid, seed, 0, t)


def _apply_boundary(x: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.periodic:
        return np.mod(x - grid.origin, grid.length) + grid.origin
    lo, hi = grid.origin, grid.upper
    x = np.where(x < lo, 2 * lo - x, x)
    x = np.where(x > hi, 2 * hi - x, x)
    if np.any((x < lo) | (x > hi)):
        raise RuntimeError("walker left the domain after reflection; dt is too large")
    return x


def sde_step(e: Ensemble, drift: np.ndarray, spec: NoiseSpec, threads: int | None = None) -> Ensemble:
    """One Euler-Maruyama step; the clock moves by +dt forward and -dt backward."""
    b = interpolate(drift, e.grid, e.positions)
    dx = b * spec.dt
    if spec.nu > 0:
        xi = rng.standard_normal(e.seed, e.step, e.N, _STREAM[spec.direction], threads)
        dx = dx + math.sqrt(2 * spec.nu * spec.dt) * xi
    sign = 1.0 if spec.direction == "forward" else -1.0
    return Ensemble(_apply_boundary(e.positions + dx, e.grid), e.grid, e.seed, e.step + 1,
                    e.t + sign * spec.dt, e.displacement + dx)


def run_drifts(e: Ensemble, drifts: Iterable[np.ndarray], spec: NoiseSpec,
               record_stride: int = 1, threads: int | None = None) -> list[Ensemble]:
    """Apply one SDE step per drift field; record every ``record_stride`` steps."""
    history = [e]
    k = 0
    for k, b in enumerate(drifts, start=1):
        e = sde_step(e, b, spec, threads)
        if k % record_stride == 0:
            history.append(e)
    if k % record_stride:
        history.append(e)
    return history


def _drifts_from(waves: Iterable[WaveField], params: PhysParams, t0: float, dt: float,
                 sign: float, which: str):
    it = iter(waves)
    prev = next(it)
    for k, nxt in enumerate(it):
        expected = t0 + sign * k * dt
        if abs(prev.t - expected) > 1e-6 * max(dt, 1.0):
            raise ValueError(f"wave snapshot at t={prev.t} does not match ensemble time {expected}")
        state = decompose(prev, params)
        yield state.b_fwd if which == "forward" else -state.b_bwd
        prev = nxt


def evolve_ensemble(e: Ensemble, waves: Iterable[WaveField], params: PhysParams, dt: float,
                    record_stride: int = 1, threads: int | None = None) -> list[Ensemble]:
    """Drive the walkers with b = v + u read off consecutive oracle states.

    ``waves`` must be spaced by ``dt`` and start at the ensemble's time; the
    last state only closes the interval and is not used as a drift.
    """
    spec = NoiseSpec(params.nu, dt, "forward")
    drifts = _drifts_from(waves, params, e.t, dt, 1.0, "forward")
    return run_drifts(e, drifts, spec, record_stride, threads)


def evolve_reversed_clock(e: Ensemble, waves_descending: Iterable[WaveField], params: PhysParams,
                          dt: float, record_stride: int = 1,
                          threads: int | None = None) -> list[Ensemble]:
    """Walk backwards in time with drift -b* from states given latest first."""
    spec = NoiseSpec(params.nu, dt, "backward")
    drifts = _drifts_from(waves_descending, params, e.t, dt, -1.0, "backward")
    return run_drifts(e, drifts, spec, record_stride, threads)


def histogram(e: Ensemble, grid: Grid) -> np.ndarray:
    """Walker density on the dual cells of ``grid``; integrates to 1 exactly."""
    idx = np.rint((e.positions - grid.origin) / grid.spacing).astype(np.int64)
    if grid.periodic:
        idx = np.mod(idx, grid.n_nodes)
    else:
        idx = np.clip(idx, 0, grid.n_nodes - 1)
    counts = np.bincount(idx, minlength=grid.n_nodes)
    return counts / (e.N * grid.weights)


def histogram_stderr(rho: np.ndarray, grid: Grid, N: int) -> float:
    """Scale of the L1 distance a histogram of N samples shows from its own parent density.

    Sum over cells of the binomial standard error of the cell probability.
    """
    p = np.clip(np.asarray(rho) * grid.weights, 0.0, 1.0)
    return float(np.sum(np.sqrt(p * (1 - p) / N)))


# ---------------------------------------------------------------- Fokker-Planck

def _fp_update(rho: np.ndarray, drift: np.ndarray, nu: float, dt: float, grid: Grid,
               direction: Direction) -> np.ndarray:
    h = grid.spacing
    if nu > 0 and dt > h * h / (2 * nu):
        raise ValueError(f"CFL violation: dt={dt} > spacing^2/(2 nu)={h * h / (2 * nu)}")
    if dt * float(np.max(np.abs(drift))) > h:
        raise ValueError("CFL violation: dt * max|b| > spacing")
    # backward in time with b* is forward on the reversed clock with -b*
    b = np.asarray(drift, dtype=float) if direction == "forward" else -np.asarray(drift, dtype=float)
    q = rho * b
    if grid.periodic:
        flux = 0.5 * (q + np.roll(q, -1)) - nu * (np.roll(rho, -1) - rho) / h  # face i+1/2
        div = flux - np.roll(flux, 1)
    else:
        inner = 0.5 * (q[:-1] + q[1:]) - nu * (rho[1:] - rho[:-1]) / h
        flux = np.concatenate(([0.0], inner, [0.0]))  # no flux through the walls
        div = flux[1:] - flux[:-1]
    return rho - dt * div / grid.weights


def fokker_planck_step(rho: np.ndarray, drift: np.ndarray, nu: float, dt: float, grid: Grid,
                       direction: Direction = "forward") -> np.ndarray:
    """Explicit conservative step of rho_dot = -(rho b)' + nu rho'' (or its backward twin).

    ``direction="backward"`` takes ``drift`` to be b* and returns the density
    a time dt earlier.  Negative undershoots are clipped and the density is
    renormalised; the clipped mass is logged.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = _fp_update(np.asarray(rho, dtype=float), drift, nu, dt, grid, direction)
    clipped = _clip_mass(out, grid)
    if clipped > 0:
        log.warning("Fokker-Planck step clipped %.3e of mass", clipped)
        mass = integrate(out, grid)
        out = np.maximum(out, 0.0) * (mass / integrate(np.maximum(out, 0.0), grid))
    return out


def _clip_mass(rho: np.ndarray, grid: Grid) -> float:
    return -integrate(np.minimum(rho, 0.0), grid)


@dataclass
class DensityRun:
    densities: list[np.ndarray]
    times: list[float]
    max_clipped: float = 0.0

    @property
    def valid(self) -> bool:
        return self.max_clipped <= CLIP_LIMIT


def propagate_density(rho0: np.ndarray, drifts: Iterable[np.ndarray], nu: float, dt: float,
                      grid: Grid, t0: float = 0.0, record_stride: int = 1,
                      direction: Direction = "forward") -> DensityRun:
    sign = 1.0 if direction == "forward" else -1.0
    rho = np.asarray(rho0, dtype=float)
    run = DensityRun([rho], [t0])
    k = 0
    for k, b in enumerate(drifts, start=1):
        raw = _fp_update(rho, b, nu, dt, grid, direction)
        clipped = _clip_mass(raw, grid)
        run.max_clipped = max(run.max_clipped, clipped)
        rho = fokker_planck_step(rho, b, nu, dt, grid, direction) if clipped > 0 else raw
        if k % record_stride == 0:
            run.densities.append(rho)
            run.times.append(t0 + sign * k * dt)
    if k % record_stride:
        run.densities.append(rho)
        run.times.append(t0 + sign * k * dt)
    return run


# ---------------------------------------------------------------- time reversal

def time_reverse(state: HydroState) -> HydroState:
    """t -> -t: v -> -v, u -> u, hence b -> -b*, b* -> -b; S -> -S."""
    return HydroState.from_fields(state.grid, state.rho, -state.S, -state.v, state.u, state.hbar,
                                  state.floored, -state.winding, -state.t)


# ---------------------------------------------------------------- output

def write_ensemble_csv(path: str | Path, history: Sequence[Ensemble]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "walker_id", "x"])
        for e in history:
            t = repr(float(e.t))
            for i, x in enumerate(e.positions):
                w.writerow([t, i, repr(float(x))])
