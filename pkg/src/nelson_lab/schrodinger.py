"""Crank-Nicolson reference integrator for i hbar dPsi/dt = [-hbar^2/2m d^2 + U] Psi.

On reflecting grids the first and last nodes are hard walls where Psi = 0;
the scheme acts on the interior nodes only.  Circles use the cyclic
three-point Laplacian.  Both are solved by a sparse LU factorisation that
is computed once per (grid, params, dt).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import Grid, integrate
from .params import PhysParams


@dataclass(frozen=True)
class WaveField:
    psi: np.ndarray
    grid: Grid
    t: float = 0.0

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (self.grid.n_nodes,):
            raise ValueError("wavefunction does not match grid")
        object.__setattr__(self, "psi", psi)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def norm(self) -> float:
        return integrate(self.density, self.grid)

    def at(self, t: float) -> WaveField:
        return replace(self, t=t)


def _normalized(psi: np.ndarray, grid: Grid) -> np.ndarray:
    if not grid.periodic:
        psi = psi.copy()
        psi[0] = psi[-1] = 0.0
    norm = integrate(np.abs(psi) ** 2, grid)
    if not norm > 0:
        raise ValueError("wavefunction has zero norm")
    return psi / math.sqrt(norm)


def hamiltonian(grid: Grid, params: PhysParams) -> sp.csc_matrix:
    """Discrete Hamiltonian on the active nodes (all nodes on a circle, interior on a line)."""
    hbar, m, h = params.hbar, params.m, grid.spacing
    kin = hbar**2 / (2 * m * h**2)
    U = params.U(grid)
    if grid.periodic:
        n = grid.n_nodes
        H = sp.diags([np.full(n - 1, -kin), 2 * kin + U, np.full(n - 1, -kin)], [-1, 0, 1],
                     format="lil", dtype=complex)
        H[0, n - 1] = -kin
        H[n - 1, 0] = -kin
        return H.tocsc()
    n = grid.n_nodes - 2
    return sp.diags([np.full(n - 1, -kin), 2 * kin + U[1:-1], np.full(n - 1, -kin)], [-1, 0, 1],
                    format="csc", dtype=complex)


def _active(grid: Grid) -> slice:
    return slice(None) if grid.periodic else slice(1, -1)


class CrankNicolson:
    """Factorised propagator for one (grid, params, dt)."""

    def __init__(self, grid: Grid, params: PhysParams, dt: float):
        if dt == 0:
            raise ValueError("dt must be non-zero")
        hbar = params.hbar
        if not hbar > 0:
            raise ValueError("Schrodinger evolution needs hbar > 0")
        if abs(dt) > grid.spacing**2 * params.m / hbar:
            # unconditionally stable, but phases of short waves are poorly resolved
            warnings.warn(f"dt={dt} exceeds spacing^2 m / hbar; accuracy degrades", stacklevel=2)
        self.grid, self.params, self.dt = grid, params, dt
        H = hamiltonian(grid, params)
        eye = sp.identity(H.shape[0], dtype=complex, format="csc")
        a = 0.5j * dt / hbar
        self._rhs = (eye - a * H).tocsr()
        try:
            self._lu = spla.splu((eye + a * H).tocsc())
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular Crank-Nicolson system: {exc}") from exc

    def step(self, wave: WaveField) -> WaveField:
        if wave.grid != self.grid:
            raise ValueError("wavefunction lives on a different grid")
        act = _active(self.grid)
        out = np.zeros_like(wave.psi)
        out[act] = self._lu.solve(self._rhs @ wave.psi[act])
        if not np.all(np.isfinite(out)):
            raise np.linalg.LinAlgError("Crank-Nicolson solve produced non-finite values")
        return WaveField(out, self.grid, wave.t + self.dt)


def step(wave: WaveField, dt: float, params: PhysParams) -> WaveField:
    return CrankNicolson(wave.grid, params, dt).step(wave)


def iter_states(wave: WaveField, n_steps: int, dt: float, params: PhysParams) -> Iterator[WaveField]:
    """Yield the initial state and every one of the next ``n_steps`` states."""
    yield wave
    if n_steps <= 0:
        return
    solver = CrankNicolson(wave.grid, params, dt)
    t0 = wave.t
    for k in range(1, n_steps + 1):
        wave = solver.step(wave).at(t0 + k * dt)
        yield wave


def n_steps_for(t_final: float, dt: float) -> int:
    n = round(t_final / dt)
    if not math.isclose(n * dt, t_final, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"t_final={t_final} is not a multiple of dt={dt}")
    return n


def evolve(wave: WaveField, t_final: float, dt: float, params: PhysParams,
           stride: int = 10) -> list[WaveField]:
    """Snapshots every ``stride`` steps, always including the first and the last."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return [wave]
    n = n_steps_for(t_final, dt)
    out = []
    for k, w in enumerate(iter_states(wave, n, dt, params)):
        if k % stride == 0 or k == n:
            out.append(w)
    return out


# ---------------------------------------------------------------- initial states

def gaussian_packet(grid: Grid, params: PhysParams, center: float = 0.0,
                    width: float = 1.0, velocity: float = 0.0) -> WaveField:
    """Packet whose density is a Gaussian of standard deviation ``width``."""
    if not width > 0:
        raise ValueError("width must be positive")
    x = grid.x - center
    psi = np.exp(-x**2 / (4 * width**2) + 1j * params.m * velocity * x / params.hbar)
    return WaveField(_normalized(psi, grid), grid)


def plane_wave(grid: Grid, params: PhysParams, w: float) -> WaveField:
    """exp(i m w x / hbar) / sqrt(L) sampled on a circle; may jump at the seam."""
    if not grid.periodic:
        raise ValueError("plane waves require a periodic grid")
    psi = np.exp(1j * params.m * w * grid.x / params.hbar)
    return WaveField(_normalized(psi, grid), grid)


def eigenstate(grid: Grid, params: PhysParams, level: int = 0) -> tuple[WaveField, float]:
    """Eigenvector of the discrete Hamiltonian and its eigenvalue."""
    H = hamiltonian(grid, params)
    if grid.periodic:
        vals, vecs = np.linalg.eigh(H.toarray())
        E, vec = vals[level], vecs[:, level]
    else:
        d = H.diagonal().real
        e = H.diagonal(1).real
        vals, vecs = scipy.linalg.eigh_tridiagonal(d, e, select="i", select_range=(level, level))
        E, vec = vals[0], np.concatenate(([0.0], vecs[:, 0], [0.0]))
    vec = np.asarray(vec, dtype=complex)
    k = int(np.argmax(np.abs(vec)))
    vec *= np.exp(-1j * np.angle(vec[k]))
    return WaveField(_normalized(vec, grid), grid), float(E)


def init_packet(kind: str, grid: Grid, params: PhysParams, **kw) -> WaveField:
    if kind == "gaussian":
        return gaussian_packet(grid, params, **kw)
    if kind == "plane_wave":
        return plane_wave(grid, params, **kw)
    if kind == "eigenstate":
        return eigenstate(grid, params, **kw)[0]
    raise ValueError(f"unknown packet kind {kind!r}")


# ---------------------------------------------------------------- observables

def _spectral_derivative(psi: np.ndarray, grid: Grid) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(grid.n_nodes, d=grid.spacing)
    return np.fft.ifft(1j * k * np.fft.fft(psi))


def energy_expectation(wave: WaveField, params: PhysParams) -> float:
    """<Psi|H|Psi> by quadrature.

    Lines use cell differences, which reproduce the discrete Hamiltonian the
    integrator conserves; circles use the spectral derivative.
    """
    grid, psi = wave.grid, wave.psi
    c = params.hbar**2 / (2 * params.m)
    if grid.periodic:
        kinetic = c * integrate(np.abs(_spectral_derivative(psi, grid)) ** 2, grid)
    else:
        dpsi = np.diff(psi) / grid.spacing
        kinetic = c * grid.spacing * float(np.sum(np.abs(dpsi) ** 2))
    return kinetic + integrate(params.U(grid) * wave.density, grid)


def moments(wave: WaveField) -> tuple[float, float]:
    """Mean and variance of the position density."""
    rho, x = wave.density, wave.grid.x
    norm = integrate(rho, wave.grid)
    mean = integrate(rho * x, wave.grid) / norm
    return mean, integrate(rho * (x - mean) ** 2, wave.grid) / norm


def free_gaussian_variance(width0: float, t: float, hbar: float, m: float) -> float:
    return width0**2 * (1 + (hbar * t / (2 * m * width0**2)) ** 2)


# ---------------------------------------------------------------- output

def write_snapshots_csv(path: str | Path, snapshots: Sequence[WaveField]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "re", "im"])
        for snap in snapshots:
            for x, z in zip(snap.grid.x, snap.psi):
                w.writerow([repr(float(snap.t)), repr(float(x)), repr(z.real), repr(z.imag)])


def write_run_metadata(path: str | Path, grid: Grid, params: PhysParams, dt: float,
                       stride: int) -> None:
    meta = {
        "grid": {"n_nodes": grid.n_nodes, "spacing": grid.spacing,
                 "topology": grid.topology, "origin": grid.origin},
        "params": params.as_dict(),
        "dt": dt,
        "stride": stride,
    }
    Path(path).write_text(json.dumps(meta, indent=2))
