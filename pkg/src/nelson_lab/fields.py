"""Uniform 1D grids and the discrete calculus shared by every other module.

Fields are plain numpy arrays holding one value per grid node; the grid is
passed alongside.  Two topologies are supported:

* ``periodic`` -- a circle; node ``n_nodes`` is node 0 again, quadrature is
  the rectangle rule over ``n_nodes`` cells.
* ``reflecting`` -- a closed segment ``[origin, origin + (n-1) h]``,
  quadrature is the trapezoid rule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

Topology = Literal["periodic", "reflecting"]

MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    n_nodes: int
    spacing: float
    topology: Topology = "reflecting"
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.n_nodes < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes, got {self.n_nodes}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.topology not in ("periodic", "reflecting"):
            raise ValueError(f"unknown topology {self.topology!r}")

    @classmethod
    def line(cls, lower: float, upper: float, n_nodes: int) -> Grid:
        """Reflecting grid whose first and last nodes sit on the walls."""
        return cls(n_nodes, (upper - lower) / (n_nodes - 1), "reflecting", lower)

    @classmethod
    def circle(cls, n_nodes: int, circumference: float = 2 * np.pi) -> Grid:
        return cls(n_nodes, circumference / n_nodes, "periodic", 0.0)

    @property
    def periodic(self) -> bool:
        return self.topology == "periodic"

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_nodes)

    @property
    def length(self) -> float:
        """Circumference on circles, wall-to-wall distance on lines."""
        if self.periodic:
            return self.n_nodes * self.spacing
        return (self.n_nodes - 1) * self.spacing

    @property
    def upper(self) -> float:
        return self.origin + self.length

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights; also the volume of each node's dual cell."""
        w = np.full(self.n_nodes, self.spacing)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.spacing
        return w


def _check(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = np.asarray(f)
    if f.shape != (grid.n_nodes,):
        raise ValueError(f"field has shape {f.shape}, grid has {grid.n_nodes} nodes")
    return f


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order central differences; one-sided second-order at walls."""
    f = _check(f, grid)
    h = grid.spacing
    if grid.periodic:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2 * h)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    # difference form keeps constants exactly zero
    g[0] = (4 * (f[1] - f[0]) - (f[2] - f[0])) / (2 * h)
    g[-1] = (4 * (f[-1] - f[-2]) - (f[-1] - f[-3])) / (2 * h)
    return g


# In one dimension the divergence of a vector field is its derivative.
divergence = gradient


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Divergence of the gradient (the wide, five-point stencil in the interior)."""
    return divergence(gradient(f, grid), grid)


def second_derivative(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Compact three-point second derivative.

    Periodic grids wrap; on reflecting grids the values beyond the walls are
    taken as zero (Dirichlet), which is what the hard-wall Hamiltonian uses.
    """
    f = _check(f, grid)
    h2 = grid.spacing**2
    if grid.periodic:
        return (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / h2
    padded = np.concatenate(([0.0], f, [0.0])).astype(f.dtype)
    return (padded[2:] - 2 * f + padded[:-2]) / h2


def integrate(f: np.ndarray, grid: Grid) -> float:
    f = _check(f, grid)
    return float(np.dot(grid.weights, f))


def normalize(rho: np.ndarray, grid: Grid) -> np.ndarray:
    rho = _check(rho, grid)
    if np.any(rho < 0):
        raise ValueError("density has negative values")
    mass = integrate(rho, grid)
    if not mass > 0:
        raise ValueError(f"density has non-positive total mass {mass}")
    return rho / mass


def interpolate(f: np.ndarray, grid: Grid, points: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of a node field at arbitrary points.

    Periodic grids wrap the points; on reflecting grids points beyond the
    walls take the boundary node value.
    """
    f = _check(f, grid)
    s = (np.asarray(points, dtype=float) - grid.origin) / grid.spacing
    n = grid.n_nodes
    if grid.periodic:
        s = np.mod(s, n)
        f = np.append(f, f[0])
    else:
        s = np.clip(s, 0.0, n - 1)
    i = np.minimum(s.astype(np.int64), f.size - 2)
    frac = s - i
    return f[i] * (1.0 - frac) + f[i + 1] * frac


def resample(f: np.ndarray, grid: Grid, target: Grid) -> np.ndarray:
    """Values of ``f`` at the nodes of another grid over the same domain."""
    return interpolate(f, grid, target.x)


def l1_distance(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    return integrate(np.abs(np.asarray(f) - np.asarray(g)), grid)


def write_csv(path: str | Path, grid: Grid, values: np.ndarray) -> None:
    values = _check(values, grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(grid.x, values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
