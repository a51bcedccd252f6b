"""Subsystem plus hidden variable: joint densities on an (x, y) product lattice.

A joint density rho~(x, y) and a velocity map xdot(x, y) describe a
subsystem whose velocity depends on an unobserved coordinate y.  Averaging
over y at fixed x gives the marginal rho(x), the conditional drift b(x) and
the conditional variance of xdot; the averaged subsystem energy splits
exactly into a drift part and a fluctuation part.

Sums over y are exactly rounded (math.fsum), so permuting y nodes together
with their values and weights leaves every per-x quantity bit-identical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import Grid
from .madelung import DENSITY_FLOOR, HydroState

NORM_TOL = 1e-10


def _ysum(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in a])


@dataclass(frozen=True)
class JointDensity:
    values: np.ndarray  # shape (nx, ny)
    xgrid: Grid
    ygrid: Grid
    y_weights: np.ndarray | None = None  # defaults to the y-grid quadrature weights

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.xgrid.n_nodes, self.ygrid.n_nodes):
            raise ValueError(f"values have shape {vals.shape}, lattice is "
                             f"{(self.xgrid.n_nodes, self.ygrid.n_nodes)}")
        if np.any(vals < 0):
            raise ValueError("joint density has negative values")
        wy = self.ygrid.weights if self.y_weights is None else np.asarray(self.y_weights, float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "y_weights", wy)
        mass = float(np.dot(self.xgrid.weights, _ysum(vals * wy)))
        if abs(mass - 1) > NORM_TOL:
            raise ValueError(f"joint density integrates to {mass}, not 1")

    @classmethod
    def normalized(cls, values: np.ndarray, xgrid: Grid, ygrid: Grid) -> JointDensity:
        vals = np.asarray(values, dtype=float)
        mass = float(np.dot(xgrid.weights, vals @ ygrid.weights))
        if not mass > 0:
            raise ValueError("joint density has no mass")
        return cls(vals / mass, xgrid, ygrid)

    def permute_y(self, perm: np.ndarray) -> JointDensity:
        return JointDensity(self.values[:, perm], self.xgrid, self.ygrid, self.y_weights[perm])

    def write_csv(self, path: str | Path) -> None:
        _write_lattice(path, self.xgrid, self.ygrid, self.values)


@dataclass(frozen=True)
class VelocityMap:
    xdot: np.ndarray  # shape (nx, ny)
    m: float = 1.0

    def __post_init__(self) -> None:
        xd = np.asarray(self.xdot, dtype=float)
        if not np.all(np.isfinite(xd)):
            raise ValueError("velocity map has non-finite entries")
        object.__setattr__(self, "xdot", xd)

    def permute_y(self, perm: np.ndarray) -> VelocityMap:
        return VelocityMap(self.xdot[:, perm], self.m)

    def write_csv(self, path: str | Path, xgrid: Grid, ygrid: Grid) -> None:
        _write_lattice(path, xgrid, ygrid, self.xdot)


def _write_lattice(path, xgrid: Grid, ygrid: Grid, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for i, x in enumerate(xgrid.x):
            for j, y in enumerate(ygrid.x):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(values[i, j]))])


def _check_pair(joint: JointDensity, vel: VelocityMap) -> None:
    if vel.xdot.shape != joint.values.shape:
        raise ValueError("velocity map and joint density live on different lattices")


# ---------------------------------------------------------------- y averages

def marginal(joint: JointDensity) -> np.ndarray:
    return _ysum(joint.values * joint.y_weights)


def _floored(rho: np.ndarray) -> np.ndarray:
    return rho <= DENSITY_FLOOR * float(np.max(rho))


def _moments(joint: JointDensity, vel: VelocityMap):
    """Marginal, y-mean of xdot (zero where rho = 0) and y-second moment about it."""
    _check_pair(joint, vel)
    wr = joint.values * joint.y_weights
    rho = _ysum(wr)
    safe = np.where(rho > 0, rho, 1.0)
    b = np.where(rho > 0, _ysum(wr * vel.xdot) / safe, 0.0)
    # rows constant in y: exact mean, exactly zero spread
    const = np.all(vel.xdot == vel.xdot[:, :1], axis=1)
    b = np.where(const & (rho > 0), vel.xdot[:, 0], b)
    spread = np.where(const, 0.0, _ysum(wr * (vel.xdot - b[:, None]) ** 2))
    return rho, b, spread


def conditional_drift(joint: JointDensity, vel: VelocityMap) -> np.ndarray:
    """b(x) = int dy rho~ xdot / rho(x); NaN marks nodes under the density floor."""
    rho, b, _ = _moments(joint, vel)
    return np.where(_floored(rho), np.nan, b)


def conditional_variance(joint: JointDensity, vel: VelocityMap) -> np.ndarray:
    """Var(xdot | x); NaN marks nodes under the density floor."""
    rho, _, spread = _moments(joint, vel)
    safe = np.where(rho > 0, rho, 1.0)
    return np.where(_floored(rho), np.nan, spread / safe)


def subsystem_energy(joint: JointDensity, vel: VelocityMap, U: np.ndarray | None = None) -> float:
    """Lattice quadrature of rho~ [ (m/2) xdot^2 + U(x) ]."""
    _check_pair(joint, vel)
    dens = 0.5 * vel.m * vel.xdot**2
    if U is not None:
        dens = dens + np.asarray(U, dtype=float)[:, None]
    return float(np.dot(joint.xgrid.weights, _ysum(joint.values * joint.y_weights * dens)))


def energy_decomposition(joint: JointDensity, vel: VelocityMap,
                         U: np.ndarray | None = None) -> dict:
    """Split the averaged energy into int rho [(m/2) b^2 + U] and (m/2) int rho Var(xdot|x)."""
    rho, b, spread = _moments(joint, vel)
    wx = joint.xgrid.weights
    pot = 0.0 if U is None else float(np.dot(wx, rho * np.asarray(U, dtype=float)))
    drift = 0.5 * vel.m * float(np.dot(wx, rho * b**2)) + pot
    fluct = 0.5 * vel.m * float(np.dot(wx, spread))
    total = subsystem_energy(joint, vel, U)
    return {"total": total, "drift_part": drift, "fluctuation_part": fluct,
            "gap": total - drift - fluct}


def drift_decomposition_report(joint: JointDensity, vel: VelocityMap, target: HydroState,
                               nu: float, dt: float, tol: float = 1e-8) -> dict:
    """Does averaging over y reproduce the Nelson process of ``target`` at resolution dt?

    Compares b(x) with v + u and Var(xdot | x) with 2 nu / dt node by node.
    The diffusion constant implied by the measured variance is reported too;
    a y-independent velocity gives 0 (the classical case).  Residuals are
    judged relative to the larger of 1 and the target scale.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rho, b, spread = _moments(joint, vel)
    live = ~_floored(rho)
    var = np.where(live, spread / np.where(rho > 0, rho, 1.0), np.nan)
    drift_res = np.where(live, b - target.b_fwd, np.nan)
    var_target = 2 * nu / dt
    var_res = var - var_target
    wx = joint.xgrid.weights
    nu_implied = 0.5 * dt * float(np.dot(wx, np.where(live, spread, 0.0)))
    drift_max = float(np.nanmax(np.abs(drift_res)))
    var_max = float(np.nanmax(np.abs(var_res)))
    drift_scale = max(1.0, float(np.max(np.abs(target.b_fwd))))
    var_scale = max(1.0, var_target)
    return {
        "drift_residual": drift_res,
        "variance_residual": var_res,
        "drift_residual_max": drift_max,
        "variance_residual_max": var_max,
        "nu_implied": nu_implied,
        "nu_target": nu,
        "classical": bool(np.nanmax(var) == 0.0),
        "floored_nodes": int(np.sum(~live)),
        "realizes_nelson": drift_max <= tol * drift_scale and var_max <= tol * var_scale,
    }


# ---------------------------------------------------------------- constructions

def bivariate_gaussian(xgrid: Grid, ygrid: Grid, sx: float, sy: float, r: float) -> JointDensity:
    """Centred Gaussian with standard deviations sx, sy and correlation r, normalised on the lattice."""
    if not (sx > 0 and sy > 0 and -1 < r < 1):
        raise ValueError("need sx, sy > 0 and |r| < 1")
    X, Y = np.meshgrid(xgrid.x / sx, ygrid.x / sy, indexing="ij")
    q = (X**2 - 2 * r * X * Y + Y**2) / (1 - r * r)
    return JointDensity.normalized(np.exp(-0.5 * q), xgrid, ygrid)


def product_density(rho_x: np.ndarray, sigma_y: np.ndarray, xgrid: Grid, ygrid: Grid) -> JointDensity:
    return JointDensity.normalized(np.outer(rho_x, sigma_y), xgrid, ygrid)


def standardized_y(ygrid: Grid, sigma_y: np.ndarray) -> np.ndarray:
    """Affine map of the y nodes with lattice mean 0 and variance 1 under sigma_y."""
    w = ygrid.weights * np.asarray(sigma_y, dtype=float)
    w = w / w.sum()
    mean = float(np.dot(w, ygrid.x))
    sd = math.sqrt(float(np.dot(w, (ygrid.x - mean) ** 2)))
    return (ygrid.x - mean) / sd


def nelson_realizing(state: HydroState, nu: float, dt: float, ygrid: Grid,
                     m: float = 1.0) -> tuple[JointDensity, VelocityMap]:
    """Joint density rho(x) sigma(y) whose y-average reproduces ``state``'s Nelson process.

    sigma is a standard Gaussian in y and xdot = b(x) + sqrt(2 nu / dt) y~,
    with y~ the lattice-standardised y, so the conditional mean is v + u and
    the conditional variance is 2 nu / dt up to rounding.
    """
    sigma = np.exp(-0.5 * ygrid.x**2)
    joint = product_density(state.rho, sigma, state.grid, ygrid)
    y = standardized_y(ygrid, sigma)
    xdot = state.b_fwd[:, None] + math.sqrt(2 * nu / dt) * y[None, :]
    return joint, VelocityMap(xdot, m)
