"""Physical parameters and the relation between hbar, nu and the osmotic coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .fields import Grid

HbarConvention = Literal["implemented", "half"]


def hbar_from(nu: float, m: float, osmotic_coupling: float,
              convention: HbarConvention = "implemented") -> float:
    """Action scale implied by a diffusion constant, mass and osmotic coupling.

    ``implemented``: hbar = 2 nu sqrt(m b), the value for which the
    Hamilton-Jacobi equation with the quantum term coincides with the real
    part of the Schrodinger equation.  ``half``: hbar = nu sqrt(m b).
    """
    if nu < 0 or m < 0 or osmotic_coupling < 0:
        raise ValueError("nu, m and osmotic_coupling must be non-negative")
    root = math.sqrt(m * osmotic_coupling)
    if convention == "implemented":
        return 2.0 * nu * root
    if convention == "half":
        return nu * root
    raise ValueError(f"unknown hbar convention {convention!r}")


def nu_from(hbar: float, m: float, osmotic_coupling: float,
            convention: HbarConvention = "implemented") -> float:
    """Inverse of :func:`hbar_from` for fixed m and coupling."""
    if not (m > 0 and osmotic_coupling > 0):
        raise ValueError("need m > 0 and osmotic_coupling > 0 to solve for nu")
    return hbar / hbar_from(1.0, m, osmotic_coupling, convention)


@dataclass(frozen=True)
class PhysParams:
    m: float = 1.0
    nu: float = 0.5
    osmotic_coupling: float = 1.0
    hbar_convention: HbarConvention = "implemented"
    # potential on the working grid; None means U = 0
    potential: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.m > 0:
            raise ValueError("mass must be positive")
        if self.nu < 0 or self.osmotic_coupling < 0:
            raise ValueError("nu and osmotic_coupling must be non-negative")

    @classmethod
    def natural(cls, hbar: float = 1.0, m: float = 1.0, osmotic_coupling: float | None = None,
                convention: HbarConvention = "implemented",
                potential: np.ndarray | None = None) -> PhysParams:
        """Parameters with a prescribed hbar; the coupling defaults to b = m."""
        b = m if osmotic_coupling is None else osmotic_coupling
        return cls(m, nu_from(hbar, m, b, convention), b, convention, potential)

    @property
    def hbar(self) -> float:
        return hbar_from(self.nu, self.m, self.osmotic_coupling, self.hbar_convention)

    def U(self, grid: Grid) -> np.ndarray:
        if self.potential is None:
            return np.zeros(grid.n_nodes)
        U = np.asarray(self.potential, dtype=float)
        if U.shape != (grid.n_nodes,):
            raise ValueError("potential does not match grid")
        return U

    def with_potential(self, potential: np.ndarray | None) -> PhysParams:
        return replace(self, potential=potential)

    def as_dict(self) -> dict:
        return {"m": self.m, "nu": self.nu, "osmotic_coupling": self.osmotic_coupling,
                "hbar_convention": self.hbar_convention, "hbar": self.hbar}


def harmonic_potential(grid: Grid, m: float, omega: float, center: float = 0.0) -> np.ndarray:
    return 0.5 * m * omega**2 * (grid.x - center) ** 2
