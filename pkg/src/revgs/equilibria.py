"""Spatially homogeneous equilibria of the reversible model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Params


def interior_constant(p: Params) -> float:
    """K0 = k1 k2 k3 + k2 k3 k4 + k3 k4 + k4."""
    return p.k1 * p.k2 * p.k3 + p.k2 * p.k3 * p.k4 + p.k3 * p.k4 + p.k4


@dataclass(frozen=True)
class EquilibriumPair:
    e_circ: np.ndarray
    e_b: np.ndarray
    K0: float
    rho: float
    volume: float

    def get(self, which: str) -> np.ndarray:
        if which == "circ":
            return self.e_circ
        if which == "b":
            return self.e_b
        raise ValueError(f"unknown equilibrium {which!r}; expected 'circ' or 'b'")


def compute_equilibria(p: Params, rho: float, volume: float) -> EquilibriumPair:
    """Interior and boundary equilibria with total mass ``rho`` on a domain of size ``volume``."""
    if not rho > 0 or not volume > 0:
        raise ValueError(f"rho and volume must be positive, got rho={rho}, volume={volume}")
    K0 = interior_constant(p)
    level = rho / volume
    e_circ = level * np.array([p.k2 * p.k3 * p.k4, p.k3 * p.k4, p.k4, p.k1 * p.k2 * p.k3]) / K0
    e_b = level * np.array([p.k4, 0.0, 0.0, p.k1]) / (p.k1 + p.k4)
    return EquilibriumPair(e_circ, e_b, K0, float(rho), float(volume))


def equilibrium_energy_E2(pair: EquilibriumPair, p: Params) -> tuple[float, float]:
    """Closed-form quadratic energies of the interior and boundary equilibria."""
    scale = pair.rho ** 2 / pair.volume
    return (scale * p.k2 * p.k3 * p.k4 / pair.K0, scale * p.k4 / (p.k1 + p.k4))


def homogeneous_steady_oracle(p: Params, rho: float, volume: float) -> list[np.ndarray]:
    """Non-negative constant steady states found by solving each branch of

        U4 = (k1/k4) U1,  U3 = U2/k3,  U2^2 (U1 - k2 U2) = 0,  |Omega| sum U = rho

    as a linear system (either ``U2 = 0`` or ``U1 = k2 U2``).
    """
    common = [
        [p.k1, 0.0, 0.0, -p.k4],
        [0.0, 1.0, -p.k3, 0.0],
        [volume, volume, volume, volume],
    ]
    rhs = np.array([0.0, 0.0, rho, 0.0])
    branches = ([0.0, 1.0, 0.0, 0.0], [1.0, -p.k2, 0.0, 0.0])
    solutions = []
    for closing_row in branches:
        A = np.array(common + [closing_row])
        U = np.linalg.solve(A, rhs)
        if np.all(U >= -1e-14 * np.abs(U).max()):
            solutions.append(np.maximum(U, 0.0))
    return solutions
