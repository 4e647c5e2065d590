"""Right-hand sides of the reversible and classical Gray-Scott systems."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .domain import Grid, State, laplacian_neumann


@dataclass(frozen=True)
class Params:
    """Diffusivities ``d1..d4`` and rates ``k1..k4`` of the reversible model."""

    d1: float = 1e-2
    d2: float = 1e-2
    d3: float = 1e-2
    d4: float = 1e-2
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{f.name} must be positive, got {value}")
            object.__setattr__(self, f.name, value)

    @property
    def d(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3, self.d4])

    @property
    def k(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3, self.k4])

    @property
    def scales(self) -> np.ndarray:
        """Multipliers turning ``u_i`` into the arguments of the convex profile."""
        return np.array([1.0, self.k2, self.k2 * self.k3, self.k4 / self.k1])

    @property
    def energy_weights(self) -> np.ndarray:
        return np.array([1.0, 1.0 / self.k2, 1.0 / (self.k2 * self.k3), self.k1 / self.k4])

    @classmethod
    def eps_regime(cls, eps: float, d1: float, d2: float, d3: float, k1: float) -> "Params":
        """Parameters with ``k2 = k3 = k4 = d4 = eps``."""
        return cls(d1=d1, d2=d2, d3=d3, d4=eps, k1=k1, k2=eps, k3=eps, k4=eps)


@dataclass(frozen=True)
class GSParams:
    """Classical Gray-Scott parameters; the feed ``a`` may be a field.

    ``d3`` is only needed when the limit heat equation for ``u3`` rides along.
    """

    d1: float
    d2: float
    k1: float
    a: np.ndarray | float
    d3: float | None = None

    def __post_init__(self):
        for name in ("d1", "d2", "k1") + (("d3",) if self.d3 is not None else ()):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        a = np.asarray(self.a, dtype=float)
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("feed a must be finite and non-negative")
        object.__setattr__(self, "a", a)

    @property
    def d(self) -> np.ndarray:
        return np.array([self.d1, self.d2])


def reaction_fluxes(p: Params, u: np.ndarray):
    """Net rates of the three reversible reactions (cubic, u2<->u3, u1<->u4)."""
    u1, u2, u3, u4 = u
    cubic = u2 * u2 * (u1 - p.k2 * u2)
    return cubic, u2 - p.k3 * u3, p.k1 * u1 - p.k4 * u4


def reaction_rgs(p: Params, u: np.ndarray) -> np.ndarray:
    """Cellwise reaction terms; ``u`` has the species on axis 0.

    Each reaction flux is computed once and enters two species with opposite
    signs, so the four components cancel up to a few ulps of the largest flux.
    """
    u = np.asarray(u, dtype=float)
    cubic, exch23, exch14 = reaction_fluxes(p, u)
    return np.stack([-cubic - exch14, cubic - exch23, exch23, exch14])


def rhs_rgs(p: Params, s: State) -> np.ndarray:
    lap = laplacian_neumann(s.grid, s.u)
    return p.d.reshape((4,) + (1,) * s.grid.dim) * lap + reaction_rgs(p, s.u)


def reaction_gs(p: GSParams, u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    growth = u1 * u2 * u2
    return -growth - p.k1 * u1 + p.a, growth - u2


def rhs_gs(p: GSParams, grid: Grid, u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r1, r2 = reaction_gs(p, u1, u2)
    return p.d1 * laplacian_neumann(grid, u1) + r1, p.d2 * laplacian_neumann(grid, u2) + r2


def reaction_reduced_linear(p: Params, u1: np.ndarray, u4: np.ndarray):
    exch = p.k1 * u1 - p.k4 * u4
    return -exch, exch


def rhs_reduced_linear(p: Params, grid: Grid, u1: np.ndarray, u4: np.ndarray):
    r1, r4 = reaction_reduced_linear(p, u1, u4)
    return p.d1 * laplacian_neumann(grid, u1) + r1, p.d4 * laplacian_neumann(grid, u4) + r4


def rhs_limit_u3(grid: Grid, d3: float, u3: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Heat equation for the third species driven by the classical ``u2``."""
    return d3 * laplacian_neumann(grid, u3) + u2
