"""Cell-centered rectangular grids with homogeneous Neumann closure.

Fields are plain numpy arrays whose trailing axes match ``Grid.shape``;
any leading axes (species, samples) are carried through untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on ``[0, L_1] x ... x [0, L_n]`` (n = 1 or 2)."""

    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "cells", cells)
        if len(extent) != len(cells) or len(cells) not in (1, 2):
            raise ValueError(f"grid must be 1D or 2D, got extent={extent}, cells={cells}")
        if any(c < 3 for c in cells):
            raise ValueError(f"need at least 3 cells per axis, got {cells}")
        if any(not np.isfinite(e) or e <= 0 for e in extent):
            raise ValueError(f"extents must be positive, got {extent}")

    @classmethod
    def interval(cls, cells: int = 128, length: float = 1.0) -> "Grid":
        return cls((length,), (cells,))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def weights(self) -> np.ndarray:
        return np.full(self.shape, self.cell_volume)

    def centers(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates, one array per axis (``indexing='ij'``)."""
        axes = [(np.arange(c) + 0.5) * h for c, h in zip(self.cells, self.spacing)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def _axes(self, f: np.ndarray) -> tuple[int, ...]:
        if f.shape[f.ndim - self.dim:] != self.shape:
            raise ValueError(f"field shape {f.shape} does not end with grid shape {self.shape}")
        return tuple(range(f.ndim - self.dim, f.ndim))


def laplacian_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Five-point (three-point in 1D) Laplacian with mirror ghost cells."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for axis, h in zip(grid._axes(f), grid.spacing):
        # flux through interior faces; boundary faces carry zero flux
        flux = np.diff(f, axis=axis) / h
        pad = [(0, 0)] * f.ndim
        pad[axis] = (1, 1)
        flux = np.pad(flux, pad)
        out += np.diff(flux, axis=axis) / h
    return out


def face_gradients(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    """Differences across interior faces, one array per axis."""
    f = np.asarray(f, dtype=float)
    return [np.diff(f, axis=axis) / h for axis, h in zip(grid._axes(f), grid.spacing)]


def face_weight(grid: Grid) -> float:
    """Quadrature weight of a single interior face (same for every axis)."""
    return grid.cell_volume


def integrate(grid: Grid, f: np.ndarray) -> np.ndarray | float:
    """Midpoint quadrature over the trailing grid axes."""
    f = np.asarray(f, dtype=float)
    total = f.sum(axis=grid._axes(f)) * grid.cell_volume
    return float(total) if np.ndim(total) == 0 else total


def norm_p(grid: Grid, f: np.ndarray, p: float = 2.0) -> np.ndarray | float:
    """Discrete L_p norm; ``p=np.inf`` gives the max norm."""
    if not p >= 1:
        raise ValueError(f"norm order must be >= 1, got {p}")
    f = np.abs(np.asarray(f, dtype=float))
    axes = grid._axes(f)
    if np.isinf(p):
        out = f.max(axis=axes)
    elif p == 2:
        out = np.sqrt((f * f).sum(axis=axes) * grid.cell_volume)
    else:
        out = ((f ** p).sum(axis=axes) * grid.cell_volume) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_form(grid: Grid, f: np.ndarray, g: np.ndarray) -> np.ndarray | float:
    """Face quadrature of grad f . grad g; the partner of ``laplacian_neumann``."""
    total = 0.0
    for gf, gg in zip(face_gradients(grid, f), face_gradients(grid, g)):
        axes = tuple(range(gf.ndim - grid.dim, gf.ndim))
        total = total + (gf * gg).sum(axis=axes) * face_weight(grid)
    return float(total) if np.ndim(total) == 0 else total


@dataclass
class State:
    """Four concentration fields ``u[i]`` on one grid at time ``t``."""

    grid: Grid
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.array(self.u, dtype=float)
        if self.u.shape != (4,) + self.grid.shape:
            raise ValueError(f"state must have shape {(4,) + self.grid.shape}, got {self.u.shape}")

    @classmethod
    def constant(cls, grid: Grid, values, t: float = 0.0) -> "State":
        values = np.asarray(values, dtype=float).reshape((4,) + (1,) * grid.dim)
        return cls(grid, np.broadcast_to(values, (4,) + grid.shape).copy(), t)

    def copy(self) -> "State":
        return State(self.grid, self.u.copy(), self.t)


def mass(state: State) -> float:
    return float(np.sum(integrate(state.grid, state.u)))
