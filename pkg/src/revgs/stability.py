"""Linearization at the homogeneous equilibria and the center dynamics near the boundary one.

Discrete states are flattened species-major: index ``i * n_cells + j``.
Passing ``grid=None`` gives the single-cell (homogeneous, diffusion-free)
operator on a domain of size ``volume``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .domain import Grid, dirichlet_form, integrate, laplacian_neumann
from .equilibria import compute_equilibria, interior_constant
from .model import Params, reaction_rgs

MAX_DENSE_CELLS = 256
KERNEL_TOL = 1e-9


def kernel_direction(p: Params) -> np.ndarray:
    """Homogeneous null direction of the linearization at the boundary equilibrium."""
    return np.array([p.k4 * (1 + p.k3), -p.k3 * (p.k1 + p.k4), -(p.k1 + p.k4), p.k1 * (1 + p.k3)])


def reaction_jacobian(p: Params, e2: float) -> np.ndarray:
    """Jacobian of the reaction terms at an equilibrium whose second component is ``e2``.

    Uses ``E1 E2 = k2 E2^2``, which holds at both equilibria.
    """
    s = e2 * e2
    return np.array([
        [-s - p.k1, p.k2 * s, 0.0, p.k4],
        [s, -p.k2 * s - 1.0, p.k3, 0.0],
        [0.0, 1.0, -p.k3, 0.0],
        [p.k1, 0.0, 0.0, -p.k4],
    ])


@dataclass(frozen=True)
class CenterManifoldConstants:
    K1: float
    K2: float
    K4: float
    k_vec: np.ndarray


def center_constants(p: Params, rho: float, volume: float) -> CenterManifoldConstants:
    K1 = 1.0 / (volume * (p.k1 + p.k4))
    K2 = 1.0 / (2.0 * volume * (p.k1 + p.k4) * (1 + p.k3))
    K4 = rho * K1 * K2 * p.k3 ** 2 * p.k4 * (p.k1 + p.k4) ** 2 * volume
    return CenterManifoldConstants(K1, K2, K4, kernel_direction(p))


@dataclass
class LinearizedOperator:
    which: str
    params: Params
    rho: float
    grid: Grid | None
    volume: float
    equilibrium: np.ndarray
    matrix: np.ndarray
    zero_mass_basis: np.ndarray

    @property
    def n_cells(self) -> int:
        return 1 if self.grid is None else self.grid.size

    @property
    def cell_volume(self) -> float:
        return self.volume if self.grid is None else self.grid.cell_volume

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply to a (4, *grid.shape) perturbation (or a 4-vector when grid is None)."""
        v = np.asarray(v, dtype=float)
        return (self.matrix @ v.reshape(-1)).reshape(v.shape)


def _laplacian_matrix(grid: Grid) -> np.ndarray:
    eye = np.eye(grid.size).reshape((grid.size,) + grid.shape)
    return laplacian_neumann(grid, eye).reshape(grid.size, grid.size).T


def assemble_linearization(p: Params, rho: float, which: str, grid: Grid | None,
                           volume: float = 1.0, max_cells: int = MAX_DENSE_CELLS) -> LinearizedOperator:
    if grid is not None:
        if grid.size > max_cells:
            raise ValueError(f"grid has {grid.size} cells; the dense eigen path supports at most "
                             f"{max_cells}, reduce the resolution")
        volume = grid.volume
    eq = compute_equilibria(p, rho, volume).get(which)
    n = 1 if grid is None else grid.size
    jac = reaction_jacobian(p, eq[1])
    matrix = np.kron(jac, np.eye(n))
    if grid is not None:
        matrix += np.kron(np.diag(p.d), _laplacian_matrix(grid))
    # orthonormal basis of {v : sum v = 0}; uniform cell weights make this the zero-mass subspace
    basis = scipy.linalg.null_space(np.ones((1, 4 * n)))
    return LinearizedOperator(which, p, float(rho), grid, float(volume), eq, matrix, basis)


def _integral(opr: LinearizedOperator, f: np.ndarray):
    if opr.grid is None:
        return np.asarray(f) * opr.volume
    return integrate(opr.grid, f)


def weighted_form_check(opr: LinearizedOperator, v: np.ndarray) -> tuple[float, float]:
    """Both sides of  int L[v] . V(v) = -sum D_i |grad v_i|^2 - (pairing terms)."""
    p = opr.params
    shape = (4,) if opr.grid is None else (4,) + opr.grid.shape
    v = np.asarray(v, dtype=float).reshape(shape)
    weights = p.scales.reshape((4,) + (1,) * (v.ndim - 1))
    lhs = float(np.sum(_integral(opr, opr.apply(v) * weights * v)))

    e2sq = opr.equilibrium[1] ** 2
    pairing = (e2sq * _integral(opr, (v[0] - p.k2 * v[1]) ** 2)
               + p.k2 * _integral(opr, (v[1] - p.k3 * v[2]) ** 2)
               + _integral(opr, (p.k1 * v[0] - p.k4 * v[3]) ** 2) / p.k1)
    grads = 0.0
    if opr.grid is not None:
        D = p.d * p.scales
        grads = sum(D[i] * dirichlet_form(opr.grid, v[i], v[i]) for i in range(4))
    return lhs, float(-grads - pairing)


@dataclass
class SpectrumReport:
    which: str
    eigenvalues: np.ndarray
    gap: float
    kernel_dim: int
    kernel_vector: np.ndarray | None

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real.max())

    @property
    def max_abs_imag(self) -> float:
        return float(np.abs(self.eigenvalues.imag).max())


def spectrum(opr: LinearizedOperator, kernel_tol: float = KERNEL_TOL) -> SpectrumReport:
    """Eigenvalues of the operator restricted to zero-mass perturbations."""
    B = opr.zero_mass_basis
    reduced = B.T @ opr.matrix @ B
    try:
        vals, vecs = scipy.linalg.eig(reduced)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed for the {opr.which} linearization: {exc}") from exc
    order = np.argsort(-vals.real, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    in_kernel = np.abs(vals) <= kernel_tol
    rest = vals[~in_kernel]
    gap = float(-rest.real.max()) if rest.size else float("inf")

    kernel_vector = None
    if in_kernel.any():
        full = (B @ vecs[:, np.argmax(in_kernel)]).real.reshape(4, opr.n_cells)
        homogeneous = full.mean(axis=1)
        kernel_vector = homogeneous / np.linalg.norm(homogeneous)
        k = kernel_direction(opr.params)
        if kernel_vector @ k < 0:
            kernel_vector = -kernel_vector
    return SpectrumReport(opr.which, vals, gap, int(in_kernel.sum()), kernel_vector)


def homogeneous_spectrum(p: Params, rho: float, which: str, volume: float = 1.0) -> SpectrumReport:
    return spectrum(assemble_linearization(p, rho, which, None, volume))


def q_functional(p: Params, w: np.ndarray, grid: Grid | None = None, volume: float = 1.0) -> float:
    """K2 * int (w1 + w4 - w2 - w3); a bare 4-vector is read as constant fields."""
    w = np.asarray(w, dtype=float)
    if grid is not None:
        volume = grid.volume
        totals = integrate(grid, w)
    else:
        totals = w * volume
    K2 = 1.0 / (2.0 * volume * (p.k1 + p.k4) * (1 + p.k3))
    return float(K2 * (totals[0] + totals[3] - totals[1] - totals[2]))


def nonlinearity_N(p: Params, rho: float, w: np.ndarray, volume: float = 1.0) -> np.ndarray:
    """Remainder of the reaction terms at the boundary equilibrium beyond linear order."""
    w = np.asarray(w, dtype=float)
    e1 = rho * p.k4 / (volume * (p.k1 + p.k4))
    first = w[1] ** 2 * (p.k2 * w[1] - e1 - w[0])
    zero = np.zeros_like(first)
    return np.stack([first, -first, zero, zero])


def center_coefficient_check(p: Params, rho: float, volume: float, xis) -> np.ndarray:
    """q(N(xi k)) / xi^2 for each xi, with the center-manifold graph truncated to zero."""
    k = kernel_direction(p)
    out = []
    for xi in np.atleast_1d(np.asarray(xis, dtype=float)):
        if xi == 0:
            raise ValueError("xi must be non-zero")
        out.append(q_functional(p, nonlinearity_N(p, rho, xi * k, volume), volume=volume) / xi ** 2)
    return np.array(out)


@dataclass
class DecayEnvelope:
    t: np.ndarray
    s: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    K4: float


def boundary_decay_envelope(p: Params, rho: float, s0: float, t_end: float,
                            volume: float = 1.0, n_out: int = 501,
                            rtol: float = 1e-12, atol: float = 1e-15) -> DecayEnvelope:
    """Homogeneous reaction ODE started at E_b + s0 k, projected on the center direction."""
    e_b = compute_equilibria(p, rho, volume).e_b
    k = kernel_direction(p)
    consts = center_constants(p, rho, volume)
    t_eval = np.linspace(0.0, t_end, n_out)
    sol = solve_ivp(lambda _t, u: reaction_rgs(p, u), (0.0, t_end), e_b + s0 * k,
                    method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"homogeneous ODE integration failed: {sol.message}")
    s = np.array([q_functional(p, u - e_b, volume=volume) for u in sol.y.T])
    K4 = consts.K4
    lower = s0 / (1.0 + 3.0 * K4 * s0 * t_eval)
    upper = s0 / (1.0 + K4 * s0 * t_eval)
    return DecayEnvelope(t_eval, s, lower, upper, K4)


def interior_gap_estimate(p: Params, rho: float, grid: Grid) -> float:
    """Spectral gap of the interior linearization on ``grid``."""
    return spectrum(assemble_linearization(p, rho, "circ", grid)).gap


__all__ = [
    "CenterManifoldConstants", "DecayEnvelope", "LinearizedOperator", "SpectrumReport",
    "assemble_linearization", "boundary_decay_envelope", "center_coefficient_check",
    "center_constants", "homogeneous_spectrum", "interior_constant", "interior_gap_estimate",
    "kernel_direction", "nonlinearity_N", "q_functional", "reaction_jacobian", "spectrum",
    "weighted_form_check",
]
