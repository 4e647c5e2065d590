"""Time integration with conservation and steady-state monitoring.

Diffusion is handled implicitly (tridiagonal solves in 1D, cosine-transform
diagonalization in 2D) and every reaction term explicitly. Keeping the
linear decay terms out of the implicit part is what makes the update
conserve total mass: the explicit increments of the four species cancel
cellwise and the Neumann solves leave each species' integral unchanged.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft
import scipy.linalg

from .domain import Grid, State, integrate, norm_p
from .equilibria import EquilibriumPair, compute_equilibria
from .lyapunov import PhiProfile, energy, scaled_max, scaled_sup
from .model import GSParams, Params, reaction_gs, reaction_reduced_linear, reaction_rgs

log = logging.getLogger(__name__)

SCHEMES = ("imex_euler", "strang")
SYSTEMS = ("rgs", "gs", "reduced", "limit_u3")
MAX_HALVINGS = 8


class InstabilityError(RuntimeError):
    def __init__(self, t: float, dt: float, msg: str = "non-finite values"):
        super().__init__(f"{msg} at t={t:.6g} with dt={dt:.3g}")
        self.t = t
        self.dt = dt


class PositivityError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    scheme: str = "imex_euler"
    output_every: float = 0.1
    steady_tol: float = 1e-9
    safety: float = 0.5
    stop_at_steady: bool = True
    check_positivity: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0 and self.steady_tol > 0):
            raise ValueError("dt, t_end and steady_tol must be positive")
        if self.output_every < self.dt * (1 - 1e-12):
            raise ValueError(f"output_every={self.output_every} must be >= dt={self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0 < self.safety < 1:
            raise ValueError("safety factor must lie in (0, 1)")


class Diffusion:
    """Neumann heat operators ``d_i * Laplacian`` for a stack of species."""

    def __init__(self, grid: Grid, diffusivities):
        self.grid = grid
        self.d = np.asarray(diffusivities, dtype=float)
        # eigenvalues of the mirror-ghost Laplacian in the DCT-II basis
        eig = np.zeros(grid.shape)
        for axis, (n, h) in enumerate(zip(grid.cells, grid.spacing)):
            lam = -(2.0 * np.sin(np.pi * np.arange(n) / (2 * n)) / h) ** 2
            shape = [1] * grid.dim
            shape[axis] = n
            eig = eig + lam.reshape(shape)
        self.eig = eig
        self._banded: dict[float, list[np.ndarray]] = {}

    def _axes(self):
        return tuple(range(1, 1 + self.grid.dim))

    def _dct_apply(self, f: np.ndarray, factor: np.ndarray) -> np.ndarray:
        axes = self._axes()
        coeffs = scipy.fft.dctn(f, type=2, axes=axes, norm="ortho")
        return scipy.fft.idctn(coeffs * factor, type=2, axes=axes, norm="ortho")

    def _bands(self, dt: float) -> list[np.ndarray]:
        if dt not in self._banded:
            n = self.grid.cells[0]
            h = self.grid.spacing[0]
            bands = []
            for d in self.d:
                c = dt * d / h ** 2
                ab = np.zeros((3, n))
                ab[0, 1:] = -c
                ab[2, :-1] = -c
                ab[1, :] = 1 + 2 * c
                ab[1, 0] = ab[1, -1] = 1 + c
                bands.append(ab)
            self._banded[dt] = bands
        return self._banded[dt]

    def implicit_solve(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        """Solve (I - dt d_i Laplacian) x_i = rhs_i for every species i."""
        if self.grid.dim == 1:
            out = np.empty_like(rhs)
            for i, ab in enumerate(self._bands(dt)):
                out[i] = scipy.linalg.solve_banded((1, 1), ab, rhs[i],
                                                   overwrite_b=False, check_finite=False)
            return out
        factor = 1.0 / (1.0 - dt * self.d.reshape((-1,) + (1,) * self.grid.dim) * self.eig)
        return self._dct_apply(rhs, factor)

    def implicit_solve_dct(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        factor = 1.0 / (1.0 - dt * self.d.reshape((-1,) + (1,) * self.grid.dim) * self.eig)
        return self._dct_apply(rhs, factor)

    def propagate(self, f: np.ndarray, tau: float) -> np.ndarray:
        """Exact semi-discrete heat flow over time ``tau``."""
        return self._dct_apply(f, np.exp(tau * self.d.reshape((-1,) + (1,) * self.grid.dim) * self.eig))


@dataclass
class System:
    """A reaction-diffusion system as (diffusivities, cellwise reaction)."""

    name: str
    species: tuple[str, ...]
    diffusivities: np.ndarray
    reaction: Callable[[np.ndarray], np.ndarray]


def make_system(name: str, params) -> System:
    if name == "rgs":
        return System(name, ("u1", "u2", "u3", "u4"), params.d, lambda u: reaction_rgs(params, u))
    if name == "gs":
        return System(name, ("u1", "u2"), params.d, lambda u: np.stack(reaction_gs(params, u[0], u[1])))
    if name == "limit_u3":
        if getattr(params, "d3", None) is None:
            raise ValueError("limit_u3 needs GSParams with d3 set")

        def reaction(u):
            r1, r2 = reaction_gs(params, u[0], u[1])
            return np.stack([r1, r2, u[1]])
        return System(name, ("u1", "u2", "u3"), np.array([params.d1, params.d2, params.d3]), reaction)
    if name == "reduced":
        return System(name, ("u1", "u4"), np.array([params.d1, params.d4]),
                      lambda u: np.stack(reaction_reduced_linear(params, u[0], u[1])))
    raise ValueError(f"unknown system {name!r}; expected one of {SYSTEMS}")


_diffusion_cache: dict = {}


def _diffusion(grid: Grid, d) -> Diffusion:
    key = (grid, tuple(np.asarray(d, dtype=float)))
    if key not in _diffusion_cache:
        if len(_diffusion_cache) > 64:
            _diffusion_cache.clear()
        _diffusion_cache[key] = Diffusion(grid, d)
    return _diffusion_cache[key]


def _rk4(reaction, u, dt):
    a = reaction(u)
    b = reaction(u + 0.5 * dt * a)
    c = reaction(u + 0.5 * dt * b)
    d = reaction(u + dt * c)
    return u + dt / 6.0 * (a + 2 * b + 2 * c + d)


def advance(system: System, grid: Grid, u: np.ndarray, dt: float, scheme: str = "imex_euler",
            t: float = 0.0) -> np.ndarray:
    """One step of ``system``; raises InstabilityError on non-finite output."""
    diff = _diffusion(grid, system.diffusivities)
    if scheme == "imex_euler":
        out = diff.implicit_solve(u + dt * system.reaction(u), dt)
    elif scheme == "strang":
        half = diff.propagate(u, 0.5 * dt)
        out = diff.propagate(_rk4(system.reaction, half, dt), 0.5 * dt)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(out)):
        raise InstabilityError(t, dt)
    return out


def step_rgs(p: Params, s: State, dt: float, scheme: str = "imex_euler") -> State:
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = advance(make_system("rgs", p), s.grid, s.u, dt, scheme, s.t)
    return State(s.grid, u, s.t + dt)


def step_gs(p: GSParams, grid: Grid, u1: np.ndarray, u2: np.ndarray, dt: float,
            scheme: str = "imex_euler") -> tuple[np.ndarray, np.ndarray]:
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = advance(make_system("gs", p), grid, np.stack([u1, u2]), dt, scheme)
    return u[0], u[1]


def distance_to_equilibria(s: State, pair: EquilibriumPair) -> tuple[float, float]:
    """L2 distances from ``s`` to the interior and boundary equilibria."""
    out = []
    for eq in (pair.e_circ, pair.e_b):
        diff = s.u - eq.reshape((4,) + (1,) * s.grid.dim)
        out.append(math.sqrt(float(np.sum(integrate(s.grid, diff * diff)))))
    return out[0], out[1]


def _field_l2(grid: Grid, u: np.ndarray) -> float:
    return math.sqrt(float(np.sum(integrate(grid, u * u))))


@dataclass
class TrajectoryLog:
    system: str
    species: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    steady: bool = False
    t_steady: float | None = None
    grid: Grid | None = None
    halvings: int = 0

    @property
    def columns(self) -> list[str]:
        base = ["t", "mass"] + [f"l2_{s}" for s in self.species] + [f"linf_{s}" for s in self.species]
        if self.system == "rgs":
            base += ["E2", "dist_circ", "dist_b", "min_value", "scaled_max", "scaled_sup"]
        elif self.system == "reduced":
            base += ["min_value", "lyap_reduced"]
        else:
            base += ["min_value"]
        return base

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def state_at(self, n: int) -> State:
        return State(self.grid, self.states[n], self.times[n])

    def trajectory(self) -> list[State]:
        return [self.state_at(n) for n in range(len(self.states))]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([f"{row[c]:.17e}" for c in self.columns])


def _log_row(log_: TrajectoryLog, grid: Grid, u: np.ndarray, t: float, params, pair) -> None:
    row = {"t": t, "mass": float(np.sum(integrate(grid, u)))}
    l2 = norm_p(grid, u, 2)
    linf = norm_p(grid, u, np.inf)
    for i, name in enumerate(log_.species):
        row[f"l2_{name}"] = float(l2[i])
        row[f"linf_{name}"] = float(linf[i])
    row["min_value"] = float(u.min())
    if log_.system == "rgs":
        s = State(grid, u, t)
        row["E2"] = energy(PhiProfile("power", 2.0), params, s)
        row["dist_circ"], row["dist_b"] = distance_to_equilibria(s, pair)
        row["scaled_max"] = scaled_max(params, u)
        row["scaled_sup"] = scaled_sup(params, u)
    elif log_.system == "reduced":
        e1, e4 = pair.e_b[0], pair.e_b[3]
        row["lyap_reduced"] = (params.k1 * float(integrate(grid, (u[0] - e1) ** 2))
                               + params.k4 * float(integrate(grid, (u[1] - e4) ** 2)))
    log_.rows.append(row)


def run(system: str, params, init, cfg: SolverConfig, grid: Grid | None = None,
        keep_states: bool = False, snapshot_dir=None) -> TrajectoryLog:
    """Integrate ``system`` from ``init`` until ``cfg.t_end`` or a steady state.

    ``init`` is a State for ``rgs`` or an array with species on axis 0 plus
    ``grid``. A step producing non-finite values is retried as 2, 4, ...
    substeps (factor ``1/cfg.safety`` each time), at most ``MAX_HALVINGS`` times.
    """
    sys_ = make_system(system, params)
    if isinstance(init, State):
        grid = init.grid
        u = init.u.copy()
    else:
        if grid is None:
            raise ValueError("grid is required when init is an array")
        u = np.array(init, dtype=float)
    if u.shape != (len(sys_.species),) + grid.shape:
        raise ValueError(f"{system} expects initial data of shape {(len(sys_.species),) + grid.shape}, "
                         f"got {u.shape}")

    pair = None
    if system == "rgs":
        pair = compute_equilibria(params, float(np.sum(integrate(grid, u))), grid.volume)
    elif system == "reduced":
        pair = compute_equilibria(params, float(np.sum(integrate(grid, u))), grid.volume)

    check_pos = cfg.check_positivity and u.min() >= 0
    out = TrajectoryLog(system, sys_.species, grid=grid)
    snap_dir = Path(snapshot_dir) if snapshot_dir is not None else None
    if snap_dir is not None:
        snap_dir.mkdir(parents=True, exist_ok=True)

    def record(u_, t_):
        _log_row(out, grid, u_, t_, params, pair)
        if keep_states:
            out.states.append(u_.copy())
            out.times.append(t_)
        if snap_dir is not None:
            from .snapshots import write_snapshot
            write_snapshot(snap_dir / f"snap_{len(out.rows) - 1:06d}.txt", grid, t_, u_, sys_.species)
        if check_pos:
            floor = -1e-10 * max(float(np.abs(u_).max()), 1e-300)
            if u_.min() < floor:
                raise PositivityError(f"negative concentration {u_.min():.3e} at t={t_:.6g}")

    dt = cfg.dt
    n_total = int(round(cfg.t_end / dt))
    every = max(1, int(round(cfg.output_every / dt)))
    record(u, 0.0)
    for n in range(1, n_total + 1):
        t = n * dt
        new = None
        for halving in range(MAX_HALVINGS + 1):
            sub = int(round((1.0 / cfg.safety) ** halving))
            try:
                trial = u
                for _ in range(sub):
                    trial = advance(sys_, grid, trial, dt / sub, cfg.scheme, t)
                new = trial
                break
            except InstabilityError:
                out.halvings += 1
                log.warning("instability at t=%.6g, retrying with %d substeps", t, sub)
        if new is None:
            raise InstabilityError(t, dt * cfg.safety ** MAX_HALVINGS, "unrecoverable instability")
        rate = _field_l2(grid, new - u) / dt
        u = new
        if cfg.stop_at_steady and rate < cfg.steady_tol:
            out.steady = True
            out.t_steady = t
            record(u, t)
            break
        if n % every == 0 or n == n_total:
            record(u, t)
    return out
