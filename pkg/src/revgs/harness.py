"""Experiment configuration and the long-term and epsilon-limit runs."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Grid, State, integrate, norm_p
from .equilibria import compute_equilibria, equilibrium_energy_E2
from .lyapunov import PhiProfile, energy
from .model import GSParams, Params
from .solver import InstabilityError, SolverConfig, TrajectoryLog, advance, make_system, run

SCENARIOS = ("simulate", "longterm", "eps_limit", "center", "spectrum", "energy_audit", "equilibria")
PRESETS = ("circ", "b", "boundary", "generic", "low-energy", "random")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str = "simulate"
    d1: float = 1e-2
    d2: float = 1e-2
    d3: float = 1e-2
    d4: float = 1e-2
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0
    rho: float = 1.0
    volume: float = 1.0
    dim: int = 1
    cells: int = 128
    length: float = 1.0
    cells_y: int = 0
    length_y: float = 0.0
    dt: float = 1e-3
    t_end: float = 50.0
    output_every: float = 0.1
    steady_tol: float = 1e-9
    scheme: str = "imex_euler"
    preset: str = "generic"
    seed: int = 0
    n_random: int = 20
    eps_list: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    T: float = 20.0
    p_norm: float = 1.5
    a: float = 3.0
    which: str = "both"
    s0_list: tuple[float, ...] = (0.01,)
    profile: str = "power2"
    snapshots: str = ""
    t0: float = 0.1
    write_snapshots: bool = False
    output: str = "out"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        eps = list(self.eps_list)
        if not eps or any(e <= 0 or e >= 1 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"eps_list must be strictly decreasing inside (0, 1), got {eps}")
        if not 1 <= self.p_norm:
            raise ConfigError(f"p_norm must be >= 1, got {self.p_norm}")
        if self.a < 0:
            raise ConfigError("feed a must be non-negative")
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.which not in ("both", "circ", "b"):
            raise ConfigError(f"which must be 'both', 'circ' or 'b', got {self.which!r}")
        try:
            self.params
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def params(self) -> Params:
        return Params(self.d1, self.d2, self.d3, self.d4, self.k1, self.k2, self.k3, self.k4)

    @property
    def grid(self) -> Grid:
        if self.dim == 1:
            return Grid((self.length,), (self.cells,))
        return Grid((self.length, self.length_y or self.length), (self.cells, self.cells_y or self.cells))

    def solver_config(self, **overrides) -> SolverConfig:
        values = dict(dt=self.dt, t_end=self.t_end, scheme=self.scheme,
                      output_every=self.output_every, steady_tol=self.steady_tol)
        values.update(overrides)
        return SolverConfig(**values)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(name: str, ftype, raw: str):
    text = raw.strip()
    try:
        if ftype in ("float", float):
            return float(text)
        if ftype in ("int", int):
            return int(text)
        if ftype in ("bool", bool):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if ftype in ("tuple[float, ...]",):
            return tuple(float(x) for x in text.replace(",", " ").split())
        return text
    except ValueError:
        raise ConfigError(f"malformed value for {name!r}: {raw!r}") from None


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def parse_mapping(mapping: dict[str, str]) -> dict:
    out = {}
    for key, raw in mapping.items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = _coerce(key, FIELD_TYPES[key], raw)
    return out


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines with ``#`` comments."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    mapping = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        mapping[key.strip()] = value.strip()
    return mapping


def build_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    mapping = read_config_file(path) if path else {}
    mapping.update(overrides or {})
    try:
        return ExperimentConfig(**parse_mapping(mapping))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- initial data

def _smooth_random(grid: Grid, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    """Positive field built from a few random cosine modes, values in roughly [0.2, 1.8]."""
    centers = grid.centers()
    f = np.ones(grid.shape)
    for _ in range(modes):
        wave = np.ones(grid.shape)
        for x, L in zip(centers, grid.extent):
            wave = wave * np.cos(np.pi * rng.integers(0, 5) * x / L)
        f += rng.uniform(-0.2, 0.2) * wave
    return f


def preset_state(name: str, cfg: ExperimentConfig, rng: np.random.Generator | None = None) -> State:
    grid = cfg.grid
    p = cfg.params
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    pair = compute_equilibria(p, cfg.rho, grid.volume)
    if name == "circ":
        return State.constant(grid, pair.e_circ)
    if name == "b":
        return State.constant(grid, pair.e_b)
    if name == "boundary":
        u = np.stack([_smooth_random(grid, rng), np.zeros(grid.shape), np.zeros(grid.shape),
                      _smooth_random(grid, rng)])
        return State(grid, u)
    if name == "generic":
        return State(grid, np.stack([_smooth_random(grid, rng) for _ in range(4)]))
    if name == "low-energy":
        # interior equilibrium plus a small mass-free, sign-preserving perturbation
        x = grid.centers()[0] / grid.extent[0]
        bump = np.cos(np.pi * x)
        base = State.constant(grid, pair.e_circ).u
        amp = 0.25 * pair.e_circ.min()
        u = base + amp * np.stack([bump, -bump, bump, -bump])
        s = State(grid, u)
        if energy(PhiProfile("power", 2.0), p, s) >= equilibrium_energy_E2(pair, p)[1]:
            raise ConfigError("low-energy preset failed to undercut the boundary energy")
        return s
    if name == "random":
        return random_initial_states(cfg, 1, rng)[0][1]
    raise ConfigError(f"unknown preset {name!r}")


def random_initial_states(cfg: ExperimentConfig, n: int, rng: np.random.Generator | None = None):
    """Seeded mix of boundary-type and interior-type non-negative data.

    Every third draw has ``u2 = u3 = 0``; the others switch on ``u2``,
    ``u3`` or both.
    """
    grid = cfg.grid
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    out = []
    for i in range(n):
        u = np.stack([_smooth_random(grid, rng) * rng.uniform(0.5, 2.0) for _ in range(4)])
        kind = ("boundary", "u2-only", "u3-only", "boundary", "generic", "generic")[i % 6]
        if kind == "boundary":
            u[1] = 0.0
            u[2] = 0.0
        elif kind == "u2-only":
            u[2] = 0.0
        elif kind == "u3-only":
            u[1] = 0.0
        out.append((f"random{i:02d}-{kind}", State(grid, u)))
    return out


# ---------------------------------------------------------------- long-term classification

@dataclass
class LongtermResult:
    ic_name: str
    limit: str
    predicted: str
    dist_circ: float
    dist_b: float
    t_steady: float
    min_E2_slope: float
    max_E2_slope: float
    max_principle_excess: float
    log: TrajectoryLog | None = field(default=None, repr=False)

    @property
    def agrees(self) -> bool:
        return self.limit == self.predicted


def predicted_limit(s: State) -> str:
    """Equilibrium selected by the initial data: boundary iff u2 and u3 vanish."""
    return "circ" if float(np.sum(integrate(s.grid, s.u[1] + s.u[2]))) > 0 else "b"


def max_principle_excess(log: TrajectoryLog, t0: float) -> float:
    """Largest relative excess of the scaled sup-norm over its value at ``t0``."""
    t = log.column("t")
    sup = log.column("scaled_sup")
    idx = np.nonzero(t >= t0 - 1e-12)[0]
    if idx.size == 0:
        return 0.0
    M = sup[idx[0]]
    return float(max(0.0, (sup[idx].max() - M) / M))


def classify(log: TrajectoryLog, tol: float = 1e-4) -> str:
    dc, db = log.rows[-1]["dist_circ"], log.rows[-1]["dist_b"]
    nearest = "circ" if dc < db else "b"
    if log.steady or min(dc, db) < tol:
        return nearest
    return "UNRESOLVED"


def run_longterm(cfg: ExperimentConfig, states=None, keep_log: bool = False) -> list[LongtermResult]:
    """Run each initial condition towards its limit and classify it."""
    if states is None:
        if cfg.preset == "random":
            states = random_initial_states(cfg, cfg.n_random)
        else:
            states = [(cfg.preset, preset_state(cfg.preset, cfg))]
    p = cfg.params
    results = []
    for name, s in states:
        if s.u.min() < 0:
            raise ConfigError(f"initial condition {name!r} has negative values")
        log = run("rgs", p, s, cfg.solver_config())
        E2 = log.column("E2")
        t = log.column("t")
        slopes = np.diff(E2) / np.diff(t) if len(t) > 1 else np.zeros(1)
        results.append(LongtermResult(
            ic_name=name, limit=classify(log), predicted=predicted_limit(s),
            dist_circ=log.rows[-1]["dist_circ"], dist_b=log.rows[-1]["dist_b"],
            t_steady=log.t_steady if log.steady else float("nan"),
            min_E2_slope=float(slopes.min()), max_E2_slope=float(slopes.max()),
            max_principle_excess=max_principle_excess(log, cfg.t0),
            log=log if keep_log else None,
        ))
    return results


def longterm_rows(results: list[LongtermResult]) -> tuple[list[str], list[list]]:
    header = ["ic_name", "limit", "predicted", "dist_circ", "dist_b", "t_steady",
              "min_E2_slope", "max_E2_slope", "max_principle_excess"]
    rows = [[r.ic_name, r.limit, r.predicted, r.dist_circ, r.dist_b, r.t_steady,
             r.min_E2_slope, r.max_E2_slope, r.max_principle_excess] for r in results]
    return header, rows


def exponential_rate(log: TrajectoryLog, t_min: float = 0.0, floor: float = 1e-12) -> float:
    """Least-squares decay rate of the distance to the interior equilibrium."""
    t = log.column("t")
    d = log.column("dist_circ")
    mask = (t >= t_min) & (d > floor)
    slope = np.polyfit(t[mask], np.log(d[mask]), 1)[0]
    return float(-slope)


def perturbed_interior(cfg: ExperimentConfig, size: float = 1e-2, seed: int | None = None) -> State:
    """Interior equilibrium plus a zero-mass perturbation of L2 size ``size``."""
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    pair = compute_equilibria(cfg.params, cfg.rho, grid.volume)
    pert = np.stack([_smooth_random(grid, rng) - 1.0 + rng.normal() for _ in range(4)])
    pert -= float(np.sum(integrate(grid, pert))) / (4 * grid.volume)
    pert *= size / math.sqrt(float(np.sum(integrate(grid, pert * pert))))
    u = State.constant(grid, pair.e_circ).u + pert
    if u.min() < 0:
        raise ConfigError("perturbation too large to keep the state non-negative")
    return State(grid, u)


# ---------------------------------------------------------------- epsilon limit

@dataclass
class EpsRow:
    eps: float
    err_u1: float
    err_u2: float
    err_u3: float
    err_u4: float
    status: str = "ok"
    max_principle_excess: float = float("nan")

    @property
    def u4_ratio(self) -> float:
        return self.err_u4 / math.sqrt(self.eps)


@dataclass
class EpsLimitReport:
    rows: list[EpsRow]
    p_norm: float
    slopes: dict[str, float]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if r.status == "ok"])


def eps_initial_data(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(u1, u2, u3, a): feed-balanced u1, a localized u2 seed, no u3."""
    grid = cfg.grid
    centers = grid.centers()
    r2 = sum(((x / L) - 0.5) ** 2 for x, L in zip(centers, grid.extent))
    a = np.full(grid.shape, cfg.a)
    u1 = a / cfg.k1
    u2 = np.exp(-r2 / 0.01) if cfg.a > 0 else np.zeros(grid.shape)
    u3 = np.zeros(grid.shape)
    return u1, u2, u3, a


def _fit_slope(eps: np.ndarray, err: np.ndarray) -> float:
    ok = err > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(eps[ok]), np.log(err[ok]), 1)[0])


def run_eps_limit(cfg: ExperimentConfig, initial=None) -> EpsLimitReport:
    """Compare reversible runs with k2=k3=k4=d4=eps against the classical limit.

    The classical pair and the u3 heat equation are integrated once on the
    same grid and time step; each reversible run is compared at every
    ``output_every`` interval.
    """
    grid = cfg.grid
    u1, u2, u3, a = initial if initial is not None else eps_initial_data(cfg)
    if min(u1.min(), u2.min(), u3.min(), a.min()) < 0:
        raise ConfigError("eps-limit initial data must be non-negative")
    dt = cfg.dt
    n_steps = int(round(cfg.T / dt))
    every = max(1, int(round(cfg.output_every / dt)))
    sample_steps = set(range(every, n_steps + 1, every)) | {n_steps}

    ref_sys = make_system("limit_u3", GSParams(cfg.d1, cfg.d2, cfg.k1, a, d3=cfg.d3))
    w = np.stack([u1, u2, u3])
    reference = {0: w}
    for n in range(1, n_steps + 1):
        w = advance(ref_sys, grid, w, dt, cfg.scheme, n * dt)
        if n in sample_steps:
            reference[n] = w

    rows = []
    for eps in cfg.eps_list:
        p = Params.eps_regime(eps, cfg.d1, cfg.d2, cfg.d3, cfg.k1)
        sys_ = make_system("rgs", p)
        u = np.stack([u1, u2, u3, a / eps])
        errs = np.zeros(4)
        sup0 = None
        sup_max = 0.0
        status = "ok"
        try:
            for n in range(0, n_steps + 1):
                if n > 0:
                    u = advance(sys_, grid, u, dt, cfg.scheme, n * dt)
                if n in reference:
                    r = reference[n]
                    errs = np.maximum(errs, [
                        norm_p(grid, u[0] - r[0], cfg.p_norm),
                        norm_p(grid, u[1] - r[1], cfg.p_norm),
                        norm_p(grid, u[2] - r[2], cfg.p_norm),
                        norm_p(grid, eps * u[3] - a, 2.0),
                    ])
                    t = n * dt
                    sup = float(np.max(np.abs(p.scales.reshape((4,) + (1,) * grid.dim) * u)))
                    if sup0 is None and t >= cfg.t0 - 1e-12:
                        sup0 = sup
                    if sup0 is not None:
                        sup_max = max(sup_max, sup)
        except InstabilityError as exc:
            status = f"unstable: {exc}"
        excess = max(0.0, (sup_max - sup0) / sup0) if sup0 else float("nan")
        rows.append(EpsRow(eps, *map(float, errs), status=status, max_principle_excess=excess))

    ok = [r for r in rows if r.status == "ok"]
    eps_arr = np.array([r.eps for r in ok])
    slopes = {name: _fit_slope(eps_arr, np.array([getattr(r, name) for r in ok]))
              for name in ("err_u1", "err_u2", "err_u3", "err_u4")}
    return EpsLimitReport(rows, cfg.p_norm, slopes)


def eps_rows(report: EpsLimitReport) -> tuple[list[str], list[list]]:
    header = ["eps", "err_u1", "err_u2", "err_u3", "err_u4", "err_u4_over_sqrt_eps",
              "max_principle_excess", "status"]
    rows = [[r.eps, r.err_u1, r.err_u2, r.err_u3, r.err_u4, r.u4_ratio, r.max_principle_excess, r.status]
            for r in report.rows]
    return header, rows
