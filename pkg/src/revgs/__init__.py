"""Reversible Gray-Scott reaction-diffusion laboratory."""
from .domain import Grid, State, mass
from .equilibria import compute_equilibria
from .lyapunov import PhiProfile
from .model import GSParams, Params
from .solver import SolverConfig, run

__all__ = ["GSParams", "Grid", "Params", "PhiProfile", "SolverConfig", "State",
           "compute_equilibria", "mass", "run"]
__version__ = "0.1.0"
