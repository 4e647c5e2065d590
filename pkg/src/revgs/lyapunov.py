"""Convex-profile Liapunov functionals and their dissipation/reaction parts.

For a convex profile ``phi`` the functional is

    E = int phi(u1) + phi(k2 u2)/k2 + phi(k2 k3 u3)/(k2 k3) + (k1/k4) phi((k4/k1) u4)

and along solutions ``dE/dt = -(D + R)`` with ``D, R >= 0``.

On the grid, ``phi''`` at a face is the secant slope of ``phi'`` between the
two adjacent cells. With that choice the semi-discrete identity holds exactly
(summation by parts), so the residual of the fully discrete identity only
measures time-stepping error.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Grid, State, face_gradients, face_weight, integrate
from .model import Params, reaction_fluxes


@dataclass(frozen=True)
class PhiProfile:
    """One of the supported convex profiles.

    ``kind`` is ``"power"`` (``|r|^p``, ``p >= 2``), ``"entropy"``
    (``r ln r - r + 1`` on ``r >= 0``), ``"clip_above"`` (``(r - M)_+``) or
    ``"clip_below"`` (``(-r - M)_+``).
    """

    kind: str
    param: float = 2.0

    def __post_init__(self):
        if self.kind not in ("power", "entropy", "clip_above", "clip_below"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "power" and self.param < 2:
            raise ValueError(f"power profile needs exponent >= 2, got {self.param}")

    @classmethod
    def parse(cls, text: str) -> "PhiProfile":
        """``power2``, ``power3``, ``entropy``, ``clip_above:M``, ``clip_below:M``."""
        text = text.strip()
        if text == "entropy":
            return cls("entropy")
        if text.startswith("power"):
            return cls("power", float(text[5:] or 2))
        for kind in ("clip_above", "clip_below"):
            if text.startswith(kind + ":"):
                return cls(kind, float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse profile {text!r}")

    @property
    def name(self) -> str:
        if self.kind == "entropy":
            return "entropy"
        if self.kind == "power":
            return f"power{self.param:g}"
        return f"{self.kind}:{self.param:g}"

    def _check(self, r):
        if self.kind == "entropy" and np.any(r < 0):
            raise ValueError("entropy profile is only defined for non-negative states")

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        self._check(r)
        if self.kind == "power":
            return np.abs(r) ** self.param
        if self.kind == "entropy":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)) - r + 1.0, 1.0)
        if self.kind == "clip_above":
            return np.maximum(r - self.param, 0.0)
        return np.maximum(-r - self.param, 0.0)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        self._check(r)
        if self.kind == "power":
            p = self.param
            return p * np.sign(r) * np.abs(r) ** (p - 1)
        if self.kind == "entropy":
            with np.errstate(divide="ignore"):
                return np.log(r)
        # a.e. derivative of the positive part
        if self.kind == "clip_above":
            return (r > self.param).astype(float)
        return -(r < -self.param).astype(float)

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        self._check(r)
        if self.kind == "power":
            p = self.param
            return p * (p - 1) * np.abs(r) ** (p - 2)
        if self.kind == "entropy":
            with np.errstate(divide="ignore"):
                return 1.0 / r
        return np.zeros_like(r)

    def secant(self, a, b):
        """(phi'(b) - phi'(a)) / (b - a), falling back to phi'' where a == b."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        diff = b - a
        same = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = (self.dphi(b) - self.dphi(a)) / np.where(same, 1.0, diff)
        return np.where(same, self.d2phi(a), slope)


@dataclass(frozen=True)
class EnergyBreakdown:
    E: float
    D: float
    R: float
    t: float = 0.0


def scaled_fields(p: Params, u: np.ndarray) -> np.ndarray:
    """(u1, k2 u2, k2 k3 u3, (k4/k1) u4)."""
    u = np.asarray(u, dtype=float)
    return p.scales.reshape((4,) + (1,) * (u.ndim - 1)) * u


def energy(phi: PhiProfile, p: Params, s: State) -> float:
    z = scaled_fields(p, s.u)
    w = p.energy_weights.reshape((4,) + (1,) * s.grid.dim)
    return float(integrate(s.grid, np.sum(w * phi.phi(z), axis=0)))


def dissipation(phi: PhiProfile, p: Params, s: State) -> float:
    z = scaled_fields(p, s.u)
    phi._check(z)
    # in scaled variables each species contributes d_i c_i phi''(z_i) |grad z_i|^2
    coeff = p.d * p.energy_weights
    total = 0.0
    for i in range(4):
        zi = z[i]
        for axis, grad in enumerate(face_gradients(s.grid, zi)):
            n = zi.shape[axis]
            left = np.take(zi, range(n - 1), axis=axis)
            right = np.take(zi, range(1, n), axis=axis)
            total += coeff[i] * np.sum(phi.secant(left, right) * grad * grad)
    return float(total * face_weight(s.grid))


def reaction_production(phi: PhiProfile, p: Params, s: State) -> float:
    z = scaled_fields(p, s.u)
    dphi = phi.dphi(z)
    cubic, exch23, exch14 = reaction_fluxes(p, s.u)
    density = (cubic * (dphi[0] - dphi[1])
               + exch23 * (dphi[1] - dphi[2])
               + exch14 * (dphi[0] - dphi[3]))
    return float(integrate(s.grid, density))


def breakdown(phi: PhiProfile, p: Params, s: State) -> EnergyBreakdown:
    return EnergyBreakdown(energy(phi, p, s), dissipation(phi, p, s),
                           reaction_production(phi, p, s), s.t)


def energy_identity_residual(phi: PhiProfile, p: Params, trajectory: Sequence[State]) -> np.ndarray:
    """(E_{n+1} - E_n)/dt + (D + R) at the midpoint state, for each step.

    The trajectory must be sampled at a uniform interval.
    """
    if len(trajectory) < 2:
        return np.zeros(0)
    times = np.array([s.t for s in trajectory])
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("trajectory must be sampled at a uniform interval")
    energies = np.array([energy(phi, p, s) for s in trajectory])
    out = np.empty(len(trajectory) - 1)
    for n in range(len(out)):
        a, b = trajectory[n], trajectory[n + 1]
        mid = State(a.grid, 0.5 * (a.u + b.u), 0.5 * (a.t + b.t))
        out[n] = ((energies[n + 1] - energies[n]) / steps[n]
                  + dissipation(phi, p, mid) + reaction_production(phi, p, mid))
    return out


def scaled_sup(p: Params, u: np.ndarray) -> float:
    """max{|u1|, k2|u2|, k2 k3|u3|, (k4/k1)|u4|} in the sup norm."""
    return float(np.max(np.abs(scaled_fields(p, u))))


def scaled_max(p: Params, u: np.ndarray) -> float:
    return float(np.max(scaled_fields(p, u)))


def scaled_min(p: Params, u: np.ndarray) -> float:
    return float(np.min(scaled_fields(p, u)))


def near_equilibrium_when_stalled(p: Params, trajectory: Sequence[State], pair,
                                  window: float = 10.0, flat_tol: float = 1e-12,
                                  dist_tol: float = 1e-6) -> bool:
    """Strictness check for the quadratic functional.

    Whenever E2 drops by less than ``flat_tol`` over ``window`` time units, the
    state at the start of the window must lie within ``dist_tol`` (L2) of an
    equilibrium. Returns False on the first violation.
    """
    from .solver import distance_to_equilibria

    phi = PhiProfile("power", 2.0)
    times = np.array([s.t for s in trajectory])
    energies = np.array([energy(phi, p, s) for s in trajectory])
    for n, t in enumerate(times):
        later = np.nonzero(times >= t + window)[0]
        if later.size == 0:
            break
        if energies[n] - energies[later[0]] < flat_tol:
            if min(distance_to_equilibria(trajectory[n], pair)) > dist_tol:
                return False
    return True
