import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from revgs.domain import Grid, State
from revgs.equilibria import compute_equilibria
from revgs.lyapunov import (PhiProfile, breakdown, dissipation, energy, energy_identity_residual,
                            near_equilibrium_when_stalled, reaction_production, scaled_sup)
from revgs.model import Params
from revgs.solver import SolverConfig, run

from conftest import smooth_state

rates = st.floats(0.1, 10.0)
params_st = st.builds(Params, k1=rates, k2=rates, k3=rates, k4=rates)
PROFILES = [PhiProfile("power", 2.0), PhiProfile("power", 3.0), PhiProfile("entropy"),
            PhiProfile("clip_above", 1.0), PhiProfile("clip_below", 0.5)]


class TestProfile:
    @pytest.mark.parametrize("text,name", [("power2", "power2"), ("power3", "power3"),
                                           ("entropy", "entropy"), ("clip_above:1.5", "clip_above:1.5")])
    def test_parse_roundtrip(self, text, name):
        assert PhiProfile.parse(text).name == name

    @pytest.mark.parametrize("text", ["power1", "cubic", "clip_above"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            PhiProfile.parse(text)

    def test_entropy_values(self):
        phi = PhiProfile("entropy")
        assert phi.phi(0.0) == 1.0
        assert phi.phi(1.0) == 0.0
        with pytest.raises(ValueError):
            phi.phi(np.array([1.0, -1e-3]))

    def test_secant_falls_back(self):
        phi = PhiProfile("power", 3.0)
        assert phi.secant(2.0, 2.0) == pytest.approx(12.0)
        assert phi.secant(1.0, 2.0) == pytest.approx((12.0 - 3.0) / 1.0)


class TestEnergyValues:
    g = Grid.interval(8)

    def test_quadratic_at_equilibria(self):
        p = Params()
        pair = compute_equilibria(p, 1.0, 1.0)
        phi = PhiProfile("power", 2.0)
        assert energy(phi, p, State.constant(self.g, pair.e_circ)) == pytest.approx(0.25, abs=1e-15)
        assert energy(phi, p, State.constant(self.g, pair.e_b)) == pytest.approx(0.5, abs=1e-15)

    def test_entropy_at_interior(self):
        s = State.constant(self.g, [0.25] * 4)
        assert energy(PhiProfile("entropy"), Params(), s) == pytest.approx(1.613706, abs=5e-7)

    def test_clip_above_zero_inside_band(self):
        p = Params(k2=2.0)
        s = smooth_state(self.g)
        M = scaled_sup(p, s.u)
        assert energy(PhiProfile("clip_above", M), p, s) == 0.0

    def test_entropy_rejects_negative_state(self):
        s = State.constant(self.g, [1, -0.1, 1, 1])
        with pytest.raises(ValueError):
            energy(PhiProfile("entropy"), Params(), s)

    @pytest.mark.parametrize("phi", PROFILES, ids=lambda f: f.name)
    def test_homogeneous_dissipation_zero(self, phi):
        assert dissipation(phi, Params(), State.constant(self.g, [1.0, 2.0, 0.5, 3.0])) == 0.0

    # the entropy derivative is singular on the boundary equilibrium
    @pytest.mark.parametrize("phi,which", [(f, w) for f in PROFILES[:3] for w in ("e_circ", "e_b")
                                           if not (f.kind == "entropy" and w == "e_b")],
                             ids=lambda x: getattr(x, "name", x))
    def test_production_vanishes_at_equilibria(self, phi, which):
        p = Params(k1=2.0, k2=0.7, k3=1.3, k4=0.4)
        eq = getattr(compute_equilibria(p, 1.0, 1.0), which)
        assert abs(reaction_production(phi, p, State.constant(self.g, eq))) < 1e-14

    def test_production_hand_value(self):
        s = State.constant(self.g, [1.0, 0, 0, 0])
        assert reaction_production(PhiProfile("power", 2.0), Params(), s) == pytest.approx(2.0)


class TestSigns:
    @settings(max_examples=100, deadline=None)
    @given(params_st, arrays(float, (4, 9), elements=st.floats(0.0, 5.0)),
           st.sampled_from(PROFILES))
    def test_dissipation_and_production_non_negative(self, p, u, phi):
        if phi.kind == "entropy":
            u = u + 1e-3
        s = State(Grid.interval(9), u)
        b = breakdown(phi, p, s)
        assert b.D >= -1e-12 * max(1.0, abs(b.E))
        assert b.R >= -1e-12 * max(1.0, abs(b.E))


def _trajectory(p, s, dt, t_end):
    log = run("rgs", p, s, SolverConfig(dt=dt, t_end=t_end, output_every=dt, stop_at_steady=False),
              keep_states=True)
    return log.trajectory()


class TestEnergyIdentity:
    def test_stationary_residual_zero(self):
        g = Grid.interval(8)
        traj = [State.constant(g, [0.25] * 4, t) for t in (0.0, 0.1, 0.2)]
        np.testing.assert_array_equal(energy_identity_residual(PhiProfile("power", 2.0), Params(), traj), 0.0)

    def test_homogeneous_first_order(self):
        g = Grid.interval(3)
        s = State.constant(g, [1.0, 0.6, 0.2, 0.1])
        phi = PhiProfile("power", 2.0)
        res = [np.abs(energy_identity_residual(phi, Params(), _trajectory(Params(), s, dt, 0.2))).max()
               for dt in (4e-3, 2e-3, 1e-3)]
        orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
        assert np.all(orders > 0.9)

    def test_requires_uniform_sampling(self):
        g = Grid.interval(4)
        traj = [State.constant(g, [1] * 4, t) for t in (0.0, 0.1, 0.3)]
        with pytest.raises(ValueError):
            energy_identity_residual(PhiProfile("power", 2.0), Params(), traj)

    @pytest.mark.parametrize("profile", ["power2", "power3", "entropy", "clip_above"])
    def test_non_increasing(self, profile):
        p = Params(k1=1.5, k2=0.8, k3=1.2, k4=0.6)
        traj = _trajectory(p, smooth_state(Grid.interval(64)), 1e-3, 1.0)
        if profile == "clip_above":
            idx = int(round(0.1 / 1e-3))
            phi = PhiProfile("clip_above", scaled_sup(p, traj[idx].u))
            traj = traj[idx:]
        else:
            phi = PhiProfile.parse(profile)
        E = np.array([energy(phi, p, s) for s in traj])
        assert np.all(np.diff(E) <= 1e-8 * np.maximum(np.abs(E[:-1]), 1e-300))


class TestStrictness:
    def test_stalled_states_sit_at_equilibria(self):
        p = Params()
        s = smooth_state(Grid.interval(32))
        log = run("rgs", p, s, SolverConfig(dt=1e-2, t_end=400, output_every=1.0, stop_at_steady=False),
                  keep_states=True)
        rho = float(log.column("mass")[0])
        pair = compute_equilibria(p, rho, 1.0)
        assert near_equilibrium_when_stalled(p, log.trajectory(), pair)

    def test_detects_non_equilibrium_plateau(self):
        g = Grid.interval(8)
        s = State.constant(g, [1.0, 0.0, 0.0, 3.0])
        traj = [State(g, s.u, t) for t in np.arange(0, 30.0, 1.0)]
        pair = compute_equilibria(Params(), 4.0, 1.0)
        assert not near_equilibrium_when_stalled(Params(), traj, pair)
