"""Acceptance suite: one PASS/FAIL line per criterion, printed in the pytest summary.

Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from revgs.domain import Grid, State, mass
from revgs.equilibria import compute_equilibria, equilibrium_energy_E2, homogeneous_steady_oracle
from revgs.harness import (ExperimentConfig, exponential_rate, max_principle_excess,
                           perturbed_interior, random_initial_states, run_eps_limit, run_longterm)
from revgs.lyapunov import PhiProfile, energy, energy_identity_residual
from revgs.model import Params, rhs_rgs
from revgs.solver import SolverConfig, run
from revgs.stability import (assemble_linearization, boundary_decay_envelope,
                             center_coefficient_check, center_constants, homogeneous_spectrum,
                             kernel_direction, spectrum, weighted_form_check)

RESULTS: dict[int, str] = {}
MP_EXCESS: dict[str, float] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def smooth_data(grid: Grid) -> np.ndarray:
    x = grid.centers()[0]
    return np.stack([1.0 + 0.5 * np.cos(np.pi * x), 0.8 + 0.3 * np.cos(2 * np.pi * x),
                     0.5 + 0.2 * np.cos(np.pi * x), 1.2 - 0.4 * np.cos(3 * np.pi * x)])


@pytest.fixture(scope="module")
def longterm_cfg():
    return ExperimentConfig(preset="random", n_random=20, seed=2024, dt=1e-2, t_end=400.0)


@pytest.fixture(scope="module")
def longterm_results(longterm_cfg):
    t0 = time.perf_counter()
    states = random_initial_states(longterm_cfg, longterm_cfg.n_random)
    res = run_longterm(longterm_cfg, states=states)
    return res, states, time.perf_counter() - t0


@pytest.fixture(scope="module")
def eps_report():
    t0 = time.perf_counter()
    rep = run_eps_limit(ExperimentConfig())
    return rep, time.perf_counter() - t0


class TestAcceptance:
    def test_c1_mass_conservation(self):
        grid = Grid.interval(128)
        u = np.random.default_rng(11).uniform(0.0, 2.0, (4, 128))
        rho = float(np.sum(u) * grid.cell_volume)
        t0 = time.perf_counter()
        log = run("rgs", Params(), State(grid, u), SolverConfig(dt=1e-3, t_end=50.0, stop_at_steady=False))
        elapsed = time.perf_counter() - t0
        drift = float(np.abs(log.column("mass") - rho).max() / rho)
        MP_EXCESS["mass run"] = max_principle_excess(log, 0.1)
        record(1, drift <= 1e-11 and elapsed < 30,
               f"max relative mass drift {drift:.2e} <= 1e-11, runtime {elapsed:.1f}s < 30s")

    def test_c2_energy_identity(self):
        grid = Grid.interval(128)
        s = State(grid, smooth_data(grid))
        p = Params(k1=1.5, k2=0.8, k3=1.2, k4=0.6)
        dts = (4e-3, 2e-3, 1e-3)
        trajs = {}
        for dt in dts:
            log = run("rgs", p, s, SolverConfig(dt=dt, t_end=0.4, output_every=dt, stop_at_steady=False),
                      keep_states=True)
            trajs[dt] = log.trajectory()
        worst_order, worst_rise = np.inf, -np.inf
        for name in ("power2", "power3", "entropy"):
            phi = PhiProfile.parse(name)
            res = [np.abs(energy_identity_residual(phi, p, trajs[dt])).max() for dt in dts]
            worst_order = min(worst_order, *np.log2(np.array(res[:-1]) / np.array(res[1:])))
            for dt in dts:
                E = np.array([energy(phi, p, st) for st in trajs[dt]])
                worst_rise = max(worst_rise, float((np.diff(E) / np.abs(E[:-1])).max()))
        record(2, worst_order >= 0.9 and worst_rise <= 1e-8,
               f"min residual order {worst_order:.3f} >= 0.9, max relative energy rise {worst_rise:.1e} <= 1e-8")

    def test_c3_equilibria(self):
        rng = np.random.default_rng(3)
        grid = Grid.interval(8)
        worst_oracle = worst_rhs = 0.0
        energy_ok = True
        for _ in range(1000):
            k = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 4))
            p = Params(k1=k[0], k2=k[1], k3=k[2], k4=k[3])
            rho = rng.uniform(0.1, 10.0)
            pair = compute_equilibria(p, rho, grid.volume)
            found = homogeneous_steady_oracle(p, rho, grid.volume)
            for eq in (pair.e_circ, pair.e_b):
                worst_oracle = max(worst_oracle, min(np.abs(f - eq).max() for f in found))
                worst_rhs = max(worst_rhs, float(np.abs(rhs_rgs(p, State.constant(grid, eq))).max()))
            e_circ, e_b = equilibrium_energy_E2(pair, p)
            energy_ok &= e_circ < e_b
        record(3, worst_oracle <= 1e-12 and worst_rhs <= 1e-12 and energy_ok,
               f"oracle mismatch {worst_oracle:.1e}, rhs residual {worst_rhs:.1e}, "
               f"E2 ordering holds on all draws: {energy_ok}")

    def test_c4_spectra(self):
        t0 = time.perf_counter()
        checks = []
        for p in (Params(), Params(k1=2.0, k2=0.5, k3=1.5, k4=0.8)):
            reps = {(w, n): spectrum(assemble_linearization(p, 1.0, w, Grid.interval(n)))
                    for w in ("circ", "b") for n in (64, 128)}
            b64, c64, c128 = reps["b", 64], reps["circ", 64], reps["circ", 128]
            k = kernel_direction(p)
            cosine = float(b64.kernel_vector @ k / np.linalg.norm(k)) if b64.kernel_vector is not None else 0.0
            checks.append(dict(
                real=max(b64.max_real, c64.max_real), imag=max(b64.max_abs_imag, c64.max_abs_imag),
                kdim_b=b64.kernel_dim, kdim_c=c64.kernel_dim, cosine=cosine,
                gap=c64.gap, drift=abs(c128.gap - c64.gap) / c64.gap))
        single = np.sort(homogeneous_spectrum(Params(), 1.0, "b").eigenvalues.real)
        elapsed = time.perf_counter() - t0
        ok = all(c["real"] <= 1e-9 and c["imag"] <= 1e-9 and c["kdim_b"] == 1 and c["kdim_c"] == 0
                 and c["cosine"] >= 1 - 1e-10 and c["gap"] > 0 and c["drift"] <= 0.05 for c in checks)
        ok &= bool(np.allclose(single, [-2, -2, 0], atol=1e-12)) and elapsed < 60
        record(4, ok, "max Re {:.1e}, max |Im| {:.1e}, kernel cosine {:.12f}, gap {:.4f}, "
               "gap drift 64->128 {:.2%}, single cell {}, runtime {:.1f}s".format(
                   max(c["real"] for c in checks), max(c["imag"] for c in checks),
                   min(c["cosine"] for c in checks), min(c["gap"] for c in checks),
                   max(c["drift"] for c in checks), np.round(single, 12).tolist(), elapsed))

    def test_c5_weighted_form(self):
        rng = np.random.default_rng(5)
        grid = Grid.interval(64)
        p = Params(k1=1.3, k2=0.7, k3=2.2, k4=0.9)
        worst = 0.0
        for which in ("circ", "b"):
            opr = assemble_linearization(p, 1.7, which, grid)
            for _ in range(100):
                v = rng.normal(size=(4, 64))
                v -= v.mean()
                lhs, rhs = weighted_form_check(opr, v)
                worst = max(worst, abs(lhs - rhs) / (1 + abs(rhs)))
        record(5, worst <= 1e-8, f"max |lhs-rhs|/(1+|rhs|) {worst:.1e} <= 1e-8")

    def test_c6_center_dynamics(self):
        p = Params()
        K4 = center_constants(p, 1.0, 1.0).K4
        xis = np.geomspace(1e-4, 5e-2, 25)
        ratios = center_coefficient_check(p, 1.0, 1.0, xis)
        in_band = bool(np.all((ratios >= -3 * K4) & (ratios <= -K4)))
        slope = np.polyfit(np.log(xis), np.log(np.abs(ratios + 2 * K4)), 1)[0]
        at_001 = float(center_coefficient_check(p, 1.0, 1.0, [0.01])[0])
        env = boundary_decay_envelope(p, 1.0, 0.01, 500.0)
        inside = bool(np.all(env.s >= 0.85 * env.lower) and np.all(env.s <= 1.15 * env.upper))
        ok = in_band and abs(slope - 1) < 0.1 and abs(at_001 + 0.54) <= 1e-12 and inside
        record(6, ok, f"ratios in [-3K4,-K4]: {in_band}, error order in xi {slope:.3f}, "
               f"ratio at 0.01 {at_001:.15f}, envelope with 15% slack: {inside}")

    def test_c7_longterm(self, longterm_cfg, longterm_results):
        res, states, elapsed = longterm_results
        agree = sum(r.agrees for r in res)
        for r in res:
            MP_EXCESS[r.ic_name] = r.max_principle_excess
        t0 = time.perf_counter()
        s = perturbed_interior(longterm_cfg, size=1e-2)
        log = run("rgs", longterm_cfg.params, s,
                  longterm_cfg.solver_config(t_end=150.0, steady_tol=1e-14))
        MP_EXCESS["perturbed interior"] = max_principle_excess(log, 0.1)
        rate = exponential_rate(log, t_min=10.0)
        gap = spectrum(assemble_linearization(longterm_cfg.params, mass(s), "circ", s.grid)).gap
        elapsed += time.perf_counter() - t0
        ok = agree == len(res) == 20 and rate >= 0.5 * gap and elapsed < 300
        record(7, ok, f"{agree}/{len(res)} classified by the u2/u3 criterion, decay rate {rate:.4f} "
               f">= 0.5 x gap {gap:.4f}, runtime {elapsed:.0f}s < 300s")

    def test_c8_eps_limit(self, eps_report):
        rep, elapsed = eps_report
        for r in rep.rows:
            MP_EXCESS[f"eps={r.eps}"] = r.max_principle_excess
        ok_rows = all(r.status == "ok" for r in rep.rows)
        cols = ("err_u1", "err_u2", "err_u3", "err_u4")
        decreasing = {c: bool(np.all(np.diff(rep.column(c)) < 0)) for c in cols}
        ratios = np.array([r.u4_ratio for r in rep.rows])
        variation = float(ratios.max() / ratios.min())
        ok = ok_rows and all(decreasing.values()) and variation <= 2.0 and elapsed < 300
        record(8, ok, f"strictly decreasing columns {decreasing}, u4 error/sqrt(eps) varies by "
               f"{variation:.2f}x <= 2, runtime {elapsed:.0f}s < 300s")

    def test_c9_maximum_principle(self, longterm_results, eps_report):
        if "mass run" not in MP_EXCESS:
            self.test_c1_mass_conservation()
        for r in longterm_results[0]:
            MP_EXCESS.setdefault(r.ic_name, r.max_principle_excess)
        for r in eps_report[0].rows:
            MP_EXCESS.setdefault(f"eps={r.eps}", r.max_principle_excess)
        worst_name = max(MP_EXCESS, key=MP_EXCESS.get)
        worst = MP_EXCESS[worst_name]
        record(9, worst <= 1e-6, f"largest relative excess over M(0.1) is {worst:.1e} "
               f"({worst_name}) over {len(MP_EXCESS)} runs")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
