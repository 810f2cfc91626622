"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured value and
the tolerance; the lines are repeated in the terminal summary.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fpu_lindstedt.harness import repro_n2, run_compare
from fpu_lindstedt.integrate import IntegratorConfig, Method, integrate, integrate_driven, relative_energy_drift
from fpu_lindstedt.lattice import LatticeConfig, ModeState, cubic_coefficients, spectrum
from fpu_lindstedt.lindstedt import build_series, eom_residual, first_order_forcing, q1_eval, restricted_terms

from conftest import N2_EXAMPLE_CONFIG, N2_EXAMPLE_ICS, random_ics

ROOT = Path(__file__).resolve().parent.parent
RESULTS: list[str] = []

# first-run max |series - numeric| on t in [0, 20] was (3.73e-3, 6.17e-2)
EARLY_ERR_LIMIT = (4.5e-3, 7.5e-2)


def report(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def n2_comparison():
    start = time.perf_counter()
    out = run_compare(N2_EXAMPLE_CONFIG, N2_EXAMPLE_ICS, horizon=100.0, threshold=0.1, dt=1e-3)
    return out, time.perf_counter() - start


def test_c1_rho_values():
    start = time.perf_counter()
    summary, text = repro_n2(compare=False)
    elapsed = time.perf_counter() - start
    rho = summary["rho"]
    err = max(abs(rho[0] - 0.37875), abs(rho[1] - 0.565))
    bw_err = abs(summary["beta_omega"][0] - 8303 / 4000 * 0.5)
    ok = (err <= 1e-12 and bw_err <= 1e-12 and elapsed < 1.0
          and "rho_2 = 0.565" in text and "303/808" in text)
    report("1 rho values", ok,
           f"rho = ({rho[0]:.15g}, {rho[1]:.15g}), max err {err:.1e} (tol 1e-12), "
           f"beta_1*omega_1 err {bw_err:.1e}, {elapsed:.3f} s (< 1 s)")


def test_c2_cubic_coefficients():
    c1, c2 = cubic_coefficients(LatticeConfig(2, 0.1))
    expected = [({(3, 0): -0.5, (1, 2): -1.5}, c1), ({(0, 3): -4.5, (2, 1): -1.5}, c2)]
    err = 0.0
    ok = True
    for want, got in expected:
        ok &= set(want) == set(got)
        err = max(err, *(abs(got.get(key, np.inf) - v) for key, v in want.items()))
    ok &= err <= 1e-14
    report("2 N=2 cubic coefficients", ok, f"max err {err:.1e} (tol 1e-14)")


def test_c3_mode1_third_harmonic_terms():
    eps = N2_EXAMPLE_CONFIG.epsilon
    table, _ = restricted_terms(1, N2_EXAMPLE_ICS, N2_EXAMPLE_CONFIG)
    (cos3,) = [t for t in table.terms if (t.l, t.m, t.n) == (1, 1, 1) and t.channel == "cos"]
    on_w, on_3w = (eps * c for c in cos3.coefficients())
    err = max(abs(on_w - 1 / 320000), abs(on_3w + 1 / 320000))
    harmonics = {(ch, round(f, 9)): c for ch, f, c in table.harmonics(eps)}
    err = max(err, abs(harmonics[("cos", 3.0)] + 1 / 320000))
    report("3 Q_1 harmonics +-1/320000", err <= 1e-12,
           f"cos(t) {on_w:.15g}, cos(3t) {on_3w:.15g}, max err {err:.1e} (tol 1e-12)")


@pytest.mark.slow
def test_c4_divergence_time(n2_comparison):
    (rep, _, _, _), elapsed = n2_comparison
    td = rep.divergence_time
    ok = td is not None and 25 <= td <= 60 and elapsed < 30
    report("4 divergence time", ok, f"t_div = {td} in [25, 60], RK4 dt 1e-3, {elapsed:.1f} s (< 30 s)")


@pytest.mark.slow
def test_c5_q1_matches_driven_oracle():
    rng = np.random.default_rng(20261017)
    worst = 0.0
    for N in (2, 3, 5):
        cfg = LatticeConfig(N, 0.1)
        for _ in range(5):
            ics = random_ics(rng, N)
            sol = build_series(ics, cfg)
            drive = first_order_forcing(ics, cfg, sol.shift)
            traj = integrate_driven(0, drive, spectrum(N), IntegratorConfig(5e-3, 100.0, 20))
            for k, table in enumerate(sol.tables, 1):
                x, _ = q1_eval(k, traj.times, table)
                worst = max(worst, float(np.max(np.abs(x - traj.Q[:, k - 1]))))
    report("5 q1 vs driven oracle", worst <= 1e-6,
           f"N in (2,3,5) x 5 ics, t in [0,100], max abs err {worst:.1e} (tol 1e-6)")


@pytest.mark.parametrize("N", [2, 5])
def test_c6_residual_scaling(N):
    ics = random_ics(np.random.default_rng(0), N)
    t = np.linspace(0.0, 20.0, 2001)
    res = [float(np.max(np.abs(eom_residual(build_series(ics, LatticeConfig(N, e)), t))))
           for e in (0.1, 0.05, 0.025)]
    r1, r2 = res[0] / res[1], res[1] / res[2]
    ok = 3.4 <= r1 <= 4.6 and 3.4 <= r2 <= 4.6
    report(f"6 residual scaling N={N}", ok, f"ratios {r1:.3f}, {r2:.3f} (window [3.4, 4.6])")


PROPERTY_TESTS = [
    "tests/test_lattice.py::test_transform_involution",
    "tests/test_lattice.py::TestEnergy::test_forms_agree",
    "tests/test_lattice.py::test_coupling_symmetry_and_range",
    "tests/test_lindstedt.py::TestFirstOrder::test_vanishes_at_origin",
    "tests/test_lindstedt.py::TestSeries::test_initial_condition_exact",
    "tests/test_lindstedt.py::TestGreensIdentities::test_against_quadrature",
]


def test_c7_property_suite():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
                          cwd=ROOT, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    report("7 property suite", proc.returncode == 0, tail)


@pytest.mark.slow
def test_c8_oracle_energy_drift():
    rk = integrate(N2_EXAMPLE_ICS, N2_EXAMPLE_CONFIG, IntegratorConfig(1e-3, 100.0, 100, energy_monitor=True))
    lf = integrate(N2_EXAMPLE_ICS, N2_EXAMPLE_CONFIG,
                   IntegratorConfig(1e-2, 1e4, 100, method=Method.LEAPFROG, energy_monitor=True))
    d_rk, d_lf = relative_energy_drift(rk), relative_energy_drift(lf)
    ok = d_rk < 1e-8 and d_lf < 1e-3
    report("8 oracle energy drift", ok,
           f"RK4 t=100 {d_rk:.1e} (< 1e-8), leapfrog dt 1e-2 t=1e4 {d_lf:.1e} (< 1e-3)")


@pytest.mark.slow
def test_early_time_agreement(n2_comparison):
    (_, _, sol, traj), _ = n2_comparison
    early = traj.times <= 20.0
    series, _ = sol.sample(traj.times[early])
    err = np.max(np.abs(series - traj.Q[early]), axis=0)
    ok = all(e < lim for e, lim in zip(err, EARLY_ERR_LIMIT))
    report("figure: early-time agreement", ok,
           f"max err on [0,20] ({err[0]:.2e}, {err[1]:.2e}) < {EARLY_ERR_LIMIT}")


@pytest.mark.slow
def test_linear_phase_drift(n2_comparison):
    (rep, _, _, _), _ = n2_comparison
    ok = rep.phase_fit_r2 > 0.9
    report("figure: linear phase drift", ok,
           f"mode {rep.dominant_mode} drift {rep.phase_drift_rate:.3e} rad/time, R^2 {rep.phase_fit_r2:.4f} (> 0.9)")
