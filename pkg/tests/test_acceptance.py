"""Acceptance suite: one test and one pass/fail line per criterion.

Each test exercises the documented accuracy target at the stated
parameters and prints a single summary line before asserting, so a
verbose run shows the outcome of every criterion.
"""

import numpy as np
import pytest
from scipy.optimize import brentq

from leakywire.bie import assemble_theta
from leakywire.comparison1d import (CurvatureProfile, conjecture_test,
                                    ground_state_1d, scattering_1d)
from leakywire.geometry import build_geometry
from leakywire.greens import (EnergySpec, KernelPoint, line_kernel,
                              macdonald_k0, s_alpha, sigma_green_extrapolated,
                              sigma_green_onshell, sigma_xi_bruteforce,
                              xi_correction)
from leakywire.scattering import (amplitudes, amplitudes_from_field,
                                  field_map, incoming_mode, mesh_for)
from leakywire.spectrum import find_bound_states

# Unitarity defects of symmetric fixtures can land at rounding level
# already on the coarse mesh; the halving requirement then compares two
# noise values, so improvements below this floor count as satisfied.
DEFECT_FLOOR = 5e-13


def report(num, name, ok, detail):
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {num:02d} ({name}): {verdict} [{detail}]")
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_01_line_kernel_identity():
    worst = 0.0
    for kappa in (1.0, 2.0, 5.0):
        for d in (0.1, 1.0, 5.0):
            dev = abs(line_kernel(1j * kappa, d)
                      - macdonald_k0(kappa * d) / (2 * np.pi))
            worst = max(worst, dev)
    report(1, "line-kernel identity", worst <= 1e-8,
           f"max deviation {worst:.2e}, tol 1e-8")


def test_criterion_02_resolvent_kernel_vs_bruteforce():
    alpha, kappa = 1.0, 1.0
    points = [KernelPoint(0.5, 0.3, -0.4), KernelPoint(1.0, 0.0, 0.2),
              KernelPoint(0.2, -0.5, -0.1), KernelPoint(2.0, 0.6, 0.3),
              KernelPoint(0.8, 0.1, 0.7)]
    worst = 0.0
    for p in points:
        ref = sigma_xi_bruteforce(alpha, kappa, p)
        red = float(np.real(xi_correction(alpha, -kappa ** 2, p.d1, p.s2)))
        worst = max(worst, abs(red - ref) / abs(ref))
    report(2, "reduced kernel vs brute force", worst <= 1e-6,
           f"max relative deviation {worst:.2e}, tol 1e-6")


def test_criterion_03_onshell_limit():
    energy = EnergySpec(5.0, -3.0)
    points = [KernelPoint(0.7, 0.2, -0.3), KernelPoint(1.5, 0.0, 0.1),
              KernelPoint(0.3, -0.4, -0.2), KernelPoint(2.5, 0.5, 0.5),
              KernelPoint(1.0, 0.1, 0.0)]
    worst = 0.0
    for p in points:
        direct = sigma_green_onshell(energy, p)
        limit = sigma_green_extrapolated(energy, p)
        worst = max(worst, abs(direct - limit) / abs(limit))
    report(3, "on-shell kernel limit", worst <= 1e-4,
           f"max relative deviation {worst:.2e}, tol 1e-4")


def test_criterion_04_farfield_asymptotics():
    energy = EnergySpec(5.0, -3.0)
    ka = energy.k_alpha.real
    x2, y2 = 0.2, 0.1
    devs = []
    for d in (2.0, 3.0, 4.0, 5.0, 6.0):
        p = KernelPoint(d, x2, y2)
        asym = s_alpha(energy) * np.exp(1j * ka * abs(d)) \
            * np.exp(-energy.alpha * p.s2 / 2)
        devs.append(abs(sigma_green_onshell(energy, p) - asym) / abs(asym))
    ok = devs[-1] <= 1e-2 and all(b < a for a, b in zip(devs, devs[1:]))
    report(4, "far-field asymptotics", ok,
           f"deviation at 30/alpha {devs[-1]:.2e}, sequence "
           + " > ".join(f"{d:.1e}" for d in devs))


def test_criterion_05_empty_deformation_exact():
    geom = build_geometry({})
    energy = EnergySpec(5.0, -25.0 / 8)
    amps = amplitudes(geom, energy)
    scan = find_bound_states(geom, 5.0, (-8.0, -7.0))
    x1 = np.linspace(-4.0, 4.0, 17)
    x2 = np.linspace(-1.0, 1.0, 5)
    fm = field_map(geom, energy, x1, x2)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    ok = (amps.T == 1.0 + 0.0j and amps.R == 0.0j and scan.states == []
          and np.array_equal(fm.psi, incoming_mode(energy, g1, g2)))
    report(5, "empty deformation exact", ok,
           f"T={amps.T}, R={amps.R}, states={len(scan.states)}")


def test_criterion_06_unitarity_fixtures():
    energy = EnergySpec(5.0, -25.0 / 8)
    fixtures = {
        "gap": {"family": "gap", "params": {"L": 1.0}},
        "stub": {"family": "stub", "params": {"L": 0.5, "gap": 0.25}},
        "bump": {"family": "bump", "params": {"h": 0.5, "w": 1.0}},
    }
    details, ok = [], True
    for name, spec in fixtures.items():
        geom = build_geometry(spec)
        d400 = amplitudes(geom, energy, n_nodes=400).unitarity_defect
        d800 = amplitudes(geom, energy, n_nodes=800).unitarity_defect
        good = d400 <= 1e-3 and d800 <= max(0.5 * d400, DEFECT_FLOOR)
        ok = ok and good
        details.append(f"{name}: {d400:.1e} -> {d800:.1e}")
    report(6, "unitarity with mesh halving", ok, "; ".join(details))


def test_criterion_07_two_amplitude_extractions():
    geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
    energy = EnergySpec(5.0, -25.0 / 8)
    system = assemble_theta(mesh_for(geom, 200), energy)
    amps = amplitudes(geom, energy, system=system)
    errs = []
    for extent in (8.0, 16.0):
        x1 = np.linspace(-extent, extent, 161)
        fm = field_map(geom, energy, x1, np.array([0.0]), system=system)
        T, R = amplitudes_from_field(fm)
        errs.append(max(abs(T - amps.T), abs(R - amps.R)))
    ok = errs[0] <= 5e-2 and errs[1] <= errs[0]
    report(7, "amplitude extraction consistency", ok,
           f"errors {errs[0]:.2e} -> {errs[1]:.2e}, tol 5e-2")


def test_criterion_08_bound_state_existence():
    geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
    stars = []
    for n in (400, 800):
        scan = find_bound_states(geom, 5.0, (-6.5, -6.28), resolution=0.05,
                                 n_nodes=n, refine_xatol=1e-8)
        assert len(scan.states) == 1
        stars.append(scan.states[0].lambda_star)
    drift = abs(stars[1] - stars[0]) / abs(stars[0])
    ok = stars[0] < -6.25 and drift <= 1e-4
    report(8, "bound state below threshold", ok,
           f"lambda* {stars[0]:.6f} -> {stars[1]:.6f}, drift {drift:.1e}")


def test_criterion_09_strong_coupling_eigenvalue():
    geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
    mu1 = ground_state_1d(CurvatureProfile.from_geometry(geom))
    assert mu1 is not None and mu1 < 0
    alpha = 20.0
    scan = find_bound_states(geom, alpha,
                             (-alpha ** 2 / 4 + 1.5 * mu1,
                              -alpha ** 2 / 4 + 0.5 * mu1),
                             resolution=0.05, n_nodes=1200,
                             refine_xatol=1e-6)
    assert len(scan.states) == 1
    gap = scan.states[0].lambda_star + alpha ** 2 / 4
    dev = abs(gap - mu1) / abs(mu1)
    report(9, "strong-coupling eigenvalue", dev <= 0.10,
           f"gap {gap:.5f} vs mu1 {mu1:.5f}, deviation {dev:.1%}")


def test_criterion_10_conjecture_trend():
    geom = build_geometry({"family": "bump", "params": {"h": 0.3, "w": 1.0}})
    rep = conjecture_test(geom, 1.0, [5.0, 10.0, 20.0, 40.0],
                          n_nodes=0, nodes_per_alpha=160.0)
    disc = rep.discrepancies
    ok = all(b < a for a, b in zip(disc, disc[1:]))
    report(10, "conjecture trend", ok,
           "disc " + " > ".join(f"{d:.2e}" for d in disc))


def test_criterion_11_one_dimensional_solver():
    V0, L = 1.3, 2.0
    prof = CurvatureProfile.rectangular(V0, L)
    worst_T, worst_u = 0.0, 0.0
    for k in (0.3, 1.0, 2.5):
        out = scattering_1d(prof, k)
        q = np.sqrt(k * k + V0)
        exact = np.exp(-1j * k * L) / (np.cos(q * L)
                                       - 0.5j * (q / k + k / q) * np.sin(q * L))
        worst_T = max(worst_T, abs(out.T - exact))
        worst_u = max(worst_u, out.unitarity_defect)
    ok = worst_T <= 1e-8 and worst_u <= 1e-10
    report(11, "1D rectangular well", ok,
           f"transmission deviation {worst_T:.2e}, unitarity {worst_u:.2e}")


def test_criterion_12_k0_accuracy():
    import mpmath
    mpmath.mp.dps = 30
    x = np.geomspace(1e-6, 50.0, 300)
    worst = 0.0
    for xi in x:
        ref = float(mpmath.besselk(0, xi))
        worst = max(worst, abs(macdonald_k0(float(xi)) - ref) / ref)
    report(12, "Macdonald K0 accuracy", worst <= 1e-12,
           f"max relative error {worst:.2e} on [1e-6, 50]")
