"""Tests for the 1D comparison operator and the strong-coupling report."""

import numpy as np
import pytest
from scipy.optimize import brentq

from leakywire.comparison1d import (CurvatureProfile, conjecture_test,
                                    ground_state_1d, scattering_1d,
                                    write_conjecture_csv)
from leakywire.geometry import build_geometry

V0, WELL_L = 1.3, 2.0


def rect_well_T(k, V0=V0, L=WELL_L):
    """Closed-form transmission of the well -V0 on [0, L]."""
    q = np.sqrt(k * k + V0)
    return np.exp(-1j * k * L) / (np.cos(q * L)
                                  - 0.5j * (q / k + k / q) * np.sin(q * L))


class TestScattering1D:
    def test_rectangular_well_closed_form(self):
        prof = CurvatureProfile.rectangular(V0, WELL_L)
        for k in (0.3, 1.0, 2.5):
            out = scattering_1d(prof, k)
            assert abs(out.T - rect_well_T(k)) < 1e-8

    def test_unitarity(self):
        prof = CurvatureProfile.rectangular(V0, WELL_L)
        for k in (0.3, 1.0, 2.5):
            assert scattering_1d(prof, k).unitarity_defect < 1e-10

    def test_zero_potential_free(self):
        prof = CurvatureProfile.rectangular(0.0, 1.0)
        out = scattering_1d(prof, 1.2)
        assert abs(out.T - 1.0) < 1e-10
        assert abs(out.R) < 1e-10

    def test_invalid_momentum(self):
        prof = CurvatureProfile.rectangular(V0, WELL_L)
        with pytest.raises(ValueError):
            scattering_1d(prof, 0.0)


class TestGroundState1D:
    def test_rectangular_well_transcendental(self):
        # Even ground state of the well -V0 on [-L/2, L/2]:
        # sqrt(V0 - b) tan(sqrt(V0 - b) L/2) = sqrt(b), mu = -b.
        prof = CurvatureProfile.rectangular(V0, WELL_L)

        def f(b):
            q = np.sqrt(V0 - b)
            return q * np.tan(q * WELL_L / 2) - np.sqrt(b)

        b = brentq(f, 1e-12, min(V0, (np.pi / WELL_L) ** 2) - 1e-9)
        mu = ground_state_1d(prof)
        assert mu == pytest.approx(-b, abs=1e-8)

    def test_no_bound_state_returns_none(self):
        prof = CurvatureProfile.rectangular(0.0, 1.0)
        assert ground_state_1d(prof) is None

    def test_bump_curvature_well(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
        prof = CurvatureProfile.from_geometry(geom)
        mu = ground_state_1d(prof)
        assert mu is not None
        assert -0.35 < mu < -0.15


class TestCurvatureProfile:
    def test_from_geometry_centered(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
        prof = CurvatureProfile.from_geometry(geom)
        lo, hi = prof.support
        assert lo == pytest.approx(-hi, abs=1e-12)
        assert abs(prof.kappa[0]) < 1e-3
        assert abs(prof.kappa[-1]) < 1e-3

    def test_smooth_profile_needs_vanishing_ends(self):
        s = np.linspace(-1.0, 1.0, 11)
        with pytest.raises(ValueError):
            CurvatureProfile(s, np.ones_like(s), "smooth")

    def test_requires_single_open_segment(self):
        geom = build_geometry({"family": "circle", "params": {"r": 1.0}})
        with pytest.raises(ValueError):
            CurvatureProfile.from_geometry(geom)


class TestConjecture:
    def test_trivial_geometry_zero(self):
        report = conjecture_test(build_geometry({}), 1.0, [5.0, 10.0])
        assert report.discrepancies == [0.0, 0.0]

    def test_momentum_window_enforced(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.3, "w": 1.0}})
        with pytest.raises(ValueError):
            conjecture_test(geom, 3.0, [5.0])

    def test_report_and_csv(self, tmp_path):
        geom = build_geometry({"family": "bump", "params": {"h": 0.3, "w": 1.0}})
        report = conjecture_test(geom, 1.0, [5.0], n_nodes=120)
        row = report.rows[0]
        assert row.lam == pytest.approx(1.0 - 25.0 / 4)
        assert row.disc_phasemin <= row.disc_raw + 1e-14
        path = tmp_path / "conj.csv"
        write_conjecture_csv(path, report, header_lines=["prov"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# prov"
        assert lines[1].startswith("alpha,lambda,re_T2d")
        assert len(lines) == 3
