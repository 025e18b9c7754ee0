"""Tests for the Nystrom discretization of the deformation operator."""

import numpy as np
import pytest

from leakywire.bie import assemble_theta, embed_omega, make_evaluator, single_layer
from leakywire.geometry import build_geometry
from leakywire.greens import EnergySpec
from leakywire.scattering import mesh_for

ALPHA = 5.0
LAM = -(ALPHA ** 2) / 8.0


@pytest.fixture(scope="module")
def gap_system():
    geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
    mesh = mesh_for(geom, 160)
    return assemble_theta(mesh, EnergySpec(ALPHA, LAM))


class TestAssembly:
    def test_matrix_is_complex_symmetric(self, gap_system):
        M = gap_system.matrix
        assert np.max(np.abs(M - M.T)) == 0.0

    def test_solve_residual(self, gap_system):
        omega = embed_omega(gap_system.mesh, gap_system.energy)
        q = gap_system.solve(omega)
        sqw = np.sqrt(gap_system.mesh.weights)
        resid = np.linalg.norm(gap_system.matrix @ (sqw * q) - sqw * omega)
        assert resid < 1e-10 * np.linalg.norm(sqw * omega)

    def test_empty_mesh_rejected(self):
        geom = build_geometry({})
        with pytest.raises(ValueError):
            mesh_for(geom, 100)

    def test_below_threshold_matrix_real(self):
        geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
        mesh = mesh_for(geom, 120)
        system = assemble_theta(mesh, EnergySpec(ALPHA, -7.0))
        assert system.matrix.dtype == float

    def test_charge_mesh_convergence(self):
        # Interpolated charge differences shrink by at least half per
        # mesh doubling.
        geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
        energy = EnergySpec(ALPHA, LAM)
        probe = np.linspace(-0.45, 0.45, 41)
        vals = []
        for n in (100, 200, 400):
            mesh = mesh_for(geom, n)
            system = assemble_theta(mesh, energy)
            q = system.solve(embed_omega(mesh, energy))
            x = mesh.points[:, 0]
            order = np.argsort(x)
            vals.append(np.interp(probe, x[order], q.real[order])
                        + 1j * np.interp(probe, x[order], q.imag[order]))
        d1 = np.max(np.abs(vals[1] - vals[0]))
        d2 = np.max(np.abs(vals[2] - vals[1]))
        assert d2 <= 0.5 * d1

    def test_condition_spikes_near_bound_state(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
        mesh = mesh_for(geom, 160)
        near = assemble_theta(mesh, EnergySpec(ALPHA, -6.3551)).condition_estimate()
        mid = assemble_theta(mesh, EnergySpec(ALPHA, -6.8)).condition_estimate()
        assert near >= 10.0 * mid


class TestSingleLayer:
    def test_matches_direct_sum_far_away(self, gap_system):
        mesh = gap_system.mesh
        energy = gap_system.energy
        q = gap_system.solve(embed_omega(mesh, energy))
        targets = np.array([[0.0, 2.0], [3.0, 1.0], [-2.5, -1.5]])
        ev = make_evaluator(mesh, energy, pad=6.0)
        got = single_layer(mesh, q, targets, ev)
        ref = np.zeros(3, dtype=complex)
        for t in range(3):
            d1 = targets[t, 0] - mesh.points[:, 0]
            vals = ev.evaluate(d1, np.full(mesh.size, targets[t, 1]),
                               mesh.points[:, 1])
            ref[t] = np.sum(mesh.weights * q * vals)
        assert np.max(np.abs(got - ref)) < 1e-12
