"""Transmission and reflection amplitudes and generalized eigenfunctions.

Amplitudes come from the charge solved on the deformation support:

    T = 1 + s(lambda) int q(y) conj(omega(y)) dy,
    R = s(lambda) int q(y) omega(y) dy,

with omega the incoming guided mode and s the outgoing-mode coefficient
of the straight-wire kernel.  The conjugation convention of the pairing
is selectable; the default is the one fixed by the empty-deformation
case and by unitarity on the validation fixtures (see tests).  A second,
independent extraction reads T and R off the far-field asymptotics of
the generalized eigenfunction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .bie import ThetaSystem, assemble_theta, embed_omega, make_evaluator, single_layer
from .geometry import DeformedLineGeometry, build_mesh, decompose
from .greens import EnergySpec, KernelEvaluator, s_alpha

CONVENTIONS = ("conjugate-mode", "conjugate-charge")
DEFAULT_CONVENTION = "conjugate-mode"

SWEEP_COLUMNS = ("lambda", "k_alpha", "re_T", "im_T", "re_R", "im_R",
                 "absT2", "absR2", "defect", "N")
FIELD_COLUMNS = ("x1", "x2", "re_psi", "im_psi")


@dataclass(frozen=True)
class ScatteringAmplitudes:
    alpha: float
    lam: float
    k_alpha: float
    T: complex
    R: complex
    N: int
    convention: str = DEFAULT_CONVENTION
    direction: int = +1

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.T) ** 2 + abs(self.R) ** 2 - 1.0)

    def csv_row(self):
        return (self.lam, self.k_alpha, self.T.real, self.T.imag,
                self.R.real, self.R.imag, abs(self.T) ** 2, abs(self.R) ** 2,
                self.unitarity_defect, self.N)


def unitarity_defect(amps: ScatteringAmplitudes) -> float:
    return amps.unitarity_defect


def mesh_for(geom: DeformedLineGeometry, n_nodes: int,
             nodes_per_panel: int = 6, end_levels: int = 8):
    """Panel mesh with approximately n_nodes total nodes.

    The endpoint grading levels are included in the node budget so the
    requested total is met whether or not grading is enabled.
    """
    comps = decompose(geom)
    total = sum(c.length for c in comps)
    if total <= 0:
        raise ValueError("trivial geometry has no mesh")
    n_open_ends = sum(2 for c in comps
                      if c.segment is None or not c.segment.closed)
    graded = end_levels * n_open_ends
    npanels = max(len(comps), int(round(n_nodes / nodes_per_panel)) - graded)
    return build_mesh(geom, nodes_per_panel=nodes_per_panel,
                      panel_length=total / npanels, end_levels=end_levels)


def solve_charge(geom: DeformedLineGeometry, energy: EnergySpec,
                 n_nodes: int = 400, direction: int = +1,
                 system: ThetaSystem | None = None):
    """Assemble (or reuse) the Theta system and solve for the charge."""
    if system is None:
        mesh = mesh_for(geom, n_nodes)
        system = assemble_theta(mesh, energy)
    omega = embed_omega(system.mesh, energy, direction)
    return system, system.solve(omega), omega


def amplitudes(geom: DeformedLineGeometry, energy: EnergySpec,
               n_nodes: int = 400, convention: str = DEFAULT_CONVENTION,
               direction: int = +1,
               system: ThetaSystem | None = None) -> ScatteringAmplitudes:
    """Amplitudes via the inner-product formulas on the solved charge."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if energy.regime != "scattering":
        raise ValueError("amplitudes: scattering regime required")
    ka = energy.k_alpha.real
    if geom.is_trivial:
        return ScatteringAmplitudes(energy.alpha, energy.lam, ka,
                                    1.0 + 0.0j, 0.0j, 0, convention, direction)
    system, q, omega = solve_charge(geom, energy, n_nodes, direction, system)
    s = s_alpha(energy)
    if convention == "conjugate-mode":
        T = 1.0 + s * system.weighted_inner(q, np.conj(omega))
        R = s * system.weighted_inner(q, omega)
    else:
        T = 1.0 + s * system.weighted_inner(np.conj(q), omega)
        R = s * system.weighted_inner(np.conj(q), np.conj(omega))
    return ScatteringAmplitudes(energy.alpha, energy.lam, ka, T, R,
                                system.size, convention, direction)


@dataclass
class FieldMap:
    """Generalized eigenfunction sampled on a rectangular grid."""

    x1: np.ndarray              # (nx,)
    x2: np.ndarray              # (ny,)
    psi: np.ndarray             # (nx, ny) complex
    skipped: np.ndarray         # (nx, ny) bool: too close to a source node
    energy: EnergySpec
    direction: int = +1

    def csv_rows(self):
        for i, a in enumerate(self.x1):
            for j, b in enumerate(self.x2):
                v = self.psi[i, j]
                yield (a, b, v.real, v.imag)


def incoming_mode(energy: EnergySpec, x1, x2, direction: int = +1):
    ka = energy.k_alpha.real
    return np.exp(1j * direction * ka * np.asarray(x1)) \
        * np.exp(-energy.alpha * np.abs(np.asarray(x2)) / 2)


def field_map(geom: DeformedLineGeometry, energy: EnergySpec,
              x1: np.ndarray, x2: np.ndarray, direction: int = +1,
              system: ThetaSystem | None = None, n_nodes: int = 400,
              singular_distance: float = 1e-6) -> FieldMap:
    """Evaluate the generalized eigenfunction on the grid x1 cross x2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    psi = incoming_mode(energy, g1, g2, direction).astype(complex)
    skipped = np.zeros(psi.shape, dtype=bool)
    if geom.is_trivial:
        return FieldMap(x1, x2, psi, skipped, energy, direction)
    system, q, _ = solve_charge(geom, energy, n_nodes, direction, system)
    targets = np.column_stack([g1.ravel(), g2.ravel()])
    dist = np.min(np.linalg.norm(
        targets[:, None, :] - system.mesh.points[None, :, :], axis=2), axis=1)
    ok = dist > singular_distance
    # The assembly evaluator only covers mesh separations; field targets
    # need one sized for the grid extent.
    span = float(x1.max() - x1.min()) + 1.0
    height = float(np.abs(x2).max()) + float(np.abs(system.mesh.points[:, 1]).max())
    ev = KernelEvaluator(energy, dmax=span, s2max=2 * height + 0.1, checks=3)
    vals = np.zeros(len(targets), dtype=complex)
    vals[ok] = single_layer(system.mesh, q, targets[ok], ev)
    psi += vals.reshape(psi.shape)
    skipped |= ~ok.reshape(psi.shape)
    return FieldMap(x1, x2, psi, skipped, energy, direction)


def amplitudes_from_field(field: FieldMap, fraction: float = 0.2):
    """T and R read off the on-axis far field, averaged over outer samples.

    Uses the outermost `fraction` of the grid on each side; assumes a
    left-incoming mode.
    """
    ka = field.energy.k_alpha.real
    n = max(2, int(len(field.x1) * fraction))
    jx = int(np.argmin(np.abs(field.x2)))
    right = slice(len(field.x1) - n, len(field.x1))
    left = slice(0, n)
    xr = field.x1[right]
    xl = field.x1[left]
    pr = field.psi[right, jx] / np.exp(-field.energy.alpha * abs(field.x2[jx]) / 2)
    pl = field.psi[left, jx] / np.exp(-field.energy.alpha * abs(field.x2[jx]) / 2)
    T = np.mean(pr * np.exp(-1j * ka * xr))
    R = np.mean((pl - np.exp(1j * ka * xl)) * np.exp(1j * ka * xl))
    return complex(T), complex(R)


def asymptote_residual(field: FieldMap, amps: ScatteringAmplitudes,
                       fraction: float = 0.2) -> float:
    """Max relative deviation of psi from the two-sided asymptotic form.

    Sampled on the probe line x2 = 0 over the outermost `fraction` of
    the grid on each side; the grid must extend beyond 30/alpha outside
    the deformation.
    """
    e = field.energy
    ka = e.k_alpha.real
    n = max(2, int(len(field.x1) * fraction))
    jx = int(np.argmin(np.abs(field.x2)))
    phi = np.exp(-e.alpha * abs(field.x2[jx]) / 2)
    worst = 0.0
    xr = field.x1[-n:]
    ref_r = amps.T * np.exp(1j * ka * xr) * phi
    worst = max(worst, float(np.max(np.abs(field.psi[-n:, jx] - ref_r))))
    xl = field.x1[:n]
    ref_l = (np.exp(1j * ka * xl) + amps.R * np.exp(-1j * ka * xl)) * phi
    worst = max(worst, float(np.max(np.abs(field.psi[:n, jx] - ref_l))))
    return worst / max(abs(amps.T), abs(amps.R), 1e-30)


def write_sweep_csv(path, rows, header_lines=()):
    """Sweep CSV with the documented column set."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow(["%.16g" % v if isinstance(v, float) else v
                             for v in r])


def write_field_csv(path, field: FieldMap, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(FIELD_COLUMNS)
        for r in field.csv_rows():
            writer.writerow(["%.16g" % v for v in r])
