"""Discrete spectrum below the guided-mode threshold.

Eigenvalues of the deformed operator below -alpha^2/4 are the energies
where the deformation operator Theta becomes singular.  In that regime
every kernel is real and the assembled matrix is real symmetric, so the
smallest singular value is a robust zero detector: it is scanned on a
grid and each interior local minimum is refined by bounded scalar
minimization.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bie import assemble_theta
from .geometry import DeformedLineGeometry, PanelMesh
from .greens import THRESHOLD_GUARD, EnergySpec
from .scattering import mesh_for

SCAN_COLUMNS = ("lambda", "sigma_min")


@dataclass
class BoundStateResult:
    lambda_star: float
    sigma_min: float
    charge: np.ndarray
    n_nodes: int
    interval: tuple[float, float] | None = None

    def summary(self) -> dict:
        out = {"lambda_star": self.lambda_star, "sigma_min": self.sigma_min,
               "n_nodes": self.n_nodes}
        if self.interval is not None:
            out["interval"] = list(self.interval)
        return out


@dataclass
class SpectrumScan:
    alpha: float
    lam: np.ndarray
    sigma_min: np.ndarray
    states: list[BoundStateResult] = field(default_factory=list)

    def summary(self) -> dict:
        return {"alpha": self.alpha,
                "threshold": -self.alpha ** 2 / 4,
                "scan_points": len(self.lam),
                "bound_states": [s.summary() for s in self.states]}


def _system_at(mesh: PanelMesh, alpha: float, lam: float):
    return assemble_theta(mesh, EnergySpec(alpha, lam))


def smallest_singular(geom: DeformedLineGeometry, alpha: float, lam: float,
                      n_nodes: int = 400, mesh: PanelMesh | None = None) -> float:
    """Smallest singular value of Theta at a below-threshold energy."""
    if geom.is_trivial:
        raise ValueError("no deformation, no discrete spectrum")
    if lam >= -alpha ** 2 / 4:
        raise ValueError("energy must lie below the threshold -alpha^2/4")
    if mesh is None:
        mesh = mesh_for(geom, n_nodes)
    return _system_at(mesh, alpha, lam).smallest_singular_value()


def find_bound_states(geom: DeformedLineGeometry, alpha: float,
                      scan_range: tuple[float, float],
                      resolution: float | None = None,
                      n_nodes: int = 400,
                      detection_threshold: float | None = None,
                      refine_xatol: float = 1e-10) -> SpectrumScan:
    """Scan for zeros of Theta below threshold and refine each minimum.

    Returns the scan trace together with the refined bound states; the
    list is legitimately empty when no singular energy lies in range.
    The unperturbed line has no discrete spectrum, so a trivial geometry
    yields an empty scan.
    """
    if geom.is_trivial:
        return SpectrumScan(alpha, np.zeros(0), np.zeros(0))
    threshold = -alpha ** 2 / 4
    lo, hi = map(float, scan_range)
    hi = min(hi, threshold - 2 * THRESHOLD_GUARD * alpha ** 2)
    if not lo < hi:
        raise ValueError("scan range must lie below the threshold")
    if resolution is None:
        resolution = alpha ** 2 / 4000.0
    if detection_threshold is None:
        detection_threshold = 1e-6 * alpha

    mesh = mesh_for(geom, n_nodes)
    lam = np.arange(lo, hi, resolution)
    if lam.size == 0 or lam[-1] < hi - 1e-12:
        lam = np.append(lam, hi)
    sig = np.array([_system_at(mesh, alpha, x).smallest_singular_value()
                    for x in lam])

    scan = SpectrumScan(alpha, lam, sig)
    for i in range(1, len(lam) - 1):
        if not (sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]):
            continue

        def f(x):
            return _system_at(mesh, alpha, x).smallest_singular_value()

        res = minimize_scalar(f, bounds=(lam[i - 1], lam[i + 1]),
                              method="bounded",
                              options={"xatol": refine_xatol})
        if res.fun > detection_threshold:
            continue
        system = _system_at(mesh, alpha, float(res.x))
        charge = system.singular_vector()
        resid = np.linalg.norm(system.matrix @ (charge * np.sqrt(mesh.weights)))
        resid /= np.linalg.norm(charge * np.sqrt(mesh.weights))
        interval = _flat_interval(f, float(res.x), float(res.fun),
                                  resolution, refine_xatol)
        scan.states.append(BoundStateResult(float(res.x), float(res.fun),
                                            charge, mesh.size, interval))
        if resid > 1e-6:
            raise RuntimeError("null-vector residual %.2e too large" % resid)
    return scan


def _flat_interval(f, x0, f0, resolution, xatol):
    """Interval where the minimum is flat, or None for a sharp one."""
    step = max(100 * xatol, resolution * 1e-4)
    if f(x0 + step) < 2 * max(f0, 1e-14) and f(x0 - step) < 2 * max(f0, 1e-14):
        lo = hi = x0
        while f(lo - step) < 2 * max(f0, 1e-14) and x0 - lo < resolution:
            lo -= step
        while f(hi + step) < 2 * max(f0, 1e-14) and hi - x0 < resolution:
            hi += step
        return (lo, hi)
    return None


def write_scan_csv(path, scan: SpectrumScan, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(SCAN_COLUMNS)
        for x, s in zip(scan.lam, scan.sigma_min):
            writer.writerow(["%.16g" % x, "%.16g" % s])


def write_summary_json(path, scan: SpectrumScan, extra: dict | None = None):
    payload = scan.summary()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
