"""Boundary-integral discretization of the deformation operator.

The scattering and spectral problems reduce to a linear equation on the
symmetric difference between the deformed curve and the straight wire:

    -( sign(x) q(x) / alpha + int G_Sigma(x, y; lambda) q(y) dy ) = rhs(x)

with sign +1 on the removed axis pieces and -1 on the added curve
pieces.  A Nystrom method on composite Gauss-Legendre panels handles
the logarithmic diagonal singularity of the kernel with product
quadrature and nearly singular panel pairs with graded subdivision.
The matrix is kept in the symmetrically weighted basis sqrt(w) q, in
which it is (complex) symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .geometry import PanelMesh
from .greens import EnergySpec, KernelEvaluator
from .specfun import abs_product_rule, gauss_legendre, log_product_rule

NEAR_FACTOR = 1.2
_FINE_ORDER = 10
_MIN_SUB_FACTOR = 2.0 ** -16


def make_evaluator(mesh: PanelMesh, energy: EnergySpec, pad: float = 0.0,
                   checks: int = 6) -> KernelEvaluator:
    """Kernel cache sized for all point pairs of the mesh, plus padding."""
    x1 = mesh.points[:, 0]
    x2 = mesh.points[:, 1]
    dmax = float(x1.max() - x1.min()) + 2 * pad
    s2max = 2.0 * float(np.abs(x2).max()) + pad
    return KernelEvaluator(energy, dmax=max(dmax, 0.5), s2max=s2max,
                           checks=checks)


def embed_omega(mesh: PanelMesh, energy: EnergySpec,
                direction: int = +1) -> np.ndarray:
    """Trace of the incoming guided mode on the mesh nodes.

    The mode travels in +x1 direction for direction=+1; the conjugate
    convention (direction=-1) exists so both extraction conventions can
    be compared.
    """
    if energy.regime != "scattering":
        raise ValueError("guided mode exists only in the scattering window")
    ka = energy.k_alpha.real
    x1 = mesh.points[:, 0]
    x2 = mesh.points[:, 1]
    return np.exp(1j * direction * ka * x1) * np.exp(-energy.alpha * np.abs(x2) / 2)


def _lagrange_matrix(nodes: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Values L_j(s) of the Lagrange basis on `nodes`, shape (len(s), len(nodes))."""
    # Barycentric form; fine points never coincide with panel nodes here,
    # but guard the degenerate case anyway.
    w = np.ones_like(nodes)
    for j, xj in enumerate(nodes):
        w[j] = 1.0 / np.prod(xj - np.delete(nodes, j))
    diff = s[:, None] - nodes[None, :]
    hit = np.abs(diff) < 1e-14
    diff[hit] = 1.0
    num = w[None, :] / diff
    out = num / num.sum(axis=1)[:, None]
    out[hit.any(axis=1)] = hit[hit.any(axis=1)].astype(float)
    return out


def _graded_edges(a: float, b: float, s_star: float, min_len: float) -> list:
    """Dyadic subdivision of [a, b] refined toward s_star."""
    s_star = min(max(s_star, a), b)
    edges = [a, b]
    lo, hi = a, b
    while hi - lo > min_len:
        mid = 0.5 * (lo + hi)
        edges.append(mid)
        if s_star <= mid:
            hi = mid
        else:
            lo = mid
    return sorted(edges)


def _panel_geometry(mesh: PanelMesh, panel):
    ci, a, b, sl = panel
    comp = mesh.components[ci]
    if comp.on_axis:
        lo = comp.interval[0]

        def at(s):
            s = np.asarray(s, dtype=float)
            return np.column_stack([lo + s, np.zeros_like(s)])
    else:
        at = comp.segment.point_at
    return ci, a, b, sl, at


@dataclass
class ThetaSystem:
    """Discretized deformation operator at one energy.

    `matrix` acts on sqrt(w)-scaled charges and is symmetric; `solve`
    maps a right-hand side sampled at nodes to the nodal charge.
    """

    mesh: PanelMesh
    energy: EnergySpec
    evaluator: KernelEvaluator
    matrix: np.ndarray
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.mesh.size

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        sqw = np.sqrt(self.mesh.weights)
        if self._lu is None:
            self._lu = sla.lu_factor(self.matrix)
        b = sqw * np.asarray(rhs)
        y = sla.lu_solve(self._lu, b)
        resid = np.linalg.norm(self.matrix @ y - b)
        scale = np.linalg.norm(b)
        if scale > 0 and resid > 1e-8 * scale:
            raise RuntimeError("linear solve residual %.2e too large" % (resid / scale))
        return y / sqw

    def weighted_inner(self, q: np.ndarray, f: np.ndarray) -> complex:
        """Quadrature inner product int q(y) f(y) dy (no conjugation)."""
        return complex(np.sum(self.mesh.weights * q * f))

    def smallest_singular_value(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    def singular_vector(self) -> np.ndarray:
        """Nodal charge of the smallest singular direction."""
        _, _, vh = np.linalg.svd(self.matrix)
        return vh[-1].conj() / np.sqrt(self.mesh.weights)

    def condition_estimate(self) -> float:
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        return float(sv[0] / sv[-1])


def assemble_theta(mesh: PanelMesh, energy: EnergySpec,
                   evaluator: KernelEvaluator | None = None) -> ThetaSystem:
    """Assemble the symmetrically weighted Nystrom matrix."""
    if mesh.size == 0:
        raise ValueError("empty mesh: trivial geometry has nothing to assemble")
    if evaluator is None:
        evaluator = make_evaluator(mesh, energy)
    scattering = energy.regime == "scattering"
    dtype = complex if scattering else float

    pts = mesh.points
    w = mesh.weights
    sqw = np.sqrt(w)
    N = mesh.size

    # Far-field fill: plain quadrature weights, diagonal masked out.
    # Row blocks keep peak memory at a few N-vectors per block.
    A = np.empty((N, N), dtype=dtype)
    block_rows = max(1, int(2 ** 22 // max(N, 1)))
    for lo in range(0, N, block_rows):
        hi = min(lo + block_rows, N)
        d1 = pts[lo:hi, 0][:, None] - pts[:, 0][None, :]
        x2m = np.broadcast_to(pts[lo:hi, 1][:, None], (hi - lo, N))
        y2m = np.broadcast_to(pts[:, 1][None, :], (hi - lo, N))
        rr = np.hypot(d1, x2m - y2m)
        mask = rr < 1e-12
        d1 = np.where(mask, 1.0, d1)
        K = evaluator.evaluate(d1, x2m, y2m)
        K[mask] = 0.0
        A[lo:hi] = K * sqw[lo:hi, None] * sqw[None, :]

    kink = -energy.alpha / 8.0

    for panel in mesh.panels:
        ci, a, b, sl, at = _panel_geometry(mesh, panel)
        comp = mesh.components[ci]
        idx = np.arange(sl.start, sl.stop)
        s_nodes = mesh.arclen[idx]
        panel_pts = pts[idx]
        # Same-panel rows: log (and on-axis kink) product quadrature.
        for i in idx:
            s0 = mesh.arclen[i]
            wlog = log_product_rule((a, b), s0, n=len(idx)).weights
            row = -wlog / (2 * np.pi)
            if comp.on_axis:
                row = row + kink * abs_product_rule((a, b), s0, n=len(idx)).weights
            ds = np.abs(s_nodes - s0)
            dvec = pts[i, 0] - panel_pts[:, 0]
            x2v = np.full(len(idx), pts[i, 1])
            y2v = panel_pts[:, 1]
            smooth = np.empty(len(idx), dtype=dtype)
            off = idx != i
            if np.any(off):
                g = evaluator.evaluate(np.where(off, dvec, 1.0), x2v, y2v)[off]
                smooth[off] = g + np.log(ds[off]) / (2 * np.pi)
                if comp.on_axis:
                    smooth[off] = smooth[off] - kink * ds[off]
            smooth[~off] = evaluator.diagonal_smooth(np.array([pts[i, 1]]))[0]
            block = row + w[idx] * smooth
            A[i, idx] = block * sqw[i] / sqw[idx]

    # Nearly singular panel pairs: graded fine quadrature.
    fine = gauss_legendre(_FINE_ORDER)
    for panel in mesh.panels:
        ci, a, b, sl, at = _panel_geometry(mesh, panel)
        idx = np.arange(sl.start, sl.stop)
        plen = b - a
        dists = np.min(np.linalg.norm(
            pts[:, None, :] - pts[idx][None, :, :], axis=2), axis=1)
        near = (dists < NEAR_FACTOR * plen)
        near[idx] = False
        targets = np.nonzero(near)[0]
        if targets.size == 0:
            continue
        s_dense = np.linspace(a, b, 33)
        p_dense = at(s_dense)
        for i in targets:
            j_star = int(np.argmin(np.linalg.norm(p_dense - pts[i], axis=1)))
            s_star = s_dense[j_star]
            dist = float(np.linalg.norm(p_dense[j_star] - pts[i]))
            min_len = max(dist / 2.0, plen * _MIN_SUB_FACTOR)
            edges = _graded_edges(a, b, s_star, min_len)
            fs, fw = [], []
            for lo, hi in zip(edges[:-1], edges[1:]):
                r = fine.mapped(lo, hi)
                fs.append(r.nodes)
                fw.append(r.weights)
            fs = np.concatenate(fs)
            fw = np.concatenate(fw)
            fp = at(fs)
            L = _lagrange_matrix(mesh.arclen[idx], fs)
            g = evaluator.evaluate(pts[i, 0] - fp[:, 0],
                                   np.full(fs.size, pts[i, 1]), fp[:, 1])
            block = (fw * g) @ L
            A[i, idx] = block * sqw[i] / sqw[idx]

    M = -(np.diag(mesh.signs / energy.alpha).astype(dtype) + A)
    M = 0.5 * (M + M.T)
    return ThetaSystem(mesh, energy, evaluator, M)


def single_layer(mesh: PanelMesh, q: np.ndarray, targets: np.ndarray,
                 evaluator: KernelEvaluator) -> np.ndarray:
    """Potential sum_j w_j q_j G_Sigma(x, y_j) at off-curve target points."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.empty(len(targets), dtype=complex)
    wq = mesh.weights * q
    for lo in range(0, len(targets), 256):
        hi = min(lo + 256, len(targets))
        t = targets[lo:hi]
        d1 = t[:, 0][:, None] - mesh.points[:, 0][None, :]
        x2 = np.broadcast_to(t[:, 1][:, None], d1.shape)
        y2 = np.broadcast_to(mesh.points[:, 1][None, :], d1.shape)
        r = np.hypot(d1, x2 - y2)
        bad = r < 1e-9
        g = evaluator.evaluate(np.where(bad, 1.0, d1), x2, y2)
        g[bad] = 0.0
        out[lo:hi] = g @ wq
    return out
