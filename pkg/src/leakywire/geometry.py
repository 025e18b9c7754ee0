"""Geometry of a locally deformed straight line.

The unperturbed wire is the x1-axis.  A deformation is described by a
finite set of removed intervals on the axis together with a finite set
of smooth curve segments off the axis.  The perturbation lives on the
union of both: removed intervals carry sign +1, curve segments sign -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .specfun import gauss_legendre

ARCLENGTH_RTOL = 1e-6
JUNCTION_TOL = 1e-9
_MAX_SAMPLES = 16384


@dataclass(frozen=True)
class Point2:
    """A point in the plane."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError("Point2 coordinates must be finite")


class CurveSegment:
    """A finite curve sampled uniformly in arc length.

    Samples are dense enough that consecutive spacing matches the chord
    length to ARCLENGTH_RTOL.  Position and tangent lookups interpolate
    the sample table (cubic for smooth kinds, linear for polylines).
    """

    def __init__(self, kind: str, points: np.ndarray, closed: bool = False):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2 or len(points) < 2:
            raise ValueError("CurveSegment needs an (n, 2) sample table, n >= 2")
        if not np.all(np.isfinite(points)):
            raise ValueError("unbounded deformation data")
        self.kind = kind
        self.closed = bool(closed)
        self._resample(points)
        if self.length <= 0.0:
            raise ValueError("degenerate segment (zero length)")
        self._check_self_intersection()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_polyline(cls, vertices) -> "CurveSegment":
        return cls("polyline", np.asarray(vertices, dtype=float))

    @classmethod
    def from_arc(cls, center, radius: float, theta0: float, theta1: float,
                 closed: bool = False) -> "CurveSegment":
        if radius <= 0:
            raise ValueError("arc radius must be positive")
        n = max(256, int(abs(theta1 - theta0) * 256))
        th = np.linspace(theta0, theta1, n, endpoint=not closed)
        pts = np.column_stack([center[0] + radius * np.cos(th),
                               center[1] + radius * np.sin(th)])
        return cls("circular-arc", pts, closed=closed)

    @classmethod
    def from_parametric(cls, fn, t0: float, t1: float, n: int = 1024) -> "CurveSegment":
        t = np.linspace(t0, t1, n)
        pts = np.array([fn(ti) for ti in t], dtype=float)
        return cls("parametric-sampled", pts)

    # -- internals ------------------------------------------------------------

    def _resample(self, points: np.ndarray) -> None:
        if self.kind == "polyline":
            # Chords are exact on a polyline; keep vertices, subdivide long edges.
            seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
            keep = seg > 0
            points = np.vstack([points[:1], points[1:][keep]])
            self._spline = None
            s = np.concatenate([[0.0], np.cumsum(
                np.linalg.norm(np.diff(points, axis=0), axis=1))])
            self.s = s
            self.points = points
            d = np.gradient(points, s, axis=0)
            self.tangents = d / np.linalg.norm(d, axis=1, keepdims=True)
            self.length = float(s[-1])
            return

        gl_x, gl_w = np.polynomial.legendre.leggauss(8)
        bc = "periodic" if self.closed else "not-a-knot"
        pts = points
        n = len(pts)
        while True:
            closed_pts = np.vstack([pts, pts[:1]]) if self.closed else pts
            chord = np.linalg.norm(np.diff(closed_pts, axis=0), axis=1)
            cum = np.concatenate([[0.0], np.cumsum(chord)])
            spline = CubicSpline(cum, closed_pts, bc_type=bc)
            # True arc length of the interpolant per knot interval (GL8 on the
            # speed), then resample uniformly in that arc length.
            ta, tb = cum[:-1], cum[1:]
            half = 0.5 * (tb - ta)
            tq = ta[:, None] + half[:, None] * (gl_x[None, :] + 1.0)
            speed = np.linalg.norm(spline(tq.ravel(), 1), axis=1).reshape(tq.shape)
            seg_len = half * (speed @ gl_w)
            s_knots = np.concatenate([[0.0], np.cumsum(seg_len)])
            L = float(s_knots[-1])
            m = len(cum)
            s_new = np.linspace(0.0, L, m, endpoint=not self.closed)
            t_new = np.interp(s_new, s_knots, cum)
            new_pts = spline(t_new)
            # Arc-length fidelity: spacing between resampled points vs chords.
            step = L / (m - (0 if self.closed else 1))
            wrap = np.vstack([new_pts, new_pts[:1]]) if self.closed else new_pts
            chords = np.linalg.norm(np.diff(wrap, axis=0), axis=1)
            mismatch = np.max(np.abs(chords - step)) / step
            if mismatch <= ARCLENGTH_RTOL or n >= _MAX_SAMPLES:
                self._spline = CubicSpline(
                    np.linspace(0.0, L, m + (1 if self.closed else 0)),
                    np.vstack([new_pts, new_pts[:1]]) if self.closed else new_pts,
                    bc_type=bc)
                self.s = s_new
                self.points = new_pts
                self.length = L
                d = self._spline(self.s, 1)
                self.tangents = d / np.linalg.norm(d, axis=1, keepdims=True)
                return
            n *= 2
            dense = np.linspace(0.0, L, n, endpoint=not self.closed)
            pts = spline(np.interp(dense, s_knots, cum))

    def _check_self_intersection(self) -> None:
        pts = self.points[:: max(1, len(self.points) // 512)]
        if self.closed:
            pts = np.vstack([pts, self.points[:1]])
        a = pts[:-1]
        b = pts[1:]
        n = len(a)
        for i in range(n):
            # Vectorized segment-segment test of chord i against chords i+2..
            j0 = i + 2
            if j0 >= n:
                break
            jmax = n if not (self.closed and i == 0) else n - 1
            if j0 >= jmax:
                continue
            p, r = a[i], b[i] - a[i]
            q = a[j0:jmax]
            sdir = b[j0:jmax] - q
            denom = r[0] * sdir[:, 1] - r[1] * sdir[:, 0]
            dq = q - p
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (dq[:, 0] * sdir[:, 1] - dq[:, 1] * sdir[:, 0]) / denom
                u = (dq[:, 0] * r[1] - dq[:, 1] * r[0]) / (-denom)
            hit = (np.abs(denom) > 1e-14) & (t > 1e-9) & (t < 1 - 1e-9) \
                & (u > 1e-9) & (u < 1 - 1e-9)
            if np.any(hit):
                raise ValueError("self-intersection detected")

    # -- queries --------------------------------------------------------------

    def point_at(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < -1e-12) or np.any(s > self.length * (1 + 1e-12)):
            raise ValueError("arc length out of range")
        s = np.clip(s, 0.0, self.length)
        if self._spline is None:
            x = np.interp(s, self.s, self.points[:, 0])
            y = np.interp(s, self.s, self.points[:, 1])
            return np.stack([x, y], axis=-1)
        return self._spline(s)

    def tangent_at(self, s):
        s = np.asarray(s, dtype=float)
        s = np.clip(s, 0.0, self.length)
        if self._spline is None:
            tx = np.interp(s, self.s, self.tangents[:, 0])
            ty = np.interp(s, self.s, self.tangents[:, 1])
            t = np.stack([tx, ty], axis=-1)
        else:
            t = self._spline(s, 1)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    def endpoints(self):
        return self.points[0].copy(), \
            (self.points[0].copy() if self.closed else self.point_at(self.length))


def check_chord_arc(segment: CurveSegment, C: float):
    """Worst chord/arc ratio over sampled pairs, compared against C > 0.

    Closed curves measure arc separation modulo the total length so the
    wrap-around pair does not report a spurious zero.
    """
    if C <= 0:
        raise ValueError("chord-arc constant must be positive")
    if segment.length <= 0:
        raise ValueError("degenerate segment (zero length)")
    stride = max(1, len(segment.points) // 400)
    pts = segment.points[::stride]
    s = segment.s[::stride]
    diff = pts[:, None, :] - pts[None, :, :]
    chord = np.linalg.norm(diff, axis=2)
    ds = np.abs(s[:, None] - s[None, :])
    if segment.closed:
        ds = np.minimum(ds, segment.length - ds)
    iu = np.triu_indices(len(s), k=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = chord[iu] / ds[iu]
    ratio = ratio[np.isfinite(ratio)]
    worst = float(np.min(ratio))
    return worst >= C, worst


def curvature(segment: CurveSegment, s):
    """Signed curvature at arc length s via the tangent-angle derivative."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < -1e-12) or np.any(s_arr > segment.length * (1 + 1e-12)):
        raise ValueError("arc length out of range")
    theta = np.unwrap(np.arctan2(segment.tangents[:, 1], segment.tangents[:, 0]))
    kappa = np.gradient(theta, segment.s)
    out = np.interp(np.clip(s_arr, 0, segment.length), segment.s, kappa)
    return float(out[0]) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class SignedComponent:
    """One component of the perturbation support with its coupling sign."""

    sign: int
    length: float
    interval: tuple[float, float] | None = None
    segment: CurveSegment | None = None

    @property
    def on_axis(self) -> bool:
        return self.interval is not None


class DeformedLineGeometry:
    """Validated deformation data: removed axis intervals plus curve segments."""

    def __init__(self, segments=(), removed_intervals=()):
        self.segments = list(segments)
        self.removed_intervals = [tuple(map(float, ab)) for ab in removed_intervals]
        self._validate()
        self.bounding_box = self._bounding_box()

    def _validate(self) -> None:
        for a, b in self.removed_intervals:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError("unbounded deformation data")
            if not a < b:
                raise ValueError("removed interval must have a < b")
        iv = sorted(self.removed_intervals)
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 < b0 - JUNCTION_TOL:
                raise ValueError("removed intervals overlap")
        self._check_junctions()
        self._check_pairwise_intersections()

    def _check_junctions(self) -> None:
        ends = []
        for seg in self.segments:
            if seg.closed:
                continue
            p0, p1 = seg.endpoints()
            ends.append((p0, seg.tangent_at(0.0)))
            ends.append((p1, -seg.tangent_at(seg.length)))
        for i in range(len(ends)):
            for j in range(i + 1, len(ends)):
                pi, ui = ends[i]
                pj, uj = ends[j]
                if np.linalg.norm(pi - pj) <= JUNCTION_TOL:
                    # Outgoing directions nearly parallel means a cusp.
                    if float(np.dot(ui, uj)) > 1.0 - 1e-6:
                        raise ValueError("cusp detected at a junction")

    @staticmethod
    def _polylines_cross(pi: np.ndarray, pj: np.ndarray) -> bool:
        """True when the two sampled polylines properly cross."""

        def orient(p, q, r):
            return ((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                    - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

        a, b = pi[:-1][:, None, :], pi[1:][:, None, :]
        c, d = pj[:-1][None, :, :], pj[1:][None, :, :]
        s1, s2 = orient(a, b, c), orient(a, b, d)
        s3, s4 = orient(c, d, a), orient(c, d, b)
        proper = (s1 * s2 < 0) & (s3 * s4 < 0)
        if not np.any(proper):
            return False
        # Contacts at the endpoints of both polylines are permitted; any
        # other proper crossing is a genuine self-intersection.
        ii, jj = np.nonzero(proper)
        for i, j in zip(ii, jj):
            p, q = pi[i], pi[i + 1]
            s3ij, s4ij = s3[i, j], s4[i, j]
            t = s3ij / (s3ij - s4ij)
            x = p + t * (q - p)
            near_i = min(np.linalg.norm(x - pi[0]),
                         np.linalg.norm(x - pi[-1])) < 100 * JUNCTION_TOL
            near_j = min(np.linalg.norm(x - pj[0]),
                         np.linalg.norm(x - pj[-1])) < 100 * JUNCTION_TOL
            if not (near_i and near_j):
                return True
        return False

    def _check_pairwise_intersections(self) -> None:
        for i in range(len(self.segments)):
            for j in range(i + 1, len(self.segments)):
                si, sj = self.segments[i], self.segments[j]
                pi = si.points[:: max(1, len(si.points) // 256)]
                pj = sj.points[:: max(1, len(sj.points) // 256)]
                if self._polylines_cross(pi, pj):
                    raise ValueError("self-intersection detected")
                mins = np.min(np.linalg.norm(
                    pi[:, None, :] - pj[None, :, :], axis=2))
                if mins < JUNCTION_TOL:
                    # Touching allowed only at endpoints: the nearest pair of
                    # sample points must sit at an endpoint of each segment.
                    ii, jj = np.unravel_index(np.argmin(np.linalg.norm(
                        pi[:, None, :] - pj[None, :, :], axis=2).ravel()),
                        (len(pi), len(pj)))
                    near_end_i = min(np.linalg.norm(pi[ii] - si.points[0]),
                                     np.linalg.norm(pi[ii] - si.points[-1])) < 10 * JUNCTION_TOL
                    near_end_j = min(np.linalg.norm(pj[jj] - sj.points[0]),
                                     np.linalg.norm(pj[jj] - sj.points[-1])) < 10 * JUNCTION_TOL
                    if not (near_end_i and near_end_j):
                        raise ValueError("self-intersection detected")

    def _bounding_box(self):
        xs, ys = [], []
        for a, b in self.removed_intervals:
            xs += [a, b]
            ys += [0.0]
        for seg in self.segments:
            xs += [seg.points[:, 0].min(), seg.points[:, 0].max()]
            ys += [seg.points[:, 1].min(), seg.points[:, 1].max()]
        if not xs:
            return (0.0, 0.0, 0.0, 0.0)
        return (min(xs), max(xs), min(ys + [0.0]), max(ys + [0.0]))

    @property
    def is_trivial(self) -> bool:
        return not self.segments and not self.removed_intervals


def build_geometry(spec: dict) -> DeformedLineGeometry:
    """Build and validate a geometry from a structured description.

    The description either names a built-in family,
    ``{"family": name, "params": {...}}``, or lists raw data,
    ``{"removed_intervals": [[a, b], ...], "segments": [{...}, ...]}``.
    """
    if "family" in spec:
        return _family(spec["family"], spec.get("params", {}))
    segments = []
    for sd in spec.get("segments", []):
        kind = sd.get("kind")
        if kind == "polyline":
            segments.append(CurveSegment.from_polyline(sd["points"]))
        elif kind == "arc":
            segments.append(CurveSegment.from_arc(
                sd["center"], sd["radius"], sd["theta0"], sd["theta1"],
                closed=sd.get("closed", False)))
        elif kind == "bump":
            segments.append(_bump_segment(sd["h"], sd["w"]))
        else:
            raise ValueError(f"unknown segment kind: {kind!r}")
    return DeformedLineGeometry(segments, spec.get("removed_intervals", []))


def _bump_profile(x, h: float, w: float):
    """Smooth bump of height h supported on |x| < w with C4 contact.

    The profile is built from a designed second derivative: a square
    wave (concave cap, convex shoulders) with quintic-smoothstep ramps,
    integrated twice in closed form.  Spreading the curvature almost
    uniformly over the support keeps its maximum close to the lower
    bound 4h/w^2 that any C4 profile of this height and width must
    exceed; sharper recipes (a truncated Gaussian, a mollifier) put
    large curvature spikes near the endpoints and degrade the
    strong-coupling regime badly.
    """
    v = np.minimum(np.abs(np.asarray(x, dtype=float)) / w, 1.0)
    g = np.empty_like(v)
    m = v < 0.4
    g[m] = -0.5 * v[m] ** 2
    m = (v >= 0.4) & (v < 0.5)
    g[m] = np.polyval([200000.0 / 7, -90000.0, 121000.0, -90000.0, 40000.0,
                       -21249.0 / 2, 7808.0 / 5, -17152.0 / 175], v[m])
    m = (v >= 0.5) & (v < 0.8)
    g[m] = np.polyval([0.5, -0.9, 71.0 / 350], v[m])
    m = v >= 0.8
    g[m] = np.polyval([-3125.0 / 7, 5625.0 / 2, -15125.0 / 2, 11250.0,
                       -10000.0, 10625.0 / 2, -3125.0 / 2, 68679.0 / 350],
                      v[m])
    # Exact zero at and beyond the support edge (the closed-form constant
    # cancels only up to rounding).
    return np.where(v >= 1.0, 0.0, h * (1.0 + (350.0 / 71.0) * g))


def _bump_segment(h: float, w: float) -> CurveSegment:
    x = np.linspace(-w, w, 2049)
    pts = np.column_stack([x, _bump_profile(x, h, w)])
    return CurveSegment("parametric-sampled", pts)


def _family(name: str, p: dict) -> DeformedLineGeometry:
    if name == "gap":
        L = float(p["L"])
        return DeformedLineGeometry([], [(-L / 2, L / 2)])
    if name == "bump":
        h, w = float(p["h"]), float(p["w"])
        return DeformedLineGeometry([_bump_segment(h, w)], [(-w, w)])
    if name == "stub":
        L, gap = float(p["L"]), float(p.get("gap", 0.0))
        removed = [(-gap / 2, gap / 2)] if gap > 0 else []
        return DeformedLineGeometry(
            [CurveSegment.from_polyline([[0.0, 0.0], [0.0, L]])], removed)
    if name == "circle":
        r = float(p["r"])
        cx = float(p.get("contact", 0.0))
        return DeformedLineGeometry(
            [CurveSegment.from_arc((cx, r), r, -np.pi / 2, 3 * np.pi / 2,
                                   closed=True)], [])
    if name == "semicircle_detour":
        r = float(p["r"])
        return DeformedLineGeometry(
            [CurveSegment.from_arc((0.0, 0.0), r, np.pi, 0.0)], [(-r, r)])
    raise ValueError(f"unknown geometry family: {name!r}")


def decompose(geom: DeformedLineGeometry) -> list[SignedComponent]:
    """Signed components of the perturbation support: +1 on-axis, -1 off-axis."""
    comps = [SignedComponent(sign=+1, length=b - a, interval=(a, b))
             for a, b in sorted(geom.removed_intervals)]
    comps += [SignedComponent(sign=-1, length=seg.length, segment=seg)
              for seg in geom.segments]
    return comps


@dataclass
class PanelMesh:
    """Composite Gauss-Legendre panel mesh over all signed components.

    ``panels`` lists (component index, s_lo, s_hi, node slice).  Node
    arrays are flat over all components; ``arclen`` is the component-local
    arc-length coordinate of each node.
    """

    components: list[SignedComponent]
    points: np.ndarray          # (N, 2)
    weights: np.ndarray         # (N,)
    signs: np.ndarray           # (N,)
    arclen: np.ndarray          # (N,)
    component_index: np.ndarray  # (N,)
    panels: list[tuple[int, float, float, slice]]
    nodes_per_panel: int

    @property
    def size(self) -> int:
        return len(self.weights)

    def component_length(self, ci: int) -> float:
        return self.components[ci].length

    def component_closed(self, ci: int) -> bool:
        seg = self.components[ci].segment
        return bool(seg.closed) if seg is not None else False


def _graded_component_edges(length: float, npan: int, levels: int) -> np.ndarray:
    """Uniform edges with the first and last cell split dyadically.

    The charge develops boundary layers at the junctions between the
    perturbation components and the unperturbed line; dyadic refinement
    toward the open endpoints restores fast convergence there.
    """
    edges = np.linspace(0.0, length, npan + 1)
    if levels <= 0:
        return edges
    if npan < 2:
        edges = np.array([0.0, length / 2.0, length])
    head = [edges[1] / 2.0 ** j for j in range(levels, 0, -1)]
    tail = [length - (length - edges[-2]) / 2.0 ** j
            for j in range(1, levels + 1)]
    return np.concatenate([edges[:1], head, edges[1:-1], tail, edges[-1:]])


def build_mesh(geom: DeformedLineGeometry, nodes_per_panel: int = 6,
               panel_length: float = 0.2, end_levels: int = 0) -> PanelMesh:
    """Mesh every signed component with near-uniform Gauss-Legendre panels.

    With ``end_levels > 0`` the endmost cell of every open component is
    subdivided dyadically that many times toward the endpoint.
    """
    if nodes_per_panel < 2:
        raise ValueError("need at least 2 nodes per panel")
    if panel_length <= 0:
        raise ValueError("panel length must be positive")
    comps = decompose(geom)
    base = gauss_legendre(nodes_per_panel)
    pts, wts, sgn, arc, cidx = [], [], [], [], []
    panels = []
    offset = 0
    for ci, comp in enumerate(comps):
        npan = max(1, int(np.ceil(comp.length / panel_length)))
        closed = comp.segment is not None and comp.segment.closed
        edges = _graded_component_edges(comp.length, npan,
                                        0 if closed else end_levels)
        for a, b in zip(edges[:-1], edges[1:]):
            rule = base.mapped(a, b)
            if comp.on_axis:
                lo = comp.interval[0]
                p = np.column_stack([lo + rule.nodes, np.zeros_like(rule.nodes)])
            else:
                p = comp.segment.point_at(rule.nodes)
            sl = slice(offset, offset + nodes_per_panel)
            panels.append((ci, float(a), float(b), sl))
            pts.append(p)
            wts.append(rule.weights)
            sgn.append(np.full(nodes_per_panel, comp.sign))
            arc.append(rule.nodes)
            cidx.append(np.full(nodes_per_panel, ci))
            offset += nodes_per_panel
    if pts:
        return PanelMesh(comps, np.vstack(pts), np.concatenate(wts),
                         np.concatenate(sgn), np.concatenate(arc),
                         np.concatenate(cidx), panels, nodes_per_panel)
    return PanelMesh(comps, np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                     np.zeros(0), np.zeros(0, dtype=int), [], nodes_per_panel)
