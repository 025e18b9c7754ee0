"""Tests for deformation geometry, validation, and panel meshing."""

import numpy as np
import pytest

from leakywire.geometry import (CurveSegment, DeformedLineGeometry,
                                _bump_profile, build_geometry, build_mesh,
                                curvature, decompose)


class TestFamilies:
    def test_gap(self):
        geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
        comps = decompose(geom)
        assert len(comps) == 1
        assert comps[0].sign == +1
        assert comps[0].length == pytest.approx(1.0, abs=1e-14)

    def test_semicircle_detour_length(self):
        geom = build_geometry({"family": "semicircle_detour", "params": {"r": 1.0}})
        comps = decompose(geom)
        lengths = sorted(c.length for c in comps)
        assert lengths[0] == pytest.approx(2.0, abs=1e-12)
        assert lengths[1] == pytest.approx(np.pi, abs=1e-8)

    def test_circle_closed(self):
        geom = build_geometry({"family": "circle", "params": {"r": 0.7}})
        comps = decompose(geom)
        assert len(comps) == 1
        assert comps[0].sign == -1
        assert comps[0].segment.closed
        assert comps[0].length == pytest.approx(2 * np.pi * 0.7, abs=1e-8)

    def test_stub_components(self):
        geom = build_geometry(
            {"family": "stub", "params": {"L": 0.5, "gap": 0.25}})
        signs = sorted(c.sign for c in decompose(geom))
        assert signs == [-1, +1]

    def test_bump_profile_shape(self):
        f0 = _bump_profile(0.0, 0.5, 1.0)
        assert f0 == pytest.approx(0.5, abs=1e-14)
        assert _bump_profile(1.0, 0.5, 1.0) == 0.0
        assert _bump_profile(3.0, 0.5, 1.0) == 0.0
        x = np.linspace(-1.0, 1.0, 1001)
        f = _bump_profile(x, 0.5, 1.0)
        assert np.all(f >= -1e-15)
        assert np.all(np.diff(f[x <= 0]) >= -1e-12)

    def test_bump_profile_c4_contact(self):
        # Four derivatives vanish at the support edge, so the profile
        # decays like the fifth power of the distance to the edge.
        f1 = _bump_profile(1.0 - 0.05, 0.5, 1.0)
        f2 = _bump_profile(1.0 - 0.10, 0.5, 1.0)
        order = np.log2(f2 / f1)
        assert order > 4.5

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            build_geometry({"family": "wiggle", "params": {}})


class TestValidation:
    def test_trivial(self):
        geom = build_geometry({})
        assert geom.is_trivial
        assert decompose(geom) == []

    def test_overlapping_intervals_rejected(self):
        with pytest.raises(ValueError):
            DeformedLineGeometry([], [(0.0, 1.0), (0.5, 2.0)])

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            DeformedLineGeometry([], [(1.0, 0.0)])

    def test_self_intersection_rejected(self):
        a = CurveSegment.from_polyline([[-1.0, -0.5], [1.0, 0.5]])
        b = CurveSegment.from_polyline([[-1.0, 0.5], [1.0, -0.5]])
        with pytest.raises(ValueError):
            DeformedLineGeometry([a, b], [])

    def test_cusp_rejected(self):
        a = CurveSegment.from_polyline([[0.0, 1.0], [0.0, 0.0]])
        b = CurveSegment.from_polyline([[0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            DeformedLineGeometry([a, b], [])

    def test_bounding_box(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
        x0, x1, y0, y1 = geom.bounding_box
        assert x0 == pytest.approx(-1.0, abs=1e-12)
        assert x1 == pytest.approx(1.0, abs=1e-12)
        assert y0 == pytest.approx(0.0, abs=1e-9)
        assert y1 == pytest.approx(0.5, abs=1e-6)


class TestCurvature:
    def test_circle_magnitude(self):
        seg = CurveSegment.from_arc((0.0, 2.0), 2.0, -np.pi / 2, np.pi / 2)
        s = np.linspace(0.2, seg.length - 0.2, 11)
        kap = curvature(seg, s)
        assert np.max(np.abs(np.abs(kap) - 0.5)) < 1e-6

    def test_straight_line_zero(self):
        seg = CurveSegment.from_polyline([[0.0, 0.0], [3.0, 0.0]])
        kap = curvature(seg, np.array([0.5, 1.5, 2.5]))
        assert np.max(np.abs(kap)) < 1e-10


class TestMesh:
    def test_semicircle_weight_sum(self):
        geom = build_geometry({"family": "semicircle_detour", "params": {"r": 1.0}})
        mesh = build_mesh(geom, nodes_per_panel=6, panel_length=0.2)
        arcs = [p for p in mesh.panels if not mesh.components[p[0]].on_axis]
        assert len(arcs) >= 16
        off_axis = mesh.signs < 0
        assert np.sum(mesh.weights[off_axis]) == pytest.approx(np.pi, abs=1e-8)

    def test_signs_and_points(self):
        geom = build_geometry({"family": "bump", "params": {"h": 0.5, "w": 1.0}})
        mesh = build_mesh(geom, panel_length=0.25)
        on_axis = mesh.signs > 0
        assert np.max(np.abs(mesh.points[on_axis, 1])) == 0.0
        assert np.all(np.abs(mesh.points[on_axis, 0]) <= 1.0)
        assert np.any(mesh.points[~on_axis, 1] > 0.4)

    def test_end_grading(self):
        geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
        coarse = build_mesh(geom, panel_length=0.25, end_levels=0)
        graded = build_mesh(geom, panel_length=0.25, end_levels=4)
        assert len(graded.panels) == len(coarse.panels) + 8
        first = min(b - a for _, a, b, _ in graded.panels)
        assert first == pytest.approx(0.25 / 16, abs=1e-12)
        assert np.sum(graded.weights) == pytest.approx(1.0, abs=1e-12)

    def test_closed_component_not_graded(self):
        geom = build_geometry({"family": "circle", "params": {"r": 0.5}})
        a = build_mesh(geom, panel_length=0.2, end_levels=0)
        b = build_mesh(geom, panel_length=0.2, end_levels=6)
        assert len(a.panels) == len(b.panels)

    def test_invalid_parameters(self):
        geom = build_geometry({"family": "gap", "params": {"L": 1.0}})
        with pytest.raises(ValueError):
            build_mesh(geom, nodes_per_panel=1)
        with pytest.raises(ValueError):
            build_mesh(geom, panel_length=0.0)

    def test_raw_schema(self):
        geom = build_geometry({
            "removed_intervals": [[-1.0, 1.0]],
            "segments": [{"kind": "arc", "center": [0.0, 0.0], "radius": 1.0,
                          "theta0": np.pi, "theta1": 0.0}]})
        comps = decompose(geom)
        assert len(comps) == 2
