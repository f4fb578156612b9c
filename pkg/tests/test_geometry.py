import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coaperture.errors import BlockageDominatesError, DegenerateGeometryError, DomainError
from coaperture.geometry import (HyperboloidSpec, Obstacle3D, ParaboloidSpec, PlanarMirrorSpec,
                                 Ray, ReflectorSystem, intersect_many, intersect_ray, reflect,
                                 rotate, segment_transmission, surface_point, synth_cassegrain,
                                 synth_offset)


@pytest.mark.parametrize("M, e, fe", [(5.0, 1.5, 950.0), (3.0, 2.0, 570.0)])
def test_synth_cassegrain_closed_forms(M, e, fe):
    s = synth_cassegrain(500, 190, 60, M)
    assert s.sub.eccentricity == pytest.approx(e, rel=1e-12)
    assert s.equivalent_focal_length == pytest.approx(fe, rel=1e-12)
    assert s.feed_location[2] == pytest.approx(s.sub.feed_focus_z)


def test_baseline_dimensions(baseline):
    # frozen from the closed-form construction
    assert baseline.feed_half_angle_deg == pytest.approx(14.991715279, abs=1e-8)
    assert baseline.sub.interfocal_distance == pytest.approx(124.958, abs=1e-3)
    assert baseline.sub.vertex_z == pytest.approx(169.174, abs=1e-3)
    assert baseline.feed_location[2] == pytest.approx(65.042, abs=1e-3)


def test_sub_rim_on_both_cones(baseline):
    sub = baseline.sub
    rs = 0.5 * sub.diameter
    z = sub.rim_z
    # seen from the prime focus it subtends the main-rim angle
    t0 = 2 * math.atan(500 / (4 * 190))
    assert math.atan2(rs, 190 - z) == pytest.approx(t0, abs=1e-12)
    te = math.radians(baseline.feed_half_angle_deg)
    assert math.atan2(rs, z - baseline.feed_location[2]) == pytest.approx(te, abs=1e-12)


@pytest.mark.parametrize("M", [1.0, 0.5])
def test_magnification_not_above_one_is_degenerate(M):
    with pytest.raises(DegenerateGeometryError):
        synth_cassegrain(500, 190, 60, M)


def test_oversized_sub_is_rejected():
    with pytest.raises(BlockageDominatesError):
        synth_cassegrain(500, 190, 500, 5)


def test_synth_offset_baseline(offset_system):
    s = offset_system
    assert s.main.offset_height == 300.0
    assert s.obstacles == ()
    assert s.sub is None and s.mirror is None
    assert s.feed_half_angle_deg == pytest.approx(30.932188613, abs=1e-8)


def test_offset_rim_projects_to_circle(offset_system):
    main = offset_system.main
    phi = np.linspace(0, 2 * np.pi, 721)
    x = 300 + 250 * np.cos(phi)
    y = 250 * np.sin(phi)
    z = main.sag(x, y)
    # rim points on the surface, projected radius exactly D/2 about (h, 0)
    assert np.allclose(np.hypot(x - 300, y), 250.0)
    assert np.all(x >= 50.0 - 1e-12)
    assert np.allclose(x ** 2 + y ** 2, 4 * 400 * z)


def test_offset_zero_clearance_touches_axis():
    s = synth_offset(400, 500, 0)
    assert s.main.offset_height == 250.0
    assert s.main.inside_rim(0.0, 0.0)


def test_offset_too_high_is_degenerate():
    with pytest.raises(DegenerateGeometryError):
        synth_offset(100, 500, 10)


def test_paraboloid_vertex_point_and_normal():
    p, n = surface_point(ParaboloidSpec(190, 500), 0.0, 0.0)
    assert np.array_equal(p, [0, 0, 0])
    assert np.allclose(n, [0, 0, -1])


def test_paraboloid_depth_at_rim():
    p, _ = surface_point(ParaboloidSpec(190, 500), 250.0, 0.0)
    assert p[2] == pytest.approx(82.2368421, abs=1e-6)


def test_hyperboloid_on_axis_normal(baseline):
    p, n = surface_point(baseline.sub, 0.0, 0.0)
    assert p[2] == pytest.approx(baseline.sub.vertex_z)
    assert abs(n[0]) < 1e-15 and abs(n[1]) < 1e-15 and abs(abs(n[2]) - 1) < 1e-15


def test_surface_point_outside_rim():
    with pytest.raises(DomainError):
        surface_point(ParaboloidSpec(190, 500), 260.0, 0.0)


def test_surface_points_satisfy_quadric(baseline):
    rng = np.linspace(-26.0, 26.0, 13)
    for u in rng:
        p, n = surface_point(baseline.sub, u, 0.5 * u)
        sub = baseline.sub
        lhs = (p[2] - sub.center_z) ** 2 / sub.a ** 2 - (p[0] ** 2 + p[1] ** 2) / sub.b ** 2
        assert lhs == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-15)


def test_axial_ray_reflects_back_from_vertex():
    main = ParaboloidSpec(190, 500)
    ray = Ray((0.0, 0.0, 100.0), (0.0, 0.0, -1.0))
    hit = intersect_ray(main, ray)
    out = hit.reflected(ray)
    assert np.allclose(hit.point, 0.0)
    assert np.allclose(out.direction, [0, 0, 1])
    assert out.path_length == pytest.approx(100.0)


def test_missing_the_rim_returns_none():
    assert intersect_ray(ParaboloidSpec(190, 500), Ray((300.0, 0.0, 100.0), (0, 0, -1.0))) is None


def test_ray_normalisation_enforced():
    with pytest.raises(ValueError):
        Ray((0, 0, 0), (0, 0, 2.0))
    with pytest.raises(ValueError):
        PlanarMirrorSpec((0, 0, 0), (0, 0, 1.1), 10.0)


def test_system_invariant_fe():
    main = ParaboloidSpec(190, 500)
    with pytest.raises(ValueError):
        ReflectorSystem("offset", main, (0, 0, 190), (0, 0, -1.0), 1.0, 200.0, 30.0)


def _unit_dirs(n, seed_angles):
    th, ph = seed_angles
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def test_hyperboloid_foci_brute_force(baseline):
    """1000 feed rays: every reflected ray passes through the prime focus."""
    sub = baseline.sub
    te = math.radians(baseline.feed_half_angle_deg)
    g = np.linspace(0, 1, 1000)
    th = te * np.sqrt(g)
    ph = 2 * np.pi * ((g * 618.034) % 1.0)
    d = _unit_dirs(1000, (th, ph))
    o = np.broadcast_to(np.array(baseline.feed_location), d.shape)
    t = intersect_many(sub, o, d)
    assert np.all(np.isfinite(t))
    p = o + t[:, None] * d
    r = reflect(d, sub.gradient(p))
    focus = np.array([0, 0, 190.0])
    w = focus - p
    miss = np.linalg.norm(np.cross(w, r), axis=1) / np.linalg.norm(r, axis=1)
    assert miss.max() < 1e-9


def _trace_to_aperture(system, theta, phi):
    d = _unit_dirs(len(theta), (theta, phi))
    o = np.broadcast_to(np.array(system.feed_location), d.shape)
    t1 = intersect_many(system.sub, o, d)
    p1 = o + t1[:, None] * d
    d1 = reflect(d, system.sub.gradient(p1))
    t2 = intersect_many(system.main, p1, d1)
    p2 = p1 + t2[:, None] * d1
    d2 = reflect(d1, system.main.gradient(p2))
    path = t1 + t2 + (system.main.focal_length - p2[:, 2]) / d2[:, 2]
    return d2, path


@given(st.floats(0.0, 0.999), st.floats(0.0, 2 * math.pi))
def test_focal_property_and_equal_path(baseline, frac, phi):
    te = math.radians(baseline.feed_half_angle_deg)
    d2, path = _trace_to_aperture(baseline, np.array([frac * te, 0.0]), np.array([phi, 0.0]))
    err = math.atan2(np.linalg.norm(d2[0, :2]), d2[0, 2])
    assert err < 1e-9
    assert abs(path[0] - path[1]) < 1e-6


@given(st.floats(100, 2000), st.floats(0.3, 1.5), st.floats(0.02, 0.3), st.floats(1.2, 10))
def test_cassegrain_relations_property(D, f_over_d, ds_ratio, M):
    F = f_over_d * D
    s = synth_cassegrain(D, F, ds_ratio * D, M)
    assert s.sub.eccentricity == pytest.approx((M + 1) / (M - 1), rel=1e-12)
    assert s.equivalent_focal_length == pytest.approx(M * F, rel=1e-12)
    assert math.radians(s.feed_half_angle_deg) == pytest.approx(
        2 * math.atan(D / (4 * M * F)), rel=1e-12)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6).filter(
    lambda v: np.linalg.norm(v[:3]) > 1e-3 and np.linalg.norm(v[3:]) > 1e-3))
def test_reflection_preserves_norm(v):
    d = np.array(v[:3]) / np.linalg.norm(v[:3])
    n = np.array(v[3:]) / np.linalg.norm(v[3:])
    assert abs(np.linalg.norm(reflect(d, n)) - 1.0) < 1e-12


def test_rotate_quarter_turn():
    assert np.allclose(rotate([1, 0, 0], [0, 0, 1], 90), [0, 1, 0])


def test_segment_transmission_counts_crossings():
    ob = Obstacle3D("disc", (0, 0, 50), (0, 0, 1.0), radius=10, transmission=0.5)
    starts = np.array([[0, 0, 0.0], [20, 0, 0.0], [0, 0, 0.0]])
    ends = np.array([[0, 0, 100.0], [20, 0, 100.0], [0, 0, 40.0]])
    assert np.allclose(segment_transmission([ob], starts, ends), [0.5, 1.0, 1.0])


def test_mirror_tilted_constructor():
    m = PlanarMirrorSpec.tilted((0, 0, 10), 45.0, 30.0, mmw_transmission_db=6.0)
    assert np.allclose(m.normal, [math.sqrt(0.5), 0, math.sqrt(0.5)])
    assert m.mmw_amplitude == pytest.approx(10 ** (-0.3))


def test_hyperboloid_rejects_low_eccentricity():
    with pytest.raises(DegenerateGeometryError):
        HyperboloidSpec(1.0, 100.0, 60.0, 190.0)
